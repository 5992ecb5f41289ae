use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mvbm::fixtures::{format_matching, replay_all};
use mvbm::gen::{generate_instance, GenConfig};
use mvbm::harness::{
    export_results, render_plot, results_csv, run_experiment, ExperimentConfig, ExperimentKind,
    ExportFormat,
};
use mvbm::oracle::{audit_agent_truthfulness, audit_task_truthfulness, AuditReport};
use mvbm::strategies::Setting;
use mvbm::{
    agent_utilities, matching_weight, run_mechanism, Instance, MechanismKind, Profile, Side,
};

/// Environment variable holding the number of worker threads.
const WORKERS_VAR: &str = "MVBM_WORKERS";

#[derive(Parser)]
#[command(
    name = "mvbm",
    version,
    about = "Vertex-weighted b-matching mechanisms and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance and print the matching as JSON.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "bfs")]
        mech: MechanismKind,
        /// Reports to use instead of the truthful profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Seed for the agent-order lottery (rbfs only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate random instances.
    Gen(GenArgs),
    /// List every profitable unilateral deviation from truthful reporting.
    Audit {
        side: AuditSide,
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, default_value = "bfs")]
        mech: MechanismKind,
        #[arg(long, default_value = "ems")]
        setting: Setting,
        /// Value multipliers tried by tasks under evms.
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
        grid: Vec<f64>,
    },
    /// Run an experiment grid and write its results.
    Experiment {
        kind: ExperimentKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the reduced iteration count.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Recompute the worked examples and compare with their expected outputs.
    Fixtures,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    b_low: usize,
    #[arg(long, default_value_t = 1)]
    b_high: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Index of the first instance in the seeded stream.
    #[arg(long, default_value_t = 0)]
    start: u64,
    /// Directory for instance files and a manifest; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditSide {
    Agents,
    Tasks,
}

impl From<AuditSide> for Side {
    fn from(s: AuditSide) -> Side {
        match s {
            AuditSide::Agents => Side::Agents,
            AuditSide::Tasks => Side::Tasks,
        }
    }
}

enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_workers().and_then(|()| dispatch(cli.command));
    match run {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_workers() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{WORKERS_VAR} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Solve {
            instance,
            mech,
            profile,
            seed,
        } => solve(&instance, mech, profile.as_deref(), seed),
        Command::Gen(args) => gen(&args),
        Command::Audit {
            side,
            instances,
            mech,
            setting,
            grid,
        } => audit(side.into(), &instances, mech, setting, &grid),
        Command::Experiment {
            kind,
            config,
            seed,
            fast,
            csv,
            json,
            svg,
        } => {
            let mut cfg = load_config(kind, config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.fast |= fast;
            cfg.csv = csv.or(cfg.csv);
            cfg.json = json.or(cfg.json);
            cfg.svg = svg.or(cfg.svg);
            experiment(&cfg)
        }
        Command::Fixtures => Ok(fixtures()),
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    Instance::load(path).with_context(|| format!("reading instance {}", path.display()))
}

fn solve(
    path: &Path,
    mech: MechanismKind,
    profile: Option<&Path>,
    seed: u64,
) -> anyhow::Result<Outcome> {
    let inst = load_instance(path)?;
    let profile = match profile {
        Some(p) => Profile::load(p).with_context(|| format!("reading profile {}", p.display()))?,
        None => Profile::truthful_agents(&inst),
    };
    let mu = run_mechanism(mech, &inst, &profile, Some(seed))?;
    let out = json!({
        "mechanism": mech,
        "weight": matching_weight(&inst, &mu)?,
        "matching": mu,
        "agent_utilities": agent_utilities(&inst, &mu),
        "pretty": format_matching(&mu),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(Outcome::Ok)
}

fn gen(args: &GenArgs) -> anyhow::Result<Outcome> {
    let cfg = GenConfig::new(args.n, args.m, args.p, args.b_low, args.b_high, args.seed);
    cfg.validate()?;
    let indices = args.start..args.start + args.count as u64;
    let Some(dir) = &args.out else {
        for k in indices {
            println!("{}", generate_instance(&cfg, k)?.to_json());
        }
        return Ok(Outcome::Ok);
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for k in indices {
        let name = format!("instance-{k:05}.json");
        generate_instance(&cfg, k)?.save(dir.join(&name))?;
        files.push(json!({ "file": name, "seed": cfg.seed, "index": k }));
    }
    let manifest = json!({ "config": cfg, "instances": files });
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(Outcome::Ok)
}

fn audit(
    side: Side,
    paths: &[PathBuf],
    mech: MechanismKind,
    setting: Setting,
    grid: &[f64],
) -> anyhow::Result<Outcome> {
    if !setting.allowed_for(side) {
        bail!(
            "setting {setting} does not apply to {} audits",
            side.label()
        );
    }
    let mut reports = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let inst = load_instance(path)?;
        let deviations = match side {
            Side::Agents => audit_agent_truthfulness(&inst, mech, setting)?,
            Side::Tasks => audit_task_truthfulness(&inst, mech, setting, grid)?,
        };
        reports.push(AuditReport {
            instance: i,
            mechanism: mech,
            side,
            setting,
            deviations,
        });
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    let violated = reports.iter().any(|r| !r.deviations.is_empty());
    Ok(if violated {
        Outcome::Violation
    } else {
        Outcome::Ok
    })
}

/// Reads a config file, filling in `kind` from the command line when the
/// file leaves it out.
fn load_config(kind: ExperimentKind, path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::new(kind));
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    let obj = value
        .as_object_mut()
        .context("config must be a JSON object")?;
    match obj.get("kind") {
        None => {
            obj.insert("kind".into(), serde_json::to_value(kind)?);
        }
        Some(k) if *k != serde_json::to_value(kind)? => {
            bail!("config is for experiment {k}, not {kind}");
        }
        Some(_) => {}
    }
    Ok(ExperimentConfig::from_json(&value.to_string())?)
}

fn experiment(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    if cfg.svg.is_some() && cfg.kind != ExperimentKind::MpugCurve {
        bail!("--svg is only available for mpug-curve");
    }
    let table = run_experiment(cfg)?;
    match &cfg.csv {
        Some(p) => export_results(&table, ExportFormat::Csv, p)?,
        None => print!("{}", results_csv(&table)),
    }
    if let Some(p) = &cfg.json {
        export_results(&table, ExportFormat::Json, p)?;
    }
    if let Some(p) = &cfg.svg {
        render_plot(&table, p)?;
    }
    Ok(Outcome::Ok)
}

fn fixtures() -> Outcome {
    let outcomes = replay_all();
    for o in &outcomes {
        if o.ok() {
            println!("ok   {}: {}", o.name, o.actual);
        } else {
            println!("FAIL {}: expected {} got {}", o.name, o.expected, o.actual);
        }
    }
    if outcomes.iter().all(|o| o.ok()) {
        Outcome::Ok
    } else {
        Outcome::Violation
    }
}
