//! Experiment driver: generates markets cell by cell, measures them, and
//! aggregates the measurements into a [`ResultsTable`].
//!
//! Randomness is addressed by `(seed, cell, instance, trial)`, and
//! per-instance results are reduced in index order, so a table does not
//! depend on the number of worker threads.

mod config;
mod export;
mod plot;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    Cell, ExperimentConfig, ExperimentKind, Grid, DEFAULT_ITERATIONS, FAST_ITERATIONS,
};
pub use export::{export_results, results_csv, ExportFormat, CSV_HEADER};
pub use plot::{plot_svg, render_plot};

use crate::error::Result;
use crate::gen::{generate_instance, GenConfig};
use crate::instance::{Instance, WEIGHT_TOL};
use crate::mechanisms::{
    first_agent_best_report, randomized_bfs_samples, solve_with, MechanismKind, Profile, Report,
};
use crate::seed::derive_seed;
use crate::strategies::{
    all_gains, apply_manipulation, mpug, pma, utility_gain_ratio, utility_in, DeviationProbe,
    ManipulationSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Standard error of a mean; absent for extrema and for single samples.
    pub stderr: Option<f64>,
    pub samples: usize,
}

impl Metric {
    /// Mean of `xs` with `sd / sqrt(len)` as standard error.
    pub fn mean(name: impl Into<String>, xs: &[f64]) -> Self {
        let k = xs.len();
        let value = xs.iter().sum::<f64>() / k as f64;
        let stderr = (k >= 2).then(|| {
            let var = xs.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (k - 1) as f64;
            var.sqrt() / (k as f64).sqrt()
        });
        Metric {
            name: name.into(),
            value,
            stderr,
            samples: k,
        }
    }

    pub fn plain(name: impl Into<String>, value: f64, samples: usize) -> Self {
        Metric {
            name: name.into(),
            value,
            stderr: None,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(flatten)]
    pub cell: Cell,
    pub iterations: usize,
    pub metrics: Vec<Metric>,
}

impl ResultRow {
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Truthful over top-capacity payoff of agent 0. An isolated first agent
/// or a zero best payoff counts as ratio 1.
pub fn first_agent_ratio(inst: &Instance, kind: MechanismKind) -> Result<f64> {
    let Ok(best) = first_agent_best_report(inst) else {
        return Ok(1.0);
    };
    let mu = solve_with(kind, inst)?;
    let truthful = utility_in(inst, &mu, 0);
    let probe = DeviationProbe::new(inst, &Profile::truthful_agents(inst), kind)?;
    let mut edges = best;
    edges.sort_unstable();
    let manipulated = probe.utility(0, &edges, None);
    Ok(if manipulated <= WEIGHT_TOL {
        1.0
    } else {
        truthful / manipulated
    })
}

/// Whether some agent strictly gains against the deterministic
/// breadth-first mechanism: agent 0 with its top-capacity report, every
/// other agent with each k-order manipulation.
pub fn manipulable_deterministic(inst: &Instance, orders: &[usize]) -> Result<bool> {
    let kind = MechanismKind::Bfs;
    if inst.n_agents() > 0
        && inst.degree(0) > 0
        && utility_gain_ratio(inst, kind, 0, &ManipulationSpec::TopB)?.is_strict_gain()
    {
        return Ok(true);
    }
    let specs: Vec<_> = orders
        .iter()
        .map(|&k| ManipulationSpec::KOrder { k })
        .collect();
    let gains = all_gains(inst, kind, &specs)?;
    Ok(gains.iter().skip(1).flatten().any(|g| g.is_strict_gain()))
}

/// Whether some agent's k-order manipulation beats truth-telling in
/// expectation under the lottery mechanism. Truthful and deviant runs
/// share trial seeds; a deviation counts when its mean paired gain exceeds
/// both the tolerance and two standard errors.
pub fn manipulable_randomized(
    inst: &Instance,
    orders: &[usize],
    trials: usize,
    seed: u64,
) -> Result<bool> {
    let truthful = Profile::truthful_agents(inst);
    let base = randomized_bfs_samples(inst, &truthful, trials, seed)?;
    for a in 0..inst.n_agents() {
        if inst.degree(a) == 0 {
            continue;
        }
        let mut tried: Vec<Report> = Vec::new();
        for &k in orders {
            let report = apply_manipulation(inst, a, &ManipulationSpec::KOrder { k })?;
            if report.edges == inst.agent_tasks(a) || tried.contains(&report) {
                continue;
            }
            tried.push(report.clone());
            let dev = randomized_bfs_samples(inst, &truthful.with_report(a, report), trials, seed)?;
            let diffs: Vec<f64> = dev.iter().zip(&base).map(|(d, b)| d[a] - b[a]).collect();
            let m = Metric::mean("", &diffs);
            let se = m.stderr.unwrap_or(0.0);
            if m.value > WEIGHT_TOL && m.value > 2.0 * se {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn measure_cell(cfg: &ExperimentConfig, cell: &Cell, cell_index: usize) -> Result<ResultRow> {
    let iterations = cfg.resolved_iterations();
    let gen = GenConfig {
        n: cell.n,
        m: cell.m,
        p: cell.p,
        capacity_low: cell.b_low,
        capacity_high: cell.b_high,
        value_mean: cfg.value_mean,
        value_sigma: cfg.value_sigma,
        seed: derive_seed(&[cfg.seed, cell_index as u64]),
    };
    let per_instance: Vec<Vec<f64>> = (0..iterations as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let inst = generate_instance(&gen, i)?;
            match cfg.kind {
                ExperimentKind::CompareFirstAgent => Ok(vec![
                    first_agent_ratio(&inst, MechanismKind::Bfs)?,
                    first_agent_ratio(&inst, MechanismKind::Dfs)?,
                ]),
                ExperimentKind::MpugCurve => cfg
                    .mechanisms
                    .iter()
                    .map(|&k| mpug(&inst, k, &cfg.thresholds))
                    .collect(),
                ExperimentKind::PmaPmi => {
                    let specs: Vec<_> = cfg
                        .thresholds
                        .iter()
                        .map(|&threshold| ManipulationSpec::TLevel { threshold })
                        .collect();
                    let mut out = Vec::new();
                    for &k in &cfg.mechanisms {
                        let share = pma(&inst, k, &specs)?;
                        out.push(share);
                        out.push(if share > 0.0 { 1.0 } else { 0.0 });
                    }
                    Ok(out)
                }
                ExperimentKind::RandomizedVsDeterministic => {
                    let mc_seed = derive_seed(&[cfg.seed, cell_index as u64, i]);
                    Ok(vec![
                        f64::from(u8::from(manipulable_deterministic(&inst, &cfg.orders)?)),
                        f64::from(u8::from(manipulable_randomized(
                            &inst,
                            &cfg.orders,
                            cfg.mc_trials,
                            mc_seed,
                        )?)),
                    ])
                }
            }
        })
        .collect::<Result<_>>()?;

    let column = |j: usize| -> Vec<f64> { per_instance.iter().map(|r| r[j]).collect() };
    let mut metrics = Vec::new();
    match cfg.kind {
        ExperimentKind::CompareFirstAgent => {
            for (j, label) in ["bfs", "dfs"].into_iter().enumerate() {
                let ratios = column(j);
                let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                metrics.push(Metric::mean(format!("{label}_mean_ratio"), &ratios));
                metrics.push(Metric::plain(
                    format!("{label}_max_loss"),
                    1.0 - lo,
                    iterations,
                ));
                metrics.push(Metric::plain(
                    format!("{label}_min_loss"),
                    1.0 - hi,
                    iterations,
                ));
            }
        }
        ExperimentKind::MpugCurve => {
            for (j, k) in cfg.mechanisms.iter().enumerate() {
                metrics.push(Metric::mean(format!("mpug_{k}"), &column(j)));
            }
        }
        ExperimentKind::PmaPmi => {
            for (j, k) in cfg.mechanisms.iter().enumerate() {
                metrics.push(Metric::mean(format!("pma_{k}"), &column(2 * j)));
                metrics.push(Metric::mean(format!("pmi_{k}"), &column(2 * j + 1)));
            }
        }
        ExperimentKind::RandomizedVsDeterministic => {
            metrics.push(Metric::mean("manipulable_bfs", &column(0)));
            metrics.push(Metric::mean("manipulable_rbfs", &column(1)));
        }
    }
    Ok(ResultRow {
        cell: *cell,
        iterations,
        metrics,
    })
}

/// Runs every cell of the configured grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let cells = cfg.resolved_grid().cells();
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(c, cell)| measure_cell(cfg, cell, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultsTable {
        kind: cfg.kind,
        seed: cfg.seed,
        config: cfg.clone(),
        rows,
    })
}
