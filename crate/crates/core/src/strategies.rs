//! Manipulation families, gain metrics and best-response search for the
//! agent side.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId, WEIGHT_TOL};
use crate::matching::Matching;
use crate::mechanisms::{
    build_effective_instance, solve_with, top_tasks, MechanismKind, Profile, Report, Side,
};

/// Largest adjacency for which every edge subset is enumerated.
pub const ENUMERATION_CAP: usize = 20;

/// Which parts of its type an entity may misreport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Edges only.
    Ems,
    /// Agent edges and capacity.
    Ecms,
    /// Task edges and value.
    Evms,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Ems => "ems",
            Setting::Ecms => "ecms",
            Setting::Evms => "evms",
        }
    }

    pub fn allowed_for(self, side: Side) -> bool {
        !matches!(
            (self, side),
            (Setting::Ecms, Side::Tasks) | (Setting::Evms, Side::Agents)
        )
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ems" => Ok(Setting::Ems),
            "ecms" => Ok(Setting::Ecms),
            "evms" => Ok(Setting::Evms),
            other => Err(Error::InvalidConfig(format!("unknown setting '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ManipulationSpec {
    /// Hide every edge to a task valued below the threshold.
    TLevel {
        threshold: f64,
    },
    /// Hide the edges to the `k` lowest-valued adjacent tasks.
    KOrder {
        k: usize,
    },
    /// Report only the top-capacity adjacent tasks.
    TopB,
    Explicit {
        report: Report,
    },
}

impl fmt::Display for ManipulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManipulationSpec::TLevel { threshold } => write!(f, "t-level({threshold})"),
            ManipulationSpec::KOrder { k } => write!(f, "k-order({k})"),
            ManipulationSpec::TopB => f.write_str("top-b"),
            ManipulationSpec::Explicit { report } => write!(f, "explicit({:?})", report.edges),
        }
    }
}

/// The report agent `a` sends under `spec`. Families that would hide every
/// edge keep the single highest-valued one instead.
pub fn apply_manipulation(inst: &Instance, a: AgentId, spec: &ManipulationSpec) -> Result<Report> {
    if a >= inst.n_agents() {
        return Err(Error::UnknownAgent(a));
    }
    if inst.degree(a) == 0 {
        return Err(Error::IsolatedAgent(a));
    }
    let by_value = inst.agent_tasks_by_value(a);
    let mut kept: Vec<TaskId> = match spec {
        ManipulationSpec::TLevel { threshold } => by_value
            .iter()
            .copied()
            .filter(|&t| inst.value(t) >= *threshold)
            .collect(),
        ManipulationSpec::KOrder { k } => by_value[..by_value.len().saturating_sub(*k)].to_vec(),
        ManipulationSpec::TopB => top_tasks(inst, a, inst.capacity(a)),
        ManipulationSpec::Explicit { report } => return Ok(report.clone()),
    };
    if kept.is_empty() {
        kept.push(by_value[0]);
    }
    kept.sort_unstable();
    Ok(Report::edges(kept))
}

/// Relative gain `max(u' - u, 0) / u`, with `0/0 = 1` and a strictly
/// positive gain from zero reported as infinity.
pub fn gain_ratio(truthful: f64, manipulated: f64) -> f64 {
    if truthful.abs() <= WEIGHT_TOL {
        if manipulated.abs() <= WEIGHT_TOL {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        (manipulated - truthful).max(0.0) / truthful
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub agent: AgentId,
    pub truthful: f64,
    pub manipulated: f64,
    pub ratio: f64,
}

impl GainReport {
    fn new(agent: AgentId, truthful: f64, manipulated: f64) -> Self {
        GainReport {
            agent,
            truthful,
            manipulated,
            ratio: gain_ratio(truthful, manipulated),
        }
    }

    /// Both utilities are zero, so the ratio is only the `0/0` convention.
    pub fn is_degenerate(&self) -> bool {
        self.truthful.abs() <= WEIGHT_TOL && self.manipulated.abs() <= WEIGHT_TOL
    }

    pub fn is_strict_gain(&self) -> bool {
        self.manipulated - self.truthful > WEIGHT_TOL
    }
}

fn require_deterministic(kind: MechanismKind) -> Result<()> {
    if kind.is_deterministic() {
        Ok(())
    } else {
        Err(Error::UnsupportedMechanism(kind.name()))
    }
}

/// True utility of `a` (valued with `base`) in `mu`.
pub(crate) fn utility_in(base: &Instance, mu: &Matching, a: AgentId) -> f64 {
    mu.tasks_of(a).map(|t| base.value(t)).sum()
}

/// Agent-side deviations against a fixed market for everybody else. The
/// market `others` has already been materialized from the other agents'
/// reports; the deviating agent's entry is overwritten per query.
pub(crate) struct DeviationProbe<'a> {
    base: &'a Instance,
    others: Instance,
    kind: MechanismKind,
}

impl<'a> DeviationProbe<'a> {
    pub(crate) fn new(base: &'a Instance, others: &Profile, kind: MechanismKind) -> Result<Self> {
        require_deterministic(kind)?;
        Ok(DeviationProbe {
            base,
            others: build_effective_instance(base, others)?,
            kind,
        })
    }

    /// Outcome when `a` reports `tasks` (sorted, within its true adjacency)
    /// and optionally a capacity.
    pub(crate) fn outcome(
        &self,
        a: AgentId,
        tasks: &[TaskId],
        capacity: Option<usize>,
    ) -> Matching {
        let eff = self.others.with_agent_report(a, tasks, capacity);
        solve_with(self.kind, &eff).expect("deterministic kind")
    }

    pub(crate) fn utility(&self, a: AgentId, tasks: &[TaskId], capacity: Option<usize>) -> f64 {
        utility_in(self.base, &self.outcome(a, tasks, capacity), a)
    }
}

fn check_agent(inst: &Instance, a: AgentId) -> Result<()> {
    if a >= inst.n_agents() {
        Err(Error::UnknownAgent(a))
    } else if inst.degree(a) == 0 {
        Err(Error::IsolatedAgent(a))
    } else {
        Ok(())
    }
}

/// Truthful versus manipulated utility of agent `a`, the others truthful.
pub fn utility_gain_ratio(
    inst: &Instance,
    kind: MechanismKind,
    a: AgentId,
    spec: &ManipulationSpec,
) -> Result<GainReport> {
    check_agent(inst, a)?;
    let probe = DeviationProbe::new(inst, &Profile::truthful_agents(inst), kind)?;
    let truthful = probe.utility(a, inst.agent_tasks(a), None);
    let report = apply_manipulation(inst, a, spec)?;
    let mut p = Profile::truthful_agents(inst);
    p.reports[a] = Some(report.clone());
    build_effective_instance(inst, &p)?;
    let mut edges = report.edges;
    edges.sort_unstable();
    let manipulated = probe.utility(a, &edges, report.capacity);
    Ok(GainReport::new(a, truthful, manipulated))
}

/// Gain reports of every non-isolated agent under every spec, others
/// truthful. The truthful outcome is solved once; specs that leave an
/// agent's report unchanged are not re-solved.
pub fn all_gains(
    inst: &Instance,
    kind: MechanismKind,
    specs: &[ManipulationSpec],
) -> Result<Vec<Vec<GainReport>>> {
    let probe = DeviationProbe::new(inst, &Profile::truthful_agents(inst), kind)?;
    let truthful_mu = solve_with(kind, inst)?;
    let mut out = Vec::with_capacity(inst.n_agents());
    for a in 0..inst.n_agents() {
        if inst.degree(a) == 0 {
            out.push(Vec::new());
            continue;
        }
        let truthful = utility_in(inst, &truthful_mu, a);
        let mut row = Vec::with_capacity(specs.len());
        for spec in specs {
            let report = apply_manipulation(inst, a, spec)?;
            let mut edges = report.edges;
            edges.sort_unstable();
            let unchanged = edges == inst.agent_tasks(a)
                && report.capacity.is_none_or(|c| c == inst.capacity(a));
            let manipulated = if unchanged {
                truthful
            } else {
                probe.utility(a, &edges, report.capacity)
            };
            row.push(GainReport::new(a, truthful, manipulated));
        }
        out.push(row);
    }
    Ok(out)
}

/// Largest gain ratio over agents and T-level thresholds. Pairs where both
/// utilities are zero are left out; with nothing left the result is 0.
pub fn mpug(inst: &Instance, kind: MechanismKind, thresholds: &[f64]) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::InvalidConfig("threshold list is empty".into()));
    }
    let specs: Vec<_> = thresholds
        .iter()
        .map(|&threshold| ManipulationSpec::TLevel { threshold })
        .collect();
    Ok(all_gains(inst, kind, &specs)?
        .iter()
        .flatten()
        .filter(|g| !g.is_degenerate())
        .map(|g| g.ratio)
        .fold(0.0, f64::max))
}

/// Fraction of agents that strictly gain under at least one spec.
pub fn pma(inst: &Instance, kind: MechanismKind, specs: &[ManipulationSpec]) -> Result<f64> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("spec list is empty".into()));
    }
    if inst.n_agents() == 0 {
        return Ok(0.0);
    }
    let gainers = all_gains(inst, kind, specs)?
        .iter()
        .filter(|row| row.iter().any(GainReport::is_strict_gain))
        .count();
    Ok(gainers as f64 / inst.n_agents() as f64)
}

/// Fraction of instances on which some agent can gain.
pub fn pmi(batch: &[Instance], kind: MechanismKind, specs: &[ManipulationSpec]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("instance batch is empty".into()));
    }
    let mut hit = 0usize;
    for inst in batch {
        if pma(inst, kind, specs)? > 0.0 {
            hit += 1;
        }
    }
    Ok(hit as f64 / batch.len() as f64)
}

/// Every non-empty subset of `items` in lexicographic order.
pub(crate) fn nonempty_subsets(items: &[usize]) -> Vec<Vec<usize>> {
    fn walk(items: &[usize], from: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in from..items.len() {
            prefix.push(items[i]);
            out.push(prefix.clone());
            walk(items, i + 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity((1usize << items.len()).saturating_sub(1));
    walk(items, 0, &mut Vec::new(), &mut out);
    out
}

/// Every report in agent `a`'s strategy space, in search order: edge
/// subsets lexicographically, then capacities ascending.
pub(crate) fn agent_strategies(
    inst: &Instance,
    a: AgentId,
    setting: Setting,
) -> Result<Vec<Report>> {
    if !setting.allowed_for(Side::Agents) {
        return Err(Error::InvalidConfig(format!(
            "setting {setting} does not apply to agents"
        )));
    }
    check_agent(inst, a)?;
    if inst.degree(a) > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "agent {a} has degree {} > {ENUMERATION_CAP}",
            inst.degree(a)
        )));
    }
    let mut out = Vec::new();
    for subset in nonempty_subsets(inst.agent_tasks(a)) {
        match setting {
            Setting::Ecms => {
                for c in 1..=inst.capacity(a) {
                    out.push(Report::edges(subset.clone()).with_capacity(c));
                }
            }
            _ => out.push(Report::edges(subset)),
        }
    }
    Ok(out)
}

/// The utility-maximizing report of agent `a` when the others report as in
/// `others`. Ties keep the first report in search order.
pub fn best_response_exhaustive(
    inst: &Instance,
    kind: MechanismKind,
    a: AgentId,
    others: &Profile,
    setting: Setting,
) -> Result<(Report, f64)> {
    if others.side != Side::Agents {
        return Err(Error::InvalidConfig(
            "best response needs an agent profile".into(),
        ));
    }
    let strategies = agent_strategies(inst, a, setting)?;
    let probe = DeviationProbe::new(inst, others, kind)?;
    let mut best: Option<(Report, f64)> = None;
    for r in strategies {
        let u = probe.utility(a, &r.edges, r.capacity);
        if best.as_ref().is_none_or(|(_, b)| u > b + WEIGHT_TOL) {
            best = Some((r, u));
        }
    }
    Ok(best.expect("strategy space is non-empty"))
}

/// A unilateral misreport that strictly helps its author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub side: Side,
    pub id: usize,
    pub report: Report,
    pub truthful_utility: f64,
    pub deviant_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCheck {
    pub is_nash: bool,
    pub deviation: Option<Deviation>,
}

/// Checks every agent for a strictly profitable unilateral deviation from
/// `profile`. Agents without edges have nothing to deviate to.
pub fn verify_nash(
    inst: &Instance,
    profile: &Profile,
    kind: MechanismKind,
    setting: Setting,
) -> Result<NashCheck> {
    let eff = build_effective_instance(inst, profile)?;
    let mu = solve_with(kind, &eff)?;
    for a in 0..inst.n_agents() {
        if inst.degree(a) == 0 {
            continue;
        }
        let current = utility_in(inst, &mu, a);
        let (report, best) = best_response_exhaustive(inst, kind, a, profile, setting)?;
        if best > current + WEIGHT_TOL {
            return Ok(NashCheck {
                is_nash: false,
                deviation: Some(Deviation {
                    side: Side::Agents,
                    id: a,
                    report,
                    truthful_utility: current,
                    deviant_utility: best,
                }),
            });
        }
    }
    Ok(NashCheck {
        is_nash: true,
        deviation: None,
    })
}
