//! Brute-force ground truth: the optimum by enumeration, exhaustive
//! truthfulness audits, coalition searches and equilibrium enumeration.
//!
//! Nothing here calls the augmenting-path solver except where a mechanism's
//! own outcome is the object being audited.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId, WEIGHT_TOL};
use crate::matching::{matching_weight, task_utility, Matching};
use crate::mechanisms::{
    build_effective_instance, fcfs_policies, solve_with, MechanismKind, Profile, Report, Side,
};
use crate::solver::{solve_mvbm, Traversal};
use crate::strategies::{
    agent_strategies, nonempty_subsets, utility_in, Deviation, DeviationProbe, Setting,
    ENUMERATION_CAP,
};

pub const MAX_BRUTE_FORCE_TASKS: usize = 8;
pub const MAX_BRUTE_FORCE_LEAVES: f64 = 1e7;
pub const MAX_PROFILES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumCertificate {
    pub weight: f64,
    pub matching: Matching,
    /// Complete assignments visited by the enumeration.
    pub enumerated: u64,
}

struct Enumerator<'a> {
    inst: &'a Instance,
    residual: Vec<usize>,
    current: Vec<Option<AgentId>>,
    best: Vec<Option<AgentId>>,
    best_weight: f64,
    leaves: u64,
}

impl Enumerator<'_> {
    fn walk(&mut self, t: TaskId, weight: f64) {
        if t == self.inst.n_tasks() {
            self.leaves += 1;
            if self.leaves == 1 || weight > self.best_weight + WEIGHT_TOL {
                self.best_weight = weight;
                self.best.clone_from(&self.current);
            }
            return;
        }
        for &a in self.inst.task_agents(t) {
            if self.residual[a] > 0 {
                self.residual[a] -= 1;
                self.current[t] = Some(a);
                self.walk(t + 1, weight + self.inst.value(t));
                self.current[t] = None;
                self.residual[a] += 1;
            }
        }
        self.walk(t + 1, weight);
    }
}

/// Maximum-weight b-matching by trying every assignment of each task to an
/// adjacent agent with room left, or to nobody. Among optimal assignments
/// the first in enumeration order (agents ascending, unmatched last) wins.
pub fn brute_force_mvbm(inst: &Instance) -> Result<OptimumCertificate> {
    let m = inst.n_tasks();
    if m > MAX_BRUTE_FORCE_TASKS {
        return Err(Error::CapExceeded(format!(
            "{m} tasks > {MAX_BRUTE_FORCE_TASKS}"
        )));
    }
    let leaves: f64 = (0..m)
        .map(|t| (inst.task_agents(t).len() + 1) as f64)
        .product();
    if leaves > MAX_BRUTE_FORCE_LEAVES {
        return Err(Error::CapExceeded(format!(
            "{leaves} assignments > {MAX_BRUTE_FORCE_LEAVES}"
        )));
    }
    let mut e = Enumerator {
        inst,
        residual: inst.capacities().to_vec(),
        current: vec![None; m],
        best: vec![None; m],
        best_weight: 0.0,
        leaves: 0,
    };
    e.walk(0, 0.0);
    let matching: Matching = e
        .best
        .iter()
        .enumerate()
        .filter_map(|(t, a)| a.map(|a| (a, t)))
        .collect();
    let weight = matching_weight(inst, &matching)?;
    Ok(OptimumCertificate {
        weight,
        matching,
        enumerated: e.leaves,
    })
}

/// Every strictly profitable unilateral agent deviation from the truthful
/// profile.
pub fn audit_agent_truthfulness(
    inst: &Instance,
    kind: MechanismKind,
    setting: Setting,
) -> Result<Vec<Deviation>> {
    let truthful = Profile::truthful_agents(inst);
    let probe = DeviationProbe::new(inst, &truthful, kind)?;
    let mu = solve_with(kind, inst)?;
    let mut found = Vec::new();
    for a in 0..inst.n_agents() {
        if inst.degree(a) == 0 {
            continue;
        }
        let before = utility_in(inst, &mu, a);
        for report in agent_strategies(inst, a, setting)? {
            let after = probe.utility(a, &report.edges, report.capacity);
            if after > before + WEIGHT_TOL {
                found.push(Deviation {
                    side: Side::Agents,
                    id: a,
                    report,
                    truthful_utility: before,
                    deviant_utility: after,
                });
            }
        }
    }
    Ok(found)
}

/// Every report in task `t`'s strategy space: agent subsets
/// lexicographically, then (for EVMS) each value `q_t * f` from the grid.
fn task_strategies(
    inst: &Instance,
    t: TaskId,
    setting: Setting,
    grid: &[f64],
) -> Result<Vec<Report>> {
    if !setting.allowed_for(Side::Tasks) {
        return Err(Error::InvalidConfig(format!(
            "setting {setting} does not apply to tasks"
        )));
    }
    let agents = inst.task_agents(t);
    if agents.len() > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "task {t} has degree {} > {ENUMERATION_CAP}",
            agents.len()
        )));
    }
    let q = inst.value(t);
    let mut out = Vec::new();
    for subset in nonempty_subsets(agents) {
        if setting == Setting::Evms && q > 0.0 {
            for &f in grid {
                let v = q * f;
                if v > 0.0 && v <= q {
                    out.push(Report::edges(subset.clone()).with_value(v));
                }
            }
        } else {
            out.push(Report::edges(subset));
        }
    }
    Ok(out)
}

fn require_deterministic(kind: MechanismKind) -> Result<()> {
    if kind.is_deterministic() {
        Ok(())
    } else {
        Err(Error::UnsupportedMechanism(kind.name()))
    }
}

/// Every unilateral task report that turns its author from unmatched to
/// matched.
pub fn audit_task_truthfulness(
    inst: &Instance,
    kind: MechanismKind,
    setting: Setting,
    value_grid: &[f64],
) -> Result<Vec<Deviation>> {
    require_deterministic(kind)?;
    let mu = solve_with(kind, inst)?;
    let truthful = Profile::truthful_tasks(inst);
    let mut found = Vec::new();
    for t in 0..inst.n_tasks() {
        let strategies = task_strategies(inst, t, setting, value_grid)?;
        if task_utility(&mu, t) == 1 {
            continue;
        }
        for report in strategies {
            let eff = build_effective_instance(inst, &truthful.with_report(t, report.clone()))?;
            if task_utility(&solve_with(kind, &eff)?, t) == 1 {
                found.push(Deviation {
                    side: Side::Tasks,
                    id: t,
                    report,
                    truthful_utility: 0.0,
                    deviant_utility: 1.0,
                });
            }
        }
    }
    Ok(found)
}

/// A joint misreport by several entities of one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionDeviation {
    pub side: Side,
    pub members: Vec<usize>,
    pub reports: Vec<Report>,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

/// All subsets of `0..n` with between 1 and `max_size` members, smaller
/// coalitions first.
fn coalitions(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..n).collect();
    let mut out: Vec<Vec<usize>> = nonempty_subsets(&all)
        .into_iter()
        .filter(|c| c.len() <= max_size)
        .collect();
    out.sort_by_key(Vec::len);
    out
}

/// Calls `visit` on every joint choice, one entry per strategy list, until
/// it returns `true`. Returns whether it did.
fn for_each_joint(
    lists: &[Vec<Report>],
    mut visit: impl FnMut(&[&Report]) -> Result<bool>,
) -> Result<bool> {
    let total = lists
        .iter()
        .try_fold(1usize, |acc, l| acc.checked_mul(l.len()))
        .unwrap_or(usize::MAX);
    if total > MAX_PROFILES {
        return Err(Error::CapExceeded(format!(
            "{total} joint reports > {MAX_PROFILES}"
        )));
    }
    let mut idx = vec![0usize; lists.len()];
    loop {
        let pick: Vec<&Report> = idx.iter().zip(lists).map(|(&i, l)| &l[i]).collect();
        if visit(&pick)? {
            return Ok(true);
        }
        let mut k = lists.len();
        loop {
            if k == 0 {
                return Ok(false);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// First agent coalition (up to `max_size` members) whose joint edge
/// hiding leaves every member at least as well off and one strictly
/// better.
pub fn agent_coalition_search(
    inst: &Instance,
    kind: MechanismKind,
    max_size: usize,
) -> Result<Option<CoalitionDeviation>> {
    require_deterministic(kind)?;
    let mu = solve_with(kind, inst)?;
    let truthful = Profile::truthful_agents(inst);
    let active: Vec<AgentId> = (0..inst.n_agents())
        .filter(|&a| inst.degree(a) > 0)
        .collect();
    for members in coalitions(active.len(), max_size) {
        let members: Vec<AgentId> = members.iter().map(|&i| active[i]).collect();
        let lists = members
            .iter()
            .map(|&a| agent_strategies(inst, a, Setting::Ems))
            .collect::<Result<Vec<_>>>()?;
        let before: Vec<f64> = members.iter().map(|&a| utility_in(inst, &mu, a)).collect();
        let mut hit = None;
        for_each_joint(&lists, |pick| {
            let mut p = truthful.clone();
            for (&a, r) in members.iter().zip(pick) {
                p.reports[a] = Some((*r).clone());
            }
            let out = solve_with(kind, &build_effective_instance(inst, &p)?)?;
            let after: Vec<f64> = members.iter().map(|&a| utility_in(inst, &out, a)).collect();
            let weakly = after.iter().zip(&before).all(|(x, y)| *x >= y - WEIGHT_TOL);
            let strictly = after.iter().zip(&before).any(|(x, y)| *x > y + WEIGHT_TOL);
            if weakly && strictly {
                hit = Some(CoalitionDeviation {
                    side: Side::Agents,
                    members: members.clone(),
                    reports: pick.iter().map(|r| (*r).clone()).collect(),
                    before: before.clone(),
                    after,
                });
                return Ok(true);
            }
            Ok(false)
        })?;
        if hit.is_some() {
            return Ok(hit);
        }
    }
    Ok(None)
}

/// First task coalition (up to `max_size` members) whose joint report
/// keeps every matched member matched and matches an unmatched one.
pub fn task_coalition_search(
    inst: &Instance,
    kind: MechanismKind,
    setting: Setting,
    value_grid: &[f64],
    max_size: usize,
) -> Result<Option<CoalitionDeviation>> {
    require_deterministic(kind)?;
    let mu = solve_with(kind, inst)?;
    let truthful = Profile::truthful_tasks(inst);
    let active: Vec<TaskId> = (0..inst.n_tasks())
        .filter(|&t| !inst.task_agents(t).is_empty())
        .collect();
    for members in coalitions(active.len(), max_size) {
        let members: Vec<TaskId> = members.iter().map(|&i| active[i]).collect();
        let before: Vec<f64> = members
            .iter()
            .map(|&t| f64::from(task_utility(&mu, t)))
            .collect();
        if before.iter().all(|&b| b == 1.0) {
            continue;
        }
        let lists = members
            .iter()
            .map(|&t| task_strategies(inst, t, setting, value_grid))
            .collect::<Result<Vec<_>>>()?;
        let mut hit = None;
        for_each_joint(&lists, |pick| {
            let mut p = truthful.clone();
            for (&t, r) in members.iter().zip(pick) {
                p.reports[t] = Some((*r).clone());
            }
            let out = solve_with(kind, &build_effective_instance(inst, &p)?)?;
            let after: Vec<f64> = members
                .iter()
                .map(|&t| f64::from(task_utility(&out, t)))
                .collect();
            let kept = before
                .iter()
                .zip(&after)
                .all(|(b, a)| *b == 0.0 || *a == 1.0);
            let gained = before
                .iter()
                .zip(&after)
                .any(|(b, a)| *b == 0.0 && *a == 1.0);
            if kept && gained {
                hit = Some(CoalitionDeviation {
                    side: Side::Tasks,
                    members: members.clone(),
                    reports: pick.iter().map(|r| (*r).clone()).collect(),
                    before: before.clone(),
                    after,
                });
                return Ok(true);
            }
            Ok(false)
        })?;
        if hit.is_some() {
            return Ok(hit);
        }
    }
    Ok(None)
}

/// A pure agent profile together with its welfare (true values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub profile: Profile,
    pub welfare: f64,
}

/// Every pure Nash equilibrium over non-empty edge-subset reports. Agents
/// without edges abstain and are not players.
pub fn enumerate_pure_nash(inst: &Instance, kind: MechanismKind) -> Result<Vec<Equilibrium>> {
    require_deterministic(kind)?;
    let n = inst.n_agents();
    let lists: Vec<Vec<Report>> = (0..n)
        .map(|a| {
            if inst.degree(a) == 0 {
                Ok(vec![Report::abstain()])
            } else {
                agent_strategies(inst, a, Setting::Ems)
            }
        })
        .collect::<Result<_>>()?;
    let total = lists
        .iter()
        .try_fold(1usize, |acc, l| acc.checked_mul(l.len()))
        .filter(|&t| t <= MAX_PROFILES)
        .ok_or_else(|| Error::CapExceeded(format!("more than {MAX_PROFILES} profiles")))?;

    // Mixed-radix index: agent 0 is the most significant digit.
    let mut stride = vec![1usize; n];
    for a in (0..n.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * lists[a + 1].len();
    }
    let profile_of = |idx: usize| Profile {
        side: Side::Agents,
        reports: (0..n)
            .map(|a| Some(lists[a][(idx / stride[a]) % lists[a].len()].clone()))
            .collect(),
    };
    let mut utilities = Vec::with_capacity(total);
    let mut welfare = Vec::with_capacity(total);
    for idx in 0..total {
        let mu = solve_with(kind, &build_effective_instance(inst, &profile_of(idx))?)?;
        utilities.push((0..n).map(|a| utility_in(inst, &mu, a)).collect::<Vec<_>>());
        welfare.push(matching_weight(inst, &mu)?);
    }
    let mut out = Vec::new();
    for idx in 0..total {
        let stable = (0..n).all(|a| {
            let digit = (idx / stride[a]) % lists[a].len();
            let base = idx - digit * stride[a];
            (0..lists[a].len())
                .all(|d| utilities[base + d * stride[a]][a] <= utilities[idx][a] + WEIGHT_TOL)
        });
        if stable {
            out.push(Equilibrium {
                profile: profile_of(idx),
                welfare: welfare[idx],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaPos {
    pub optimum: f64,
    pub worst_ne_welfare: f64,
    pub best_ne_welfare: Option<f64>,
    pub poa: f64,
    pub pos: Option<f64>,
    /// Equilibria were enumerated rather than taken from the FCFS profile.
    pub exact: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() <= WEIGHT_TOL && num.abs() <= WEIGHT_TOL {
        1.0
    } else {
        num / den
    }
}

/// Optimum over worst (and best) equilibrium welfare. Small markets (at
/// most 3 agents, degrees at most 4) are solved by enumerating every pure
/// profile; larger ones use the FCFS profile as the worst equilibrium and
/// report no best-equilibrium ratio.
pub fn poa_pos_on_instance(inst: &Instance, kind: MechanismKind) -> Result<PoaPos> {
    if !matches!(kind, MechanismKind::Bfs | MechanismKind::Dfs) {
        return Err(Error::UnsupportedMechanism(kind.name()));
    }
    let optimum = matching_weight(inst, &solve_mvbm(inst, Traversal::BreadthFirst))?;
    let small = inst.n_agents() <= 3 && (0..inst.n_agents()).all(|a| inst.degree(a) <= 4);
    if small {
        let eqs = enumerate_pure_nash(inst, kind)?;
        if !eqs.is_empty() {
            let worst = eqs.iter().map(|e| e.welfare).fold(f64::INFINITY, f64::min);
            let best = eqs
                .iter()
                .map(|e| e.welfare)
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(PoaPos {
                optimum,
                worst_ne_welfare: worst,
                best_ne_welfare: Some(best),
                poa: ratio(optimum, worst),
                pos: Some(ratio(optimum, best)),
                exact: true,
            });
        }
    }
    let worst = fcfs_policies(inst).welfare(inst);
    Ok(PoaPos {
        optimum,
        worst_ne_welfare: worst,
        best_ne_welfare: None,
        poa: ratio(optimum, worst),
        pos: None,
        exact: false,
    })
}

/// Audit findings for one instance, as written by the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub instance: usize,
    pub mechanism: MechanismKind,
    pub side: Side,
    pub setting: Setting,
    pub deviations: Vec<Deviation>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::agent_utility;
    use crate::mechanisms::{run_mechanism, worst_ne_profile};

    #[test]
    fn brute_force_known_optima() {
        let c = brute_force_mvbm(&fixtures::tied_optimum()).unwrap();
        assert!((c.weight - 1.1).abs() < 1e-12);
        assert_eq!(c.matching, Matching::from_pairs([(0, 0), (1, 2)]));
        let c = brute_force_mvbm(&fixtures::task_collusion()).unwrap();
        assert_eq!(c.matching, Matching::from_pairs([(0, 0), (1, 1)]));
        assert!((c.weight - 1.9).abs() < 1e-12);
        let empty = Instance::new(vec![1, 1], vec![1.0, 2.0], &[]).unwrap();
        let c = brute_force_mvbm(&empty).unwrap();
        assert_eq!((c.weight, c.enumerated), (0.0, 1));
    }

    #[test]
    fn brute_force_counts_assignments() {
        // Two unit agents on one task: a0, a1, or nobody.
        let inst = Instance::new(vec![1, 1], vec![1.0], &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(brute_force_mvbm(&inst).unwrap().enumerated, 3);
    }

    #[test]
    fn brute_force_cap() {
        let inst = Instance::new(vec![1], vec![1.0; 9], &[]).unwrap();
        assert!(matches!(
            brute_force_mvbm(&inst),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn exact_mechanisms_are_not_truthful_on_tied_optimum() {
        let inst = fixtures::tied_optimum();
        let found = audit_agent_truthfulness(&inst, MechanismKind::Bfs, Setting::Ems).unwrap();
        assert!(!found.is_empty());
        assert!(
            audit_agent_truthfulness(&inst, MechanismKind::Ap, Setting::Ems)
                .unwrap()
                .is_empty()
        );
        assert!(
            audit_agent_truthfulness(&inst, MechanismKind::Ap, Setting::Ecms)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn deviations_replay() {
        for inst in [
            fixtures::tied_optimum(),
            fixtures::first_mover(),
            fixtures::class_split(),
        ] {
            for kind in [MechanismKind::Bfs, MechanismKind::Dfs] {
                for d in audit_agent_truthfulness(&inst, kind, Setting::Ecms).unwrap() {
                    let p = Profile::truthful_agents(&inst).with_report(d.id, d.report.clone());
                    let mu = run_mechanism(kind, &inst, &p, None).unwrap();
                    assert_eq!(agent_utility(&inst, &mu, d.id).unwrap(), d.deviant_utility);
                }
            }
        }
    }

    #[test]
    fn tasks_cannot_gain_alone_but_can_collude() {
        let inst = fixtures::task_collusion();
        for kind in MechanismKind::DETERMINISTIC {
            for setting in [Setting::Ems, Setting::Evms] {
                assert!(
                    audit_task_truthfulness(&inst, kind, setting, &[1.0, 0.5, 0.25])
                        .unwrap()
                        .is_empty()
                );
            }
            let c = task_coalition_search(&inst, kind, Setting::Ems, &[1.0], 3)
                .unwrap()
                .expect("t1 and t3 collude");
            assert_eq!(c.members, vec![0, 2]);
            assert_eq!(c.after, vec![1.0, 1.0]);
        }
    }

    #[test]
    fn equal_values_let_agents_collude_under_greedy() {
        let inst = fixtures::equal_value_collusion();
        let c = agent_coalition_search(&inst, MechanismKind::Ap, 3)
            .unwrap()
            .expect("a1 and a3 collude");
        assert_eq!(c.members, vec![0, 2]);
        let distinct = fixtures::task_collusion();
        assert!(agent_coalition_search(&distinct, MechanismKind::Ap, 3)
            .unwrap()
            .is_none());
    }

    #[test]
    fn poa_on_priority_gap() {
        let eps = 1e-3;
        let inst = fixtures::priority_gap(eps);
        for kind in [MechanismKind::Bfs, MechanismKind::Dfs] {
            let r = poa_pos_on_instance(&inst, kind).unwrap();
            assert!(r.exact);
            assert!((r.poa - (2.0 + eps) / (1.0 + eps)).abs() < 1e-12);
            assert_eq!(Some(r.poa), r.pos);
        }
        assert_eq!(
            enumerate_pure_nash(&inst, MechanismKind::Bfs)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn single_agent_poa_is_one() {
        let inst = Instance::new(vec![2], vec![1.0, 2.0, 3.0], &[(0, 0), (0, 1), (0, 2)]).unwrap();
        let r = poa_pos_on_instance(&inst, MechanismKind::Bfs).unwrap();
        assert_eq!((r.poa, r.pos), (1.0, Some(1.0)));
        assert!(poa_pos_on_instance(&inst, MechanismKind::Ap).is_err());
    }

    #[test]
    fn fcfs_welfare_lower_bounds_equilibria() {
        for inst in [
            fixtures::first_mover(),
            fixtures::bfs_dfs_split(),
            fixtures::tied_optimum(),
        ] {
            let (_, w) = worst_ne_profile(&inst);
            for kind in [MechanismKind::Bfs, MechanismKind::Dfs] {
                for e in enumerate_pure_nash(&inst, kind).unwrap() {
                    assert!(w <= e.welfare + 1e-9);
                }
            }
        }
    }
}
