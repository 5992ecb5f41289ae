use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId};
use crate::matching::Matching;

use super::profile::{Profile, Report, Side};

/// First-come-first-served policies. Agents are visited in priority order;
/// each claims its top-capacity adjacent tasks among those not already
/// claimed.
#[derive(Debug, Clone, PartialEq)]
pub struct FcfsPolicySet {
    /// `policies[i]`: tasks claimed by agent `i`, in processing order.
    pub policies: Vec<Vec<TaskId>>,
    /// `residual[i]`: unclaimed tasks after agents `0..i` have chosen,
    /// sorted by id. `residual[0]` is every task.
    pub residual: Vec<Vec<TaskId>>,
}

impl FcfsPolicySet {
    pub fn union(&self) -> Matching {
        self.policies
            .iter()
            .enumerate()
            .flat_map(|(a, ts)| ts.iter().map(move |&t| (a, t)))
            .collect()
    }

    pub fn welfare(&self, inst: &Instance) -> f64 {
        self.policies.iter().flatten().map(|&t| inst.value(t)).sum()
    }
}

/// The `min(k, deg)` highest-valued tasks adjacent to `a`, in processing
/// order.
pub fn top_tasks(inst: &Instance, a: AgentId, k: usize) -> Vec<TaskId> {
    let mut ts = inst.agent_tasks_by_value(a);
    ts.truncate(k);
    ts
}

pub fn fcfs_policies(inst: &Instance) -> FcfsPolicySet {
    let mut free = vec![true; inst.n_tasks()];
    let mut policies = Vec::with_capacity(inst.n_agents());
    let mut residual = Vec::with_capacity(inst.n_agents() + 1);
    residual.push((0..inst.n_tasks()).collect::<Vec<_>>());
    for a in 0..inst.n_agents() {
        let claim: Vec<TaskId> = inst
            .agent_tasks_by_value(a)
            .into_iter()
            .filter(|&t| free[t])
            .take(inst.capacity(a))
            .collect();
        for &t in &claim {
            free[t] = false;
        }
        policies.push(claim);
        residual.push((0..inst.n_tasks()).filter(|&t| free[t]).collect());
    }
    FcfsPolicySet { policies, residual }
}

/// Every agent reports its FCFS policy (abstaining when it is empty).
/// Returns the profile and its welfare.
pub fn worst_ne_profile(inst: &Instance) -> (Profile, f64) {
    let set = fcfs_policies(inst);
    let welfare = set.welfare(inst);
    let reports = set
        .policies
        .into_iter()
        .map(|ts| Some(Report::edges(ts)))
        .collect();
    (
        Profile {
            side: Side::Agents,
            reports,
        },
        welfare,
    )
}

/// The top-`b_1` adjacent tasks of the highest-priority agent.
pub fn first_agent_best_report(inst: &Instance) -> Result<Vec<TaskId>> {
    if inst.n_agents() == 0 {
        return Err(Error::UnknownAgent(0));
    }
    if inst.degree(0) == 0 {
        return Err(Error::IsolatedAgent(0));
    }
    Ok(top_tasks(inst, 0, inst.capacity(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::{agent_utility, matching_weight};
    use crate::mechanisms::{run_mechanism, MechanismKind};
    use crate::solver::solve_ap;

    #[test]
    fn first_mover_policies() {
        let inst = fixtures::first_mover();
        let set = fcfs_policies(&inst);
        assert_eq!(set.policies, vec![vec![0, 1], vec![], vec![]]);
        assert_eq!(set.residual[0], vec![0, 1, 2, 3]);
        assert_eq!(set.residual[1], vec![2, 3]);
        assert_eq!(set.residual[3], vec![2, 3]);
        assert_eq!(set.union(), solve_ap(&inst));
    }

    #[test]
    fn isolated_agent_gets_empty_policy() {
        let inst = Instance::new(vec![1, 2], vec![1.0], &[(1, 0)]).unwrap();
        let set = fcfs_policies(&inst);
        assert!(set.policies[0].is_empty());
        assert_eq!(set.policies[1], vec![0]);
    }

    #[test]
    fn worst_equilibrium_welfares() {
        let eps = 0.2;
        let (_, w) = worst_ne_profile(&fixtures::priority_gap(eps));
        assert!((w - (1.0 + eps)).abs() < 1e-12);
        let (p, w) = worst_ne_profile(&fixtures::first_mover());
        assert!((w - 0.75).abs() < 1e-12);
        assert!(p.reports[1].as_ref().unwrap().is_abstain());
    }

    #[test]
    fn worst_equilibrium_is_a_fixed_point() {
        for inst in [
            fixtures::first_mover(),
            fixtures::class_split(),
            fixtures::bfs_dfs_split(),
        ] {
            let (p, w) = worst_ne_profile(&inst);
            let union = fcfs_policies(&inst).union();
            for kind in MechanismKind::DETERMINISTIC {
                let mu = run_mechanism(kind, &inst, &p, None).unwrap();
                assert_eq!(mu, union);
                assert!((matching_weight(&inst, &mu).unwrap() - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn policy_equal_to_truth_gives_optimum() {
        // Degrees within capacity and no contention: FCFS reports everything.
        let inst =
            Instance::new(vec![2, 1], vec![3.0, 2.0, 1.0], &[(0, 0), (0, 1), (1, 2)]).unwrap();
        let (_, w) = worst_ne_profile(&inst);
        assert!((w - 6.0).abs() < 1e-12);
    }

    #[test]
    fn best_report_of_first_agent() {
        let inst = fixtures::first_mover();
        let r = first_agent_best_report(&inst).unwrap();
        assert_eq!(r, vec![0, 1]);
        let p = Profile::truthful_agents(&inst).with_report(0, Report::edges(r));
        let mu = run_mechanism(MechanismKind::Bfs, &inst, &p, None).unwrap();
        assert!((agent_utility(&inst, &mu, 0).unwrap() - 0.75).abs() < 1e-12);

        let inst = fixtures::priority_gap(0.5);
        assert_eq!(first_agent_best_report(&inst).unwrap(), vec![0]);

        let inst = Instance::new(vec![5], vec![1.0, 2.0], &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(first_agent_best_report(&inst).unwrap(), vec![1, 0]);

        let inst = Instance::new(vec![1, 1], vec![1.0], &[(1, 0)]).unwrap();
        assert!(matches!(
            first_agent_best_report(&inst),
            Err(Error::IsolatedAgent(0))
        ));
    }
}
