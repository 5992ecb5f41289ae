use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId};

/// A b-matching stored as a set of `(agent, task)` edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching {
    pairs: BTreeSet<(AgentId, TaskId)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (AgentId, TaskId)>) -> Self {
        Matching {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, a: AgentId, t: TaskId) -> bool {
        self.pairs.insert((a, t))
    }

    pub fn remove(&mut self, a: AgentId, t: TaskId) -> bool {
        self.pairs.remove(&(a, t))
    }

    pub fn contains(&self, a: AgentId, t: TaskId) -> bool {
        self.pairs.contains(&(a, t))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, TaskId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn tasks_of(&self, a: AgentId) -> impl Iterator<Item = TaskId> + '_ {
        self.pairs.range((a, 0)..=(a, usize::MAX)).map(|&(_, t)| t)
    }

    pub fn owner_of(&self, t: TaskId) -> Option<AgentId> {
        self.pairs.iter().find(|&&(_, x)| x == t).map(|&(a, _)| a)
    }

    pub fn is_task_matched(&self, t: TaskId) -> bool {
        self.pairs.iter().any(|&(_, x)| x == t)
    }

    /// `self ⊕ other`.
    pub fn symmetric_difference(&self, other: &Matching) -> Matching {
        Matching {
            pairs: self
                .pairs
                .symmetric_difference(&other.pairs)
                .copied()
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Matching) -> bool {
        self.pairs.is_subset(&other.pairs)
    }
}

impl FromIterator<(AgentId, TaskId)> for Matching {
    fn from_iter<I: IntoIterator<Item = (AgentId, TaskId)>>(iter: I) -> Self {
        Matching::from_pairs(iter)
    }
}

/// True iff every pair is an edge, no task is used twice and no agent
/// exceeds its capacity.
pub fn is_feasible_matching(inst: &Instance, mu: &Matching) -> bool {
    let mut load = vec![0usize; inst.n_agents()];
    let mut used = vec![false; inst.n_tasks()];
    for (a, t) in mu.pairs() {
        if !inst.has_edge(a, t) || used[t] {
            return false;
        }
        used[t] = true;
        load[a] += 1;
        if load[a] > inst.capacity(a) {
            return false;
        }
    }
    true
}

/// Total value of matched tasks.
pub fn matching_weight(inst: &Instance, mu: &Matching) -> Result<f64> {
    if !is_feasible_matching(inst, mu) {
        return Err(Error::InfeasibleMatching);
    }
    Ok(mu.pairs().map(|(_, t)| inst.value(t)).sum())
}

/// Total value of the tasks matched to `a`.
pub fn agent_utility(inst: &Instance, mu: &Matching, a: AgentId) -> Result<f64> {
    if a >= inst.n_agents() {
        return Err(Error::UnknownAgent(a));
    }
    if !is_feasible_matching(inst, mu) {
        return Err(Error::InfeasibleMatching);
    }
    Ok(mu.tasks_of(a).map(|t| inst.value(t)).sum())
}

/// All agent utilities at once; `Σ` of the result equals the matching
/// weight.
pub fn agent_utilities(inst: &Instance, mu: &Matching) -> Vec<f64> {
    let mut u = vec![0.0; inst.n_agents()];
    for (a, t) in mu.pairs() {
        u[a] += inst.value(t);
    }
    u
}

/// 1 if `t` is matched, 0 otherwise.
pub fn task_utility(mu: &Matching, t: TaskId) -> u8 {
    u8::from(mu.is_task_matched(t))
}
