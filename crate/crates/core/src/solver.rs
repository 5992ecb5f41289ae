//! Exact vertex-weighted b-matching by augmenting paths, and the greedy
//! variant that only accepts paths of length one.
//!
//! Tasks are processed in decreasing value (ties by id). For each task the
//! exact solver looks for an alternating path that starts at the task and
//! ends at an unsaturated agent, then flips it. The traversal decides which
//! path is found when several exist, and therefore which agent ends up with
//! which task.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId};
use crate::matching::{is_feasible_matching, Matching};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Traversal {
    BreadthFirst,
    DepthFirst,
}

/// An alternating path `t1 - a1 - t2 - a2 - ... - aL`. Each step `(t_k, a_k)`
/// is an edge outside the current matching; consecutive steps are joined by
/// the matched edge `(a_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentingPath {
    steps: Vec<(TaskId, AgentId)>,
}

impl AugmentingPath {
    pub fn steps(&self) -> &[(TaskId, AgentId)] {
        &self.steps
    }

    /// Number of edges; always odd.
    pub fn len(&self) -> usize {
        2 * self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_task(&self) -> TaskId {
        self.steps[0].0
    }

    pub fn end_agent(&self) -> AgentId {
        self.steps[self.steps.len() - 1].1
    }

    /// The edges in path order as `(agent, task)` pairs, alternating
    /// unmatched / matched.
    pub fn edges(&self) -> Vec<(AgentId, TaskId)> {
        let mut out = Vec::with_capacity(self.len());
        for (k, &(t, a)) in self.steps.iter().enumerate() {
            out.push((a, t));
            if let Some(&(next_t, _)) = self.steps.get(k + 1) {
                out.push((a, next_t));
            }
        }
        out
    }

    pub fn to_matching(&self) -> Matching {
        Matching::from_pairs(self.edges())
    }
}

/// Mutable search state shared by both traversals. `held[a]` keeps the
/// tasks of `a` sorted by processing rank.
struct State<'a> {
    inst: &'a Instance,
    rank: Vec<usize>,
    owner: Vec<Option<AgentId>>,
    held: Vec<Vec<TaskId>>,
    stamp: u32,
    agent_seen: Vec<u32>,
    task_seen: Vec<u32>,
    agent_parent: Vec<TaskId>,
    task_parent: Vec<AgentId>,
}

impl<'a> State<'a> {
    fn new(inst: &'a Instance) -> Self {
        let (n, m) = (inst.n_agents(), inst.n_tasks());
        State {
            inst,
            rank: inst.process_rank(),
            owner: vec![None; m],
            held: vec![Vec::new(); n],
            stamp: 0,
            agent_seen: vec![0; n],
            task_seen: vec![0; m],
            agent_parent: vec![0; n],
            task_parent: vec![0; m],
        }
    }

    fn from_matching(inst: &'a Instance, mu: &Matching) -> Self {
        let mut s = State::new(inst);
        for (a, t) in mu.pairs() {
            s.assign(a, t);
        }
        s
    }

    fn unsaturated(&self, a: AgentId) -> bool {
        self.held[a].len() < self.inst.capacity(a)
    }

    fn assign(&mut self, a: AgentId, t: TaskId) {
        self.owner[t] = Some(a);
        let rank = &self.rank;
        let pos = self.held[a].partition_point(|&x| rank[x] < rank[t]);
        self.held[a].insert(pos, t);
    }

    fn release(&mut self, a: AgentId, t: TaskId) {
        if let Some(pos) = self.held[a].iter().position(|&x| x == t) {
            self.held[a].remove(pos);
        }
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    fn find(&mut self, start: TaskId, trav: Traversal) -> Option<AugmentingPath> {
        match trav {
            Traversal::BreadthFirst => self.bfs(start),
            Traversal::DepthFirst => {
                let stamp = self.next_stamp();
                self.task_seen[start] = stamp;
                let mut steps = Vec::new();
                self.dfs(start, stamp, &mut steps)
                    .then_some(AugmentingPath { steps })
            }
        }
    }

    /// Level-synchronous BFS. Agents reached at the same depth are sorted by
    /// id, so the shortest path to the highest-priority unsaturated agent
    /// wins.
    fn bfs(&mut self, start: TaskId) -> Option<AugmentingPath> {
        let stamp = self.next_stamp();
        let inst = self.inst;
        self.task_seen[start] = stamp;
        let mut frontier = vec![start];
        let mut reached = Vec::new();
        loop {
            reached.clear();
            for &t in &frontier {
                for &a in inst.task_agents(t) {
                    if self.agent_seen[a] != stamp {
                        self.agent_seen[a] = stamp;
                        self.agent_parent[a] = t;
                        reached.push(a);
                    }
                }
            }
            if reached.is_empty() {
                return None;
            }
            reached.sort_unstable();
            if let Some(&end) = reached.iter().find(|&&a| self.unsaturated(a)) {
                return Some(self.trace(start, end));
            }
            frontier.clear();
            for &a in &reached {
                for &t in &self.held[a] {
                    if self.task_seen[t] != stamp {
                        self.task_seen[t] = stamp;
                        self.task_parent[t] = a;
                        frontier.push(t);
                    }
                }
            }
        }
    }

    fn trace(&self, start: TaskId, end: AgentId) -> AugmentingPath {
        let mut steps = Vec::new();
        let mut a = end;
        loop {
            let t = self.agent_parent[a];
            steps.push((t, a));
            if t == start {
                break;
            }
            a = self.task_parent[t];
        }
        steps.reverse();
        AugmentingPath { steps }
    }

    /// Agents adjacent to `t` are tried in priority order; a saturated agent
    /// is passed through (via its held tasks, in processing order) before
    /// the next agent is tried.
    fn dfs(&mut self, t: TaskId, stamp: u32, steps: &mut Vec<(TaskId, AgentId)>) -> bool {
        let inst = self.inst;
        for &a in inst.task_agents(t) {
            if self.agent_seen[a] == stamp {
                continue;
            }
            self.agent_seen[a] = stamp;
            steps.push((t, a));
            if self.unsaturated(a) {
                return true;
            }
            for i in 0..self.held[a].len() {
                let next = self.held[a][i];
                if self.task_seen[next] == stamp {
                    continue;
                }
                self.task_seen[next] = stamp;
                if self.dfs(next, stamp, steps) {
                    return true;
                }
            }
            steps.pop();
        }
        false
    }

    fn augment(&mut self, path: &AugmentingPath) {
        let steps = &path.steps;
        for k in 0..steps.len() {
            let (t, a) = steps[k];
            if let Some(&(next_t, _)) = steps.get(k + 1) {
                self.release(a, next_t);
            }
            self.assign(a, t);
        }
    }

    fn matching(&self) -> Matching {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(t, o)| o.map(|a| (a, t)))
            .collect()
    }
}

/// Searches for an augmenting path from the unmatched task `t` with respect
/// to `partial`. Saturated agents are passed through via their matched
/// tasks in processing order.
pub fn find_augmenting_path(
    inst: &Instance,
    partial: &Matching,
    t: TaskId,
    trav: Traversal,
) -> Result<Option<AugmentingPath>> {
    if t >= inst.n_tasks() {
        return Err(Error::UnknownTask(t));
    }
    if !is_feasible_matching(inst, partial) {
        return Err(Error::InfeasibleMatching);
    }
    if partial.is_task_matched(t) {
        return Err(Error::TaskAlreadyMatched(t));
    }
    Ok(State::from_matching(inst, partial).find(t, trav))
}

/// One iteration of the exact solver: the task processed and the path
/// used, if any.
#[derive(Debug, Clone)]
pub struct Iteration {
    pub task: TaskId,
    pub path: Option<AugmentingPath>,
    pub matching: Matching,
}

/// Runs the exact solver and records the matching after every task.
pub fn solve_mvbm_traced(inst: &Instance, trav: Traversal) -> Vec<Iteration> {
    let mut state = State::new(inst);
    let mut out = Vec::with_capacity(inst.n_tasks());
    for t in inst.process_order() {
        let path = state.find(t, trav);
        if let Some(p) = &path {
            state.augment(p);
        }
        out.push(Iteration {
            task: t,
            path,
            matching: state.matching(),
        });
    }
    out
}

/// Maximum-weight b-matching.
pub fn solve_mvbm(inst: &Instance, trav: Traversal) -> Matching {
    let mut state = State::new(inst);
    for t in inst.process_order() {
        if let Some(p) = state.find(t, trav) {
            state.augment(&p);
        }
    }
    state.matching()
}

/// Greedy: each task, in processing order, goes to the highest-priority
/// unsaturated adjacent agent. Nothing is ever reassigned.
pub fn solve_ap(inst: &Instance) -> Matching {
    let mut load = vec![0usize; inst.n_agents()];
    let mut mu = Matching::new();
    for t in inst.process_order() {
        if let Some(&a) = inst
            .task_agents(t)
            .iter()
            .find(|&&a| load[a] < inst.capacity(a))
        {
            load[a] += 1;
            mu.insert(a, t);
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::matching_weight;

    fn m(pairs: &[(usize, usize)]) -> Matching {
        Matching::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn bfs_takes_the_direct_edge_in_split_market() {
        let inst = fixtures::bfs_dfs_split();
        let partial = m(&[(0, 0)]);
        let p = find_augmenting_path(&inst, &partial, 1, Traversal::BreadthFirst)
            .unwrap()
            .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.edges(), vec![(1, 1)]);
    }

    #[test]
    fn dfs_goes_through_the_first_agent() {
        let inst = fixtures::bfs_dfs_split();
        let partial = m(&[(0, 0)]);
        let p = find_augmenting_path(&inst, &partial, 1, Traversal::DepthFirst)
            .unwrap()
            .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.edges(), vec![(0, 1), (0, 0), (1, 0)]);
        assert_eq!(p.start_task(), 1);
        assert_eq!(p.end_agent(), 1);
    }

    #[test]
    fn isolated_task_has_no_path() {
        let inst = Instance::new(vec![1], vec![1.0, 2.0], &[(0, 1)]).unwrap();
        for trav in [Traversal::BreadthFirst, Traversal::DepthFirst] {
            assert!(find_augmenting_path(&inst, &Matching::new(), 0, trav)
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn matched_start_task_is_rejected() {
        let inst = fixtures::bfs_dfs_split();
        assert!(matches!(
            find_augmenting_path(&inst, &m(&[(0, 0)]), 0, Traversal::BreadthFirst),
            Err(Error::TaskAlreadyMatched(0))
        ));
    }

    #[test]
    fn split_market_outputs() {
        let inst = fixtures::bfs_dfs_split();
        assert_eq!(
            solve_mvbm(&inst, Traversal::BreadthFirst),
            m(&[(0, 0), (1, 1)])
        );
        assert_eq!(
            solve_mvbm(&inst, Traversal::DepthFirst),
            m(&[(0, 1), (1, 0)])
        );
    }

    #[test]
    fn class_market_outputs() {
        let inst = fixtures::class_split();
        assert_eq!(
            solve_mvbm(&inst, Traversal::BreadthFirst),
            m(&[(0, 0), (0, 1), (1, 2)])
        );
        assert_eq!(
            solve_mvbm(&inst, Traversal::DepthFirst),
            m(&[(2, 0), (0, 1), (0, 2)])
        );
    }

    #[test]
    fn first_mover_bfs_uses_long_paths() {
        let inst = fixtures::first_mover();
        let mu = solve_mvbm(&inst, Traversal::BreadthFirst);
        assert_eq!(mu, m(&[(0, 2), (0, 3), (1, 0), (2, 1)]));
        assert!((matching_weight(&inst, &mu).unwrap() - 0.9375).abs() < 1e-12);
        let trace = solve_mvbm_traced(&inst, Traversal::BreadthFirst);
        let lens: Vec<_> = trace
            .iter()
            .map(|i| i.path.as_ref().map(|p| p.len()))
            .collect();
        assert_eq!(lens, vec![Some(1), Some(1), Some(3), Some(3)]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(solve_ap(&fixtures::priority_gap(0.25)), m(&[(0, 0)]));
        assert_eq!(
            solve_ap(&fixtures::equal_value_collusion()),
            m(&[(0, 0), (1, 1)])
        );
        let single = Instance::new(vec![1], vec![3.0], &[(0, 0)]).unwrap();
        assert_eq!(solve_ap(&single), m(&[(0, 0)]));
    }

    #[test]
    fn matched_tasks_stay_matched_across_iterations() {
        let inst = fixtures::class_split();
        for trav in [Traversal::BreadthFirst, Traversal::DepthFirst] {
            let trace = solve_mvbm_traced(&inst, trav);
            for w in trace.windows(2) {
                for (_, t) in w[0].matching.pairs() {
                    assert!(w[1].matching.is_task_matched(t));
                }
            }
        }
    }
}
