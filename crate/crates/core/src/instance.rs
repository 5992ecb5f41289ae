//! Bipartite markets: agents with capacities, tasks with values, and the
//! edges between them.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type AgentId = usize;
pub type TaskId = usize;

/// Absolute tolerance used for every weight comparison.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub capacity: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub value: f64,
}

/// The on-disk form of an instance. Nothing is checked at this level; see
/// [`RawInstance::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub agents: Vec<Agent>,
    pub tasks: Vec<Task>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    AgentOutOfRange { edge: usize, agent: usize },
    TaskOutOfRange { edge: usize, task: usize },
    DuplicateEdge { agent: usize, task: usize },
    NonPositiveCapacity { agent: usize, capacity: i64 },
    InvalidValue { task: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AgentOutOfRange { edge, agent } => {
                write!(f, "edge #{edge}: agent id {agent} out of range")
            }
            Violation::TaskOutOfRange { edge, task } => {
                write!(f, "edge #{edge}: task id {task} out of range")
            }
            Violation::DuplicateEdge { agent, task } => {
                write!(f, "duplicate edge ({agent}, {task})")
            }
            Violation::NonPositiveCapacity { agent, capacity } => {
                write!(f, "agent {agent}: non-positive capacity {capacity}")
            }
            Violation::InvalidValue { task, value } => {
                write!(f, "task {task}: value {value} is negative or not finite")
            }
        }
    }
}

impl RawInstance {
    /// Every invariant breach, in input order. An empty list means the
    /// instance can be built.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.agents.len();
        let m = self.tasks.len();
        let mut out = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            if a.capacity < 1 {
                out.push(Violation::NonPositiveCapacity {
                    agent: i,
                    capacity: a.capacity,
                });
            }
        }
        for (j, t) in self.tasks.iter().enumerate() {
            if !t.value.is_finite() || t.value < 0.0 {
                out.push(Violation::InvalidValue {
                    task: j,
                    value: t.value,
                });
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, &(a, t)) in self.edges.iter().enumerate() {
            let mut ok = true;
            if a >= n {
                out.push(Violation::AgentOutOfRange { edge: k, agent: a });
                ok = false;
            }
            if t >= m {
                out.push(Violation::TaskOutOfRange { edge: k, task: t });
                ok = false;
            }
            if ok && !seen.insert((a, t)) {
                out.push(Violation::DuplicateEdge { agent: a, task: t });
            }
        }
        out
    }
}

/// Free-function form of [`RawInstance::validate`].
pub fn validate_instance(raw: &RawInstance) -> Vec<Violation> {
    raw.validate()
}

/// A validated market. Agent priority is the agent index.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    capacities: Vec<usize>,
    values: Vec<f64>,
    agent_adj: Vec<Vec<TaskId>>,
    task_adj: Vec<Vec<AgentId>>,
}

impl Instance {
    pub fn new(
        capacities: Vec<usize>,
        values: Vec<f64>,
        edges: &[(AgentId, TaskId)],
    ) -> Result<Self> {
        let raw = RawInstance {
            agents: capacities
                .iter()
                .map(|&c| Agent { capacity: c as i64 })
                .collect(),
            tasks: values.iter().map(|&v| Task { value: v }).collect(),
            edges: edges.to_vec(),
        };
        Instance::try_from(raw)
    }

    /// Builds an instance without re-checking invariants. Callers guarantee
    /// in-range, duplicate-free edges.
    pub(crate) fn from_parts_unchecked(
        capacities: Vec<usize>,
        values: Vec<f64>,
        mut agent_adj: Vec<Vec<TaskId>>,
    ) -> Self {
        let mut task_adj = vec![Vec::new(); values.len()];
        for (a, tasks) in agent_adj.iter_mut().enumerate() {
            tasks.sort_unstable();
            for &t in tasks.iter() {
                task_adj[t].push(a);
            }
        }
        Instance {
            capacities,
            values,
            agent_adj,
            task_adj,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.capacities.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.values.len()
    }

    pub fn n_edges(&self) -> usize {
        self.agent_adj.iter().map(Vec::len).sum()
    }

    pub fn capacity(&self, a: AgentId) -> usize {
        self.capacities[a]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn value(&self, t: TaskId) -> f64 {
        self.values[t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Tasks adjacent to `a`, sorted by id.
    pub fn agent_tasks(&self, a: AgentId) -> &[TaskId] {
        &self.agent_adj[a]
    }

    /// Agents adjacent to `t`, sorted by id (which is priority order).
    pub fn task_agents(&self, t: TaskId) -> &[AgentId] {
        &self.task_adj[t]
    }

    pub fn degree(&self, a: AgentId) -> usize {
        self.agent_adj[a].len()
    }

    pub fn has_edge(&self, a: AgentId, t: TaskId) -> bool {
        self.agent_adj
            .get(a)
            .is_some_and(|ts| ts.binary_search(&t).is_ok())
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, TaskId)> + '_ {
        self.agent_adj
            .iter()
            .enumerate()
            .flat_map(|(a, ts)| ts.iter().map(move |&t| (a, t)))
    }

    /// Compares two tasks in processing order: higher value first, lower id
    /// on ties.
    pub fn task_cmp(&self, x: TaskId, y: TaskId) -> Ordering {
        self.values[y]
            .total_cmp(&self.values[x])
            .then_with(|| x.cmp(&y))
    }

    /// All task ids in processing order.
    pub fn process_order(&self) -> Vec<TaskId> {
        let mut order: Vec<TaskId> = (0..self.n_tasks()).collect();
        order.sort_by(|&x, &y| self.task_cmp(x, y));
        order
    }

    /// `rank[t]` is the position of `t` in [`Instance::process_order`].
    pub fn process_rank(&self) -> Vec<usize> {
        let mut rank = vec![0; self.n_tasks()];
        for (r, t) in self.process_order().into_iter().enumerate() {
            rank[t] = r;
        }
        rank
    }

    /// The adjacency of `a` in processing order.
    pub fn agent_tasks_by_value(&self, a: AgentId) -> Vec<TaskId> {
        let mut ts = self.agent_adj[a].clone();
        ts.sort_by(|&x, &y| self.task_cmp(x, y));
        ts
    }

    pub(crate) fn agent_adjacency(&self) -> &[Vec<TaskId>] {
        &self.agent_adj
    }

    /// Same market with agent `a`'s adjacency (and optionally capacity)
    /// replaced. `tasks` must be a subset of the current adjacency.
    pub(crate) fn with_agent_report(
        &self,
        a: AgentId,
        tasks: &[TaskId],
        capacity: Option<usize>,
    ) -> Instance {
        let mut adj = self.agent_adj.clone();
        adj[a] = tasks.to_vec();
        let mut caps = self.capacities.clone();
        if let Some(c) = capacity {
            caps[a] = c;
        }
        Instance::from_parts_unchecked(caps, self.values.clone(), adj)
    }

    /// Agents relabelled so that new agent `k` is old agent `order[k]`.
    pub(crate) fn permute_agents(&self, order: &[AgentId]) -> Instance {
        let caps = order.iter().map(|&a| self.capacities[a]).collect();
        let adj = order.iter().map(|&a| self.agent_adj[a].clone()).collect();
        Instance::from_parts_unchecked(caps, self.values.clone(), adj)
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            agents: self
                .capacities
                .iter()
                .map(|&c| Agent { capacity: c as i64 })
                .collect(),
            tasks: self.values.iter().map(|&v| Task { value: v }).collect(),
            edges: self.edges().collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(s)?;
        Instance::try_from(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let violations = raw.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let mut adj = vec![Vec::new(); raw.agents.len()];
        for &(a, t) in &raw.edges {
            adj[a].push(t);
        }
        Ok(Instance::from_parts_unchecked(
            raw.agents.iter().map(|a| a.capacity as usize).collect(),
            raw.tasks.iter().map(|t| t.value).collect(),
            adj,
        ))
    }
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawInstance::deserialize(d)?;
        Instance::try_from(raw).map_err(serde::de::Error::custom)
    }
}
