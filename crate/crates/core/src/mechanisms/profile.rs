use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Agents,
    Tasks,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Agents => "agent",
            Side::Tasks => "task",
        }
    }
}

/// What one strategic entity tells the mechanism. `edges` lists the ids on
/// the other side of the market; an empty list means the entity abstains.
/// `capacity` is only meaningful for agents, `value` only for tasks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub edges: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Report {
    pub fn edges(edges: Vec<usize>) -> Self {
        Report {
            edges,
            ..Default::default()
        }
    }

    pub fn abstain() -> Self {
        Report::default()
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn is_abstain(&self) -> bool {
        self.edges.is_empty()
    }
}

/// One report per agent (or per task). `None` stands for the truthful
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub side: Side,
    pub reports: Vec<Option<Report>>,
}

impl Profile {
    pub fn truthful_agents(inst: &Instance) -> Self {
        Profile {
            side: Side::Agents,
            reports: vec![None; inst.n_agents()],
        }
    }

    pub fn truthful_tasks(inst: &Instance) -> Self {
        Profile {
            side: Side::Tasks,
            reports: vec![None; inst.n_tasks()],
        }
    }

    /// Copy of `self` with entity `i` reporting `report`.
    pub fn with_report(&self, i: usize, report: Report) -> Self {
        let mut p = self.clone();
        p.reports[i] = Some(report);
        p
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Profile::from_json(&std::fs::read_to_string(path)?)
    }
}

fn unbounded(side: Side, id: usize, reason: impl Into<String>) -> Error {
    Error::UnboundedReport {
        side: side.label(),
        id,
        reason: reason.into(),
    }
}

fn check_edges(side: Side, id: usize, edges: &[usize], truth: &[usize]) -> Result<()> {
    for w in edges.windows(2) {
        if w[0] == w[1] {
            return Err(unbounded(
                side,
                id,
                format!("edge to {} listed twice", w[0]),
            ));
        }
    }
    for e in edges {
        if truth.binary_search(e).is_err() {
            return Err(unbounded(side, id, format!("edge to {e} does not exist")));
        }
    }
    Ok(())
}

/// The market the mechanism actually sees under `profile`: reported edges,
/// capacities and values replace the true ones; the passive side is copied
/// from `base`.
pub fn build_effective_instance(base: &Instance, profile: &Profile) -> Result<Instance> {
    let side = profile.side;
    let expected = match side {
        Side::Agents => base.n_agents(),
        Side::Tasks => base.n_tasks(),
    };
    if profile.reports.len() != expected {
        return Err(Error::ReportCount {
            side: match side {
                Side::Agents => "agents",
                Side::Tasks => "tasks",
            },
            expected,
            got: profile.reports.len(),
        });
    }
    let mut caps = base.capacities().to_vec();
    let mut values = base.values().to_vec();
    let adj = match side {
        Side::Agents => {
            let mut adj = base.agent_adjacency().to_vec();
            for (a, r) in profile.reports.iter().enumerate() {
                let Some(r) = r else { continue };
                let mut edges = r.edges.clone();
                edges.sort_unstable();
                check_edges(side, a, &edges, base.agent_tasks(a))?;
                if r.value.is_some() {
                    return Err(unbounded(side, a, "agents cannot report a value"));
                }
                if let Some(c) = r.capacity {
                    if c < 1 || c > base.capacity(a) {
                        return Err(unbounded(
                            side,
                            a,
                            format!("capacity {c} outside [1, {}]", base.capacity(a)),
                        ));
                    }
                    caps[a] = c;
                }
                adj[a] = edges;
            }
            adj
        }
        Side::Tasks => {
            let mut adj = vec![Vec::new(); base.n_agents()];
            for (t, r) in profile.reports.iter().enumerate() {
                let agents: Vec<usize> = match r {
                    None => base.task_agents(t).to_vec(),
                    Some(r) => {
                        let mut edges = r.edges.clone();
                        edges.sort_unstable();
                        check_edges(side, t, &edges, base.task_agents(t))?;
                        if r.capacity.is_some() {
                            return Err(unbounded(side, t, "tasks cannot report a capacity"));
                        }
                        if let Some(v) = r.value {
                            if !(v > 0.0 && v <= base.value(t)) {
                                return Err(unbounded(
                                    side,
                                    t,
                                    format!("value {v} outside (0, {}]", base.value(t)),
                                ));
                            }
                            values[t] = v;
                        }
                        edges
                    }
                };
                for a in agents {
                    adj[a].push(t);
                }
            }
            adj
        }
    };
    Ok(Instance::from_parts_unchecked(caps, values, adj))
}
