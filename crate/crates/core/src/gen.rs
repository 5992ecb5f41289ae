//! Seeded random markets.
//!
//! Instance `k` of a configuration draws from its own stream, seeded from
//! `(seed, k)`, so any instance can be rebuilt without generating the ones
//! before it.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId};
use crate::seed::{derive_seed, rng_from_seed, Rng};

fn default_mean() -> f64 {
    3.0
}

fn default_sigma() -> f64 {
    0.77
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub capacity_low: usize,
    pub capacity_high: usize,
    #[serde(default = "default_mean")]
    pub value_mean: f64,
    /// Standard deviation of the value distribution before truncation.
    #[serde(default = "default_sigma")]
    pub value_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GenConfig {
    pub fn new(
        n: usize,
        m: usize,
        p: f64,
        capacity_low: usize,
        capacity_high: usize,
        seed: u64,
    ) -> Self {
        GenConfig {
            n,
            m,
            p,
            capacity_low,
            capacity_high,
            value_mean: default_mean(),
            value_sigma: default_sigma(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!(
                "p = {} outside [0, 1]",
                self.p
            )));
        }
        if self.capacity_low == 0 || self.capacity_low > self.capacity_high {
            return Err(Error::InvalidConfig(format!(
                "capacity range [{}, {}] is not a positive ordered range",
                self.capacity_low, self.capacity_high
            )));
        }
        if !(self.value_sigma >= 0.0 && self.value_sigma.is_finite() && self.value_mean.is_finite())
        {
            return Err(Error::InvalidConfig("value distribution parameters".into()));
        }
        Ok(())
    }
}

fn draw_values(rng: &mut Rng, m: usize, mean: f64, sigma: f64) -> Vec<f64> {
    let normal = Normal::new(mean, sigma).expect("validated parameters");
    (0..m).map(|_| normal.sample(rng).max(0.0)).collect()
}

/// Instance number `index` of `cfg`. Capacities are drawn first, then
/// values, then the `n * m` edge coins in agent-major order.
pub fn generate_instance(cfg: &GenConfig, index: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = rng_from_seed(derive_seed(&[cfg.seed, index]));
    let caps: Vec<usize> = (0..cfg.n)
        .map(|_| rng.random_range(cfg.capacity_low..=cfg.capacity_high))
        .collect();
    let values = draw_values(&mut rng, cfg.m, cfg.value_mean, cfg.value_sigma);
    let mut edges = Vec::new();
    for a in 0..cfg.n {
        for t in 0..cfg.m {
            if rng.random_bool(cfg.p) {
                edges.push((a, t));
            }
        }
    }
    Instance::new(caps, values, &edges)
}

/// `count` consecutive instances starting at index 0.
pub fn generate_batch(cfg: &GenConfig, count: usize) -> Result<Vec<Instance>> {
    (0..count as u64)
        .map(|k| generate_instance(cfg, k))
        .collect()
}

/// Markets where every agent's degree is at most its capacity. Each agent
/// draws a capacity in `[1, max_capacity]` and then that many or fewer
/// tasks.
pub fn degree_within_capacity(n: usize, m: usize, max_capacity: usize, seed: u64) -> Instance {
    let mut rng = rng_from_seed(seed);
    let caps: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_capacity)).collect();
    let values = draw_values(&mut rng, m, default_mean(), default_sigma());
    let mut edges = Vec::new();
    let mut tasks: Vec<TaskId> = (0..m).collect();
    for (a, &c) in caps.iter().enumerate() {
        let d = rng.random_range(0..=c.min(m));
        tasks.shuffle(&mut rng);
        edges.extend(tasks[..d].iter().map(|&t| (a, t)));
    }
    Instance::new(caps, values, &edges).expect("generated instance is valid")
}

/// Complete bipartite markets with `m <= sum(b) - max(b)`. Capacities are
/// drawn in `[1, max_capacity]`, then `m` uniformly from its allowed range
/// (redrawing capacities until the range is non-empty).
pub fn complete_with_slack(n: usize, max_capacity: usize, seed: u64) -> Instance {
    assert!(n >= 2, "slack condition needs at least two agents");
    let mut rng = rng_from_seed(seed);
    loop {
        let caps: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_capacity)).collect();
        let bound = caps.iter().sum::<usize>() - caps.iter().max().copied().unwrap_or(0);
        if bound == 0 {
            continue;
        }
        let m = rng.random_range(1..=bound);
        let values = draw_values(&mut rng, m, default_mean(), default_sigma());
        let edges: Vec<_> = (0..n).flat_map(|a| (0..m).map(move |t| (a, t))).collect();
        return Instance::new(caps, values, &edges).expect("generated instance is valid");
    }
}

/// Description of one class in [`class_market`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub agents: Vec<AgentId>,
    pub tasks: Vec<TaskId>,
    pub capacity: usize,
}

/// Markets split into classes: within a class every agent has the same
/// capacity and the same adjacency, and each class has more than
/// `ceil(|T|/b) + 1` agents. Class task sets are random non-empty subsets
/// of a shared pool of `m` tasks and may overlap. Agent ids are shuffled
/// across classes.
pub fn class_market(
    classes: usize,
    m: usize,
    max_capacity: usize,
    seed: u64,
) -> (Instance, Vec<ClassSpec>) {
    assert!(m >= 1, "class market needs at least one task");
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<TaskId> = (0..m).collect();
    let mut shapes = Vec::with_capacity(classes);
    let mut n = 0;
    for _ in 0..classes {
        let size = rng.random_range(1..=m);
        pool.shuffle(&mut rng);
        let mut tasks = pool[..size].to_vec();
        tasks.sort_unstable();
        let b = rng.random_range(1..=max_capacity);
        let agents = size.div_ceil(b) + 2 + rng.random_range(0..=1);
        n += agents;
        shapes.push((agents, tasks, b));
    }
    let mut agent_ids: Vec<AgentId> = (0..n).collect();
    agent_ids.shuffle(&mut rng);
    let values = draw_values(&mut rng, m, default_mean(), default_sigma());
    let mut caps = vec![0; n];
    let mut edges = Vec::new();
    let mut specs = Vec::with_capacity(classes);
    let mut next = 0;
    for (agents, tasks, b) in shapes {
        let mut ids: Vec<AgentId> = agent_ids[next..next + agents].to_vec();
        ids.sort_unstable();
        for &a in &ids {
            caps[a] = b;
            edges.extend(tasks.iter().map(|&t| (a, t)));
        }
        specs.push(ClassSpec {
            agents: ids,
            tasks,
            capacity: b,
        });
        next += agents;
    }
    let inst = Instance::new(caps, values, &edges).expect("generated instance is valid");
    (inst, specs)
}
