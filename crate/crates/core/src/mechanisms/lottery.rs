use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance};
use crate::matching::agent_utilities;
use crate::seed::{derive_seed, Rng};

use super::profile::{build_effective_instance, Profile};
use super::solve_random_bfs;

/// Lottery weight of every agent: the sum of `1 / (1 + q)` over the tasks
/// it reports.
pub fn lottery_weights(eff: &Instance) -> Vec<f64> {
    (0..eff.n_agents())
        .map(|a| {
            eff.agent_tasks(a)
                .iter()
                .map(|&t| 1.0 / (1.0 + eff.value(t)))
                .sum()
        })
        .collect()
}

/// Draws agents one at a time without replacement, each with probability
/// proportional to its lottery weight among those still undrawn. Agents of
/// weight zero go last, in id order.
pub fn sample_agent_order(eff: &Instance, rng: &mut Rng) -> Vec<AgentId> {
    let weights = lottery_weights(eff);
    let mut pool: Vec<AgentId> = (0..eff.n_agents()).filter(|&a| weights[a] > 0.0).collect();
    let mut order = Vec::with_capacity(eff.n_agents());
    while !pool.is_empty() {
        let total: f64 = pool.iter().map(|&a| weights[a]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (k, &a) in pool.iter().enumerate() {
            if u < weights[a] {
                pick = k;
                break;
            }
            u -= weights[a];
        }
        order.push(pool.remove(pick));
    }
    order.extend((0..eff.n_agents()).filter(|&a| weights[a] <= 0.0));
    order
}

/// Per-trial agent utilities (true values) of the randomized mechanism.
/// Trial `k` uses the seed derived from `(seed, k)`, so the rows do not
/// depend on how trials are scheduled across threads.
pub fn randomized_bfs_samples(
    base: &Instance,
    profile: &Profile,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let eff = build_effective_instance(base, profile)?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mu = solve_random_bfs(&eff, derive_seed(&[seed, k]));
            agent_utilities(base, &mu)
        })
        .collect())
}

/// Monte Carlo estimate of every agent's expected utility.
pub fn run_randomized_bfs(
    base: &Instance,
    profile: &Profile,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let samples = randomized_bfs_samples(base, profile, trials, seed)?;
    let mut mean = vec![0.0; base.n_agents()];
    for row in &samples {
        for (m, u) in mean.iter_mut().zip(row) {
            *m += u;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    Ok(mean)
}
