//! The solvers seen as mechanisms: they take strategic reports and return a
//! b-matching.

mod fcfs;
mod lottery;
mod profile;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fcfs::{
    fcfs_policies, first_agent_best_report, top_tasks, worst_ne_profile, FcfsPolicySet,
};
pub use lottery::{
    lottery_weights, randomized_bfs_samples, run_randomized_bfs, sample_agent_order,
};
pub use profile::{build_effective_instance, Profile, Report, Side};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matching::Matching;
use crate::seed::rng_from_seed;
use crate::solver::{solve_ap, solve_mvbm, Traversal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    /// Exact solver, breadth-first path search.
    Bfs,
    /// Exact solver, depth-first path search.
    Dfs,
    /// Length-one greedy.
    Ap,
    /// Breadth-first exact solver after a weighted lottery over agent order.
    #[serde(rename = "rbfs")]
    RandomBfs,
}

impl MechanismKind {
    pub const DETERMINISTIC: [MechanismKind; 3] =
        [MechanismKind::Bfs, MechanismKind::Dfs, MechanismKind::Ap];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Bfs => "bfs",
            MechanismKind::Dfs => "dfs",
            MechanismKind::Ap => "ap",
            MechanismKind::RandomBfs => "rbfs",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self != MechanismKind::RandomBfs
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfs" => Ok(MechanismKind::Bfs),
            "dfs" => Ok(MechanismKind::Dfs),
            "ap" => Ok(MechanismKind::Ap),
            "rbfs" => Ok(MechanismKind::RandomBfs),
            other => Err(Error::InvalidConfig(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// Runs a deterministic mechanism on an already materialized market.
pub fn solve_with(kind: MechanismKind, eff: &Instance) -> Result<Matching> {
    match kind {
        MechanismKind::Bfs => Ok(solve_mvbm(eff, Traversal::BreadthFirst)),
        MechanismKind::Dfs => Ok(solve_mvbm(eff, Traversal::DepthFirst)),
        MechanismKind::Ap => Ok(solve_ap(eff)),
        MechanismKind::RandomBfs => Err(Error::MissingSeed),
    }
}

/// Draws an agent order from the lottery, solves the relabelled market
/// breadth-first, and maps agent ids back.
pub(crate) fn solve_random_bfs(eff: &Instance, seed: u64) -> Matching {
    let mut rng = rng_from_seed(seed);
    let order = sample_agent_order(eff, &mut rng);
    let permuted = eff.permute_agents(&order);
    solve_mvbm(&permuted, Traversal::BreadthFirst)
        .pairs()
        .map(|(k, t)| (order[k], t))
        .collect()
}

/// Outcome of `kind` when the strategic side reports `profile`. Matched
/// pairs always use the ids of `base`.
pub fn run_mechanism(
    kind: MechanismKind,
    base: &Instance,
    profile: &Profile,
    seed: Option<u64>,
) -> Result<Matching> {
    let eff = build_effective_instance(base, profile)?;
    match kind {
        MechanismKind::RandomBfs => {
            let seed = seed.ok_or(Error::MissingSeed)?;
            Ok(solve_random_bfs(&eff, seed))
        }
        _ => solve_with(kind, &eff),
    }
}
