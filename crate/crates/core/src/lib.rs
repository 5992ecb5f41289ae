//! Maximum vertex-weighted bipartite b-matching, and the mechanisms built on
//! it when agents or tasks report strategically.
//!
//! Tasks carry values, agents carry capacities, and a b-matching assigns
//! each task to at most one adjacent agent without exceeding any capacity.
//! The exact solver grows the matching one task at a time, in decreasing
//! value order, along augmenting paths found by breadth-first or
//! depth-first search; a greedy variant only uses paths of length one.
//!
//! ```
//! use mvbm::{solve_mvbm, matching_weight, Instance, Traversal};
//!
//! let inst = Instance::new(vec![1, 1], vec![1.0, 0.1, 0.1], &[(0, 0), (0, 1), (1, 0), (1, 2)])?;
//! let mu = solve_mvbm(&inst, Traversal::BreadthFirst);
//! assert!((matching_weight(&inst, &mu)? - 1.1).abs() < 1e-9);
//! # Ok::<(), mvbm::Error>(())
//! ```

pub mod error;
pub mod fixtures;
pub mod gen;
pub mod harness;
pub mod instance;
pub mod matching;
pub mod mechanisms;
pub mod oracle;
pub mod seed;
pub mod solver;
pub mod strategies;

pub use error::{Error, Result};
pub use instance::{
    validate_instance, AgentId, Instance, RawInstance, TaskId, Violation, WEIGHT_TOL,
};
pub use matching::{
    agent_utilities, agent_utility, is_feasible_matching, matching_weight, task_utility, Matching,
};
pub use mechanisms::{
    build_effective_instance, fcfs_policies, first_agent_best_report, run_mechanism,
    run_randomized_bfs, sample_agent_order, worst_ne_profile, FcfsPolicySet, MechanismKind,
    Profile, Report, Side,
};
pub use solver::{find_augmenting_path, solve_ap, solve_mvbm, AugmentingPath, Traversal};
