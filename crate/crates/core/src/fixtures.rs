//! Small hand-built markets with known outcomes, and a replay routine that
//! recomputes each of them.
//!
//! Agent and task labels in the replay output are 1-based (`a1`, `t1`),
//! everything else in the crate is 0-based.

use std::fmt::Write as _;

use crate::instance::Instance;
use crate::matching::{agent_utility, Matching};
use crate::mechanisms::{run_mechanism, run_randomized_bfs, MechanismKind, Profile, Report};
use crate::oracle::brute_force_mvbm;
use crate::solver::{solve_ap, solve_mvbm, Traversal};

fn build(caps: &[usize], values: &[f64], edges: &[(usize, usize)]) -> Instance {
    Instance::new(caps.to_vec(), values.to_vec(), edges).expect("fixture is valid")
}

/// Two agents, three tasks, two distinct optimal matchings of weight 1.1.
pub fn tied_optimum() -> Instance {
    build(&[1, 1], &[1.0, 0.1, 0.1], &[(0, 0), (0, 1), (1, 0), (1, 2)])
}

/// `q = (1+ε, 1)`, `E = {(a1,t1),(a1,t2),(a2,t1)}`, unit capacities. The
/// length-1 greedy gets `1+ε`, the optimum is `2+ε`, and the unique
/// equilibrium of the exact mechanisms has welfare `1+ε`.
pub fn priority_gap(eps: f64) -> Instance {
    build(&[1, 1], &[1.0 + eps, 1.0], &[(0, 0), (0, 1), (1, 0)])
}

/// Three unit-capacity agents and two tasks of equal value where `a1` and
/// `a3` can jointly improve under the greedy mechanism.
pub fn equal_value_collusion() -> Instance {
    build(&[1, 1, 1], &[1.0, 1.0], &[(0, 0), (0, 1), (1, 1), (2, 0)])
}

/// Agent `α` (capacity 2) sees all four tasks valued `2^-j`; `β` sees only
/// `t1`, `γ` only `t2`. Order is `(α, β, γ)`.
pub fn first_mover() -> Instance {
    build(
        &[2, 1, 1],
        &[0.5, 0.25, 0.125, 0.0625],
        &[(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (2, 1)],
    )
}

/// Complete 3×2 market with values `(1, 0.5)` where breadth-first and
/// depth-first search disagree on the second task.
pub fn bfs_dfs_split() -> Instance {
    let edges: Vec<_> = (0..3).flat_map(|a| (0..2).map(move |t| (a, t))).collect();
    build(&[1, 1, 1], &[1.0, 0.5], &edges)
}

/// Five agents of capacity 2 in two classes: `a1, a3, a4` see every task,
/// `a2, a5` see only `t2, t3`. Values are `3^-j`.
pub fn class_split() -> Instance {
    let mut edges = Vec::new();
    for a in [0, 2, 3] {
        edges.extend([(a, 0), (a, 1), (a, 2)]);
    }
    for a in [1, 4] {
        edges.extend([(a, 1), (a, 2)]);
    }
    build(&[2; 5], &[1.0 / 3.0, 1.0 / 9.0, 1.0 / 27.0], &edges)
}

/// Two agents, three tasks valued `(1, 0.9, 0.1)` with a unique optimum
/// that tasks `t1` and `t3` can jointly subvert.
pub fn task_collusion() -> Instance {
    build(&[1, 1], &[1.0, 0.9, 0.1], &[(0, 0), (0, 2), (1, 0), (1, 1)])
}

/// Complete 2×2 market with values `(2, 1)` and unit capacities.
pub fn lottery_counterexample() -> Instance {
    build(&[1, 1], &[2.0, 1.0], &[(0, 0), (0, 1), (1, 0), (1, 1)])
}

/// Formats a matching as `{(a1,t1),(a2,t3)}`, ordered by task id.
pub fn format_matching(mu: &Matching) -> String {
    let mut pairs: Vec<_> = mu.pairs().collect();
    pairs.sort_by_key(|&(a, t)| (t, a));
    let body: Vec<String> = pairs
        .iter()
        .map(|&(a, t)| format!("(a{},t{})", a + 1, t + 1))
        .collect();
    format!("{{{}}}", body.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOutcome {
    pub name: &'static str,
    pub expected: String,
    pub actual: String,
}

impl FixtureOutcome {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

fn outcome(name: &'static str, expected: &str, actual: String) -> FixtureOutcome {
    FixtureOutcome {
        name,
        expected: expected.to_string(),
        actual,
    }
}

fn hide(inst: &Instance, agent: usize, hidden: &[usize]) -> Profile {
    let kept = inst
        .agent_tasks(agent)
        .iter()
        .copied()
        .filter(|t| !hidden.contains(t))
        .collect();
    let mut p = Profile::truthful_agents(inst);
    p.reports[agent] = Some(Report::edges(kept));
    p
}

/// Recomputes every worked example and pairs it with its expected
/// rendering.
pub fn replay_all() -> Vec<FixtureOutcome> {
    let mut out = Vec::new();

    let inst = tied_optimum();
    let cert = brute_force_mvbm(&inst).expect("small");
    out.push(outcome(
        "tied-optimum/optimum-weight",
        "1.100000",
        format!("{:.6}", cert.weight),
    ));

    let inst = task_collusion();
    let cert = brute_force_mvbm(&inst).expect("small");
    out.push(outcome(
        "task-collusion/optimum",
        "{(a1,t1),(a2,t2)} weight 1.900000",
        format!(
            "{} weight {:.6}",
            format_matching(&cert.matching),
            cert.weight
        ),
    ));

    let inst = equal_value_collusion();
    out.push(outcome(
        "equal-value-collusion/ap-truthful",
        "{(a1,t1),(a2,t2)}",
        format_matching(&solve_ap(&inst)),
    ));
    let dev = hide(&inst, 0, &[0]);
    let mu = run_mechanism(MechanismKind::Ap, &inst, &dev, None).expect("valid profile");
    out.push(outcome(
        "equal-value-collusion/ap-after-a1-hides-t1",
        "{(a3,t1),(a1,t2)}",
        format_matching(&mu),
    ));

    let inst = first_mover();
    let mu = solve_mvbm(&inst, Traversal::BreadthFirst);
    let mut s = String::new();
    write!(
        s,
        "weight {:.6} alpha {:.6}",
        crate::matching::matching_weight(&inst, &mu).expect("feasible"),
        agent_utility(&inst, &mu, 0).expect("feasible")
    )
    .unwrap();
    out.push(outcome(
        "first-mover/bfs-truthful",
        "weight 0.937500 alpha 0.187500",
        s,
    ));

    let inst = bfs_dfs_split();
    out.push(outcome(
        "bfs-dfs-split/bfs",
        "{(a1,t1),(a2,t2)}",
        format_matching(&solve_mvbm(&inst, Traversal::BreadthFirst)),
    ));
    out.push(outcome(
        "bfs-dfs-split/dfs",
        "{(a2,t1),(a1,t2)}",
        format_matching(&solve_mvbm(&inst, Traversal::DepthFirst)),
    ));

    let inst = class_split();
    out.push(outcome(
        "class-split/bfs",
        "{(a1,t1),(a1,t2),(a2,t3)}",
        format_matching(&solve_mvbm(&inst, Traversal::BreadthFirst)),
    ));
    out.push(outcome(
        "class-split/dfs",
        "{(a3,t1),(a1,t2),(a1,t3)}",
        format_matching(&solve_mvbm(&inst, Traversal::DepthFirst)),
    ));

    let inst = lottery_counterexample();
    let dev = hide(&inst, 0, &[1]);
    let expected = run_randomized_bfs(&inst, &dev, 250, 0x5eed).expect("valid profile");
    out.push(outcome(
        "lottery-counterexample/a1-hides-t2-expectation",
        "2.000000",
        format!("{:.6}", expected[0]),
    ));

    out
}
