"""Smoke test for the mvbm_py extension module.

Build and install it first, for example with
`maturin develop -m crates/py/Cargo.toml`, then run `python python/smoke_test.py`.
"""

import json

import mvbm_py as mv


def main():
    # Three agents with unit capacity, two tasks, complete adjacency.
    split = mv.Instance([1, 1, 1], [1.0, 0.5], [(a, t) for a in range(3) for t in range(2)])
    assert split.n_agents == 3 and split.n_tasks == 2

    bfs = mv.solve(split, "bfs")
    dfs = mv.solve(split, "dfs")
    assert bfs == [(0, 0), (1, 1)], bfs
    assert dfs == [(0, 1), (1, 0)], dfs
    assert abs(mv.matching_weight(split, bfs) - mv.brute_force_weight(split)) < 1e-9
    assert mv.solve(split, "ap") == mv.fcfs_union(split)

    assert mv.audit_agents(split, "bfs") == []
    found = mv.audit_agents(split, "dfs")
    assert any(d["id"] == 0 and d["deviant_utility"] > d["truthful_utility"] for d in found), found
    assert mv.audit_tasks(split, "dfs", "evms") == []

    poa, _ = mv.poa_pos(split, "bfs")
    assert 1.0 <= poa <= 2.0 + 1e-6

    means = mv.randomized_bfs(split, 200, 7)
    assert abs(sum(means) - 1.5) < 1e-9

    inst = mv.generate_instance(6, 8, 0.5, 1, 3, seed=11, index=2)
    assert mv.Instance.from_json(inst.to_json()) == inst
    assert mv.generate_instance(6, 8, 0.5, 1, 3, seed=11, index=2) == inst

    csv = mv.run_experiment(
        json.dumps(
            {
                "kind": "compare-first-agent",
                "grid": {"n": [5], "m": [6], "p": [0.5], "capacity": [[1, 2]]},
                "iterations": 4,
                "seed": 1,
            }
        )
    )
    assert csv.splitlines()[0] == "n,m,p,b_low,b_high,iterations,metric,value,stderr,seed"

    failed = [f for f in mv.replay_fixtures() if f[1] != f[2]]
    assert not failed, failed

    try:
        mv.solve(split, "greedy")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown mechanism accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
