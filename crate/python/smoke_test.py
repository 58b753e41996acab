"""Smoke test for the `genplan` extension module.

Build and install it first:

    pip install --no-build-isolation ./crates/py
"""

from pathlib import Path

import genplan

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    abstraction = genplan.counter_projection()
    assert sorted(abstraction.states) == ["X=0", "X>0"], abstraction.states

    assert genplan.synthesize(abstraction) is None
    policy = genplan.synthesize(abstraction, ["qnp(X)"])
    assert policy is not None
    verdict = genplan.verify(abstraction, policy, mode="constraint", constraint="qnp(X)")
    assert verdict["solution"], verdict

    for x0 in (1, 5, 10):
        run = genplan.simulate_problem(genplan.counter_problem(x0, x0), policy)
        assert run["outcome"] == "goal" and run["steps"] == x0, run

    qnp = genplan.Qnp.parse((DATA / "twovar.qnp").read_text())
    canonical = genplan.Policy.from_json((DATA / "canonical.policy.json").read_text())
    run = genplan.simulate_qnp(qnp, canonical, {"X": 20, "Y": 30})
    assert run["outcome"] == "goal" and run["steps"] == 70, run

    closed = qnp.close().projection()
    plan = genplan.plan(closed)
    assert plan is not None
    assert genplan.verify(closed, plan)["verdict"] == "FAIR_SOLUTION"
    assert genplan.Policy.from_json(plan.to_json()) == plan

    dpw = genplan.ltl_to_parity("G F a", ["a", "b"])
    assert dpw.accepts([], ["a", "b"])
    assert not dpw.accepts(["a"], ["b"])
    assert genplan.eval_ltl("F G b", ["a", "b"], ["a"], ["b"])

    try:
        genplan.Qnp.parse("vars X\naction a inc X dec X\n")
    except genplan.GenplanError:
        pass
    else:
        raise AssertionError("malformed QNP was accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
