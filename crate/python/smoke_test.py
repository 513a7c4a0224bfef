"""Smoke test for the invpress extension module."""

import json
import math

import invpress


def main():
    m3 = invpress.ControlSystem.m3()
    assert m3.universe_size == 2 and m3.alphabet_len == 2
    assert m3.is_strongly_invariant

    lo, hi, exact = invpress.a_n(m3, [1.0, 0.0], 2)
    assert exact and abs(hi - math.e) < 1e-12

    est = invpress.pressure_inner(m3, [1.0, 0.0], 1, 8)
    assert abs(est.value - 0.5) < 1e-12
    assert abs(est.tail_slope - 0.4) < 1e-9
    assert json.loads(est.to_json())["all_exact"]
    assert est.to_csv().splitlines()[0] == "n,a_lower,a_upper,exact,log_a_over_n"

    fb = invpress.pressure_feedback(m3, [1.0, 0.0], 2, 4)
    assert abs(fb.value - est.value) <= 0.15

    sys = invpress.ControlSystem.affine(
        [[2.0]], [[1.0]], invpress.equispaced(9, -1.0, 1.0), [(-0.9, 0.9)], [512]
    )
    assert sys.is_strongly_invariant
    low, high, exact = invpress.spanning_count(sys, 4)
    assert exact and low >= 8

    doubling_est = invpress.pressure_inner(sys, sys.weight("abs"), 2, 10)
    assert abs(doubling_est.value - math.log(2)) <= 0.15

    assert abs(invpress.linear_pressure_formula([[1.0, 0.0], [0.0, -2.0]], "zero", [0.0]) - 1.0) < 1e-12

    sol = invpress.solve_cover(2, [[0], [1], [0, 1]], [0.0, 0.0, math.log(1.5)])
    assert sol.status == "optimal" and sol.chosen == [2]

    report = json.loads(invpress.run_experiment("estimate", json.dumps({"system": {"kind": "m3"}, "n_max": 4})))
    assert report["command"] == "estimate"

    props = json.loads(invpress.run_property_suite(3, 4, 1))
    assert props["failed"] == 0

    try:
        invpress.ControlSystem.affine([[2.0]], [[1.0]], [[0.0]], [(0.9, -0.9)], [16])
    except ValueError as e:
        assert "region" in str(e)
    else:
        raise AssertionError("inverted region accepted")

    print(f"invpress {invpress.__version__}: smoke test ok (M3 pressure {est.value}, doubling map {doubling_est.value:.4f})")


if __name__ == "__main__":
    main()
