import math

import numpy as np
import pytest

from h10sim import decide
from h10sim.decide import (GroundStateEstimate, InconsistentEstimateError, Kind, SolveConfig,
                           Verdict, solve, zero_test)
from h10sim.poly import brute_force_min, evaluate, parse


def est(E_c, E_g, converged=True):
    return GroundStateEstimate(basis_size=4, g_prime=np.zeros(4), E_g_prime=E_g, E_c=E_c,
                               converged=converged)


def test_zero_test_examples():
    assert zero_test(est(0, 0.03)) is True
    assert zero_test(est(1, 0.97)) is False
    with pytest.raises(InconsistentEstimateError):
        zero_test(est(1, 0.4))
    with pytest.raises(ValueError):
        zero_test(est(0, 0.0, converged=False))


def test_verdict_requires_witness():
    with pytest.raises(ValueError):
        Verdict(Kind.HAS_SOLUTION, None, 0.0)


def test_config_validation():
    p = parse("x-3")
    for bad in (dict(epsilon=0.0), dict(p=1.0), dict(cutoffs=[8], ref_cutoffs=[8]),
                dict(T=-1.0), dict(max_iterations=0), dict(seed=-1), dict(cutoffs=[8, 8])):
        with pytest.raises(ValueError):
            SolveConfig(**bad).resolved(p.K)
    cfg = SolveConfig(cutoffs=[6]).resolved(3)
    assert cfg.cutoffs == [6, 6, 6] and cfg.ref_cutoffs == [12, 12, 12]
    assert cfg.alphas == [1.0, 1.0, 1.0]


def test_growth_rule():
    assert decide.grow(2, 100) == 3
    assert decide.grow(4, 100) == 6
    assert decide.grow(90, 100) == 100


def _basis_sizes(v):
    return [step["M"] for it in v.report["iterations"] for step in it.get("basis_trace", [])]


def _common_checks(v, p):
    sizes = _basis_sizes(v)
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))  # never revisits a smaller basis
    for it in v.report["iterations"]:
        within = [s["M"] for s in it.get("basis_trace", [])]
        assert within == sorted(set(within))  # strictly increasing inside an iteration
        assert it["max_norm_deviation"] <= 1e-9
    assert "qualification" in v.report and v.report["explored_cutoffs"]["reference"]
    if v.witness is not None:
        assert evaluate(p, v.witness) == 0


def test_solve_x_minus_3():
    p = parse("x-3")
    v = solve(p, SolveConfig(cutoffs=[16], ref_cutoffs=[32], seed=42))
    assert v.kind is Kind.HAS_SOLUTION and v.witness == (3,)
    _common_checks(v, p)
    assert brute_force_min(p, [16])[0] == 0


def test_solve_3x_minus_2():
    p = parse("3*x-2")
    v = solve(p, SolveConfig(cutoffs=[16], ref_cutoffs=[32], seed=42))
    assert v.kind is Kind.NO_SOLUTION and v.witness is None
    assert abs(v.E_g_estimate - 1) < 0.1
    _common_checks(v, p)
    last = v.report["iterations"][-1]
    assert last["stable"] and last["termination_condition"]


def test_solve_pythagorean_small():
    p = parse("x^2 + y^2 - z^2")
    v = solve(p, SolveConfig(cutoffs=[4, 4, 4], ref_cutoffs=[6, 6, 6], seed=3))
    assert v.kind is Kind.HAS_SOLUTION
    _common_checks(v, p)
    assert v.report["degenerate_endpoint"] is True


def test_solve_two_variables():
    p = parse("x + y - 3")
    v = solve(p, SolveConfig(cutoffs=[5, 5], ref_cutoffs=[9, 9], seed=3))
    assert v.kind is Kind.HAS_SOLUTION
    assert sum(v.witness) == 3
    _common_checks(v, p)


def test_boundary_mass_gives_inconclusive():
    v = solve(parse("x*y - 6"), SolveConfig(cutoffs=[5, 5], ref_cutoffs=[8, 8], seed=3))
    assert v.kind is Kind.INCONCLUSIVE
    assert "boundary" in v.report["reason"]


def test_iteration_cap_gives_inconclusive():
    # a fixed, far too short T never passes the ground-space check
    v = solve(parse("3*x-2"), SolveConfig(cutoffs=[8], ref_cutoffs=[16], T=0.5, seed=1,
                                          max_iterations=1))
    assert v.kind is Kind.INCONCLUSIVE
    assert len(v.report["iterations"]) == 1


def test_T_increases_between_iterations():
    v = solve(parse("3*x-2"), SolveConfig(cutoffs=[8], ref_cutoffs=[16], T=0.5, seed=1,
                                          max_iterations=3))
    Ts = [it["T"] for it in v.report["iterations"]]
    assert all(b > a for a, b in zip(Ts, Ts[1:]))


def test_iteration_seeds_are_distinct_and_reproducible():
    s = [decide._iteration_seed(42, i) for i in range(5)]
    assert len(set(s)) == 5
    assert s == [decide._iteration_seed(42, i) for i in range(5)]


def test_oracle_check():
    assert decide.oracle_check(parse("x-3"), [8]) is Kind.HAS_SOLUTION
    assert decide.oracle_check(parse("3*x-2"), [8]) is Kind.NO_SOLUTION


def test_cutoff_two_records_gap_estimate_error():
    v = solve(parse("x - 1"), SolveConfig(cutoffs=[2], ref_cutoffs=[6], alphas=[0.5], seed=1))
    assert "error" in v.report["gap_estimate"]
    assert v.kind in (Kind.HAS_SOLUTION, Kind.INCONCLUSIVE)
