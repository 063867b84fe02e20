import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from h10sim import fock, gapest, hamiltonians
from h10sim.fock import FockSpace
from h10sim.hamiltonians import HamiltonianSet
from h10sim.poly import parse


def number_set(cutoffs):
    space = FockSpace(cutoffs)
    N = sum((space.number(j) for j in range(space.K)), sp.csr_matrix((space.dim, space.dim)))
    return HamiltonianSet(H_I=N.tocsr(), H_P=N.tocsr(), space=space)


@pytest.fixture(scope="module")
def x3_32():
    return hamiltonians.build(parse("x-3"), FockSpace([32]), [1.0])


def test_number_operator_in_own_frame():
    hs = number_set([12, 10])
    E_b, G, K = gapest.wick_coefficients(hs, 0.3, [0.0, 0.0])
    assert abs(E_b) < 1e-14
    assert np.allclose(G, 1.0, atol=1e-14)
    assert np.allclose(K, 0.0, atol=1e-14)


def test_number_operator_squeezed_frame_closed_form():
    theta = 0.5
    hs = number_set([64])
    E_b, G, K = gapest.wick_coefficients(hs, 0.5, [theta])
    assert abs(E_b - math.sinh(theta) ** 2) < 1e-6
    assert abs(G[0] - math.cosh(2 * theta)) < 1e-6
    assert abs(K[0] + math.sinh(theta) * math.cosh(theta)) < 1e-6
    E2, G2, K2 = gapest.normal_ordered_coefficients(hs, 0.5, [theta])
    assert abs(E2 - E_b) < 1e-10 and np.allclose(G2, G, atol=1e-8) and np.allclose(K2, K, atol=1e-8)


X3_40 = hamiltonians.build(parse("x-3"), FockSpace([40]), [1.0])
X3_40_LIMIT = float(gapest.theta_limits(X3_40)[0])


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 1), st.floats(-1, 1))
def test_coefficients_agree_with_commutator_form(s, frac):
    # anywhere inside the admissible squeezing cap the two routes agree
    theta = frac * X3_40_LIMIT
    _, G1, K1 = gapest.wick_coefficients(X3_40, s, [theta])
    _, G2, K2 = gapest.normal_ordered_coefficients(X3_40, s, [theta])
    scale = max(1.0, float(np.max(np.abs(G1))))
    assert np.max(np.abs(G1 - G2)) < 1e-10 * scale
    assert np.max(np.abs(K1 - K2)) < 1e-10 * scale


def test_cap_excludes_truncation_dominated_frames():
    assert 0.3 < X3_40_LIMIT < fock.max_squeezing(40)
    assert gapest.frame_disagreement(X3_40, 1.0, [fock.max_squeezing(40)]) > 1e-10
    capped = gapest.theta_limits(hamiltonians.build(parse("x^3 - 2"), FockSpace([6]), [1.0]))
    assert 0 <= capped[0] < fock.max_squeezing(6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.8, 0.8))
def test_frame_moments(theta):
    space = FockSpace([48])
    a, ad = space.ladder(0)
    vac = fock.bogoliubov_frame_state(space, [theta])
    u, v = math.cosh(theta), math.sinh(theta)
    assert abs(fock.expectation(ad @ a, vac) - v * v) < 1e-6
    assert abs(fock.expectation(a @ a, vac) + u * v) < 1e-6


def test_endpoint_frames_are_unsqueezed(x3_32):
    for s in (0.0, 1.0):
        frame = gapest.solve_frame(x3_32, s, "root")
        assert frame.thetas[0] == 0.0
        assert abs(frame.K_resid[0]) < 1e-8


def test_root_frames_on_grid(x3_32):
    est = gapest.estimate_gap_and_T(x3_32, 21)
    assert len(est.frames) == 21
    for f in est.frames:
        assert np.all(np.abs(f.u**2 - f.v**2 - 1) < 1e-12)
        assert np.all(np.abs(f.K_resid) < 1e-8) or not f.reliable
    assert 0 < est.g_est < math.inf and math.isfinite(est.T_est)
    exact = hamiltonians.diagnostics(x3_32, 21)
    assert est.norm == exact.norm_HI_minus_HP  # same transition norm feeds both estimates


def test_constant_harmonic_spectrum():
    est = gapest.estimate_gap_and_T(number_set([10]), 11)
    for f in est.frames:
        assert abs(f.G[0] - 1.0) < 1e-12
    assert est.g_est == pytest.approx(1.0, abs=1e-12)


def test_grid_refinement_never_increases_estimate(x3_32):
    coarse = gapest.estimate_gap_and_T(x3_32, 11)
    fine = gapest.estimate_gap_and_T(x3_32, 21)
    assert fine.g_est <= coarse.g_est + 1e-8


def test_minimize_mode_runs_and_is_canonical():
    hs = hamiltonians.build(parse("x-2"), FockSpace([24]), [1.0])
    f = gapest.solve_frame(hs, 0.5, "minimize")
    assert abs(f.u[0] ** 2 - f.v[0] ** 2 - 1) < 1e-12
    E_root = gapest.solve_frame(hs, 0.5, "root").E_b
    E_min = f.E_b
    assert E_min <= E_root + 1e-6


def test_frame_norm_fallback(x3_32):
    frames = [gapest.solve_frame(x3_32, s) for s in (0.0, 0.5, 1.0)]
    assert gapest.frame_transition_norm(x3_32, frames) > 0


def test_unknown_mode_rejected(x3_32):
    with pytest.raises(ValueError):
        gapest.solve_frame(x3_32, 0.5, "bogus")


def test_frames_serialize(x3_32):
    d = gapest.estimate_gap_and_T(x3_32, 5).to_dict()
    assert set(d) >= {"g_est", "T_est", "norm", "frames", "warning"}
    assert len(d["frames"]) == 5


def test_small_cutoffs():
    with pytest.raises(fock.CutoffError):
        gapest.solve_frame(hamiltonians.build(parse("x*y-2"), FockSpace([2, 4]), [1.0, 1.0]), 0.5)
    # at cutoff 3 the |2_c> frame state only fits near theta = 0; it must not raise
    hs = hamiltonians.build(parse("x*y - 2 + x^3"), FockSpace([3, 3]), [1.0, 1.0])
    lims = gapest.theta_limits(hs)
    assert np.all(lims >= 0)
    assert len(gapest.estimate_gap_and_T(hs, 5).frames) == 5
