import math

import numpy as np
import pytest
import scipy.sparse as sp

from h10sim import fock, hamiltonians
from h10sim.evolve import (EvolutionError, Schedule, ScheduleError, distribution,
                           evolve_product_formula, evolve_reference)
from h10sim.fock import FockSpace
from h10sim.hamiltonians import HamiltonianSet
from h10sim.oracle import empirical_distance
from h10sim.poly import parse


@pytest.fixture(scope="module")
def x3():
    space = FockSpace([16])
    hs = hamiltonians.build(parse("x-3"), space, [1.0])
    d = hamiltonians.diagnostics(hs, 21)
    return hs, d, fock.coherent_state(space, [1.0])


def test_schedule_defaults_and_check():
    s = Schedule.default(38.0, 3.03, energy_scale=4.0)
    assert s.N == 31
    assert s.m == math.ceil(10 * 38.0 / 31 * 4.0)
    assert s.dtau * 3.03 <= 0.1
    with pytest.raises(ScheduleError):
        Schedule(38.0, 10).check(3.03)
    with pytest.raises(ScheduleError):
        Schedule(0.0, 10)
    with pytest.raises(ScheduleError):
        Schedule(math.inf, 10)


def test_short_time_is_identity(x3):
    hs, d, psi0 = x3
    psi = evolve_product_formula(hs, psi0, Schedule(1e-3, 40), norm=d.norm_HI_minus_HP)
    assert abs(np.vdot(psi0, psi)) ** 2 > 0.999


def _constant_diagonal(M=12):
    space = FockSpace([M])
    D = np.array([(n - 4.0) ** 2 for n in range(M)])
    H = sp.diags(D, 0, format="csr")
    psi0 = fock.coherent_state(space, [1.0])
    return HamiltonianSet(H_I=H, H_P=H, space=space), D, psi0


def test_constant_diagonal_closed_form():
    hs, D, psi0 = _constant_diagonal()
    T = 2.7
    exact = np.exp(-1j * T * D) * psi0
    psi = evolve_product_formula(hs, psi0, Schedule(T, 5, 3), norm=0.0)
    assert np.max(np.abs(psi - exact)) < 1e-8
    ref = evolve_reference(hs, psi0, T, 8)
    assert np.max(np.abs(ref - exact)) < 1e-8


def test_reference_zero_time(x3):
    hs, _, psi0 = x3
    out = evolve_reference(hs, psi0, 0.0, 4)
    assert np.array_equal(out, psi0) and out is not psi0


def test_adiabatic_overlap_at_T_bound(x3):
    hs, d, psi0 = x3
    trace = []
    sched = Schedule.default(d.T_bound, d.norm_HI_minus_HP, d.energy_scale)
    psi = evolve_product_formula(hs, psi0, sched, norm=d.norm_HI_minus_HP, trace=trace)
    assert abs(psi[3]) ** 2 > 0.9
    assert len(trace) == sched.N and max(trace) <= 1e-9


def test_product_formula_matches_reference_at_matched_resolution(x3):
    hs, d, psi0 = x3
    space = hs.space
    sched = Schedule.default(d.T_bound, d.norm_HI_minus_HP, d.energy_scale, N=400)
    pf = evolve_product_formula(hs, psi0, sched, norm=d.norm_HI_minus_HP)
    ref = evolve_reference(hs, psi0, d.T_bound, 400)
    assert abs(np.vdot(ref, pf)) ** 2 > 1 - 1e-4
    assert empirical_distance(distribution(pf, space), distribution(ref, space)) <= 1e-4


def test_adiabatic_monotonicity_probe(x3):
    hs, d, psi0 = x3
    T = d.T_bound
    overlaps = []
    for factor in (1, 4):
        sched = Schedule.default(factor * T, d.norm_HI_minus_HP, d.energy_scale, N=124 * factor)
        psi = evolve_product_formula(hs, psi0, sched, norm=d.norm_HI_minus_HP)
        overlaps.append(abs(psi[3]) ** 2)
    assert overlaps[1] >= overlaps[0] - 0.01


def test_norm_violation_raises(x3):
    hs, d, _ = x3
    bad = fock.coherent_state(hs.space, [1.0]) * (1 + 1e-6)
    with pytest.raises(ValueError):
        evolve_product_formula(hs, bad, Schedule(1.0, 40), norm=d.norm_HI_minus_HP)


def test_nonhermitian_perturbation_rejected(x3):
    hs, d, psi0 = x3
    X, _ = hs.space.quadratures(0)
    with pytest.raises(ValueError):
        evolve_product_formula(hs, psi0, Schedule(1.0, 40), norm=d.norm_HI_minus_HP,
                               perturbation=lambda t: 1j * X)


def test_evolution_error_on_nonfinite():
    space = FockSpace([4])
    H = sp.diags([0.0, 1.0, np.nan, 2.0], 0, format="csr")
    hs = HamiltonianSet(H_I=H, H_P=H, space=space)
    with pytest.raises((EvolutionError, ValueError)):
        evolve_product_formula(hs, space.basis_state([0]), Schedule(1.0, 2))


def _perturbed_overlap(x3, K_fn):
    hs, d, psi0 = x3
    sched = Schedule.default(d.T_bound, d.norm_HI_minus_HP, d.energy_scale)
    psi = evolve_product_formula(hs, psi0, sched, norm=d.norm_HI_minus_HP, perturbation=K_fn)
    return abs(psi[3]) ** 2


def test_perturbations(x3):
    hs, d, _ = x3
    X, _ = hs.space.quadratures(0)
    zero = sp.csr_matrix(X.shape)
    base = _perturbed_overlap(x3, None)
    assert _perturbed_overlap(x3, lambda t: zero) == base
    T = d.T_bound
    slow = _perturbed_overlap(x3, lambda t: 1e-3 * math.sin(math.pi * t / T) * X)
    fast = _perturbed_overlap(x3, lambda t: 1e-3 * math.sin(50 * t) * X)
    assert base - slow < 0.05
    assert base - fast <= max(base - slow, 0.0) + 0.01


def test_distribution_point_mass_and_poisson():
    space = FockSpace([32])
    dist = distribution(space.basis_state([3]), space)
    assert dist == {(3,): 1.0}
    coh = distribution(fock.coherent_state(space, [1.0]), space)
    assert abs(coh[(0,)] - math.exp(-1)) < 1e-6
    assert abs(sum(coh.values()) - 1) < 1e-9
