"""The measure / simulate / compare / enlarge decision loop.

Each outer iteration:

1. runs the simulated apparatus at the reference truncation for time T and
   builds a histogram of L number-basis measurements; the observed outcome
   with the smallest exact D(n)^2 is the candidate n_c;
2. grows a displaced number basis on the loop truncation until the
   distribution predicted there matches the histogram within epsilon;
3. diagonalises the projected H_P to get E_g' and checks it again on the
   next larger basis;
4. stops with a witness if D(n_c) = 0, with NO_SOLUTION if the estimate is
   stable, |E_g' - E_c| < 1/2, |delta| <= E_c and the evolved state sits in
   the ground space; otherwise picks a new T from the gap in the current
   basis and repeats.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import fock, gapest, hamiltonians
from .evolve import Schedule, evolve_product_formula
from .fock import FockSpace
from .oracle import (BOUNDARY_MASS_LIMIT, SamplingPlan, empirical_distance, run_apparatus)
from .poly import Polynomial, brute_force_min, evaluate

GROWTH = 1.5
ZERO_TEST_SEPARATION = 0.5
DENSE_LIMIT = 4096


class Kind(str, enum.Enum):
    HAS_SOLUTION = "HAS_SOLUTION"
    NO_SOLUTION = "NO_SOLUTION"
    INCONCLUSIVE = "INCONCLUSIVE"


class InconsistentEstimateError(ValueError):
    """|E_g' - E_c| >= 1/2: the truncated basis has not converged."""


@dataclass
class SolveConfig:
    epsilon: float = 0.1
    p: float = 0.8
    cutoffs: Sequence[int] | None = None
    ref_cutoffs: Sequence[int] | None = None
    alphas: Sequence[complex] | None = None
    T: float | str = "auto"
    seed: int = 0
    max_iterations: int = 12
    L: int | None = None
    N: int | None = None
    m: int | None = None
    margin: float = hamiltonians.DEFAULT_MARGIN
    grid: int = hamiltonians.DEFAULT_GRID
    stability_tol: float | None = None

    def resolved(self, K: int) -> "SolveConfig":
        cutoffs = list(self.cutoffs) if self.cutoffs is not None else [8] * K
        if len(cutoffs) == 1 and K > 1:
            cutoffs = cutoffs * K
        ref = list(self.ref_cutoffs) if self.ref_cutoffs is not None else [2 * c for c in cutoffs]
        if len(ref) == 1 and K > 1:
            ref = ref * K
        alphas = list(self.alphas) if self.alphas is not None else [1.0] * K
        if len(alphas) == 1 and K > 1:
            alphas = alphas * K
        cfg = SolveConfig(**{**asdict(self), "cutoffs": cutoffs, "ref_cutoffs": ref, "alphas": alphas})
        cfg.validate(K)
        return cfg

    def validate(self, K: int):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        for name in ("cutoffs", "ref_cutoffs", "alphas"):
            if len(getattr(self, name)) != K:
                raise ValueError(f"{name} needs {K} entries")
        if any(r <= c for r, c in zip(self.ref_cutoffs, self.cutoffs)):
            raise ValueError("ref_cutoffs must strictly exceed cutoffs in every mode")
        if self.T != "auto" and not (isinstance(self.T, (int, float)) and self.T > 0):
            raise ValueError("T must be positive or 'auto'")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = [_complex_json(a) for a in self.alphas] if self.alphas is not None else None
        return d


def _complex_json(a):
    a = complex(a)
    return a.real if a.imag == 0 else [a.real, a.imag]


@dataclass
class GroundStateEstimate:
    basis_size: int
    g_prime: np.ndarray
    E_g_prime: float
    E_c: int
    converged: bool = False

    @property
    def delta(self) -> float:
        return self.E_g_prime - self.E_c


@dataclass
class Verdict:
    kind: Kind
    witness: tuple[int, ...] | None
    E_g_estimate: float | None
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind is Kind.HAS_SOLUTION and self.witness is None:
            raise ValueError("HAS_SOLUTION needs a witness")


def zero_test(E: GroundStateEstimate) -> bool:
    """E_c == 0, provided the float estimate is within 1/2 of the exact candidate energy."""
    if not E.converged:
        raise ValueError("zero test needs a converged estimate")
    if abs(E.E_g_prime - E.E_c) >= ZERO_TEST_SEPARATION:
        raise InconsistentEstimateError(
            f"E_g' = {E.E_g_prime:.6g} is not within 1/2 of E_c = {E.E_c}")
    return E.E_c == 0


def grow(M: int, dim: int) -> int:
    return min(dim, max(M + 1, math.ceil(GROWTH * M)))


def _iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence([int(seed), iteration]).generate_state(1, np.uint64)[0])


class _LoopBasis:
    """Projected Hamiltonians and evolutions on nested displaced bases."""

    def __init__(self, hs: hamiltonians.HamiltonianSet, alphas):
        self.hs = hs
        self.space = hs.space
        self.alphas = alphas
        self._full = None

    def basis(self, M: int) -> fock.DisplacedBasis:
        # Enumeration is deterministic, so smaller bases are prefixes of larger ones.
        if self._full is None or self._full.size < M:
            self._full = fock.displaced_number_basis(self.space, self.alphas, M)
        full = self._full
        return fock.DisplacedBasis(full.vectors[:, :M], full.indices[:M], full.skipped, full.alphas)

    def evaluate(self, M: int, sched: Schedule, norm: float, hist, norm_log: list):
        B = self.basis(M)
        proj = self.hs.project(B)
        psi0 = np.zeros(M, dtype=complex)
        psi0[0] = 1.0
        trace: list = []
        # The basis-local norm can exceed the apparatus norm; the schedule
        # check applies to the latter, which sets N.
        psi = evolve_product_formula(proj, psi0, sched, norm=norm, trace=trace)
        norm_log.append(max(trace, default=0.0))
        full = B.vectors @ psi  # B is orthonormal, so this keeps the norm
        probs = np.abs(full) ** 2
        tuples = self.space.tuples
        dist = {tuple(int(x) for x in tuples[i]): float(probs[i]) for i in np.flatnonzero(probs)}
        w, V = sla.eigh(proj.H_P)
        return {"M": M, "proj": proj, "psi": psi, "distance": empirical_distance(hist, dist),
                "E": float(w[0]), "w": w, "V": V, "P_est": dist}


def _ground_weight(step: dict) -> float:
    w, V, psi = step["w"], step["V"], step["psi"]
    cluster = w < w[0] + ZERO_TEST_SEPARATION
    return float(np.sum(np.abs(V[:, cluster].conj().T @ psi) ** 2))


def _distribution_json(dist: dict, threshold: float = 1e-6) -> list:
    return [{"n": list(n), "p": p} for n, p in sorted(dist.items()) if p >= threshold]


def _step0_diagnostics(hs, grid, margin):
    if hs.dim <= DENSE_LIMIT:
        d = hamiltonians.diagnostics(hs, grid, margin)
        return {"source": "diagnostics", "T": d.T_bound, "norm": d.norm_HI_minus_HP,
                "energy_scale": d.energy_scale, "usable": d.usable,
                "degenerate_endpoint": d.degenerate_endpoint}, d
    est = gapest.estimate_gap_and_T(hs, grid, "root", margin)
    return {"source": "gapest", "T": est.T_est, "norm": est.norm, "energy_scale": 1.0,
            "usable": math.isfinite(est.T_est) and est.g_est > 0,
            "degenerate_endpoint": None}, est


def solve(p: Polynomial, config: SolveConfig | None = None) -> Verdict:
    config = (config or SolveConfig()).resolved(p.K)
    eps = config.epsilon
    stability_tol = config.stability_tol if config.stability_tol is not None else eps / 2
    clock = time.perf_counter()
    timings: dict[str, float] = {}

    loop_space = FockSpace(config.cutoffs)
    hs_loop = hamiltonians.build(p, loop_space, config.alphas)

    report: dict = {
        "explored_cutoffs": {"loop": list(config.cutoffs), "reference": list(config.ref_cutoffs)},
        "qualification": (f"verdict covers 0 <= n_j < {list(config.ref_cutoffs)} (reference "
                          f"truncation) with loop truncation {list(config.cutoffs)}; values "
                          "beyond the reference box were never represented"),
        "truncation": {"loop_saturated": hs_loop.saturated,
                       "loop_coherent_tail": fock.coherent_tail_mass(config.alphas, loop_space)},
        "iterations": [],
    }

    t0 = time.perf_counter()
    step0, diag0 = _step0_diagnostics(hs_loop, config.grid, config.margin)
    timings["step0_diagnostics"] = time.perf_counter() - t0
    report["step0"] = step0
    if isinstance(diag0, hamiltonians.AdiabaticDiagnostics):
        report["gap_diagnostics"] = diag0.to_dict()
        report["degenerate_endpoint"] = diag0.degenerate_endpoint
        t0 = time.perf_counter()
        try:
            report["gap_estimate"] = gapest.estimate_gap_and_T(
                hs_loop, config.grid, "root", config.margin, norm=diag0.norm_HI_minus_HP).to_dict()
        except fock.CutoffError as exc:  # informational only when exact diagnostics exist
            report["gap_estimate"] = {"error": str(exc)}
        timings["gap_estimate"] = time.perf_counter() - t0
    else:
        report["gap_diagnostics"] = None
        report["degenerate_endpoint"] = None
        report["gap_estimate"] = diag0.to_dict()

    def finish(kind, witness=None, energy=None, reason=None):
        report["verdict"] = kind.value
        report["witness"] = list(witness) if witness is not None else None
        report["E_g_estimate"] = energy
        if reason:
            report["reason"] = reason
        timings["total"] = time.perf_counter() - clock
        report["timings"] = timings
        return Verdict(kind, witness, energy, report)

    if config.T == "auto":
        if not step0["usable"]:
            return finish(Kind.INCONCLUSIVE, reason="no usable gap estimate for the initial time")
        T = max(float(step0["T"]), 1e-3)
    else:
        T = float(config.T)
    norm = float(step0["norm"])
    energy_scale = float(step0["energy_scale"])

    loop = _LoopBasis(hs_loop, config.alphas)
    M = min(p.K + 1, loop_space.dim)
    last_estimate = None

    for it in range(config.max_iterations):
        t_it = time.perf_counter()
        sched = Schedule.default(T, norm, energy_scale, config.N, config.m)
        plan = SamplingPlan(eps, config.p, _iteration_seed(config.seed, it), config.L)
        entry: dict = {"iteration": it, "T": T, "schedule": sched.to_dict(), "sampling": plan.to_dict()}
        report["iterations"].append(entry)

        app = run_apparatus(p, config.alphas, config.ref_cutoffs, sched, plan,
                            loop_cutoffs=config.cutoffs, norm=norm)
        n_c, E_c = app.candidate, app.candidate_energy
        entry.update({
            "candidate": list(n_c), "E_c": E_c, "candidate_probability": app.probability(n_c),
            "histogram": app.histogram.to_dict(), "boundary_mass": app.boundary_mass,
            "max_norm_deviation": max(app.norm_trace, default=0.0),
        })
        if app.boundary_mass > BOUNDARY_MASS_LIMIT:
            entry["timing"] = time.perf_counter() - t_it
            return finish(Kind.INCONCLUSIVE, reason=(
                f"probability {app.boundary_mass:.3g} on the reference cutoff boundary; "
                "increase ref_cutoffs"))

        # grow the basis until the predicted distribution matches the histogram
        norm_log: list = []
        trace = []
        step = loop.evaluate(M, sched, norm, app.histogram, norm_log)
        trace.append({"M": M, "distance": step["distance"], "E_g_prime": step["E"]})
        while step["distance"] > eps and M < loop_space.dim:
            M = grow(M, loop_space.dim)
            step = loop.evaluate(M, sched, norm, app.histogram, norm_log)
            trace.append({"M": M, "distance": step["distance"], "E_g_prime": step["E"]})
        matched = step["distance"] <= eps

        # Enlarge until two consecutive matched bases agree on E_g'. The
        # histogram is fixed within an iteration, so this needs no new run.
        # A basis spanning the whole loop space is exact there.
        stable = matched and M == loop_space.dim
        while matched and not stable and M < loop_space.dim:
            M2 = grow(M, loop_space.dim)
            nxt = loop.evaluate(M2, sched, norm, app.histogram, norm_log)
            trace.append({"M": M2, "distance": nxt["distance"], "E_g_prime": nxt["E"]})
            close = abs(nxt["E"] - step["E"]) <= stability_tol
            M, step = M2, nxt
            matched = step["distance"] <= eps
            stable = matched and (close or M == loop_space.dim)
        entry["basis_trace"] = trace
        entry["max_norm_deviation"] = max([entry["max_norm_deviation"], *norm_log])

        estimate = GroundStateEstimate(basis_size=M, g_prime=loop.basis(M).vectors @ step["V"][:, 0],
                                       E_g_prime=step["E"], E_c=E_c, converged=stable)
        last_estimate = estimate
        weight = _ground_weight(step)
        entry.update({
            "basis_size": M, "distance": step["distance"], "matched": matched, "stable": stable,
            "E_g_prime": estimate.E_g_prime, "delta": estimate.delta,
            "ground_space_weight": weight,
            "P_est": _distribution_json(step["P_est"]),
        })
        consistent = abs(estimate.delta) < ZERO_TEST_SEPARATION
        entry["zero_test"] = ("true" if E_c == 0 else "false") if consistent else "inconsistent"

        if E_c == 0:
            # exact substitution decides; the float estimate is only reported
            assert evaluate(p, n_c) == 0
            entry["timing"] = time.perf_counter() - t_it
            report["final_basis_size"] = M
            return finish(Kind.HAS_SOLUTION, n_c, estimate.E_g_prime)

        condition = abs(estimate.delta) <= E_c
        confirmed = weight >= 1 - eps
        entry.update({"termination_condition": condition, "ground_state_confirmed": confirmed})
        if stable and consistent and condition and confirmed:
            zero_test(estimate)
            entry["timing"] = time.perf_counter() - t_it
            report["final_basis_size"] = M
            return finish(Kind.NO_SOLUTION, None, estimate.E_g_prime)

        # refresh T from the gap in the current truncated basis
        sub = hamiltonians.diagnostics(step["proj"], config.grid, config.margin)
        entry["basis_diagnostics"] = {"gap": sub.gap, "norm": sub.norm_HI_minus_HP,
                                      "T_bound": sub.T_bound, "usable": sub.usable}
        T_next = sub.T_bound if sub.usable else math.inf
        if not math.isfinite(T_next) or T_next <= T:
            T_next = 2 * T
        norm = max(norm, sub.norm_HI_minus_HP)
        energy_scale = max(energy_scale, sub.energy_scale)
        entry["timing"] = time.perf_counter() - t_it
        T = T_next

    report["final_basis_size"] = M
    energy = last_estimate.E_g_prime if last_estimate is not None else None
    return finish(Kind.INCONCLUSIVE, energy=energy, reason="iteration cap reached without convergence")


def oracle_check(p: Polynomial, cutoffs: Sequence[int]) -> Kind:
    """Brute-force verdict over a box (for cross-checks)."""
    best, _ = brute_force_min(p, cutoffs)
    return Kind.HAS_SOLUTION if best == 0 else Kind.NO_SOLUTION
