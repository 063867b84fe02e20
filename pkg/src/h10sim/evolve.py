"""Time-dependent Schroedinger propagation under H(t/T)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .fock import FockSpace, NORM_TOL, check_normalized
from .hamiltonians import HamiltonianSet, check_hermitian

MAX_STEP_NORM = 0.1


class ScheduleError(ValueError):
    pass


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    """T total time, N outer factors (dtau = 1/N), m inner subdivisions per factor."""
    T: float
    N: int
    m: int = 1

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ScheduleError(f"evolution time must be positive and finite, got {self.T}")
        if self.N < 1 or self.m < 1:
            raise ScheduleError("N and m must be positive")

    @property
    def dtau(self) -> float:
        return 1.0 / self.N

    @property
    def ds(self) -> float:
        return self.T * self.dtau / self.m

    def check(self, norm: float | None):
        if norm is not None and self.dtau * norm > MAX_STEP_NORM + 1e-12:
            raise ScheduleError(f"dtau * norm = {self.dtau * norm:.3g} exceeds {MAX_STEP_NORM}; "
                                f"use N >= {math.ceil(norm / MAX_STEP_NORM)}")
        return self

    @classmethod
    def default(cls, T: float, norm: float, energy_scale: float = 1.0,
                N: int | None = None, m: int | None = None) -> "Schedule":
        if N is None:
            N = max(1, math.ceil(norm / MAX_STEP_NORM))
        if m is None:
            m = max(1, math.ceil(10 * T / N * max(energy_scale, 1.0)))
        return cls(T=float(T), N=int(N), m=int(m))

    def to_dict(self) -> dict:
        return {"T": self.T, "N": self.N, "m": self.m}


def _hermitian_exp_apply(H: np.ndarray, psi: np.ndarray, dt: float, repeat: int = 1) -> np.ndarray:
    # exp(-i H dt) applied `repeat` times, in the eigenbasis of H. The
    # repeated phases are taken as one exponential of the summed angle, which
    # keeps them unimodular where an integer power of exp(-i w dt) would drift.
    w, V = sla.eigh(H, driver="evd")
    phase = np.exp(-1j * ((w * dt) * repeat))
    return V @ (phase * (V.conj().T @ psi))


def _check_state(psi: np.ndarray, where: str) -> float:
    if not np.all(np.isfinite(psi)):
        raise EvolutionError(f"non-finite amplitudes {where}")
    dev = abs(float(np.linalg.norm(psi)) - 1.0)
    if dev > NORM_TOL:
        raise EvolutionError(f"norm drifted by {dev:.2e} {where}")
    return dev


def evolve_product_formula(hs: HamiltonianSet, psi0: np.ndarray, sched: Schedule,
                           norm: float | None = None,
                           perturbation: Callable[[float], object] | None = None,
                           trace: list | None = None) -> np.ndarray:
    """Ordered product of exp(-i H(tau_k) T dtau), tau_k at interval midpoints.

    Each factor is m applications of exp(-i H(tau_k) ds). ``norm`` (the
    transition-element norm) enforces dtau * norm <= 0.1. ``perturbation``
    adds a Hermitian K(t) at t = tau_k T. Per-step norm deviations are
    appended to ``trace`` when given.
    """
    sched.check(norm)
    psi = np.asarray(check_normalized(psi0), dtype=complex).copy()
    for k in range(sched.N):
        tau = (k + 0.5) * sched.dtau
        H = hs.dense(tau)
        if perturbation is not None:
            K = check_hermitian(perturbation(tau * sched.T), what="perturbation K(t)")
            H = H + (K.toarray() if hasattr(K, "toarray") else np.asarray(K))
        psi = _hermitian_exp_apply(H, psi, sched.ds, sched.m)
        dev = _check_state(psi, f"after outer step {k + 1}")
        if trace is not None:
            trace.append(dev)
    return psi


_GAUSS = math.sqrt(3) / 6


def _magnus4_step(hs: HamiltonianSet, psi: np.ndarray, t: float, h: float, T: float,
                  perturbation=None) -> np.ndarray:
    def H_at(time):
        H = hs.dense(time / T)
        if perturbation is not None:
            K = perturbation(time)
            H = H + (K.toarray() if hasattr(K, "toarray") else np.asarray(K))
        return H

    H1 = H_at(t + (0.5 - _GAUSS) * h)
    H2 = H_at(t + (0.5 + _GAUSS) * h)
    comm = H2 @ H1 - H1 @ H2
    # exp(Omega) with Omega = -i h (H1+H2)/2 - (sqrt3 h^2/12) [H2, H1] = -i Heff
    Heff = 0.5 * h * (H1 + H2) - 1j * (math.sqrt(3) * h * h / 12) * comm
    Heff = 0.5 * (Heff + Heff.conj().T)
    return _hermitian_exp_apply(Heff, psi, 1.0)


def _magnus_run(hs, psi0, T, steps, perturbation, trace):
    psi = np.asarray(psi0, dtype=complex).copy()
    h = T / steps
    for n in range(steps):
        psi = _magnus4_step(hs, psi, n * h, h, T, perturbation)
        dev = _check_state(psi, f"after reference step {n + 1}")
        if trace is not None:
            trace.append(dev)
    return psi


def evolve_reference(hs: HamiltonianSet, psi0: np.ndarray, T: float, steps: int,
                     tol: float = 1e-6, max_doublings: int = 4,
                     perturbation: Callable[[float], object] | None = None,
                     trace: list | None = None) -> np.ndarray:
    """Fourth-order Magnus integrator (two Gauss points) with step-halving control.

    Runs ``steps`` and ``2*steps``; keeps doubling until the two final states
    differ by less than ``tol`` in 2-norm, returning the finer one.
    """
    check_normalized(psi0)
    if T == 0:
        return np.asarray(psi0, dtype=complex).copy()
    if T < 0:
        raise ValueError("evolution time must be nonnegative")
    coarse = _magnus_run(hs, psi0, T, steps, perturbation, trace)
    for _ in range(max_doublings):
        steps *= 2
        fine = _magnus_run(hs, psi0, T, steps, perturbation, trace)
        if np.linalg.norm(fine - coarse) < tol:
            return fine
        coarse = fine
    raise EvolutionError(f"reference integrator not converged to {tol} after {steps} steps")


def distribution(psi: np.ndarray, space: FockSpace) -> dict[tuple[int, ...], float]:
    """Number-basis outcome probabilities |<n|psi>|^2 keyed by occupation tuple."""
    if psi.shape != (space.dim,):
        raise ValueError("state does not live on this space")
    check_normalized(psi)
    probs = np.abs(psi) ** 2
    tuples = space.tuples
    return {tuple(int(x) for x in tuples[i]): float(probs[i]) for i in np.flatnonzero(probs)}


def probabilities(psi: np.ndarray) -> np.ndarray:
    check_normalized(psi)
    return np.abs(psi) ** 2
