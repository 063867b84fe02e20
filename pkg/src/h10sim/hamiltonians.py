"""Problem, initial and interpolating Hamiltonians plus adiabatic diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import fock
from ._parallel import ordered_map
from .fock import FockSpace
from .poly import Polynomial, grid_values

FLOAT_EXACT_LIMIT = 2**53
HERMITIAN_TOL = 1e-10
ENDPOINT_DEGENERACY_TOL = 1e-8
INTERIOR_DEGENERACY_TOL = 1e-12
DEFAULT_MARGIN = 10.0
DEFAULT_GRID = 21


def linear_schedule(s: float) -> tuple[float, float]:
    return 1.0 - s, s


def _dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A)


@dataclass(frozen=True, eq=False)
class HamiltonianSet:
    """H(s) = w0(s) H_I + w1(s) H_P on a truncated space or a projected basis.

    ``exact_energies`` holds D(n)^2 as Python ints per basis index when H_P
    came from a polynomial; ``basis`` is set for projections onto a
    displaced basis (then ``space`` is the parent Fock space).
    """
    H_I: object
    H_P: object
    space: FockSpace | None = None
    alphas: tuple = ()
    schedule: Callable[[float], tuple[float, float]] = linear_schedule
    exact_energies: tuple | None = None
    saturated: bool = False
    basis: object = None

    @property
    def dim(self) -> int:
        return self.H_I.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.H_I) or np.iscomplexobj(self.H_P))

    def at(self, s: float):
        w0, w1 = self.schedule(s)
        if w1 == 0.0:
            return self.H_I * w0 if w0 != 1.0 else self.H_I
        if w0 == 0.0:
            return self.H_P * w1 if w1 != 1.0 else self.H_P
        return w0 * self.H_I + w1 * self.H_P

    def dense(self, s: float) -> np.ndarray:
        return _dense(self.at(s))

    def project(self, basis: "fock.DisplacedBasis") -> "HamiltonianSet":
        """Galerkin projection B^dagger H B onto an orthonormal basis."""
        B = basis.vectors
        Bh = B.conj().T
        HI = Bh @ (self.H_I @ B)
        HP = Bh @ (self.H_P @ B)
        HI = 0.5 * (HI + HI.conj().T)
        HP = 0.5 * (HP + HP.conj().T)
        if not np.any(HI.imag) and not np.any(HP.imag):
            HI, HP = HI.real.copy(), HP.real.copy()
        return replace(self, H_I=HI, H_P=HP, exact_energies=None, basis=basis)


def initial_hamiltonian(space: FockSpace, alphas: Sequence[complex]) -> sp.csr_matrix:
    """sum_i (a_i^dagger - conj(alpha_i)) (a_i - alpha_i)."""
    if len(alphas) != space.K:
        raise ValueError(f"need {space.K} displacements, got {len(alphas)}")
    real = all(complex(a).imag == 0 for a in alphas)
    H = sp.csr_matrix((space.dim, space.dim), dtype=float if real else complex)
    for j, alpha in enumerate(alphas):
        m = space.cutoffs[j]
        a = sp.diags(np.sqrt(np.arange(1, m, dtype=float)), 1, shape=(m, m), format="csr")
        b = a - (alpha.real if real else complex(alpha)) * sp.identity(m, format="csr")
        H = H + space.embed(b.conj().T @ b, j)
    return H.tocsr()


def problem_energies(p: Polynomial, space: FockSpace) -> tuple[int, ...]:
    """Exact D(n)^2 for each basis index, in basis order."""
    if p.K != space.K:
        raise ValueError(f"polynomial has {p.K} unknowns, space has {space.K} modes")
    values = grid_values(p, space.cutoffs).ravel()
    return tuple(int(v) ** 2 for v in values)


def build(p: Polynomial, space: FockSpace, alphas: Sequence[complex] | None = None,
          schedule: Callable[[float], tuple[float, float]] = linear_schedule) -> HamiltonianSet:
    alphas = tuple(complex(a) for a in (alphas if alphas is not None else [1.0] * space.K))
    exact = problem_energies(p, space)
    saturated = any(e > FLOAT_EXACT_LIMIT for e in exact)
    diag = np.array([float(min(e, FLOAT_EXACT_LIMIT)) for e in exact])
    H_P = sp.diags(diag, 0, format="csr")
    H_I = initial_hamiltonian(space, alphas)
    return HamiltonianSet(H_I=H_I, H_P=H_P, space=space, alphas=alphas, schedule=schedule,
                          exact_energies=exact, saturated=saturated)


def interpolate(hs: HamiltonianSet, s: float):
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"interpolation parameter {s} outside [0, 1]")
    return hs.at(s)


def check_hermitian(A, tol: float = HERMITIAN_TOL, what: str = "operator"):
    r = fock.hermiticity_residual(A)
    if r > tol:
        raise ValueError(f"{what} is not Hermitian (residual {r:.3e})")
    return A


def perturbed(hs: HamiltonianSet, K_fn: Callable[[float], object], t: float, T: float):
    """H(t/T) + K(t)."""
    K = check_hermitian(K_fn(t), what="perturbation K(t)")
    return hs.at(t / T) + K


@dataclass
class AdiabaticDiagnostics:
    s_grid: np.ndarray
    ground_energy: np.ndarray
    excited_energy: np.ndarray
    transition: np.ndarray
    gap: float
    gap_location: float
    norm_HI_minus_HP: float
    T_bound: float
    margin: float
    energy_scale: float
    degenerate_endpoint: bool
    endpoint_multiplicity: dict = field(default_factory=dict)
    interior_degenerate: bool = False

    @property
    def usable(self) -> bool:
        return not self.interior_degenerate and math.isfinite(self.T_bound)

    def to_dict(self) -> dict:
        return {
            "s_grid": self.s_grid.tolist(),
            "ground_energy": self.ground_energy.tolist(),
            "excited_energy": self.excited_energy.tolist(),
            "transition_element": self.transition.tolist(),
            "gap": self.gap,
            "gap_location": self.gap_location,
            "norm_HI_minus_HP": self.norm_HI_minus_HP,
            "T_bound": self.T_bound,
            "margin": self.margin,
            "energy_scale": self.energy_scale,
            "degenerate_endpoint": self.degenerate_endpoint,
            "endpoint_multiplicity": self.endpoint_multiplicity,
            "interior_degenerate": self.interior_degenerate,
        }


def diagnostics(hs: HamiltonianSet, s_grid_size: int = DEFAULT_GRID,
                margin: float = DEFAULT_MARGIN) -> AdiabaticDiagnostics:
    """Gap, transition-element norm and adiabatic time bound on a uniform s grid.

    At an endpoint whose ground level is degenerate (within 1e-8) the point
    is left out of the gap minimum and the reported excited level is the
    first one above the degenerate cluster.
    """
    if s_grid_size < 3:
        raise ValueError("s grid needs at least 3 points")
    if hs.dim < 2:
        raise ValueError("need at least two levels for a gap")
    grid = np.linspace(0.0, 1.0, s_grid_size)
    diff = _dense(hs.H_I - hs.H_P)

    def point(idx: int):
        s = grid[idx]
        H = hs.dense(s)
        endpoint = idx in (0, s_grid_size - 1)
        if endpoint:
            w, V = sla.eigh(H)
        else:
            w, V = sla.eigh(H, subset_by_index=[0, 1])
        e_idx = 1
        mult = 1
        if endpoint:
            mult = int(np.sum(w - w[0] < ENDPOINT_DEGENERACY_TOL))
            e_idx = min(mult, len(w) - 1)
        g_vec, e_vec = V[:, 0], V[:, e_idx]
        return w[0], w[1], w[e_idx], abs(np.vdot(e_vec, diff @ g_vec)), mult

    results = ordered_map(point, range(s_grid_size))
    E_g = np.array([r[0] for r in results])
    E_1 = np.array([r[1] for r in results])
    E_e = np.array([r[2] for r in results])
    trans = np.array([r[3] for r in results])
    mults = {"s=0": results[0][4], "s=1": results[-1][4]}

    gaps = E_1 - E_g
    keep = np.ones(s_grid_size, dtype=bool)
    degenerate = False
    for idx in (0, s_grid_size - 1):
        if gaps[idx] < ENDPOINT_DEGENERACY_TOL:
            keep[idx] = False
            degenerate = True
    interior = gaps[1:-1]
    interior_degenerate = bool(np.any(interior < INTERIOR_DEGENERACY_TOL))
    g = float(np.min(gaps[keep]))
    where = float(grid[keep][int(np.argmin(gaps[keep]))])
    norm = float(np.max(trans))
    if interior_degenerate or g <= 0:
        T_bound = math.inf
    else:
        T_bound = margin * norm / g**2
    return AdiabaticDiagnostics(
        s_grid=grid, ground_energy=E_g, excited_energy=E_e, transition=trans, gap=g,
        gap_location=where, norm_HI_minus_HP=norm, T_bound=T_bound, margin=margin,
        energy_scale=float(np.max(np.abs(E_e))), degenerate_endpoint=degenerate,
        endpoint_multiplicity=mults, interior_degenerate=interior_degenerate)
