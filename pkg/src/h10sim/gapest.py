"""Gap estimate from a Bogoliubov (squeezed) frame per mode.

For c_i = u_i a_i + v_i a_i^dagger with u = cosh(theta), v = sinh(theta), the
normal-ordered expansion of H(s) has constant E_b, diagonal coefficients G_i
of c_i^dagger c_i and pair coefficients K_i of c_i^2. They are obtained here
as matrix elements between frame states rather than by symbolic ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import fock
from ._parallel import ordered_map
from .hamiltonians import DEFAULT_GRID, DEFAULT_MARGIN, HamiltonianSet, diagnostics

K_TOL = 1e-8
THETA_BRACKET = 5.0
FRAME_AGREEMENT_TOL = 1e-10  # relative; the two coefficient routes must agree inside the cap
DENSE_DIAGNOSTICS_LIMIT = 4096


@dataclass
class BogoliubovFrame:
    s: float
    thetas: np.ndarray
    E_b: float
    G: np.ndarray
    K_resid: np.ndarray
    reliable: bool = True
    mode: str = "root"

    @property
    def u(self) -> np.ndarray:
        return np.cosh(self.thetas)

    @property
    def v(self) -> np.ndarray:
        return np.sinh(self.thetas)

    def to_dict(self) -> dict:
        return {"s": self.s, "thetas": self.thetas.tolist(), "E_b": self.E_b,
                "G": self.G.tolist(), "K_resid": np.abs(self.K_resid).tolist(),
                "reliable": self.reliable, "mode": self.mode}


def _space(hs: HamiltonianSet) -> fock.FockSpace:
    if hs.space is None or hs.basis is not None:
        raise ValueError("Bogoliubov frames need Hamiltonians on a Fock space")
    return hs.space


def wick_coefficients(hs: HamiltonianSet, s: float, thetas: Sequence[float]):
    """(E_b, G, K) at ``s`` in the frame ``thetas``.

    E_b = <0_c|H|0_c>, G_i = <1_ci|H|1_ci> - E_b, K_i = <2_ci|H|0_c> / sqrt(2).
    """
    space = _space(hs)
    H = hs.at(s)
    vac = fock.bogoliubov_frame_state(space, thetas)
    H_vac = H @ vac
    E_b = float(np.vdot(vac, H_vac).real)
    G = np.empty(space.K)
    K = np.empty(space.K, dtype=complex)
    for i in range(space.K):
        one = fock.bogoliubov_frame_state(space, thetas, i, 1)
        two = fock.bogoliubov_frame_state(space, thetas, i, 2)
        G[i] = float(np.vdot(one, H @ one).real) - E_b
        K[i] = np.vdot(two, H_vac) / math.sqrt(2)
    if not np.any(K.imag):
        K = K.real
    return E_b, G, K


def frame_operators(space: fock.FockSpace, thetas: Sequence[float]):
    """Per-mode (c_i, c_i^dagger) as sparse matrices on the full space."""
    ops = []
    for i, theta in enumerate(thetas):
        a, ad = space.ladder(i)
        u, v = math.cosh(theta), math.sinh(theta)
        c = (u * a + v * ad).tocsr()
        ops.append((c, c.T.conj().tocsr()))
    return ops


def normal_ordered_coefficients(hs: HamiltonianSet, s: float, thetas: Sequence[float]):
    """Same coefficients via nested commutators on |0_c>.

    For H = sum h_pq c^dagger^p c^q: <0|[c,[H,c^dagger]]|0> = h_11 and
    <0|[c,[c,H]]|0> = 2 h_20. Independent of the excited frame states.
    """
    space = _space(hs)
    H = hs.at(s)
    vac = fock.bogoliubov_frame_state(space, thetas)
    E_b = float(np.vdot(vac, H @ vac).real)
    G = np.empty(space.K)
    K = np.empty(space.K, dtype=complex)
    for i, (c, cd) in enumerate(frame_operators(space, thetas)):
        X = H @ cd - cd @ H
        dbl = c @ X - X @ c
        G[i] = float(np.vdot(vac, dbl @ vac).real)
        Y = c @ H - H @ c
        dbl2 = c @ Y - Y @ c
        K[i] = np.vdot(vac, dbl2 @ vac) / 2
    if not np.any(K.imag):
        K = K.real
    return E_b, G, K


def frame_disagreement(hs: HamiltonianSet, s: float, thetas: Sequence[float]) -> float:
    """Relative gap between the matrix-element and commutator coefficient routes.

    Both agree exactly on an untruncated space; any difference is truncation error.
    """
    _, G1, K1 = wick_coefficients(hs, s, thetas)
    _, G2, K2 = normal_ordered_coefficients(hs, s, thetas)
    scale = max(1.0, float(np.max(np.abs(G1))), float(np.max(np.abs(K1))))
    return max(float(np.max(np.abs(G1 - G2))), float(np.max(np.abs(K1 - K2)))) / scale


def theta_limits(hs: HamiltonianSet, tol: float = FRAME_AGREEMENT_TOL) -> np.ndarray:
    """Admissible |theta| per mode.

    Starts from the squeezed-state tail check and shrinks until the coefficients
    are insensitive to the cutoff at both ends of the path (H(s) is affine in s,
    so the truncation error is too) and for either sign of the squeezing.
    """
    space = _space(hs)
    lims = np.array([min(THETA_BRACKET, fock.max_squeezing(m)) for m in space.cutoffs])
    def fits(s, thetas):
        try:
            return frame_disagreement(hs, s, thetas) <= tol
        except fock.CutoffError:  # an excited frame state does not fit the cutoff
            return False

    for _ in range(40):
        if all(fits(s, sign * lims) for s in (0.0, 1.0) for sign in (1, -1)):
            return lims
        lims = 0.8 * lims
    return np.zeros(space.K)


def _solve_root(hs, s, thetas, limits, sweeps=50):
    K = wick_coefficients(hs, s, thetas)[2]
    for _ in range(sweeps):
        if np.all(np.abs(K) < K_TOL):
            break
        for i in range(len(thetas)):
            if abs(K[i]) < K_TOL:
                continue

            def f(x, i=i):
                t = thetas.copy()
                t[i] = x
                return float(np.real(wick_coefficients(hs, s, t)[2][i]))

            lim = limits[i]
            xs = np.unique(np.concatenate([np.linspace(-lim, lim, 41), [0.0, thetas[i]]]))
            fs = np.array([f(x) for x in xs])
            roots = [x for x, y in zip(xs, fs) if y == 0.0]
            brackets = [(xs[j], xs[j + 1]) for j in range(len(xs) - 1) if fs[j] * fs[j + 1] < 0]
            if roots:
                thetas[i] = min(roots, key=lambda x: abs(x - thetas[i]))
            elif brackets:
                lo, hi = min(brackets, key=lambda b: abs(0.5 * (b[0] + b[1]) - thetas[i]))
                thetas[i] = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            else:
                res = minimize_scalar(lambda x: abs(f(x)), bounds=(-lim, lim), method="bounded",
                                      options={"xatol": 1e-12})
                thetas[i] = res.x
        K = wick_coefficients(hs, s, thetas)[2]
    return thetas, bool(np.all(np.abs(K) < K_TOL))


def _solve_min(hs, s, thetas, limits, sweeps=50, tol=1e-8):
    reliable = True
    for _ in range(sweeps):
        previous = thetas.copy()
        for i in range(len(thetas)):
            def e(x, i=i):
                t = thetas.copy()
                t[i] = x
                return wick_coefficients(hs, s, t)[0]

            res = minimize_scalar(e, bounds=(-limits[i], limits[i]), method="bounded",
                                  options={"xatol": tol})
            thetas[i] = res.x
        if np.max(np.abs(thetas - previous)) < tol:
            break
    for i, lim in enumerate(limits):
        if lim > 0 and abs(abs(thetas[i]) - lim) < 1e-6:
            reliable = False
    return thetas, reliable


def solve_frame(hs: HamiltonianSet, s: float, mode: str = "root",
                initial: Sequence[float] | None = None,
                limits: np.ndarray | None = None) -> BogoliubovFrame:
    """Fix the squeezing per mode from K_i = 0 ("root") or by minimising E_b ("minimize")."""
    space = _space(hs)
    if min(space.cutoffs) < 3:
        raise fock.CutoffError("Bogoliubov frames need every cutoff >= 3 (the frame uses |2_c>)")
    if limits is None:
        limits = theta_limits(hs)
    thetas = np.zeros(space.K) if initial is None else np.array(initial, dtype=float)
    if mode == "root":
        thetas, reliable = _solve_root(hs, s, thetas, limits)
    elif mode == "minimize":
        thetas, reliable = _solve_min(hs, s, thetas, limits)
    else:
        raise ValueError(f"unknown frame mode {mode!r}")
    E_b, G, K = wick_coefficients(hs, s, thetas)
    if mode == "root":
        reliable = reliable and bool(np.all(np.abs(K) < K_TOL))
    return BogoliubovFrame(s=float(s), thetas=thetas, E_b=E_b, G=G, K_resid=K,
                           reliable=reliable, mode=mode)


def frame_transition_norm(hs: HamiltonianSet, frames: Sequence[BogoliubovFrame]) -> float:
    """max |<1_ci|(H_I - H_P)|0_c>| over frames and modes (used when dense diagonalisation is too big)."""
    space = _space(hs)
    D = hs.H_I - hs.H_P
    best = 0.0
    for fr in frames:
        vac = fock.bogoliubov_frame_state(space, fr.thetas)
        Dv = D @ vac
        for i in range(space.K):
            one = fock.bogoliubov_frame_state(space, fr.thetas, i, 1)
            best = max(best, abs(np.vdot(one, Dv)))
    return float(best)


@dataclass
class GapEstimate:
    g_est: float
    T_est: float
    norm: float
    norm_source: str
    frames: list
    warning: bool
    margin: float

    def to_dict(self) -> dict:
        return {"g_est": self.g_est, "T_est": self.T_est, "norm": self.norm,
                "norm_source": self.norm_source, "warning": self.warning, "margin": self.margin,
                "frames": [f.to_dict() for f in self.frames]}


def estimate_gap_and_T(hs: HamiltonianSet, s_grid_size: int = DEFAULT_GRID, mode: str = "root",
                       margin: float = DEFAULT_MARGIN, norm: float | None = None) -> GapEstimate:
    """g_est = min over grid and modes of |G_i(s)|; T_est = margin * norm / g_est^2."""
    if s_grid_size < 3:
        raise ValueError("s grid needs at least 3 points")
    grid = np.linspace(0.0, 1.0, s_grid_size)
    if min(_space(hs).cutoffs) < 3:
        raise fock.CutoffError("Bogoliubov frames need every cutoff >= 3 (the frame uses |2_c>)")
    limits = theta_limits(hs)
    frames = ordered_map(lambda s: solve_frame(hs, float(s), mode, limits=limits), grid)
    g_est = float(min(np.min(np.abs(f.G)) for f in frames))
    if norm is not None:
        source = "given"
    elif hs.dim <= DENSE_DIAGNOSTICS_LIMIT:
        norm = diagnostics(hs, s_grid_size, margin).norm_HI_minus_HP
        source = "diagnostics"
    else:
        norm = frame_transition_norm(hs, frames)
        source = "frames"
    T_est = margin * norm / g_est**2 if g_est > 0 else math.inf
    return GapEstimate(g_est=g_est, T_est=T_est, norm=float(norm), norm_source=source,
                       frames=frames, warning=not all(f.reliable for f in frames), margin=margin)
