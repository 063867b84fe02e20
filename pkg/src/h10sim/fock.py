"""Truncated multi-mode Fock space.

Mode ``j`` holds levels ``0 .. cutoffs[j]-1``. Basis index <-> occupation
tuple is row-major with mode 0 slowest (``numpy.ravel_multi_index`` order).
Modes are numbered from 0. Operators are ``scipy.sparse`` CSR matrices;
states are 1-D complex (or real) ``numpy`` arrays of unit norm.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

NORM_TOL = 1e-9
GS_DEPENDENCE_TOL = 1e-10
SQUEEZE_TAIL_TOL = 1e-8


class CutoffError(ValueError):
    """The truncation is too small for the requested state."""


class FockSpace:
    def __init__(self, cutoffs: Sequence[int]):
        cutoffs = tuple(int(m) for m in cutoffs)
        if not cutoffs or any(m < 1 for m in cutoffs):
            raise ValueError(f"cutoffs must be positive integers, got {cutoffs}")
        self.cutoffs = cutoffs

    def __repr__(self):
        return f"FockSpace({list(self.cutoffs)})"

    def __eq__(self, other):
        return isinstance(other, FockSpace) and other.cutoffs == self.cutoffs

    def __hash__(self):
        return hash(self.cutoffs)

    @property
    def K(self) -> int:
        return len(self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(self.cutoffs)

    def index(self, n: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(n), self.cutoffs))

    def occupation(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(index, self.cutoffs))

    @cached_property
    def tuples(self) -> np.ndarray:
        """(dim, K) array of occupation numbers, row i = occupation(i)."""
        grids = np.indices(self.cutoffs).reshape(self.K, -1)
        return grids.T.copy()

    def basis_state(self, n: Sequence[int]) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(n)] = 1.0
        return psi

    def boundary_mask(self) -> np.ndarray:
        """True on basis states with at least one mode at its top level."""
        return np.any(self.tuples == np.array(self.cutoffs) - 1, axis=1)

    def _check_mode(self, j: int):
        if not 0 <= j < self.K:
            raise IndexError(f"mode {j} out of range for {self.K} modes")

    def embed(self, op: sp.spmatrix | np.ndarray, j: int) -> sp.csr_matrix:
        """Lift a single-mode operator on mode ``j`` to the full space."""
        self._check_mode(j)
        left = math.prod(self.cutoffs[:j])
        right = math.prod(self.cutoffs[j + 1:])
        out = sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op), format="csr")
        return sp.kron(out, sp.identity(right, format="csr"), format="csr")

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim, format="csr")

    def ladder(self, j: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """(a_j, a_j^dagger); a^dagger annihilates the top level."""
        self._check_mode(j)
        a = sp.diags(np.sqrt(np.arange(1, self.cutoffs[j], dtype=float)), 1,
                     shape=(self.cutoffs[j],) * 2, format="csr")
        a_full = self.embed(a, j)
        return a_full, a_full.T.tocsr()

    def number(self, j: int) -> sp.csr_matrix:
        self._check_mode(j)
        return sp.diags(self.tuples[:, j].astype(float), 0, format="csr")

    def quadratures(self, j: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """X = (a + a^dagger)/sqrt2 and P = i(a - a^dagger)/sqrt2."""
        a, ad = self.ladder(j)
        X = (a + ad) / math.sqrt(2)
        P = 1j * (a - ad) / math.sqrt(2)
        return X.tocsr(), P.tocsr()


# ---------------------------------------------------------------------------
# helpers on operators and states

def commutator(A, B):
    return A @ B - B @ A


def dagger(A):
    return A.conj().T


def hermiticity_residual(A) -> float:
    D = A - dagger(A)
    if sp.issparse(D):
        return float(abs(D).max()) if D.nnz else 0.0
    return float(np.max(np.abs(D))) if D.size else 0.0


def expectation(op, psi: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))


def check_normalized(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    norm = np.linalg.norm(psi)
    if not np.isfinite(norm) or abs(norm - 1.0) > tol:
        raise ValueError(f"state norm {norm!r} deviates from 1 by more than {tol}")
    return psi


def _tensor(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = vectors[0]
    for v in vectors[1:]:
        out = np.kron(out, v)
    return out


# ---------------------------------------------------------------------------
# states

def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Untruncated-normalised amplitudes e^{-|a|^2/2} a^n / sqrt(n!), n < cutoff."""
    c = np.empty(cutoff, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, cutoff):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def coherent_tail_mass(alphas: Sequence[complex], space: FockSpace) -> float:
    """Probability a product coherent state loses to the truncation."""
    kept = 1.0
    for alpha, m in zip(alphas, space.cutoffs):
        kept *= float(np.sum(np.abs(coherent_amplitudes(alpha, m)) ** 2))
    return 1.0 - kept


def _check_alphas(space: FockSpace, alphas):
    alphas = [complex(a) for a in alphas]
    if len(alphas) != space.K:
        raise ValueError(f"need {space.K} displacements, got {len(alphas)}")
    for j, (alpha, m) in enumerate(zip(alphas, space.cutoffs)):
        if abs(alpha) ** 2 > m / 4:
            need = math.ceil(4 * abs(alpha) ** 2)
            raise CutoffError(f"mode {j}: |alpha|^2 = {abs(alpha) ** 2:g} exceeds cutoff/4; "
                              f"raise its cutoff to at least {need}")
    return alphas


def coherent_state(space: FockSpace, alphas: Sequence[complex]) -> np.ndarray:
    alphas = _check_alphas(space, alphas)
    vecs = []
    for alpha, m in zip(alphas, space.cutoffs):
        c = coherent_amplitudes(alpha, m)
        vecs.append(c / np.linalg.norm(c))
    return _tensor(vecs)


def excitation_indices(space: FockSpace) -> list[tuple[int, ...]]:
    """Multi-indices ordered by total excitation, ties lexicographic."""
    return sorted(itertools.product(*(range(m) for m in space.cutoffs)),
                  key=lambda k: (sum(k), k))


class DisplacedBasis:
    """Orthonormal basis grown from |alpha> by displaced creation operators.

    ``vectors`` is (dim, M); column 0 is the coherent state. ``indices`` are
    the excitation multi-indices of accepted columns; ``skipped`` those
    rejected as numerically dependent.
    """

    def __init__(self, vectors: np.ndarray, indices: list, skipped: list, alphas):
        self.vectors = vectors
        self.indices = indices
        self.skipped = skipped
        self.alphas = alphas

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors


def displaced_number_basis(space: FockSpace, alphas: Sequence[complex], count: int) -> DisplacedBasis:
    """First ``count`` orthonormalised vectors prod_i (b_i^dagger)^{k_i} |alpha>.

    b_i^dagger = a_i^dagger - conj(alpha_i). Each raw vector is built from its
    parent (one excitation fewer in the first excited mode), normalised, then
    orthogonalised against all accepted columns with two classical
    Gram-Schmidt passes.
    """
    alphas = _check_alphas(space, alphas)
    if count > space.dim:
        raise ValueError(f"requested {count} basis vectors in a space of dimension {space.dim}")
    b_dag = []
    for j, alpha in enumerate(alphas):
        _, ad = space.ladder(j)
        b_dag.append((ad - np.conj(alpha) * space.identity()).tocsr())

    psi0 = coherent_state(space, alphas)
    raw: dict[tuple[int, ...], np.ndarray] = {}
    Q = np.empty((space.dim, count), dtype=complex)
    accepted, skipped = [], []
    for k in excitation_indices(space):
        if len(accepted) == count:
            break
        if sum(k) == 0:
            v = psi0.copy()
        else:
            j = next(i for i, ki in enumerate(k) if ki)
            parent = k[:j] + (k[j] - 1,) + k[j + 1:]
            v = b_dag[j] @ raw[parent]
            nv = np.linalg.norm(v)
            v = v / nv if nv > 0 else v
        raw[k] = v
        r = len(accepted)
        w = v.copy()
        for _ in range(2):
            if r:
                w -= Q[:, :r] @ (Q[:, :r].conj().T @ w)
        nw = np.linalg.norm(w)
        if nw < GS_DEPENDENCE_TOL:
            skipped.append(k)
            continue
        Q[:, r] = w / nw
        accepted.append(k)
    if len(accepted) < count:
        raise ValueError(f"only {len(accepted)} independent displaced vectors available")
    return DisplacedBasis(Q, accepted, skipped, alphas)


def squeezed_vacuum_amplitudes(theta: float, cutoff: int) -> tuple[np.ndarray, float]:
    """Amplitudes of the state annihilated by cosh(t) a + sinh(t) a^dagger.

    Solves psi_{n+1} = -tanh(t) sqrt(n/(n+1)) psi_{n-1}. Returns the
    normalised truncated vector and the probability lost to truncation,
    using the exact untruncated norm sum |psi_n|^2 = cosh(t) for psi_0 = 1.
    """
    t = math.tanh(theta)
    psi = np.zeros(cutoff)
    psi[0] = 1.0
    for n in range(1, cutoff - 1, 2):
        psi[n + 1] = -t * math.sqrt(n / (n + 1)) * psi[n - 1]
    kept = float(psi @ psi)
    tail = max(0.0, 1.0 - kept / math.cosh(theta))
    return psi / math.sqrt(kept), tail


def max_squeezing(cutoff: int, tol: float = SQUEEZE_TAIL_TOL) -> float:
    """Largest |theta| for which the squeezed vacuum fits the cutoff within ``tol``."""
    lo, hi = 0.0, 5.0
    if squeezed_vacuum_amplitudes(hi, cutoff)[1] < tol:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if squeezed_vacuum_amplitudes(mid, cutoff)[1] < tol:
            lo = mid
        else:
            hi = mid
    return lo


def bogoliubov_mode_state(theta: float, cutoff: int, excitation: int = 0,
                          tol: float = SQUEEZE_TAIL_TOL) -> np.ndarray:
    """Single-mode |n_c> for c = cosh(theta) a + sinh(theta) a^dagger."""
    vac, tail = squeezed_vacuum_amplitudes(theta, cutoff)
    if tail >= tol:
        raise CutoffError(f"squeezed state with theta={theta:g} loses {tail:.2e} probability "
                          f"at cutoff {cutoff}; raise the cutoff")
    u, v = math.cosh(theta), math.sinh(theta)
    a = sp.diags(np.sqrt(np.arange(1, cutoff, dtype=float)), 1, shape=(cutoff, cutoff), format="csr")
    c_dag = (u * a.T + v * a).tocsr()
    psi = vac.astype(float)
    for n in range(1, excitation + 1):
        psi = c_dag @ psi / math.sqrt(n)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > math.sqrt(tol):
        raise CutoffError(f"excited squeezed state truncated (norm {norm:.6f}); raise the cutoff")
    return psi / norm


def squeezed_bogoliubov_state(space: FockSpace, mode: int, theta: float, excitation: int = 0) -> np.ndarray:
    """|0_c> (or |n_c> in ``mode``) with every other mode in vacuum."""
    space._check_mode(mode)
    vecs = []
    for j, m in enumerate(space.cutoffs):
        if j == mode:
            vecs.append(bogoliubov_mode_state(theta, m, excitation))
        else:
            e = np.zeros(m)
            e[0] = 1.0
            vecs.append(e)
    return _tensor(vecs).astype(complex)


def bogoliubov_frame_state(space: FockSpace, thetas: Sequence[float],
                           excited_mode: int | None = None, excitation: int = 0) -> np.ndarray:
    """Product of per-mode squeezed vacua, optionally excited in one mode."""
    if len(thetas) != space.K:
        raise ValueError(f"need {space.K} squeezing parameters")
    vecs = []
    for j, (theta, m) in enumerate(zip(thetas, space.cutoffs)):
        n = excitation if j == excited_mode else 0
        vecs.append(bogoliubov_mode_state(theta, m, n))
    return _tensor(vecs).astype(complex)
