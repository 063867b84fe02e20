"""Simulated measurement apparatus: evolve at a reference truncation, sample, histogram."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ._parallel import ordered_map
from .evolve import Schedule, evolve_product_formula
from .fock import FockSpace, coherent_state, coherent_tail_mass
from .hamiltonians import build
from .poly import Polynomial, evaluate

SAMPLE_BLOCK = 4096
BOUNDARY_MASS_LIMIT = 1e-3


def required_repetitions(epsilon: float, p: float) -> int:
    """ceil(1 / (epsilon^2 (1 - p)))."""
    if not (0 < epsilon < 1 and 0 < p < 1):
        raise ValueError("need 0 < epsilon < 1 and 0 < p < 1")
    # decimal reading of the inputs, so 0.1 / 0.8 give exactly 500
    e, q = Fraction(repr(float(epsilon))), Fraction(repr(float(p)))
    return math.ceil(1 / (e * e * (1 - q)))


@dataclass(frozen=True)
class SamplingPlan:
    epsilon: float
    p: float
    seed: int
    L: int | None = None

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        required_repetitions(self.epsilon, self.p)
        if self.L is not None and self.L < 1:
            raise ValueError("L must be positive")

    @property
    def repetitions(self) -> int:
        return self.L if self.L is not None else required_repetitions(self.epsilon, self.p)

    @property
    def overridden(self) -> bool:
        return self.L is not None and self.L < required_repetitions(self.epsilon, self.p)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "p": self.p, "seed": self.seed, "L": self.repetitions,
                "L_required": required_repetitions(self.epsilon, self.p),
                "L_overridden": self.overridden}


@dataclass
class Histogram:
    counts: dict[tuple[int, ...], int]
    total: int

    def __post_init__(self):
        self.counts = dict(sorted(self.counts.items()))
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts do not add up to total")

    @property
    def empirical(self) -> dict[tuple[int, ...], Fraction]:
        return {n: Fraction(c, self.total) for n, c in self.counts.items()}

    def probabilities(self) -> dict[tuple[int, ...], float]:
        return {n: c / self.total for n, c in self.counts.items()}

    def to_dict(self) -> dict:
        return {"total": self.total,
                "counts": [{"n": list(n), "count": c} for n, c in self.counts.items()]}


def uniforms(seed: int, count: int) -> np.ndarray:
    """Uniform draws where draw i depends only on (seed, i).

    Draws come in fixed blocks; block b uses its own generator seeded with
    (seed, b), so blocks can be produced in any order or concurrently.
    """
    nblocks = -(-count // SAMPLE_BLOCK)

    def block(b):
        return np.random.default_rng([seed, b]).random(SAMPLE_BLOCK)

    parts = ordered_map(block, range(nblocks))
    return np.concatenate(parts)[:count] if parts else np.empty(0)


def sample_indices(probs: np.ndarray, count: int, seed: int) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, uniforms(seed, count), side="right")
    last = int(np.flatnonzero(probs)[-1])
    return np.minimum(idx, last)


def histogram_from_samples(space: FockSpace, indices: np.ndarray) -> Histogram:
    values, counts = np.unique(indices, return_counts=True)
    return Histogram({space.occupation(int(i)): int(c) for i, c in zip(values, counts)},
                     int(len(indices)))


def select_candidate(p: Polynomial, outcomes) -> tuple[tuple[int, ...], int]:
    """Observed outcome with the smallest exact D(n)^2; ties go to the lexicographically first."""
    best = None
    for n in sorted(outcomes):
        e = evaluate(p, n) ** 2
        if best is None or e < best[1]:
            best = (tuple(n), e)
    if best is None:
        raise ValueError("no outcomes observed")
    return best


@dataclass
class ApparatusResult:
    histogram: Histogram
    candidate: tuple[int, ...]
    candidate_energy: int
    state: np.ndarray = field(repr=False)
    space: FockSpace = None
    boundary_mass: float = 0.0
    initial_tail_mass: float = 0.0
    norm_trace: list = field(default_factory=list, repr=False)

    def probability(self, n: Sequence[int]) -> float:
        return float(abs(self.state[self.space.index(n)]) ** 2)


def run_apparatus(p: Polynomial, alphas: Sequence[complex], ref_cutoffs: Sequence[int],
                  sched: Schedule, plan: SamplingPlan, loop_cutoffs: Sequence[int] | None = None,
                  norm: float | None = None, perturbation=None) -> ApparatusResult:
    """Evolve once on the reference truncation, then draw L number-basis samples."""
    if loop_cutoffs is not None:
        if len(loop_cutoffs) != len(ref_cutoffs) or any(
                r <= c for r, c in zip(ref_cutoffs, loop_cutoffs)):
            raise ValueError(f"reference cutoffs {list(ref_cutoffs)} must strictly exceed "
                             f"loop cutoffs {list(loop_cutoffs)} in every mode")
    space = FockSpace(ref_cutoffs)
    hs = build(p, space, alphas)
    psi0 = coherent_state(space, alphas)
    trace: list = []
    psi = evolve_product_formula(hs, psi0, sched, norm=norm, perturbation=perturbation, trace=trace)
    probs = np.abs(psi) ** 2
    idx = sample_indices(probs, plan.repetitions, plan.seed)
    hist = histogram_from_samples(space, idx)
    cand, energy = select_candidate(p, hist.counts)
    return ApparatusResult(
        histogram=hist, candidate=cand, candidate_energy=energy, state=psi, space=space,
        boundary_mass=float(probs[space.boundary_mask()].sum()),
        initial_tail_mass=coherent_tail_mass(alphas, space), norm_trace=trace)


def empirical_distance(h: Histogram | Mapping, q: Mapping) -> float:
    """Sup-norm distance over the union of supports; missing outcomes count as 0."""
    hp = h.probabilities() if isinstance(h, Histogram) else {k: float(v) for k, v in h.items()}
    keys = set(hp) | set(q)
    return max((abs(hp.get(k, 0.0) - float(q.get(k, 0.0))) for k in keys), default=0.0)


def sampled_histogram(space: FockSpace, probs: np.ndarray, L: int, seed: int) -> Histogram:
    """Histogram of L seeded draws from an explicit probability vector."""
    return histogram_from_samples(space, sample_indices(probs, L, seed))
