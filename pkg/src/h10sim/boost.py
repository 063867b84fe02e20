"""Success amplification by l-fold repetition and strict-majority reading.

Each of the l independent runs succeeds with probability q, so the number of
successes is Binomial(l, q). All tails are computed in exact rational
arithmetic. ``q`` may be a ``Fraction``, a decimal string or a float; floats
are read through their shortest decimal repr, so 0.6 means exactly 3/5.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import comb

import numpy as np
from scipy.stats import binom


def _as_fraction(q) -> Fraction:
    f = Fraction(repr(q)) if isinstance(q, float) else Fraction(q)
    if not 0 <= f <= 1:
        raise ValueError(f"probability {q} outside [0, 1]")
    return f


def _check_width(l: int):
    if l < 1 or l % 2 == 0:
        raise ValueError(f"concatenation width must be a positive odd integer, got {l}")


def majority_success_exact(q, l: int) -> Fraction:
    """P(more than l/2 of l runs succeed)."""
    _check_width(l)
    f = _as_fraction(q)
    num, den = _tail(f, l)
    return Fraction(num, den)


def _tail(f: Fraction, l: int) -> tuple[int, int]:
    # sum_{k>l/2} C(l,k) x^k y^(l-k) over d^l, unreduced
    x, d = f.numerator, f.denominator
    y = d - x
    h = l // 2 + 1
    coeffs = [comb(l, h)]
    for k in range(h, l):
        coeffs.append(coeffs[-1] * (l - k) // (k + 1))
    acc, ypow = 0, 1
    for c in reversed(coeffs):
        acc = acc * x + c * ypow
        ypow *= y
    return acc * x**h, d**l


def majority_success(q, l: int) -> float:
    return float(majority_success_exact(q, l))


def failure_log(q, l: int) -> float:
    """Natural log of 1 - majority_success, exact until the final logarithm."""
    fail = 1 - majority_success_exact(q, l)
    if fail == 0:
        return -math.inf
    return math.log(fail.numerator) - math.log(fail.denominator)


def amplitude_ratio_log(q, majority: int, minority: int) -> float:
    """log of (a/b)^(majority - minority) with |a|^2 = q, |b|^2 = 1 - q."""
    f = _as_fraction(q)
    if f in (0, 1):
        raise ValueError("ratio undefined for q in {0, 1}")
    return 0.5 * (majority - minority) * (math.log(f) - math.log(1 - f))


def min_width(q, epsilon_prime) -> int:
    """Smallest odd l with majority_success(q, l) >= 1 - epsilon_prime."""
    f = _as_fraction(q)
    eps = _as_fraction(epsilon_prime)
    if f <= Fraction(1, 2):
        raise ValueError("amplification needs q > 1/2")
    if not 0 < eps < Fraction(1, 2):
        raise ValueError("need 0 < epsilon_prime < 1/2")
    en, ed = eps.numerator, eps.denominator

    def ok(k):  # k indexes odd widths l = 2k + 1; success >= 1 - eps without reducing
        num, den = _tail(f, 2 * k + 1)
        return num * ed >= (ed - en) * den

    # Double-precision bisection locates the width; exact checks then pin it.
    target = 1.0 - float(eps)
    qf = float(f)

    def ok_float(k):
        return binom.sf(k, 2 * k + 1, qf) >= target

    lo, hi = -1, 1
    while not ok_float(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok_float(mid):
            hi = mid
        else:
            lo = mid
    k = hi
    while not ok(k):
        k += 1
    while k > 0 and ok(k - 1):
        k -= 1
    return 2 * k + 1


def fit_log_constant(q, epsilons=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6)) -> dict:
    """Least-squares C in l ~ -C log(epsilon') over a sweep of targets."""
    xs = np.array([-math.log(e) for e in epsilons])
    ls = np.array([min_width(q, e) for e in epsilons], dtype=float)
    C = float(xs @ ls / (xs @ xs))
    return {"C": C, "epsilon_prime": list(epsilons), "l": ls.astype(int).tolist()}


def failure_slope(q, widths) -> float:
    """Slope of log(1 - majority_success) against l (negative when q > 1/2)."""
    widths = list(widths)
    ys = [failure_log(q, l) for l in widths]
    return float(np.polyfit(widths, ys, 1)[0])
