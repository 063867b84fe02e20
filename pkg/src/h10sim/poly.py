"""Exact integer polynomials: parsing, printing, evaluation, brute-force minimum.

Polynomials are kept in canonical form: one monomial per exponent vector,
no zero coefficients, variables ordered by first appearance in the source
text. Coefficients and values are Python ints, so nothing ever overflows.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_DEGREE_BOUND = 16
DEFAULT_BRUTE_FORCE_BUDGET = 10**7

Exponents = tuple[int, ...]


class PolynomialSyntaxError(ValueError):
    """Malformed equation text. ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class BudgetExceededError(ValueError):
    pass


@dataclass(frozen=True)
class Polynomial:
    monomials: tuple[tuple[int, Exponents], ...]
    var_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.var_names) < 1:
            raise ValueError("a polynomial needs at least one unknown")
        seen = set()
        for coeff, exps in self.monomials:
            if coeff == 0:
                raise ValueError("zero coefficient in canonical polynomial")
            if len(exps) != len(self.var_names) or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps}")
            if exps in seen:
                raise ValueError(f"duplicate monomial {exps}")
            seen.add(exps)

    @classmethod
    def from_terms(cls, terms: dict[Exponents, int] | Iterable[tuple[int, Exponents]],
                   var_names: Sequence[str]) -> "Polynomial":
        """Merge like terms, drop zeros and sort into canonical order."""
        merged: dict[Exponents, int] = {}
        items = terms.items() if isinstance(terms, dict) else ((e, c) for c, e in terms)
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            merged[exps] = merged.get(exps, 0) + int(coeff)
        monos = [(c, e) for e, c in merged.items() if c != 0]
        monos.sort(key=lambda ce: (-sum(ce[1]), tuple(-x for x in ce[1])))
        return cls(tuple(monos), tuple(var_names))

    @property
    def K(self) -> int:
        return len(self.var_names)

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.monomials), default=0)

    def __call__(self, *values: int) -> int:
        return evaluate(self, values)

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        parts = []
        for i, (coeff, exps) in enumerate(self.monomials):
            factors = []
            for name, e in zip(self.var_names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if i == 0:
                parts.append(body if coeff > 0 else f"-{body}")
            else:
                parts.append(("+ " if coeff > 0 else "- ") + body)
        return " ".join(parts)


def evaluate(p: Polynomial, values: Sequence[int]) -> int:
    """Exact value of ``p`` at a nonnegative integer assignment."""
    if len(values) != p.K:
        raise ValueError(f"assignment has {len(values)} entries, polynomial has {p.K} unknowns")
    values = [int(v) for v in values]
    if any(v < 0 for v in values):
        raise ValueError("assignments must be nonnegative")
    total = 0
    for coeff, exps in p.monomials:
        term = coeff
        for v, e in zip(values, exps):
            if e:
                term *= v**e
        total += term
    return total


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+)|(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        start = m.start(m.lastindex) if m.lastindex else m.end()
        if m.group(1):
            tokens.append(("real", m.group(1), start))
        elif m.group(2):
            tokens.append(("int", m.group(2), start))
        elif m.group(3):
            tokens.append(("ident", m.group(3), start))
        elif m.group(4):
            ch = m.group(4)
            if ch.isspace() or ch not in "+-*^()=":
                raise PolynomialSyntaxError(f"unexpected character {ch!r}", start)
            tokens.append((ch, ch, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # Intermediate polynomials are dicts {exponent tuple: coeff} over the full
    # variable list, which is known after tokenizing.

    def __init__(self, text: str, degree_bound: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.degree_bound = degree_bound
        names: list[str] = []
        for kind, value, _ in self.tokens:
            if kind == "ident" and value not in names:
                names.append(value)
        self.names = names
        self.K = len(names)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.take()
        if tok[0] != kind:
            raise PolynomialSyntaxError(f"expected {kind!r}, got {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def const(self, c: int) -> dict:
        return {(0,) * self.K: c} if c else {}

    def equation(self) -> dict:
        lhs = self.expr()
        if self.peek()[0] == "=":
            self.take()
            rhs = self.expr()
            lhs = _add(lhs, _scale(rhs, -1))
        tok = self.peek()
        if tok[0] != "end":
            raise PolynomialSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return lhs

    def expr(self) -> dict:
        # A leading sign is accepted so that printed forms like "-x + 1" reparse.
        sign = 1
        if self.peek()[0] in "+-":
            sign = -1 if self.take()[0] == "-" else 1
        acc = _scale(self.term(), sign)
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            t = self.term()
            acc = _add(acc, t if op == "+" else _scale(t, -1))
        return acc

    def term(self) -> dict:
        acc = self.factor()
        while self.peek()[0] == "*":
            self.take()
            acc = _mul(acc, self.factor())
        return acc

    def factor(self) -> dict:
        base, is_group = self.base()
        if self.peek()[0] != "^":
            return base
        self.take()
        tok = self.take()
        if tok[0] == "real" or (tok[0] == "-" and self.peek()[0] in ("int", "real")):
            raise PolynomialSyntaxError("exponent must be a nonnegative integer", tok[2])
        if tok[0] != "int":
            raise PolynomialSyntaxError("exponent must be a nonnegative integer literal", tok[2])
        n = int(tok[1])
        if is_group and len(base) > 1 and n > self.degree_bound:
            raise PolynomialSyntaxError(
                f"exponent {n} on a parenthesized sum exceeds the expansion bound {self.degree_bound}",
                tok[2])
        return _pow(base, n, self.const(1))

    def base(self) -> tuple[dict, bool]:
        tok = self.take()
        kind = tok[0]
        if kind == "int":
            return self.const(int(tok[1])), False
        if kind == "real":
            raise PolynomialSyntaxError("only integer coefficients are supported", tok[2])
        if kind == "ident":
            exps = [0] * self.K
            exps[self.names.index(tok[1])] = 1
            return {tuple(exps): 1}, False
        if kind == "(":
            inner = self.expr()
            self.expect(")")
            return inner, True
        raise PolynomialSyntaxError(f"expected a number, a variable or '(', got {tok[1] or 'end of input'!r}",
                                    tok[2])


def _add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _scale(a: dict, k: int) -> dict:
    return {e: c * k for e, c in a.items()} if k else {}


def _mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _pow(a: dict, n: int, one: dict) -> dict:
    result, base = one, a
    while n:
        if n & 1:
            result = _mul(result, base)
        n >>= 1
        if n:
            base = _mul(base, base)
    return result


def parse(text: str, degree_bound: int = DEFAULT_DEGREE_BOUND) -> Polynomial:
    """Parse ``expr [= expr]`` into a canonical polynomial.

    >>> str(parse("(x+1)^2 = y"))
    'x^2 + 2*x - y + 1'
    """
    parser = _Parser(text, degree_bound)
    if parser.K == 0:
        raise PolynomialSyntaxError("equation has no unknowns", 0)
    terms = parser.equation()
    return Polynomial.from_terms(terms, parser.names)


# ---------------------------------------------------------------------------
# brute force

def _value_bound(p: Polynomial, cutoffs: Sequence[int]) -> int:
    bound = 0
    for coeff, exps in p.monomials:
        term = abs(coeff)
        for m, e in zip(cutoffs, exps):
            term *= (m - 1) ** e
        bound += term
    return bound


def grid_values(p: Polynomial, cutoffs: Sequence[int]) -> np.ndarray:
    """D(n) on every tuple of the box ``0 <= n_j < cutoffs[j]``, shape ``cutoffs``.

    Uses int64 when the worst-case magnitude provably fits, object ints otherwise.
    """
    cutoffs = [int(m) for m in cutoffs]
    if len(cutoffs) != p.K:
        raise ValueError("one cutoff per unknown required")
    dtype = np.int64 if _value_bound(p, cutoffs) < 2**62 else object
    out = np.zeros(cutoffs, dtype=dtype)
    axes = [np.arange(m, dtype=np.int64).astype(dtype) for m in cutoffs]
    for coeff, exps in p.monomials:
        term = np.array(coeff, dtype=dtype)
        for j, e in enumerate(exps):
            if e:
                shape = [1] * p.K
                shape[j] = cutoffs[j]
                term = term * (axes[j] ** e).reshape(shape)
        out = out + term
    return out


def brute_force_min(p: Polynomial, cutoffs: Sequence[int],
                    budget: int = DEFAULT_BRUTE_FORCE_BUDGET) -> tuple[int, list[tuple[int, ...]]]:
    """Exact minimum of D(n)^2 over the box and every assignment attaining it.

    Argmins are returned in lexicographic order.
    """
    if any(int(m) < 1 for m in cutoffs):
        raise ValueError("cutoffs must be positive")
    size = 1
    for m in cutoffs:
        size *= int(m)
    if size > budget:
        raise BudgetExceededError(f"search box has {size} points, budget is {budget}")
    values = grid_values(p, cutoffs)
    mags = np.abs(values)
    best = int(mags.min())
    hits = np.argwhere(mags == best)
    argmins = sorted(tuple(int(x) for x in row) for row in hits)
    return best * best, argmins


def naive_min(p: Polynomial, cutoffs: Sequence[int]) -> tuple[int, list[tuple[int, ...]]]:
    """Nested-loop reference for :func:`brute_force_min` (small boxes only)."""
    best = None
    argmins: list[tuple[int, ...]] = []
    for n in itertools.product(*(range(m) for m in cutoffs)):
        v = evaluate(p, n) ** 2
        if best is None or v < best:
            best, argmins = v, [n]
        elif v == best:
            argmins.append(n)
    return best, argmins
