import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h10sim.poly import (BudgetExceededError, Polynomial, PolynomialSyntaxError, brute_force_min,
                         evaluate, grid_values, naive_min, parse)

FERMAT = "(x+1)^3 + (y+1)^3 - (z+1)^3"


@st.composite
def polynomials(draw, max_vars=3, max_deg=3):
    K = draw(st.integers(1, max_vars))
    names = ["x", "y", "z", "w"][:K]
    exps = st.tuples(*[st.integers(0, max_deg)] * K)
    terms = draw(st.lists(st.tuples(st.integers(-20, 20), exps), min_size=1, max_size=5))
    return Polynomial.from_terms(terms, names)


def test_parse_cubic_expands():
    p = parse(FERMAT + " + 5*x*y*z")
    assert p.K == 3
    assert p.var_names == ("x", "y", "z")
    expected = {(3, 0, 0): 1, (2, 0, 0): 3, (1, 0, 0): 3, (0, 3, 0): 1, (0, 2, 0): 3,
                (0, 1, 0): 3, (0, 0, 3): -1, (0, 0, 2): -3, (0, 0, 1): -3, (1, 1, 1): 5,
                (0, 0, 0): 1}
    assert {e: c for c, e in p.monomials} == expected


def test_parse_identity():
    p = parse("x")
    assert p.monomials == ((1, (1,)),)


def test_parse_pythagorean():
    p = parse("x^2 + y^2 - z^2")
    assert p.K == 3 and len(p.monomials) == 3


def test_parse_rhs_and_whitespace():
    assert parse("x^2 = y + 1") == parse("x^2-y-1")
    assert parse("  ( x + 1 ) ^ 2 ") == parse("x^2 + 2*x + 1")


def test_variable_order_is_first_appearance():
    assert parse("z + a*z + b").var_names == ("z", "a", "b")


@pytest.mark.parametrize("text,pos", [("x + * 3", 4), ("x^1.5", 2), ("2.5*x", 0), ("x^-1", 2),
                                      ("(x+1", 4), ("x +", 3), ("x ^ y", 4), ("x $ 1", 2)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(PolynomialSyntaxError) as info:
        parse(text)
    assert info.value.position == pos


def test_no_unknowns_rejected():
    with pytest.raises(PolynomialSyntaxError):
        parse("3 + 4")


def test_degree_bound():
    parse("(x+1)^16")
    with pytest.raises(PolynomialSyntaxError):
        parse("(x+1)^17")


def test_evaluate_examples():
    p = parse("x^2 + y^2 - z^2")
    assert evaluate(p, (3, 4, 5)) == 0
    assert evaluate(p, (0, 0, 0)) == 0
    assert evaluate(parse(FERMAT), (0, 0, 0)) == 1


def test_evaluate_is_exact_for_huge_values():
    p = parse("x^16 - y")
    n = 10**6
    assert evaluate(p, (n, 1)) == n**16 - 1


def test_evaluate_rejects_bad_assignments():
    p = parse("x + y")
    with pytest.raises(ValueError):
        evaluate(p, (1,))
    with pytest.raises(ValueError):
        evaluate(p, (1, -1))


def test_brute_force_examples():
    assert brute_force_min(parse("x-3"), [8]) == (0, [(3,)])
    assert brute_force_min(parse("3*x-2"), [8]) == (1, [(1,)])
    best, argmins = brute_force_min(parse(FERMAT), [6, 6, 6])
    assert best > 0
    assert (best, argmins) == naive_min(parse(FERMAT), [6, 6, 6])


def test_brute_force_budget():
    with pytest.raises(BudgetExceededError):
        brute_force_min(parse("x+y"), [1000, 1000], budget=10**5)


def test_grid_values_switch_to_object_ints():
    p = parse("1000*x^16")
    vals = grid_values(p, [20])
    assert vals.dtype == object
    assert vals[19] == 1000 * 19**16


@settings(max_examples=60, deadline=None)
@given(polynomials(), st.data())
def test_print_parse_round_trip(p, data):
    values = data.draw(st.tuples(*[st.integers(0, 50)] * p.K))
    if p.degree == 0:  # constants print without unknowns, which parse rejects
        assert evaluate(p, values) == (p.monomials[0][0] if p.monomials else 0)
        return
    q = parse(str(p))
    # parsing may drop variables that cancelled out; compare by name
    named = dict(zip(p.var_names, values))
    assert evaluate(q, [named[v] for v in q.var_names]) == evaluate(p, values)


@settings(max_examples=40, deadline=None)
@given(polynomials(max_vars=3, max_deg=3), st.data())
def test_brute_force_matches_naive(p, data):
    cutoffs = data.draw(st.lists(st.integers(1, 12), min_size=p.K, max_size=p.K))
    assert np.prod(cutoffs) <= 10**4
    assert brute_force_min(p, cutoffs) == naive_min(p, cutoffs)


@settings(max_examples=40, deadline=None)
@given(polynomials(), st.data())
def test_min_bounded_by_zero_assignment(p, data):
    cutoffs = data.draw(st.lists(st.integers(1, 6), min_size=p.K, max_size=p.K))
    best, argmins = brute_force_min(p, cutoffs)
    assert best <= evaluate(p, [0] * p.K) ** 2
    assert all(evaluate(p, a) ** 2 == best for a in argmins)
    assert argmins == sorted(argmins)


def test_naive_oracle_exhaustive_small():
    p = parse("x*y - 6")
    best, argmins = brute_force_min(p, [7, 7])
    assert best == 0
    assert argmins == [(1, 6), (2, 3), (3, 2), (6, 1)]
    assert argmins == [n for n in itertools.product(range(7), repeat=2) if n[0] * n[1] == 6]
