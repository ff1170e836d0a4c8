import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ultradiff.calculus import dd_direct
from ultradiff.domains import BallDomain, MultiIndex, parse_domain
from ultradiff.errors import InsufficientPrecision
from ultradiff.expr import parse_expr
from ultradiff.regularity import (
    COUNTEREXAMPLE_VERDICT,
    c2_blowup_scan,
    c2_witness,
    counterexample_report,
    dd_boundedness_scan,
    holder_estimate,
)

from helpers import poly_expr, random_poly

PHI = parse_expr("phi32(x1)", 1)
O1 = BallDomain.unit(2, 1)


@pytest.mark.parametrize("text, p, sigma, c", [
    ("phi32(x1)", 2, Fraction(3, 2), 1),
    ("x1", 2, Fraction(1), 0),
    ("x1^2", 2, Fraction(2), 0),
    ("x1^3", 3, Fraction(3), 0),
    ("x1^2", 3, Fraction(1), 0),
    ("phi32(x1)", 5, Fraction(3, 2), 1),
])
def test_holder_exponents(text, p, sigma, c):
    r = holder_estimate(parse_expr(text, 1), BallDomain.unit(p, 1), 200, 64, 1)
    assert r.sigma == sigma and r.log_c == c
    assert r.certifies()


def test_holder_counterexample_pairs_follow_the_bracket():
    r = holder_estimate(PHI, O1, 128, 64, 0)
    assert all(vo == (3 * vi) // 2 for vi, vo in r.pairs)
    assert r.slope == min(Fraction((3 * v) // 2, v) for v in range(32, 64))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["phi32(x1)", "x1", "x1^2", "x1^3 + x1", "[x1, phi32(x1)]"]))
def test_holder_report_certifies_itself(seed, text):
    r = holder_estimate(parse_expr(text, 1), O1, 60, 48, seed)
    assert r.certifies()
    assert r.samples == 60 and len(r.pairs) + r.excluded == 60


def test_holder_two_variables():
    r = holder_estimate(parse_expr("[x1, phi32(x2)]", 2), BallDomain.unit(2, 2), 200, 64, 3)
    assert r.sigma == 1  # the identity component dominates


def test_holder_shifted_ball():
    U = parse_domain("ball(1 + X,4)", 2, 64)
    r = holder_estimate(PHI, U, 200, 64, 2)
    assert r.sigma == Fraction(3, 2)
    assert min(vi for vi, _ in r.pairs) == 4


def test_holder_all_zero_raises():
    with pytest.raises(InsufficientPrecision):
        holder_estimate(parse_expr("1 + X", 1), O1, 20, 32, 0)


# -- blow-up ---------------------------------------------------------------------

def test_c2_rows():
    t = c2_blowup_scan(20, 64)
    assert [r["n"] for r in t.rows] == list(range(2, 21, 2))
    assert [r["log_p_abs"] for r in t.rows] == [n // 2 for n in range(2, 21, 2)]
    assert t.rows[0]["abs"] == "2^1" and t.rows[1]["abs"] == "2^2" and t.rows[-1]["abs"] == "2^10"
    assert t.verdict.startswith("second divided differences unbounded")


def test_c2_minimal_precision_suffices():
    # ceil(3 * 23 / 2) + 4 = 39
    assert c2_blowup_scan(20, 39).rows[-1]["log_p_abs"] == 10
    with pytest.raises(InsufficientPrecision):
        c2_blowup_scan(20, 38)


@pytest.mark.parametrize("p", [3, 5])
def test_c2_other_primes(p):
    t = c2_blowup_scan(10, 64, p)
    assert [r["log_p_abs"] for r in t.rows] == [1, 2, 3, 4, 5]


def test_c2_needs_even_n_max():
    with pytest.raises(ValueError):
        c2_blowup_scan(7, 64)


def test_naive_coalescing_family_cancels():
    # with (0, X^n, X^(n+1)) both first-order quotients equal X^(n/2)
    from ultradiff.field import LaurentSeries
    for n in (2, 4, 8):
        pts = (LaurentSeries.zero(2, 64), LaurentSeries.monomial(2, 1, n, 64), LaurentSeries.monomial(2, 1, n + 1, 64))
        (v,) = dd_direct(PHI, MultiIndex((2,)), pts)
        assert v.valuation is None or v.valuation >= 0


# -- boundedness scans -------------------------------------------------------------

def test_scan_square_is_constant():
    t = dd_boundedness_scan(parse_expr("x1^2", 1), MultiIndex((2,)), O1, 20, [2, 4, 8], 0)
    assert [r["max_log_p_abs"] for r in t.rows] == [0, 0, 0]
    assert t.verdict == "bounded on the sweep"


def test_scan_linear_is_zero():
    t = dd_boundedness_scan(parse_expr("x1 + X", 1), MultiIndex((2,)), O1, 20, [2, 4, 8], 0)
    assert all(r["max_abs"] == "0" for r in t.rows)


def test_scan_counterexample_grows_with_pinned_witnesses():
    levels = [5, 7, 9, 11, 13]
    pinned = {n + 3: [c2_witness(n)] for n in (2, 4, 6, 8, 10)}
    t = dd_boundedness_scan(PHI, MultiIndex((2,)), O1, 10, levels, 0, pinned=pinned)
    tops = [r["max_log_p_abs"] for r in t.rows]
    assert all(top >= (m - 3) // 2 for top, m in zip(tops, levels))
    assert t.verdict.startswith("growing")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32))
def test_low_degree_polynomials_have_bounded_differences(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 2)
    f = poly_expr(random_poly(rng, d, 3, 2), d)
    alpha = MultiIndex(tuple(rng.randint(0, 3 // d) for _ in range(d)))
    t = dd_boundedness_scan(f, alpha, BallDomain.unit(2, d), 5, [2, 4, 6], seed)
    for row in t.rows:
        assert row["max_log_p_abs"] is None or row["max_log_p_abs"] <= 0
        assert row["undecided"] == 0


# -- the packaged counterexample ----------------------------------------------------

def test_counterexample_report():
    r = counterexample_report(20, 200, 64, 0)
    assert r["verdict"] == COUNTEREXAMPLE_VERDICT
    rows = {row["subcheck"]: row for row in r["rows"]}
    assert set(rows) == {"holder_sandwich", "additivity", "phi2_zero", "phi1_x_independent", "t1_zero_branch", "c2_blowup"}
    assert all(row["passed"] == row["cases"] for row in rows.values())
    assert "v_in=1, v_out=1" in rows["holder_sandwich"]["detail"]
    assert "X^3 + X^7" in rows["additivity"]["detail"]
    assert r["blowup"][-1]["abs"] == "2^10"


def test_counterexample_report_is_seed_deterministic():
    assert counterexample_report(8, 40, 32, 5) == counterexample_report(8, 40, 32, 5)
    assert counterexample_report(8, 40, 32, 5, workers=2) == counterexample_report(8, 40, 32, 5, workers=1)
