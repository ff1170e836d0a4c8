"""Shared generators and oracles for the test-suite."""

import itertools
import random

from ultradiff.expr import gauss_expand, parse_expr
from ultradiff.field import LaurentSeries
from ultradiff.errors import PrecisionError


def random_poly(rng: random.Random, d: int, max_deg: int, p: int = 2) -> dict:
    """{exponent tuple: coeff} with total degree <= max_deg, never empty."""
    monos = [m for m in itertools.product(range(max_deg + 1), repeat=d) if sum(m) <= max_deg]
    chosen = rng.sample(monos, rng.randint(1, min(6, len(monos))))
    poly = {m: rng.randrange(1, p) for m in chosen}
    return poly


def poly_text(poly: dict) -> str:
    terms = []
    for mono, c in sorted(poly.items()):
        factors = [f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(mono) if e]
        if c != 1 or not factors:
            factors.insert(0, str(c))
        terms.append("*".join(factors))
    return " + ".join(terms)


def poly_expr(poly: dict, d: int):
    return parse_expr(poly_text(poly), d)


def complete_h(k: int, zs, one: LaurentSeries) -> LaurentSeries:
    """Complete homogeneous symmetric polynomial h_k(zs); h_k = 0 for k < 0."""
    if k < 0:
        return one * 0
    if len(zs) == 1:
        return zs[0] ** k if k else one
    total = one * 0
    power = one
    for j in range(k + 1):
        total = total + power * complete_h(k - j, zs[:-1], one)
        power = power * zs[-1]
    return total


def poly_dd_oracle(poly: dict, alpha, blocks, p: int) -> LaurentSeries:
    """Divided difference of a polynomial from the identity x^m[z_0..z_a] = h_{m-a}(z_0..z_a)."""
    prec = min(z.prec for b in blocks for z in b)
    one = LaurentSeries.constant(p, 1, 4 * prec)
    total = one * 0
    for mono, c in poly.items():
        term = one * c
        for e, a, block in zip(mono, alpha, blocks):
            term = term * complete_h(e - a, tuple(block), one)
        total = total + term
    return total


def random_series(rng: random.Random, p: int, lead_range=(-3, 5), length=12, prec=None) -> LaurentSeries:
    lead = rng.randint(*lead_range)
    coeffs = [rng.randrange(p) for _ in range(length)]
    coeffs[0] = rng.randrange(1, p)
    return LaurentSeries(p, lead, coeffs, lead + length if prec is None else prec)


FUZZ_OPS = ("add", "sub", "mul", "div", "inv", "square", "cube", "gauss")


def _apply(op, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "inv":
        return a.inverse()
    if op == "square":
        return a ** 2
    if op == "cube":
        return a ** 3
    return gauss_expand(a)


def soundness_case(rng: random.Random, p: int) -> tuple:
    """One truncate/operate commutation case: (op, ok, informative).

    Operands are finite sums realized at a high precision (the reference) and
    truncated at random precisions; the truncated result must agree with the
    reference result on every coefficient it claims to know.
    """
    high = 96
    a = random_series(rng, p, prec=high)
    b = random_series(rng, p, prec=high)
    if rng.random() < 0.3:
        b = a + LaurentSeries(p, a.lead + rng.randint(1, 6), [1], high)  # near-cancellation
    op = rng.choice(FUZZ_OPS)
    if op == "gauss" and a.lead < 0:
        a = a.shift(-a.lead)
    ta = a.truncate(rng.randint(a.lead - 2, a.lead + 14))
    tb = b.truncate(rng.randint(b.lead - 2, b.lead + 14))
    try:
        got = _apply(op, ta, tb)
    except PrecisionError:
        return op, True, False  # refusing is always sound
    ref = _apply(op, a, b)
    return op, got.agrees(ref), not got.is_zero()
