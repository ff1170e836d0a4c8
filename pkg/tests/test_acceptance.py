"""Acceptance criteria, checked at exact tolerance.

Each test prints one PASS/FAIL line before asserting, so ``pytest -s`` or the
tee'd log shows the whole scorecard even if a criterion fails.
"""
import random
import subprocess
import sys
from fractions import Fraction

import pytest

from ultradiff.calculus import (
    check_fviaphi,
    check_simpfml,
    check_symmetry,
    check_transport,
    dd_direct,
    dd_recursive,
)
from ultradiff.domains import AngleDomain, BallDomain, MultiIndex, sample_points
from ultradiff.expr import parse_expr
from ultradiff.regularity import COUNTEREXAMPLE_VERDICT, c2_blowup_scan, counterexample_report, holder_estimate

from helpers import poly_dd_oracle, poly_expr, random_poly, soundness_case

PREC = 64


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def counterexample():
    return counterexample_report(20, 1000, PREC, 2024)


def alphas(d, max_order):
    out = []
    for a in range(max_order + 1):
        for b in (range(max_order + 1 - a) if d == 2 else [None]):
            entries = (a,) if b is None else (a, b)
            if 1 <= sum(entries) <= max_order:
                out.append(MultiIndex(entries))
    return out


def test_a01_direct_equals_recursive(report):
    rng = random.Random(1)
    cases = bad = 0
    while cases < 240:
        p = 2
        d = rng.randint(1, 2)
        poly = random_poly(rng, d, 4, p)
        f = poly_expr(poly, d)
        alpha = rng.choice(alphas(d, 3))
        (x,) = sample_points(AngleDomain(BallDomain.unit(p, d), alpha), 1, PREC, rng.getrandbits(32), min_sep=4)
        a, b = dd_direct(f, alpha, x)[0], dd_recursive(f, alpha, x)[0]
        oracle = poly_dd_oracle(poly, alpha, x.blocks, p)
        bad += not (a.agrees(b) and a.agrees(oracle) and b.agrees(oracle))
        cases += 1
    report("dd_direct = dd_recursive (and symmetric-polynomial oracle)", bad == 0, f"{cases - bad}/{cases} agree")


def test_a02_symmetry(report):
    rng = random.Random(2)
    total = matched = 0
    for i in range(12):
        d = 1 + i % 2
        p = 2
        f = poly_expr(random_poly(rng, d, 4, p), d)
        alpha = rng.choice(alphas(d, 3))
        r = check_symmetry(f, alpha, BallDomain.unit(p, d), 10, rng.getrandbits(32), PREC)
        total += r.samples
        matched += r.exact_matches
    report("divided differences symmetric within blocks", total >= 100 and matched == total, f"{matched}/{total}")


def test_a03_f_via_phi(report):
    rng = random.Random(3)
    total = matched = 0
    for _ in range(10):
        f = poly_expr(random_poly(rng, 2, 4, 2), 2)
        r = check_fviaphi(f, BallDomain.unit(2, 2), 100, rng.getrandbits(32), PREC)
        total += r.samples
        matched += r.exact_matches
    report("f recovered from Phi_k expansion", total == 1000 and matched == total, f"{matched}/{total}")


@pytest.mark.parametrize("d, alpha, beta", [(1, (1,), (0, 1)), (2, (1, 0), (0, 0, 1))])
def test_a04_simplified_formula(report, d, alpha, beta):
    f = parse_expr("x1^4 + x1^2*x2^2 + x2^3" if d == 2 else "x1^4 + x1^3", d)
    r = check_simpfml(f, MultiIndex(alpha), MultiIndex(beta), BallDomain.unit(2, d), 120, 4, PREC)
    report(f"nested divided differences for alpha={alpha}, beta={beta}", r.passed and r.samples >= 100,
           f"{r.exact_matches}/{r.samples}")


@pytest.mark.parametrize("d", [1, 2])
def test_a05_transport(report, d):
    f = parse_expr("x1^4 + x1*x2^2 + x2^3" if d == 2 else "x1^4 + phi32(x1)", d)
    results = []
    for alpha in alphas(d, 3):
        r = check_transport(f, alpha, BallDomain.unit(2, d), 100, 5, PREC)
        results.append((alpha.entries, r.exact_matches, r.samples))
    ok = all(m == s == 100 for _, m, s in results)
    report(f"transport identity, d={d}", ok,
           ", ".join(f"{a}:{m}/{s}" for a, m, s in results))


def test_a06_holder_sandwich(report, counterexample):
    row = next(r for r in counterexample["rows"] if r["subcheck"] == "holder_sandwich")
    report("Hoelder sandwich for the counterexample", row["cases"] >= 1000 and row["passed"] == row["cases"],
           f"{row['passed']}/{row['cases']}; {row['detail']}")


def test_a07_phi_identities(report, counterexample):
    rows = {r["subcheck"]: r for r in counterexample["rows"]}
    p2, p1 = rows["phi2_zero"], rows["phi1_x_independent"]
    ok = p2["cases"] >= 500 and p1["cases"] >= 500 and p2["passed"] == p2["cases"] and p1["passed"] == p1["cases"]
    ok = ok and counterexample["verdict"] == COUNTEREXAMPLE_VERDICT
    report("Phi_2 = 0 and Phi_1 independent of x", ok,
           f"Phi_2 {p2['passed']}/{p2['cases']}, Phi_1 {p1['passed']}/{p1['cases']}")


def test_a08_c2_blowup(report):
    t = c2_blowup_scan(20, PREC)
    logs = [r["log_p_abs"] for r in t.rows]
    ok = [r["n"] for r in t.rows] == list(range(2, 21, 2))
    ok = ok and logs == [n // 2 for n in range(2, 21, 2)] and all(a < b for a, b in zip(logs, logs[1:]))
    report("second divided differences grow like 2^(n/2)", ok, " ".join(r["abs"] for r in t.rows))


@pytest.mark.parametrize("text, want", [("phi32(x1)", Fraction(3, 2)), ("x1", Fraction(1)), ("x1^2", Fraction(2))])
def test_a09_holder_exponent(report, text, want):
    r = holder_estimate(parse_expr(text, 1), BallDomain.unit(2, 1), 200, PREC, 9)
    report(f"Hoelder exponent of {text}", r.sigma == want and r.certifies(), f"sigma={r.sigma}, log_p C={r.log_c}")


def test_a10_precision_soundness(report):
    rng = random.Random(10)
    n = 10_000
    violations = informative = 0
    for _ in range(n):
        _, ok, info = soundness_case(rng, rng.choice([2, 3, 5, 7]))
        violations += not ok
        informative += info
    report("truncation commutes with every operation", violations == 0,
           f"{violations} violations in {n} cases ({informative} informative)")


def test_a11_cli_reproducible(report):
    argv = [sys.executable, "-m", "ultradiff", "counterexample", "--n-max", "20", "--format", "json"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    report("counterexample JSON byte-identical across runs", a == b and len(a) > 0, f"{len(a)} bytes")
