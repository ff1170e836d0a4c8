"""Valuation-exact regularity probes.

Everything here reduces to integer arithmetic on valuations: a Hölder bound
|f(x) - f(y)| <= C |x - y|^s reads v_out >= s * v_in - log_p C.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

from .calculus import dd_direct, dd_recursive, dq1, phi_k, values_agree
from .domains import AngleDomain, BallDomain, BlockPoint, MultiIndex, PhiDomain, sample_points, split_phi
from .errors import InsufficientPrecision, PrecisionError, UndecidableAtPrecision
from .expr import Expr, gauss_expand, parse_expr
from .field import DEFAULT_PREC, LaurentSeries, check_prime
from .parallel import pmap, split_seed

MAX_EXPONENT = 64


def counterexample_map() -> Expr:
    """x -> sum a_k X^floor(3k/2), the map separating Ludkovsky smoothness from C^2."""
    return parse_expr("phi32(x1)", 1)


def _unit_series(rng: random.Random, p: int, lead: int, prec: int) -> LaurentSeries:
    if lead >= prec:
        return LaurentSeries.zero(p, prec)
    coeffs = [rng.randrange(p) for _ in range(prec - lead)]
    coeffs[0] = rng.randrange(1, p)
    return LaurentSeries(p, lead, coeffs, prec)


def _any_series(rng: random.Random, p: int, lead: int, prec: int) -> LaurentSeries:
    if lead >= prec:
        return LaurentSeries.zero(p, prec)
    return LaurentSeries(p, lead, [rng.randrange(p) for _ in range(prec - lead)], prec)


def _output_valuation(diff) -> int | None:
    """Certified min valuation over components, or None when precision hides it."""
    known = [z.lead for z in diff if not z.is_zero()]
    hidden = [z.prec for z in diff if z.is_zero()]
    if not known:
        return None
    v = min(known)
    if hidden and min(hidden) <= v:
        return None
    return v


# ---------------------------------------------------------------------------
# Hölder exponent


@dataclass
class HolderReport:
    samples: int
    pairs: list  # (v_in, v_out) for every decidable pair
    sigma: Fraction
    log_c: int
    slope: Fraction | None
    excluded: int = 0
    verdict: str = ""

    def certifies(self) -> bool:
        return all(vo >= self.sigma * vi - self.log_c for vi, vo in self.pairs)

    def to_dict(self, params: dict | None = None) -> dict:
        return {
            "check": "holder",
            "params": params or {},
            "rows": [{"v_in": vi, "v_out": vo} for vi, vo in self.pairs],
            "sigma": str(self.sigma),
            "log_p_c": self.log_c,
            "slope": None if self.slope is None else str(self.slope),
            "excluded": self.excluded,
            "verdict": self.verdict,
        }


def _holder_pair(f, U: BallDomain, prec: int, seed: int, item):
    i, depth = item
    rng = random.Random(split_seed(seed, "holder", i))
    p = U.p
    x = tuple(U.centers[j].truncate(prec) + _any_series(rng, p, U.radii[j], prec) for j in range(U.d))
    step = [_any_series(rng, p, depth, prec) for _ in range(U.d)]
    step[rng.randrange(U.d)] = _unit_series(rng, p, depth, prec)
    y = tuple(a + b for a, b in zip(x, step))
    out = tuple(b - a for a, b in zip(f(x), f(y)))
    return depth, _output_valuation(out)


def _fit(s: Fraction, pairs) -> int:
    return max(math.ceil(s * vi - vo) for vi, vo in pairs)


def holder_estimate(f: Expr, U: BallDomain, samples: int, prec: int = DEFAULT_PREC, seed: int = 0,
                    workers: int | None = None) -> HolderReport:
    """Largest half-integer s with v_out >= s * v_in - c for an integer c fitted to the sample.

    Pair depths v(x - y) cycle through [max radius, prec - 1]. An exponent s
    is accepted while the constant needed by the deeper half of the decidable
    pairs exceeds the one needed by the shallower half by at most 1; above
    the true exponent that gap grows linearly in depth. ``slope`` is the
    least v_out / v_in over pairs with v_in >= prec/2 (the top third of the
    decidable depths when there are none).
    """
    r = max(U.radii)
    if r >= prec:
        raise InsufficientPrecision(f"precision {prec} does not reach inside radius p^-{r}")
    depths = [r + i % (prec - r) for i in range(samples)]
    results = pmap(partial(_holder_pair, f, U, prec, seed), list(enumerate(depths)), workers)
    pairs = [(vi, vo) for vi, vo in results if vo is not None]
    excluded = len(results) - len(pairs)
    if not pairs:
        raise InsufficientPrecision("every sampled difference was zero to precision")

    # split the decidable depth range in half: above the true exponent the
    # deep half needs a constant larger by (s - sigma) * (half the range)
    lo, hi = min(vi for vi, _ in pairs), max(vi for vi, _ in pairs)
    deep = [q for q in pairs if 2 * q[0] > lo + hi] or pairs
    shallow = [q for q in pairs if 2 * q[0] <= lo + hi] or pairs
    ratios = [Fraction(vo, vi) for vi, vo in pairs if vi > 0]
    cap = min(MAX_EXPONENT, math.ceil(max(ratios)) + 1) if ratios else 1

    sigma = Fraction(0)
    s = Fraction(0)
    while s <= cap:
        if _fit(s, deep) > _fit(s, shallow) + 1:
            break
        sigma = s
        s += Fraction(1, 2)
    log_c = _fit(sigma, pairs)
    asymptotic = [q for q in pairs if 2 * q[0] >= prec] or sorted(pairs)[-max(1, len(pairs) // 3):]
    deep_ratios = [Fraction(vo, vi) for vi, vo in asymptotic if vi > 0]
    slope = min(deep_ratios) if deep_ratios else None
    report = HolderReport(len(results), pairs, sigma, log_c, slope, excluded,
                          f"Hölder exponent {sigma} with log_p C = {log_c} on {len(pairs)} pairs")
    if not report.certifies():
        raise AssertionError("Hölder report violates its own inequality")
    return report


# ---------------------------------------------------------------------------
# boundedness of divided differences


@dataclass
class ScanTable:
    check: str
    params: dict
    rows: list
    verdict: str

    def to_dict(self) -> dict:
        return {"check": self.check, "params": self.params, "rows": self.rows, "verdict": self.verdict}


def _dd_exponent(f, alpha, x):
    """(log_p |f^>alpha<(x)| or None if zero to precision, decided?)."""
    try:
        value = dd_direct(f, alpha, x)
    except PrecisionError:
        return None, False
    nonzero = [z for z in value if not z.is_zero()]
    if not nonzero:
        return None, True
    v = min(z.lead for z in nonzero)
    hidden = [z.prec for z in value if z.is_zero()]
    if hidden and min(hidden) <= v:
        return None, False
    return -v, True


def c2_witness(n: int, p: int = 2, prec: int = DEFAULT_PREC) -> BlockPoint:
    """(0, X^n, X^n + X^(n+3)): second divided differences of the counterexample blow up along it."""
    a = LaurentSeries.monomial(p, 1, n, prec)
    b = a + LaurentSeries.monomial(p, 1, n + 3, prec)
    return BlockPoint.from_blocks([(LaurentSeries.zero(p, prec), a, b)])


def dd_boundedness_scan(f: Expr, alpha: MultiIndex, U: BallDomain, samples: int, levels, seed: int = 0,
                        prec: int = DEFAULT_PREC, pinned: dict | None = None,
                        workers: int | None = None) -> ScanTable:
    """max |f^>alpha<| over strict tuples whose within-block distances are >= p^-m, per level m.

    ``pinned`` maps a level to extra tuples evaluated alongside the random ones.
    """
    pinned = pinned or {}
    rows = []
    for m in levels:
        pts = sample_points(AngleDomain(U, alpha), samples, prec, split_seed(seed, "scan", m), m)
        pts += list(pinned.get(m, ()))
        outcomes = pmap(partial(_dd_exponent, f, alpha), pts, workers)
        exps = [e for e, ok in outcomes if ok and e is not None]
        undecided = sum(1 for _, ok in outcomes if not ok)
        top = max(exps) if exps else None
        rows.append({
            "level": m,
            "samples": len(pts),
            "undecided": undecided,
            "max_log_p_abs": top,
            "max_abs": "0" if top is None else f"{U.p}^{top}",
        })
    tops = [r["max_log_p_abs"] for r in rows if r["max_log_p_abs"] is not None]
    if len(tops) >= 2 and tops[-1] > tops[0] and all(b >= a for a, b in zip(tops, tops[1:])):
        verdict = "growing across the sweep: unbounded divided differences"
    else:
        verdict = "bounded on the sweep"
    params = {"expr": str(f), "alpha": list(alpha), "samples": samples, "prec": prec, "seed": seed,
              "levels": list(levels)}
    return ScanTable("bcnorm", params, rows, verdict)


# ---------------------------------------------------------------------------
# the C^2 blow-up


def c2_blowup_scan(n_max: int, prec: int = DEFAULT_PREC, p: int = 2) -> ScanTable:
    """|f^>2<(0, X^n, X^n + X^(n+3))| for even n in [2, n_max], f the counterexample map.

    The offset +3 matters: with (0, X^n, X^(n+1)) the two first-order
    quotients coincide and the second difference vanishes.
    """
    check_prime(p)
    if n_max < 2 or n_max % 2:
        raise ValueError(f"n_max must be an even integer >= 2, got {n_max}")
    need = math.ceil(3 * (n_max + 3) / 2) + 4
    if prec < need:
        raise InsufficientPrecision(f"n_max={n_max} needs precision >= {need}, got {prec}")
    f = counterexample_map()
    alpha = MultiIndex((2,))
    rows = []
    for n in range(2, n_max + 1, 2):
        x = c2_witness(n, p, prec)
        value = dd_direct(f, alpha, x)[0]
        if not values_agree((value,), dd_recursive(f, alpha, x)):
            raise AssertionError(f"divided difference formulas disagree at n={n}")
        if value.is_zero():
            raise InsufficientPrecision(f"second divided difference at n={n} is zero to precision {value.prec}")
        rows.append({
            "n": n,
            "valuation": value.lead,
            "log_p_abs": -value.lead,
            "abs": f"{p}^{-value.lead}",
            "value": str(value),
        })
    growth = all(b["log_p_abs"] == a["log_p_abs"] + 1 for a, b in zip(rows, rows[1:]))
    exact = all(r["log_p_abs"] * 2 == r["n"] for r in rows)
    if growth and exact:
        verdict = ("second divided differences unbounded near 0: not C^2 in the divided-difference sense, "
                   "hence not C^2 in the directional-quotient sense")
    else:
        verdict = "blow-up pattern not reproduced"
    return ScanTable("c2", {"n_max": n_max, "prec": prec, "p": p}, rows, verdict)


# ---------------------------------------------------------------------------
# the packaged counterexample


def _sandwich_case(p, prec, seed, i):
    rng = random.Random(split_seed(seed, "sandwich", i))
    depth = i % prec
    x = _any_series(rng, p, 0, prec)
    y = x + _unit_series(rng, p, depth, prec)
    return _sandwich(p, x, y)


def _sandwich(p, x, y):
    v_in = (x - y).lead
    diff = gauss_expand(x) - gauss_expand(y)
    v_out = None if diff.is_zero() else diff.lead
    # floor(3v/2) lies in (3v/2 - 1, 3v/2]: 1 <= |f(x)-f(y)| / |x-y|^(3/2) < p
    ok = v_out == (3 * v_in) // 2 and 3 * v_in - 2 < 2 * v_out <= 3 * v_in
    return ok, v_in, v_out


def _additivity_case(p, prec, seed, i):
    rng = random.Random(split_seed(seed, "additive", i))
    x = _any_series(rng, p, rng.randrange(prec // 2), prec)
    y = _any_series(rng, p, rng.randrange(prec // 2), prec)
    return gauss_expand(x + y).agrees(gauss_expand(x) + gauss_expand(y))


def _phi2_case(f, z):
    x, xis, ts = split_phi(z, 2, 1)
    value = phi_k(f, 2, x, xis, ts)[0]
    return value.is_zero() and value.prec > 0


def _phi1_case(f, p, prec, seed, z):
    i, (x, xis, ts) = z
    rng = random.Random(split_seed(seed, "phi1", i))
    other = (_any_series(rng, p, 0, prec),)
    a = phi_k(f, 1, x, xis, ts)
    b = phi_k(f, 1, other, xis, ts)
    return values_agree(a, b) and not a[0].is_zero()


def _derivative_scan(f, p, prec, seed, depth_max):
    """dq1 at t = X^k, k = 1..depth_max: valuation floor(3(k+v(xi))/2) - k, non-decreasing in k."""
    rng = random.Random(split_seed(seed, "derivative"))
    x = (_any_series(rng, p, 0, prec),)
    xi = (_unit_series(rng, p, 0, prec),)
    vals = []
    for k in range(1, depth_max + 1):
        t = LaurentSeries.monomial(p, 1, k, 2 * prec)
        q = dq1(f, x, xi, t)[0]
        vals.append(None if q.is_zero() else q.lead)
    ok = all(v == (3 * k) // 2 - k for k, v in zip(range(1, depth_max + 1), vals))
    ok = ok and all(b >= a for a, b in zip(vals, vals[1:]))
    return ok, vals


COUNTEREXAMPLE_VERDICT = "C^∞_Lud evidence complete; C^2 refuted."


def counterexample_report(n_max: int = 20, samples: int = 500, prec: int = DEFAULT_PREC, seed: int = 0,
                          p: int = 2, workers: int | None = None) -> dict:
    """Bundle the evidence that the counterexample map is Ludkovsky-smooth but not C^2.

    (i) Hölder sandwich v(f(x)-f(y)) = floor(3 v(x-y) / 2); (ii) additivity;
    (iii) Phi_2 = 0 at strict arguments, Phi_1 independent of x, and the
    t_1 = 0 branch via f' = 0 (quotients at t = X^k vanish as k grows);
    (iv) the blow-up table of second divided differences.
    """
    check_prime(p)
    f = counterexample_map()
    O = BallDomain.unit(p, 1, prec)
    rows = []

    sandwich = pmap(partial(_sandwich_case, p, prec, seed), range(samples), workers)
    pinned_pair = _sandwich(p, LaurentSeries.monomial(p, 1, 1, prec), LaurentSeries.zero(p, prec))
    sandwich.append(pinned_pair)
    rows.append({"subcheck": "holder_sandwich", "cases": len(sandwich),
                 "passed": sum(1 for ok, *_ in sandwich if ok),
                 "detail": f"pair (X, 0): v_in={pinned_pair[1]}, v_out={pinned_pair[2]}"})

    additive = pmap(partial(_additivity_case, p, prec, seed), range(samples), workers)
    x2, x5 = LaurentSeries.monomial(p, 1, 2, prec), LaurentSeries.monomial(p, 1, 5, prec)
    lhs = gauss_expand(x2 + x5)
    additive.append(lhs.agrees(gauss_expand(x2) + gauss_expand(x5)))
    rows.append({"subcheck": "additivity", "cases": len(additive), "passed": sum(additive),
                 "detail": f"f(X^2 + X^5) = {lhs}"})

    phi2_pts = sample_points(PhiDomain(O, 2), samples, prec, split_seed(seed, "phi2"))
    phi2 = pmap(partial(_phi2_case, f), phi2_pts, workers)
    rows.append({"subcheck": "phi2_zero", "cases": len(phi2), "passed": sum(phi2),
                 "detail": "Phi_2(f) vanishes at strict arguments"})

    phi1_pts = [split_phi(z, 1, 1) for z in sample_points(PhiDomain(O, 1), samples, prec, split_seed(seed, "phi1pts"))]
    phi1 = pmap(partial(_phi1_case, f, p, prec, seed), list(enumerate(phi1_pts)), workers)
    rows.append({"subcheck": "phi1_x_independent", "cases": len(phi1), "passed": sum(phi1),
                 "detail": "Phi_1(f)(x, xi, t) = f(t xi) / t"})

    scan_ok, scan_vals = _derivative_scan(f, p, prec, seed, prec // 2)
    rows.append({"subcheck": "t1_zero_branch", "cases": 1, "passed": int(scan_ok),
                 "detail": "f'(x) = 0, so Phi_2 = 0 at t_1 = 0; v(dq1) at t = X^k: "
                           + ",".join("-" if v is None else str(v) for v in scan_vals)})

    blowup = c2_blowup_scan(n_max, prec, p)
    blow_ok = blowup.verdict.startswith("second divided differences unbounded")
    rows.append({"subcheck": "c2_blowup", "cases": len(blowup.rows), "passed": len(blowup.rows) if blow_ok else 0,
                 "detail": f"|f^>2<| reaches {blowup.rows[-1]['abs']} at n={blowup.rows[-1]['n']}"})

    complete = all(r["passed"] == r["cases"] for r in rows)
    failed = [r["subcheck"] for r in rows if r["passed"] != r["cases"]]
    verdict = COUNTEREXAMPLE_VERDICT if complete else "counterexample evidence incomplete: " + ", ".join(failed)
    return {
        "check": "counterexample",
        "params": {"p": p, "prec": prec, "n_max": n_max, "samples": samples, "seed": seed},
        "rows": rows,
        "blowup": blowup.rows,
        "verdict": verdict,
    }
