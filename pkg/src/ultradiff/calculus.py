"""Divided differences, directional difference quotients, and Ludkovsky's
iterated quotients, plus checkers for the identities relating them.

Every operation evaluates raw quotients at generic points only (all
denominators certified nonzero); continuous extensions at coincident
points are never computed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

from .domains import (
    AngleDomain,
    BallDomain,
    BlockPoint,
    BracketDomain,
    MultiIndex,
    as_block_point,
    bracket_size,
    member_phi,
    sample_points,
    split_bracket,
)
from .errors import DomainError, InsufficientPrecision, ShapeError, UndecidableAtPrecision
from .expr import Expr
from .field import DEFAULT_PREC, LaurentSeries
from .parallel import pmap

Point = Sequence[LaurentSeries]
Value = tuple  # tuple of LaurentSeries, one per output component


def _call(f, point) -> Value:
    return tuple(f(tuple(point)))


def _lin_comb(terms) -> Value:
    """sum of c * v over (c, v) pairs, componentwise."""
    acc = None
    for c, v in terms:
        scaled = tuple(c * z for z in v)
        acc = scaled if acc is None else tuple(a + b for a, b in zip(acc, scaled))
    return acc


def _sub_div(a: Value, b: Value, denom: LaurentSeries) -> Value:
    inv = denom.inverse()
    return tuple((u - w) * inv for u, w in zip(a, b))


def _nonzero(t: LaurentSeries, what: str) -> None:
    if t.is_zero():
        raise UndecidableAtPrecision(f"{what} is zero to precision {t.prec}; cannot certify a generic point")


def _informative(value: Value) -> Value:
    for z in value:
        if z.is_zero() and z.prec <= 0:
            raise InsufficientPrecision(f"result {z} carries no informative coefficients")
    return value


# ---------------------------------------------------------------------------
# divided differences


def dd_direct(f, alpha: MultiIndex, x) -> Value:
    """f^>alpha<(x) as the explicit sum over all mixed selections."""
    x = as_block_point(x, alpha)
    if alpha.order == 0:
        return _call(f, x.flat)
    weights = []
    for block in x.blocks:
        w = []
        for j, zj in enumerate(block):
            denom = None
            for k, zk in enumerate(block):
                if k != j:
                    diff = zj - zk
                    _nonzero(diff, "within-block difference")
                    denom = diff if denom is None else denom * diff
            w.append(None if denom is None else denom.inverse())
        weights.append(w)
    terms = []
    for sel in itertools.product(*(range(len(b)) for b in x.blocks)):
        coeff = None
        for w, j in zip(weights, sel):
            if w[j] is not None:
                coeff = w[j] if coeff is None else coeff * w[j]
        point = tuple(b[j] for b, j in zip(x.blocks, sel))
        terms.append((coeff, _call(f, point)))
    return _informative(_lin_comb(terms))


def _replace_block(x: BlockPoint, i: int, block) -> tuple:
    blocks = list(x.blocks)
    blocks[i] = tuple(block)
    return BlockPoint.from_blocks(blocks)


def dd_recursive(f, alpha: MultiIndex, x) -> Value:
    """f^>alpha<(x) by peeling one unit off the first nonzero entry of alpha."""
    x = as_block_point(x, alpha)
    if alpha.order == 0:
        return _call(f, x.flat)
    i = next(j for j, a in enumerate(alpha) if a > 0)
    beta = MultiIndex(tuple(a - (j == i) for j, a in enumerate(alpha)))
    b = x.block(i)
    n = alpha[i]
    left = _replace_block(x, i, b[:n])
    right = _replace_block(x, i, (b[n],) + b[1:n])
    diff = b[0] - b[n]
    _nonzero(diff, "within-block difference")
    return _informative(_sub_div(dd_recursive(f, beta, left), dd_recursive(f, beta, right), diff))


# ---------------------------------------------------------------------------
# difference quotients


def dq1(f, x: Point, y: Point, t: LaurentSeries, domain: BallDomain | None = None) -> Value:
    """(f(x + t y) - f(x)) / t."""
    _nonzero(t, "t")
    moved = tuple(a + t * b for a, b in zip(x, y))
    if domain is not None and not (domain.contains(x) and domain.contains(moved)):
        raise DomainError("(x, y, t) is not in U^]1[")
    return _sub_div(_call(f, moved), _call(f, x), t)


def _arity_from_bracket(n: int, k: int) -> int:
    d, rem = divmod(n + 1, 1 << k)
    if rem or d < 2:
        raise ShapeError(f"{n} slots is not the size of any E^[{k}]")
    return d - 1


def dq_iter(f, k: int, z: Point, domain: BallDomain | None = None) -> Value:
    """f^[k](z) at a point of U^]k[, by nesting the first-order quotient."""
    z = tuple(z)
    if k == 0:
        if domain is not None and not domain.contains(z):
            raise DomainError("point is not in U")
        return _call(f, z)
    d = _arity_from_bracket(len(z), k)
    x, y, t = split_bracket(z, k, d)
    _nonzero(t, f"t-slot at level {k}")
    moved = tuple(a + t * b for a, b in zip(x, y))
    return _sub_div(dq_iter(f, k - 1, moved, domain), dq_iter(f, k - 1, x, domain), t)


def phi_k(f, k: int, x: Point, xis: Sequence[Point], ts: Sequence[LaurentSeries],
          domain: BallDomain | None = None) -> Value:
    """Ludkovsky's Phi_k(f): vary only the t-parameters along fixed directions."""
    if len(xis) != k or len(ts) != k:
        raise ShapeError(f"Phi_{k} needs {k} directions and {k} parameters")
    for i, t in enumerate(ts, start=1):
        _nonzero(t, f"t_{i}")
    if domain is not None:
        flat = tuple(x) + tuple(c for xi in xis for c in xi) + tuple(ts)
        if not member_phi(domain, k, flat):
            raise DomainError(f"argument is not in Phi_{k}(U)")
    return _phi(f, tuple(x), [tuple(xi) for xi in xis], list(ts))


def _phi(f, x, xis, ts) -> Value:
    if len(ts) == 1:
        return dq1(f, x, xis[0], ts[0])
    t = ts[-1]
    moved = tuple(a + t * b for a, b in zip(x, xis[-1]))
    return _sub_div(_phi(f, moved, xis[:-1], ts[:-1]), _phi(f, x, xis[:-1], ts[:-1]), t)


# ---------------------------------------------------------------------------
# transport between the two calculi


@dataclass(frozen=True)
class AffineMap:
    """z = M x + offset with integer (prime-field) entries."""

    matrix: tuple  # rows of ints, target_dim x source_dim
    offset: tuple  # ints, length target_dim
    source_dim: int

    @property
    def target_dim(self) -> int:
        return len(self.offset)

    @classmethod
    def identity(cls, n: int) -> AffineMap:
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), (0,) * n, n)

    def __call__(self, x: Point) -> tuple:
        return self.apply(x)

    def apply(self, x: Point) -> tuple:
        if len(x) != self.source_dim:
            raise ShapeError(f"affine map expects {self.source_dim} inputs, got {len(x)}")
        p = x[0].p
        cprec = 2 * max(z.prec for z in x) - min(0, min(z.lead for z in x)) + 1
        out = []
        for row, o in zip(self.matrix, self.offset):
            acc = LaurentSeries.constant(p, o, cprec)
            for c, z in zip(row, x):
                if c:
                    acc = acc + z * c
            out.append(acc)
        return tuple(out)

    def compose(self, inner: AffineMap) -> AffineMap:
        """self o inner."""
        if inner.target_dim != self.source_dim:
            raise ShapeError("affine maps do not compose")
        rows = tuple(
            tuple(sum(r[k] * inner.matrix[k][c] for k in range(self.source_dim)) for c in range(inner.source_dim))
            for r in self.matrix
        )
        off = tuple(sum(r[k] * inner.offset[k] for k in range(self.source_dim)) + o for r, o in zip(self.matrix, self.offset))
        return AffineMap(rows, off, inner.source_dim)


def theta_alpha(alpha: MultiIndex, d: int | None = None) -> AffineMap:
    """Affine map with f^<alpha> = f^[|alpha|] o theta_alpha on generic points.

    For alpha = beta + e_i (i the first nonzero entry), the point x is sent
    to (base, e, x^(i)_0 - x^(i)_{alpha_i}) in (K^<beta>)^[1], where base is x
    with block i replaced by (x^(i)_{alpha_i}, x^(i)_1, ..., x^(i)_{alpha_i-1})
    and e is the unit vector at the first slot of that block; then
    (b, y, t) -> (theta_beta(b), lin(theta_beta)(y), t) finishes the step.
    """
    d = alpha.d if d is None else d
    if alpha.d != d:
        raise ShapeError(f"alpha has {alpha.d} entries, expected {d}")
    if alpha.order == 0:
        return AffineMap.identity(d)
    i = next(j for j, a in enumerate(alpha) if a > 0)
    beta = MultiIndex(tuple(a - (j == i) for j, a in enumerate(alpha)))
    inner = theta_alpha(beta, d)
    n_src = alpha.size
    start = alpha.block_slices()[i].start
    n = alpha[i]

    # base: beta-layout slot -> alpha-layout source slot
    sources = []
    for j, sl in enumerate(alpha.block_slices()):
        idx = list(range(sl.start, sl.stop))
        if j == i:
            idx = [start + n] + idx[1:n]
        sources.extend(idx)
    direction = start  # same slot in the beta layout: earlier blocks agree

    rows, offs = [], []
    for r, o in zip(inner.matrix, inner.offset):
        row = [0] * n_src
        for c, src in enumerate(sources):
            row[src] += r[c]
        rows.append(tuple(row))
        offs.append(o)
    for r in inner.matrix:
        rows.append((0,) * n_src)
        offs.append(r[direction])
    t_row = [0] * n_src
    t_row[start] += 1
    t_row[start + n] -= 1
    rows.append(tuple(t_row))
    offs.append(0)
    result = AffineMap(tuple(rows), tuple(offs), n_src)
    assert result.target_dim == bracket_size(alpha.order, d)
    return result


def flatten_multiindex(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    """beta-bar: sum beta over the slots belonging to each block of alpha."""
    if beta.d != alpha.size:
        raise ShapeError(f"beta must have d + |alpha| = {alpha.size} entries, got {beta.d}")
    return MultiIndex(tuple(sum(beta.entries[sl]) for sl in alpha.block_slices()))


# ---------------------------------------------------------------------------
# identity checkers


@dataclass
class CheckReport:
    op: str
    field_p: int
    prec: int
    seed: int
    samples: int
    exact_matches: int
    failures: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    outcomes: list = field(default_factory=list, repr=False)  # per-sample match flags
    points: list = field(default_factory=list, repr=False)  # per-sample flat points, as strings

    @property
    def passed(self) -> bool:
        return self.exact_matches == self.samples and not self.failures

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "field_p": self.field_p,
            "prec": self.prec,
            "seed": self.seed,
            "samples": self.samples,
            "exact_matches": self.exact_matches,
            "params": self.params,
            "failures": self.failures,
        }


def values_agree(a: Value, b: Value) -> bool:
    return len(a) == len(b) and all(u.agrees(w) for u, w in zip(a, b))


def _fmt_value(v: Value) -> list[str]:
    return [str(z) for z in v]


def _report(op, U: BallDomain, prec, seed, cases, params, workers) -> CheckReport:
    outcomes = pmap(cases[0], cases[1], workers)
    failures = [
        {"point": [str(z) for z in pt], "lhs": _fmt_value(lhs), "rhs": _fmt_value(rhs)}
        for ok, pt, lhs, rhs in outcomes if not ok
    ]
    matches = sum(1 for o in outcomes if o[0])
    return CheckReport(op, U.p, prec, seed, len(outcomes), matches, failures, params,
                       [o[0] for o in outcomes], [[str(z) for z in o[1]] for o in outcomes])


def _default_sep(order: int, prec: int) -> int:
    # the sum formula's weights 1/prod(x_j - x_k) keep only prec - 2*sum(v)
    # coefficients, so cap each separation at prec / (4 |alpha|)
    return max(1, prec // (4 * max(1, order)))


def _fviaphi_case(f, U: BallDomain, z) -> tuple:
    x, y, t = z
    lhs = dq1(f, x, y, t)
    terms = []
    d = U.d
    for j in range(d):
        if y[j].is_zero():
            continue  # the j-th summand vanishes with y_j
        blocks = [(x[i] + t * y[i],) for i in range(j)]
        blocks.append((x[j], x[j] + t * y[j]))
        blocks.extend((x[i],) for i in range(j + 1, d))
        terms.append((y[j], dd_direct(f, MultiIndex.unit(d, j), BlockPoint.from_blocks(blocks))))
    rhs = _lin_comb(terms) if terms else tuple(LaurentSeries.zero(U.p, v.prec) for v in lhs)
    return values_agree(lhs, rhs), tuple(x) + tuple(y) + (t,), lhs, rhs


def check_fviaphi(f: Expr, U: BallDomain, samples: int, seed: int, prec: int = DEFAULT_PREC,
                  workers: int | None = None) -> CheckReport:
    """f^]1[(x,y,t) against sum_j y_j f^<e_j>(x_1+ty_1, .., x_j, x_j+ty_j, .., x_d)."""
    d = U.d
    raw = sample_points(BracketDomain(U, 1), samples, prec, seed)
    rng = random.Random(f"{seed}:zero-directions")
    points = []
    for z in raw:
        x, y = list(z[:d]), list(z[d:2 * d])
        for j in range(d):
            if rng.random() < 0.2:
                y[j] = LaurentSeries.zero(U.p, y[j].prec)
        points.append((tuple(x), tuple(y), z[-1]))
    return _report("fviaphi", U, prec, seed, (partial(_fviaphi_case, f, U), points), {"expr": str(f)}, workers)


def _simpfml_case(f, alpha, beta, gamma, y) -> tuple:
    inner = partial(dd_direct, f, alpha)
    lhs = dd_direct(inner, beta, BlockPoint(y.flat, beta))
    rhs = dd_direct(f, gamma, y)
    return values_agree(lhs, rhs), y.flat, lhs, rhs


def check_simpfml(f: Expr, alpha: MultiIndex, beta: MultiIndex, U: BallDomain, samples: int, seed: int,
                  prec: int = DEFAULT_PREC, min_sep: int | None = None, workers: int | None = None) -> CheckReport:
    """(f^>alpha<)^>beta< against f^>alpha + beta-bar< on the shared flat layout."""
    gamma = alpha + flatten_multiindex(alpha, beta)
    sep = _default_sep(gamma.order, prec) if min_sep is None else min_sep
    points = sample_points(AngleDomain(U, gamma), samples, prec, seed, sep)
    params = {"expr": str(f), "alpha": list(alpha), "beta": list(beta), "alpha_plus_beta_bar": list(gamma)}
    return _report("simpfml", U, prec, seed, (partial(_simpfml_case, f, alpha, beta, gamma), points), params, workers)


def _transport_case(f, alpha, theta, x) -> tuple:
    lhs = dd_direct(f, alpha, x)
    rhs = dq_iter(f, alpha.order, theta(x.flat))
    return values_agree(lhs, rhs), x.flat, lhs, rhs


def check_transport(f: Expr, alpha: MultiIndex, U: BallDomain, samples: int, seed: int,
                    prec: int = DEFAULT_PREC, min_sep: int | None = None, workers: int | None = None) -> CheckReport:
    """f^>alpha<(x) against f^[|alpha|](theta_alpha(x))."""
    sep = _default_sep(alpha.order, prec) if min_sep is None else min_sep
    points = sample_points(AngleDomain(U, alpha), samples, prec, seed, sep)
    theta = theta_alpha(alpha, U.d)
    params = {"expr": str(f), "alpha": list(alpha)}
    return _report("theta", U, prec, seed, (partial(_transport_case, f, alpha, theta), points), params, workers)


def block_permutations(x: BlockPoint):
    """All points obtained by permuting entries within blocks (identity first)."""
    per_block = [list(itertools.permutations(b)) for b in x.blocks]
    for combo in itertools.product(*per_block):
        yield BlockPoint.from_blocks(combo)


def _symmetry_case(f, alpha, x) -> tuple:
    ref = dd_direct(f, alpha, x)
    for y in block_permutations(x):
        other = dd_direct(f, alpha, y)
        if not values_agree(ref, other):
            return False, y.flat, ref, other
    return True, x.flat, ref, ref


def check_symmetry(f: Expr, alpha: MultiIndex, U: BallDomain, samples: int, seed: int,
                   prec: int = DEFAULT_PREC, min_sep: int | None = None, workers: int | None = None) -> CheckReport:
    """dd_direct is invariant under every within-block permutation."""
    sep = _default_sep(alpha.order, prec) if min_sep is None else min_sep
    points = sample_points(AngleDomain(U, alpha), samples, prec, seed, sep)
    params = {"expr": str(f), "alpha": list(alpha)}
    return _report("symmetry", U, prec, seed, (partial(_symmetry_case, f, alpha), points), params, workers)


def _recursion_case(f, alpha, x) -> tuple:
    lhs = dd_direct(f, alpha, x)
    rhs = dd_recursive(f, alpha, x)
    return values_agree(lhs, rhs), x.flat, lhs, rhs


def check_recursion(f: Expr, alpha: MultiIndex, U: BallDomain, samples: int, seed: int,
                    prec: int = DEFAULT_PREC, min_sep: int | None = None, workers: int | None = None) -> CheckReport:
    """dd_direct against dd_recursive."""
    sep = _default_sep(alpha.order, prec) if min_sep is None else min_sep
    points = sample_points(AngleDomain(U, alpha), samples, prec, seed, sep)
    params = {"expr": str(f), "alpha": list(alpha)}
    return _report("recursion", U, prec, seed, (partial(_recursion_case, f, alpha), points), params, workers)


CHECKS: dict[str, Callable] = {
    "fviaphi": check_fviaphi,
    "simpfml": check_simpfml,
    "theta": check_transport,
    "symmetry": check_symmetry,
    "recursion": check_recursion,
}
