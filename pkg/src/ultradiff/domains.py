"""Product-of-balls domains, their extended domains, and seeded samplers.

Points of ``U^[k]`` are flat tuples laid out depth-first: a point of
``E^[k] = E^[k-1] x E^[k-1] x K`` is ``(*x_block, *y_block, t)`` where the
blocks are themselves points of ``E^[k-1]``.  ``E^[k]`` over ``K^d`` thus has
``2^k (d+1) - 1`` scalar slots.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .errors import SamplerExhausted, ShapeError, UndecidableAtPrecision
from .field import DEFAULT_PREC, LaurentSeries, parse_series

MAX_ATTEMPTS = 10_000


# ---------------------------------------------------------------------------
# base domains


@dataclass(frozen=True)
class BallDomain:
    """U = B_1 x ... x B_d with B_i = {z : v(z - c_i) >= r_i}."""

    centers: tuple
    radii: tuple

    def __post_init__(self):
        if len(self.centers) != len(self.radii) or not self.centers:
            raise ShapeError("ball domain needs one (center, radius) per coordinate")

    @classmethod
    def unit(cls, p: int, d: int, prec: int = DEFAULT_PREC) -> BallDomain:
        """O^d, the product of unit balls."""
        zero = LaurentSeries.zero(p, prec)
        return cls((zero,) * d, (0,) * d)

    @property
    def d(self) -> int:
        return len(self.centers)

    @property
    def p(self) -> int:
        return self.centers[0].p

    def contains_coord(self, i: int, z: LaurentSeries) -> bool:
        diff = z - self.centers[i]
        r = self.radii[i]
        if diff.is_zero():
            if diff.prec >= r:
                return True
            raise UndecidableAtPrecision(f"cannot decide v({z} - center) >= {r}")
        return diff.lead >= r

    def contains(self, point: Sequence[LaurentSeries]) -> bool:
        if len(point) != self.d:
            raise ShapeError(f"expected {self.d} coordinates, got {len(point)}")
        return all(self.contains_coord(i, z) for i, z in enumerate(point))

    def __str__(self):
        if all(c.is_zero() for c in self.centers) and not any(self.radii):
            return f"O^{self.d}"
        return "ball(" + ";".join(f"{c},{r}" for c, r in zip(self.centers, self.radii)) + ")"


def parse_domain(text: str, p: int, prec: int = DEFAULT_PREC) -> BallDomain:
    """``O^d`` or ``ball(c_1,r_1;...;c_d,r_d)`` with series-literal centers."""
    text = text.strip()
    if text.startswith("O^"):
        try:
            d = int(text[2:])
        except ValueError:
            raise ShapeError(f"bad domain {text!r}") from None
        if d < 1:
            raise ShapeError("domain dimension must be >= 1")
        return BallDomain.unit(p, d, prec)
    if text.startswith("ball(") and text.endswith(")"):
        centers, radii = [], []
        for part in text[5:-1].split(";"):
            if "," not in part:
                raise ShapeError(f"bad ball component {part!r}; expected center,radius")
            c, r = part.rsplit(",", 1)
            centers.append(parse_series(c, p, prec))
            radii.append(int(r))
        return BallDomain(tuple(centers), tuple(radii))
    raise ShapeError(f"bad domain {text!r}; expected O^d or ball(c,r;...)")


# ---------------------------------------------------------------------------
# multi-indices and block points


@dataclass(frozen=True)
class MultiIndex:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(a) for a in self.entries))
        if not self.entries or any(a < 0 for a in self.entries):
            raise ShapeError(f"multi-index entries must be non-negative: {self.entries}")

    @classmethod
    def unit(cls, d: int, i: int) -> MultiIndex:
        """e_i (0-based i)."""
        return cls(tuple(int(j == i) for j in range(d)))

    @classmethod
    def zero(cls, d: int) -> MultiIndex:
        return cls((0,) * d)

    @classmethod
    def parse(cls, text: str) -> MultiIndex:
        try:
            return cls(tuple(int(a) for a in text.replace("(", "").replace(")", "").split(",") if a.strip()))
        except ValueError:
            raise ShapeError(f"bad multi-index {text!r}") from None

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def offsets(self) -> list[int]:
        """s_1..s_{d+1} with s_j = j + sum_{i<j} alpha_i (1-based positions)."""
        out, acc = [], 0
        for j, a in enumerate(self.entries, start=1):
            out.append(j + acc)
            acc += a
        out.append(self.d + self.order + 1)
        return out

    def block_slices(self) -> list[slice]:
        s = self.offsets()
        return [slice(s[j] - 1, s[j + 1] - 1) for j in range(self.d)]

    @property
    def size(self) -> int:
        return self.d + self.order

    def __add__(self, other: MultiIndex) -> MultiIndex:
        if other.d != self.d:
            raise ShapeError("multi-indices of different length")
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        return "(" + ",".join(map(str, self.entries)) + ")"


@dataclass(frozen=True)
class BlockPoint:
    """Flat point of K^(d+|alpha|) viewed as blocks x^(i) of length 1+alpha_i."""

    flat: tuple
    alpha: MultiIndex

    def __post_init__(self):
        object.__setattr__(self, "flat", tuple(self.flat))
        if len(self.flat) != self.alpha.size:
            raise ShapeError(f"point has {len(self.flat)} slots, alpha={self.alpha} needs {self.alpha.size}")

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[LaurentSeries]]) -> BlockPoint:
        alpha = MultiIndex(tuple(len(b) - 1 for b in blocks))
        return cls(tuple(z for b in blocks for z in b), alpha)

    @property
    def blocks(self) -> list[tuple]:
        return [self.flat[s] for s in self.alpha.block_slices()]

    def block(self, i: int) -> tuple:
        return self.flat[self.alpha.block_slices()[i]]

    def __len__(self):
        return len(self.flat)

    def __iter__(self):
        return iter(self.flat)

    def __str__(self):
        return "; ".join(", ".join(str(z) for z in b) for b in self.blocks)


def as_block_point(x, alpha: MultiIndex) -> BlockPoint:
    if isinstance(x, BlockPoint):
        if x.alpha != alpha:
            raise ShapeError(f"point shaped for {x.alpha}, expected {alpha}")
        return x
    return BlockPoint(tuple(x), alpha)


def certified_distinct(a: LaurentSeries, b: LaurentSeries) -> bool:
    return not (a - b).is_zero()


# ---------------------------------------------------------------------------
# membership predicates


def member_angle(U: BallDomain, alpha: MultiIndex, x, strict: bool = False) -> bool:
    """Membership in U^<alpha> (or U^>alpha< with ``strict``).

    For a product of balls every mixed selection lies in U iff each block
    lies in its ball.  Distinctness counts only when certified by a known
    nonzero coefficient of the difference; otherwise the strict test is False.
    """
    if alpha.d != U.d:
        raise ShapeError(f"alpha has {alpha.d} entries, domain has dimension {U.d}")
    x = as_block_point(x, alpha)
    for i, block in enumerate(x.blocks):
        if not all(U.contains_coord(i, z) for z in block):
            return False
    if strict:
        for block in x.blocks:
            for j in range(len(block)):
                for k in range(j + 1, len(block)):
                    if not certified_distinct(block[j], block[k]):
                        return False
    return True


def bracket_size(k: int, d: int) -> int:
    """Number of scalar slots of E^[k] for E = K^d."""
    return (1 << k) * (d + 1) - 1


def split_bracket(z: Sequence[LaurentSeries], k: int, d: int) -> tuple[tuple, tuple, LaurentSeries]:
    """(x, y, t) of a point of E^[k], k >= 1; x and y are points of E^[k-1]."""
    n = bracket_size(k - 1, d)
    if len(z) != 2 * n + 1:
        raise ShapeError(f"E^[{k}] over K^{d} has {2 * n + 1} slots, got {len(z)}")
    return tuple(z[:n]), tuple(z[n:2 * n]), z[2 * n]


def flatten_nested(z) -> tuple:
    """Flatten nested (x, y, t) triples into the depth-first slot layout."""
    if isinstance(z, LaurentSeries):
        return (z,)
    return tuple(s for part in z for s in flatten_nested(part))


def member_bracket(U: BallDomain, k: int, z, strict: bool = False) -> bool:
    """Membership in U^[k] (or U^]k[ with ``strict``), recursively.

    z = (x, y, t) lies in V^[1] iff x in V and x + t*y in V; strict also
    requires t certified nonzero at every level.
    """
    z = flatten_nested(z)
    if k == 0:
        return U.contains(z)
    x, y, t = split_bracket(z, k, U.d)
    if strict and t.is_zero():
        return False
    if not member_bracket(U, k - 1, x, strict):
        return False
    moved = tuple(a + t * b for a, b in zip(x, y))
    return member_bracket(U, k - 1, moved, strict)


def split_phi(z: Sequence[LaurentSeries], k: int, d: int):
    """(x, [xi_1..xi_k], [t_1..t_k]) from the flat layout x; xi_1..xi_k; t_1..t_k."""
    if len(z) != d + k * d + k:
        raise ShapeError(f"Phi_{k} arguments over K^{d} have {d + k * d + k} slots, got {len(z)}")
    x = tuple(z[:d])
    xis = [tuple(z[d + i * d:d + (i + 1) * d]) for i in range(k)]
    ts = list(z[d + k * d:])
    return x, xis, ts


def member_phi(U: BallDomain, k: int, z, strict: bool = False) -> bool:
    """Membership in the closure of Phi_k(U); ``strict`` requires every t_i certified nonzero."""
    x, xis, ts = split_phi(tuple(z), k, U.d)
    if strict and any(t.is_zero() for t in ts):
        return False
    return _member_phi(U, x, xis, ts)


def _member_phi(U, x, xis, ts) -> bool:
    if len(ts) == 1:
        return U.contains(x) and U.contains(tuple(a + ts[0] * b for a, b in zip(x, xis[0])))
    moved = tuple(a + ts[-1] * b for a, b in zip(x, xis[-1]))
    return _member_phi(U, x, xis[:-1], ts[:-1]) and _member_phi(U, moved, xis[:-1], ts[:-1])


# ---------------------------------------------------------------------------
# derived domains and sampling


@dataclass(frozen=True)
class AngleDomain:
    """U^<alpha>; sampled points are strict (U^>alpha<)."""

    base: BallDomain
    alpha: MultiIndex


@dataclass(frozen=True)
class BracketDomain:
    """U^[k]; sampled points are strict (U^]k[)."""

    base: BallDomain
    k: int


@dataclass(frozen=True)
class PhiDomain:
    """Closure of Phi_k(U); sampled points have every t_i nonzero."""

    base: BallDomain
    k: int


def _random_series(rng: random.Random, p: int, lead: int, prec: int, unit: bool = False) -> LaurentSeries:
    n = prec - lead
    if n <= 0:
        return LaurentSeries.zero(p, prec)
    coeffs = [rng.randrange(p) for _ in range(n)]
    if unit:
        coeffs[0] = rng.randrange(1, p)
    return LaurentSeries(p, lead, coeffs, prec)


def _ball_point(rng, U: BallDomain, i: int, prec: int) -> LaurentSeries:
    return U.centers[i].truncate(prec) + _random_series(rng, U.p, U.radii[i], prec)


def _t_depth(min_sep: int, prec: int) -> int:
    return max(0, min(min_sep, max(1, prec // 16)))


class _Sampler:
    def __init__(self, domain, prec: int, seed: int, min_sep: int | None):
        self.domain = domain
        self.prec = prec
        self.rng = random.Random(seed)
        self.min_sep = prec - 1 if min_sep is None else min_sep
        if self.min_sep < 0:
            raise ValueError("min_sep must be >= 0")

    def _retry(self, make, check, what: str):
        for _ in range(MAX_ATTEMPTS):
            candidate = make()
            try:
                if check(candidate):
                    return candidate
            except UndecidableAtPrecision:
                pass
        raise SamplerExhausted(f"no certified {what} after {MAX_ATTEMPTS} attempts (prec={self.prec}, min_sep={self.min_sep})")

    def ball(self, U: BallDomain) -> tuple:
        return tuple(_ball_point(self.rng, U, i, self.prec) for i in range(U.d))

    def block(self, U: BallDomain, i: int, size: int) -> tuple:
        rng, prec, p = self.rng, self.prec, U.p
        r = U.radii[i]
        hi = max(r, min(self.min_sep, prec - 1))

        def make():
            pts = [_ball_point(rng, U, i, prec)]
            while len(pts) < size:
                anchor = rng.choice(pts)
                depth = rng.randint(r, hi)
                pts.append(anchor + _random_series(rng, p, depth, prec, unit=True))
            return tuple(pts)

        def check(pts):
            for j in range(len(pts)):
                for k in range(j + 1, len(pts)):
                    diff = pts[j] - pts[k]
                    if diff.is_zero() or diff.lead > self.min_sep:
                        return False
            return all(U.contains_coord(i, z) for z in pts)

        return self._retry(make, check, f"block of {size} distinct points")

    def angle(self, dom: AngleDomain) -> BlockPoint:
        blocks = [self.block(dom.base, i, 1 + a) for i, a in enumerate(dom.alpha)]
        point = BlockPoint.from_blocks(blocks)
        if not member_angle(dom.base, dom.alpha, point, strict=True):
            raise AssertionError("sampler produced a point outside its own domain")
        return point

    def bracket(self, U: BallDomain, k: int) -> tuple:
        if k == 0:
            return self.ball(U)
        rng, p = self.rng, U.p

        def make():
            x = self.bracket(U, k - 1)
            w = self.bracket(U, k - 1)
            t = _random_series(rng, p, rng.randint(0, _t_depth(self.min_sep, self.prec)), self.prec, unit=True)
            y = tuple((b - a) / t for a, b in zip(x, w))
            return x + y + (t,)

        return self._retry(make, lambda z: member_bracket(U, k, z, strict=True), f"point of U^]{k}[")

    def phi(self, dom: PhiDomain) -> tuple:
        U, k, rng, p = dom.base, dom.k, self.rng, dom.base.p

        def make():
            x = self.ball(U)
            xis, ts = [], []
            for _ in range(k):
                t = _random_series(rng, p, rng.randint(0, _t_depth(self.min_sep, self.prec)), self.prec, unit=True)
                w = tuple(_random_series(rng, p, U.radii[i], self.prec) for i in range(U.d))
                xis.append(tuple(c / t for c in w))
                ts.append(t)
            return x + tuple(c for xi in xis for c in xi) + tuple(ts)

        return self._retry(make, lambda z: member_phi(U, k, z, strict=True), f"Phi_{k} argument")

    def one(self):
        dom = self.domain
        if isinstance(dom, BallDomain):
            return self.ball(dom)
        if isinstance(dom, AngleDomain):
            return self.angle(dom)
        if isinstance(dom, BracketDomain):
            return self.bracket(dom.base, dom.k)
        if isinstance(dom, PhiDomain):
            return self.phi(dom)
        raise TypeError(f"cannot sample from {dom!r}")


def sample_points(domain, count: int, prec: int, seed: int, min_sep: int | None = None) -> list:
    """``count`` certified-strict points of ``domain``; deterministic in ``seed``.

    ``min_sep`` bounds the valuation of within-block differences (and of the
    t-slots), i.e. sampled points are at distance >= p^-min_sep; it defaults
    to ``prec - 1``, the weakest bound that still certifies distinctness.
    """
    sampler = _Sampler(domain, prec, seed, min_sep)
    return [sampler.one() for _ in range(count)]
