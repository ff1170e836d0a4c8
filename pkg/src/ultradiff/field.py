"""Exact arithmetic in F_p and in truncated Laurent series F_p((X)).

A :class:`LaurentSeries` stores the dense window of known coefficients
``lead, lead+1, ..., prec-1``; everything at exponents ``>= prec`` is the
unknown ``O(X^prec)`` tail.  Every operation propagates precision so that
no unknown coefficient is ever reported as known.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    ExprSyntaxError,
    FieldError,
    InsufficientPrecision,
    UndecidableAtPrecision,
    ZeroDivisorToPrecision,
)
from .lexer import TokenStream

DEFAULT_PREC = 64

_PRIMES: set[int] = set()


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def check_prime(p: int) -> int:
    if p in _PRIMES:
        return p
    if not isinstance(p, int) or not is_prime(p):
        raise FieldError(f"p must be prime, got {p!r}")
    _PRIMES.add(p)
    return p


# ---------------------------------------------------------------------------
# F_p


@dataclass(frozen=True)
class FpElement:
    value: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        object.__setattr__(self, "value", self.value % self.p)

    def _other(self, other) -> int:
        if isinstance(other, FpElement):
            if other.p != self.p:
                raise FieldError(f"mixing F_{self.p} and F_{other.p}")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else FpElement(self.value + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else FpElement(self.value - o, self.p)

    def __rsub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else FpElement(o - self.value, self.p)

    def __mul__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else FpElement(self.value * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FpElement(-self.value, self.p)

    def inverse(self) -> FpElement:
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in F_p")
        return FpElement(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self * FpElement(o, self.p).inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return FpElement(pow(self.value, n, self.p), self.p)

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __str__(self):
        return str(self.value)


class PrimeField:
    """The coefficient field F_p; construction validates primality."""

    def __init__(self, p: int):
        self.p = check_prime(p)

    def __call__(self, value: int) -> FpElement:
        return FpElement(value, self.p)

    def zero(self) -> FpElement:
        return FpElement(0, self.p)

    def one(self) -> FpElement:
        return FpElement(1, self.p)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("F", self.p))

    def __repr__(self):
        return f"PrimeField({self.p})"


# ---------------------------------------------------------------------------
# dense polynomial kernels (coefficient lists, low degree first)


def _mul_trunc(a: Sequence[int], b: Sequence[int], n: int, p: int) -> list[int]:
    """First ``n`` coefficients of ``a*b`` mod p (Kronecker substitution)."""
    a = a[:n]
    b = b[:n]
    if n <= 0 or not a or not b:
        return []
    m = min(len(a), len(b))
    nbytes = (m * (p - 1) ** 2).bit_length() // 8 + 1
    pa = int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in a), "little")
    pb = int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in b), "little")
    size = min(n, len(a) + len(b) - 1)
    raw = (pa * pb).to_bytes(nbytes * (len(a) + len(b)), "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") % p for i in range(size)]


def _inv_unit(a: Sequence[int], r: int, p: int) -> list[int]:
    """Inverse of a power series with a[0] != 0, modulo X^r (Newton iteration)."""
    g = [pow(a[0], -1, p)]
    k = 1
    while k < r:
        k = min(2 * k, r)
        e = _mul_trunc(a, g, k, p)
        e += [0] * (k - len(e))
        e = [(-c) % p for c in e]
        e[0] = (e[0] + 2) % p
        g = _mul_trunc(g, e, k, p)
        g += [0] * (k - len(g))
    return g[:r]


# ---------------------------------------------------------------------------
# absolute values


@dataclass(frozen=True)
class AbsValue:
    """``|x| = p^(-neg_log)`` if exact, else the bound ``|x| <= p^(-neg_log)``."""

    p: int
    neg_log: int
    exact: bool = True

    def compare(self, other: AbsValue) -> int:
        """Sign of ``|self| - |other|``; raises when precision cannot decide it."""
        if self.exact and other.exact:
            return (self.neg_log < other.neg_log) - (self.neg_log > other.neg_log)
        if self.exact and not other.exact:
            if self.neg_log < other.neg_log:
                return 1
        elif other.exact and not self.exact:
            if other.neg_log < self.neg_log:
                return -1
        raise UndecidableAtPrecision(f"cannot compare {self} with {other}")

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __str__(self):
        base = f"{self.p}^{-self.neg_log}"
        return base if self.exact else f"<= {base}"


# ---------------------------------------------------------------------------
# Laurent series


class LaurentSeries:
    """Element of F_p((X)) known modulo ``O(X^prec)``.  Immutable."""

    __slots__ = ("p", "lead", "coeffs", "prec")

    def __init__(self, p: int, lead: int, coeffs: Iterable[int], prec: int):
        check_prime(p)
        cs = [c % p for c in coeffs][: max(0, prec - lead)]
        i = 0
        while i < len(cs) and cs[i] == 0:
            i += 1
        if i == len(cs):
            lead, cs = prec, []
        else:
            lead, cs = lead + i, cs[i:]
            cs.extend([0] * (prec - lead - len(cs)))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lead", lead)
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentSeries is immutable")

    def __reduce__(self):
        return (LaurentSeries, (self.p, self.lead, self.coeffs, self.prec))

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, p: int, prec: int = DEFAULT_PREC) -> LaurentSeries:
        return cls(p, prec, (), prec)

    @classmethod
    def monomial(cls, p: int, coeff: int, exp: int, prec: int = DEFAULT_PREC) -> LaurentSeries:
        return cls(p, exp, (coeff,), prec)

    @classmethod
    def constant(cls, p: int, c: int, prec: int = DEFAULT_PREC) -> LaurentSeries:
        return cls(p, 0, (c,), prec)

    @classmethod
    def from_dict(cls, p: int, terms: Mapping[int, int], prec: int = DEFAULT_PREC) -> LaurentSeries:
        """Series from ``{exponent: coefficient}``; exponents >= prec are dropped."""
        known = {k: c for k, c in terms.items() if k < prec}
        if not known:
            return cls.zero(p, prec)
        lo = min(known)
        cs = [0] * (prec - lo)
        for k, c in known.items():
            cs[k - lo] = (cs[k - lo] + c) % p
        return cls(p, lo, cs, prec)

    @classmethod
    def from_poly(cls, p: int, coeffs: Sequence[int], prec: int = DEFAULT_PREC) -> LaurentSeries:
        return cls(p, 0, coeffs, prec)

    # -- inspection -------------------------------------------------------

    def is_zero(self) -> bool:
        """True iff no known coefficient is nonzero (zero to precision)."""
        return not self.coeffs

    @property
    def valuation(self) -> int | None:
        return None if self.is_zero() else self.lead

    def abs_value(self) -> AbsValue:
        return AbsValue(self.p, self.lead, not self.is_zero())

    def coefficient(self, k: int) -> FpElement:
        if k >= self.prec:
            raise InsufficientPrecision(f"coefficient of X^{k} unknown (precision {self.prec})")
        if k < self.lead:
            return FpElement(0, self.p)
        return FpElement(self.coeffs[k - self.lead], self.p)

    def terms(self) -> dict[int, int]:
        return {self.lead + i: c for i, c in enumerate(self.coeffs) if c}

    def truncate(self, n: int) -> LaurentSeries:
        if n >= self.prec:
            return self
        return LaurentSeries(self.p, self.lead, self.coeffs, n)

    def shift(self, k: int) -> LaurentSeries:
        """Exact multiplication by X^k."""
        return LaurentSeries(self.p, self.lead + k, self.coeffs, self.prec + k)

    def agrees(self, other: LaurentSeries) -> bool:
        """Equal on every coefficient both operands know."""
        return (self - other).is_zero()

    def _window(self, lo: int, hi: int) -> list[int]:
        """Coefficients for exponents lo..hi-1 (all < prec)."""
        out = [0] * (hi - lo)
        for i, c in enumerate(self.coeffs):
            k = self.lead + i
            if k >= hi:
                break
            if k >= lo:
                out[k - lo] = c
        return out

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> LaurentSeries:
        if isinstance(other, LaurentSeries):
            if other.p != self.p:
                raise FieldError(f"mixing F_{self.p}((X)) and F_{other.p}((X))")
            return other
        if isinstance(other, FpElement):
            other = other.value
        if isinstance(other, int):
            # exact constant: never the binding precision constraint
            return LaurentSeries(self.p, 0, (other,), max(self.prec, 1) + max(0, -self.lead) + 1)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = min(self.prec, other.prec)
        lo = min(self.lead, other.lead, prec)
        a = self._window(lo, prec)
        b = other._window(lo, prec)
        return LaurentSeries(self.p, lo, [x + y for x, y in zip(a, b)], prec)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.p, self.lead, [-c for c in self.coeffs], self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return series_mul(self, other)

    __rmul__ = __mul__

    def inverse(self) -> LaurentSeries:
        return series_inv(self)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return series_mul(self, series_inv(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return series_mul(other, series_inv(self))

    def __pow__(self, n: int) -> LaurentSeries:
        if n < 0:
            return series_inv(self) ** (-n)
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else series_mul(result, base)
            n >>= 1
            if n:
                base = series_mul(base, base)
        if result is None:
            return LaurentSeries.constant(self.p, 1, max(self.prec, 1) + max(0, -self.lead) + 1)
        return result

    # -- identity ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.p, self.lead, self.coeffs, self.prec) == (other.p, other.lead, other.coeffs, other.prec)

    def __hash__(self):
        return hash((self.p, self.lead, self.coeffs, self.prec))

    def __str__(self):
        return format_series(self)

    def __repr__(self):
        return f"LaurentSeries({format_series(self)!r}, p={self.p})"


def series_mul(x: LaurentSeries, y: LaurentSeries) -> LaurentSeries:
    """Product; a zero-to-precision operand contributes its prec as valuation bound."""
    if x.p != y.p:
        raise FieldError("operands over different fields")
    prec = min(x.prec + y.lead, y.prec + x.lead)
    lead = x.lead + y.lead
    n = prec - lead
    if n <= 0 or x.is_zero() or y.is_zero():
        return LaurentSeries.zero(x.p, prec)
    return LaurentSeries(x.p, lead, _mul_trunc(x.coeffs, y.coeffs, n, x.p), prec)


def series_inv(x: LaurentSeries) -> LaurentSeries:
    """Inverse with relative precision preserved: known up to ``prec - 2*v``."""
    if x.is_zero():
        raise ZeroDivisorToPrecision(f"cannot invert {x}: zero to precision {x.prec}")
    v = x.lead
    r = x.prec - v
    return LaurentSeries(x.p, -v, _inv_unit(x.coeffs, r, x.p), r - v)


def valuation_abs(x: LaurentSeries) -> AbsValue:
    return x.abs_value()


# ---------------------------------------------------------------------------
# literal syntax:  1 + X^2 + 3*X^-1 + O(X^16)


def _format_term(c: int, k: int) -> str:
    if k == 0:
        return str(c)
    mono = "X" if k == 1 else f"X^{k}"
    return mono if c == 1 else f"{c}*{mono}"


def format_series(x: LaurentSeries) -> str:
    terms = [_format_term(c, x.lead + i) for i, c in enumerate(x.coeffs) if c]
    if not terms:
        terms = ["0"]
    terms.append(f"O(X^{x.prec})")
    return " + ".join(terms)


def parse_series_terms(ts: TokenStream, p: int | None, allow_o_only: bool = True):
    """Parse ``term {(+|-) term} [+ O(X^n)]`` from a token stream.

    Returns ``(terms, prec)`` where ``prec`` is None without an O-term.
    With ``p=None`` coefficients are neither range-checked nor reduced.
    """
    terms: dict[int, int] = {}
    prec = None
    sign = 1
    first = True
    while True:
        tok = ts.peek()
        if tok.kind == "O" and (allow_o_only or not first):
            ts.next()
            ts.expect("(")
            ts.expect("X")
            ts.expect("^")
            prec = ts.expect_int()
            ts.expect(")")
            if sign < 0:
                raise ExprSyntaxError(tok.pos, ["+"], "O-term must be added")
            break
        coeff = 1
        if tok.kind == "num":
            coeff = int(ts.next().text)
            if p is not None and not 0 <= coeff < p:
                raise ExprSyntaxError(tok.pos, [f"coefficient in 0..{p - 1}"], f"coefficient {coeff} out of range for p={p}")
            exp = _parse_x_power(ts) if ts.accept("*") else 0
        elif tok.kind == "X":
            exp = _parse_x_power(ts)
        else:
            raise ExprSyntaxError(tok.pos, ["X", "num", "O"], f"expected a series term, got {tok.text or 'end of input'!r}")
        terms[exp] = terms.get(exp, 0) + sign * coeff
        if p is not None:
            terms[exp] %= p
        first = False
        if ts.accept("+"):
            sign = 1
        elif ts.accept("-"):
            sign = -1
        else:
            break
    return terms, prec


def _parse_x_power(ts: TokenStream) -> int:
    ts.expect("X")
    if ts.accept("^"):
        return ts.expect_int()
    return 1


def parse_series(text: str, p: int, prec: int | None = None) -> LaurentSeries:
    """Parse a series literal; without an O-term the precision is ``prec``."""
    ts = TokenStream(text)
    terms, o_prec = parse_series_terms(ts, p)
    ts.expect_end()
    if o_prec is None:
        o_prec = DEFAULT_PREC if prec is None else prec
    elif any(k >= o_prec and c for k, c in terms.items()):
        raise ExprSyntaxError(0, ["term below the O-term"], "term at or beyond the O-term exponent")
    return LaurentSeries.from_dict(p, terms, o_prec)
