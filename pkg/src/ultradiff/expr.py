"""Expression language for maps f: U -> K^e over variables x1..xd.

Grammar::

    top   := sum | '[' sum {',' sum} ']'
    sum   := prod {('+'|'-') prod}
    prod  := power {('*'|'/') power}
    power := atom {'^' nat}
    atom  := var | const | builtin '(' sum ')' | '(' sum ')'
           | '(' series-literal-with-O-term ')' | 'O(X^' int ')'
    const := nat | 'X' ['^' int]

Constants written without an O-term are exact; they are realized at a
precision that never binds when the expression is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

from .errors import ArityError, DomainError, ExprSyntaxError, FieldError, UndecidableAtPrecision
from .field import LaurentSeries, parse_series_terms
from .lexer import TokenStream

# ---------------------------------------------------------------------------
# builtins


def gauss_expand(x: LaurentSeries) -> LaurentSeries:
    """Move the coefficient at X^k to X^floor(3k/2) (argument must lie in O).

    Unknown input coefficients (k >= prec) can only reach exponents
    >= floor(3*prec/2), which is therefore the output precision.
    """
    if not x.is_zero() and x.lead < 0:
        raise DomainError(f"phi32 is defined on the unit ball only; got valuation {x.lead}")
    if x.prec < 0:
        raise UndecidableAtPrecision(f"cannot certify {x} lies in the unit ball")
    out_prec = (3 * x.prec) // 2
    return LaurentSeries.from_dict(x.p, {(3 * k) // 2: c for k, c in x.terms().items()}, out_prec)


BUILTINS: dict[str, Callable[[LaurentSeries], LaurentSeries]] = {
    "phi32": gauss_expand,
}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Monomial:
    """Exact constant coeff * X^exp (coeff reduced mod p on evaluation)."""

    coeff: int
    exp: int = 0


@dataclass(frozen=True)
class SeriesLiteral:
    """Series constant with an explicit O-term, bound to a field on evaluation."""

    terms: tuple  # sorted (exponent, coefficient) pairs, nonzero coefficients
    prec: int

    @classmethod
    def from_terms(cls, terms: dict, prec: int) -> "SeriesLiteral":
        return cls(tuple(sorted((k, c) for k, c in terms.items() if c)), prec)


@dataclass(frozen=True)
class Var:
    index: int
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    value: Union[Monomial, SeriesLiteral]
    pos: int = field(default=-1, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.value, LaurentSeries):
            object.__setattr__(self, "value", SeriesLiteral.from_terms(self.value.terms(), self.value.prec))


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class IntPow:
    base: "Node"
    exponent: int
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Builtin:
    name: str
    arg: "Node"
    pos: int = field(default=-1, compare=False, repr=False)


Node = Union[Var, Const, Add, Sub, Mul, Div, IntPow, Builtin]


@dataclass(frozen=True)
class Expr:
    """A map K^arity -> K^coarity given by one AST per output component."""

    components: tuple
    arity: int

    def __post_init__(self):
        if self.arity < 1 or not self.components:
            raise ArityError("expressions need d >= 1 variables and e >= 1 components")
        for node in self.components:
            for idx in _var_indices(node):
                if not 1 <= idx <= self.arity:
                    raise ArityError(f"variable x{idx} out of range for arity {self.arity}")

    @property
    def coarity(self) -> int:
        return len(self.components)

    def __call__(self, point: Sequence[LaurentSeries]) -> tuple[LaurentSeries, ...]:
        return eval_expr(self, point)

    def __str__(self):
        return format_expr(self)


def _var_indices(node):
    if isinstance(node, Var):
        yield node.index
    elif isinstance(node, (Add, Sub, Mul, Div)):
        yield from _var_indices(node.left)
        yield from _var_indices(node.right)
    elif isinstance(node, IntPow):
        yield from _var_indices(node.base)
    elif isinstance(node, Builtin):
        yield from _var_indices(node.arg)


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str, arity: int):
        self.ts = TokenStream(text)
        self.arity = arity

    def top(self) -> tuple:
        if self.ts.accept("["):
            comps = [self.sum()]
            while self.ts.accept(","):
                comps.append(self.sum())
            self.ts.expect("]")
        else:
            comps = [self.sum()]
        self.ts.expect_end()
        return tuple(comps)

    def sum(self):
        node = self.prod()
        while True:
            tok = self.ts.peek()
            if tok.kind == "+":
                self.ts.next()
                node = Add(node, self.prod(), tok.pos)
            elif tok.kind == "-":
                self.ts.next()
                node = Sub(node, self.prod(), tok.pos)
            else:
                return node

    def prod(self):
        node = self.power()
        while True:
            tok = self.ts.peek()
            if tok.kind == "*":
                self.ts.next()
                node = Mul(node, self.power(), tok.pos)
            elif tok.kind == "/":
                self.ts.next()
                node = Div(node, self.power(), tok.pos)
            else:
                return node

    def power(self):
        node = self.atom()
        while self.ts.peek().kind == "^":
            tok = self.ts.next()
            node = IntPow(node, int(self.ts.expect("num").text), tok.pos)
        return node

    def atom(self):
        ts = self.ts
        tok = ts.peek()
        if tok.kind == "var":
            ts.next()
            idx = int(tok.text[1:])
            if not 1 <= idx <= self.arity:
                raise ArityError(f"variable {tok.text} at position {tok.pos} exceeds arity {self.arity}")
            return Var(idx, tok.pos)
        if tok.kind == "num":
            ts.next()
            return Const(Monomial(int(tok.text), 0), tok.pos)
        if tok.kind == "X":
            ts.next()
            exp = ts.expect_int() if ts.accept("^") else 1
            return Const(Monomial(1, exp), tok.pos)
        if tok.kind == "O":
            ts.next()
            ts.expect("(")
            ts.expect("X")
            ts.expect("^")
            prec = ts.expect_int()
            ts.expect(")")
            return Const(SeriesLiteral((), prec), tok.pos)
        if tok.kind == "ident":
            if tok.text not in BUILTINS:
                raise ExprSyntaxError(tok.pos, sorted(BUILTINS), f"unknown builtin {tok.text!r}")
            ts.next()
            ts.expect("(")
            arg = self.sum()
            ts.expect(")")
            return Builtin(tok.text, arg, tok.pos)
        if tok.kind == "(":
            ts.next()
            lit = self._try_series_literal()
            if lit is not None:
                return Const(lit, tok.pos)
            node = self.sum()
            ts.expect(")")
            return node
        raise ExprSyntaxError(tok.pos, ["var", "num", "X", "O", "(", "builtin"],
                              f"unexpected {tok.text or 'end of input'!r}")

    def _try_series_literal(self):
        """A parenthesized literal ending in an O-term becomes one constant."""
        ts = self.ts
        start = ts.index
        try:
            terms, prec = parse_series_terms(ts, p=None)
        except ExprSyntaxError:
            ts.index = start
            return None
        if prec is None or ts.peek().kind != ")":
            ts.index = start
            return None
        ts.next()
        return SeriesLiteral.from_terms(terms, prec)


def parse_expr(text: str, arity: int) -> Expr:
    """Parse an expression in ``arity`` variables."""
    return Expr(_Parser(text, arity).top(), arity)


# ---------------------------------------------------------------------------
# printer

_SUM, _PROD, _POW = 0, 1, 2


def _fmt_term(c: int, k: int) -> str:
    if k == 0:
        return str(c)
    mono = "X" if k == 1 else f"X^{k}"
    return mono if c == 1 else f"{c}*{mono}"


def _fmt_const(value) -> str:
    if isinstance(value, Monomial):
        if value.exp == 0 or value.coeff == 1:
            return _fmt_term(value.coeff, value.exp)
        return f"({_fmt_term(value.coeff, value.exp)})"
    text = ""
    for k, c in value.terms:
        term = _fmt_term(abs(c), k)
        if not text:
            text = term if c > 0 else f"0 - {term}"
        else:
            text += f" + {term}" if c > 0 else f" - {term}"
    return f"({text or '0'} + O(X^{value.prec}))"


def _fmt(node, level: int) -> str:
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Builtin):
        return f"{node.name}({_fmt(node.arg, _SUM)})"
    if isinstance(node, IntPow):
        base = node.base
        text = _fmt(base, _POW)
        if isinstance(base, Const) and isinstance(base.value, Monomial) and base.value.exp != 0 and base.value.coeff == 1:
            # X^k followed by ^n would re-parse as one monomial
            text = f"({text})"
        return f"{text}^{node.exponent}"
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        text = f"{_fmt(node.left, _SUM)} {op} {_fmt(node.right, _PROD)}"
        return text if level <= _SUM else f"({text})"
    if isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        text = f"{_fmt(node.left, _PROD)}{op}{_fmt(node.right, _POW)}"
        return text if level <= _PROD else f"({text})"
    raise TypeError(f"not an expression node: {node!r}")


def format_expr(expr: Expr) -> str:
    parts = [_fmt(c, _SUM) for c in expr.components]
    return parts[0] if len(parts) == 1 else "[" + ", ".join(parts) + "]"


# ---------------------------------------------------------------------------
# evaluation


def _realize_const(value, p: int, prec: int) -> LaurentSeries:
    if isinstance(value, Monomial):
        return LaurentSeries.monomial(p, value.coeff, value.exp, max(prec, value.exp + 1))
    for _, c in value.terms:
        if not 0 <= c < p and not -p < c < 0:
            raise FieldError(f"literal coefficient {c} out of range for p={p}")
    return LaurentSeries.from_dict(p, dict(value.terms), value.prec)


def _eval(node, point, p: int, cprec: int) -> LaurentSeries:
    if isinstance(node, Var):
        return point[node.index - 1]
    if isinstance(node, Const):
        return _realize_const(node.value, p, cprec)
    if isinstance(node, Add):
        return _eval(node.left, point, p, cprec) + _eval(node.right, point, p, cprec)
    if isinstance(node, Sub):
        return _eval(node.left, point, p, cprec) - _eval(node.right, point, p, cprec)
    if isinstance(node, Mul):
        return _eval(node.left, point, p, cprec) * _eval(node.right, point, p, cprec)
    if isinstance(node, Div):
        return _eval(node.left, point, p, cprec) / _eval(node.right, point, p, cprec)
    if isinstance(node, IntPow):
        return _eval(node.base, point, p, cprec) ** node.exponent
    if isinstance(node, Builtin):
        return BUILTINS[node.name](_eval(node.arg, point, p, cprec))
    raise TypeError(f"not an expression node: {node!r}")


def eval_expr(f: Expr, point: Sequence[LaurentSeries]) -> tuple[LaurentSeries, ...]:
    """Evaluate every component of ``f`` at ``point`` with exact precision tracking."""
    if len(point) != f.arity:
        raise ArityError(f"expected {f.arity} coordinates, got {len(point)}")
    p = point[0].p
    if any(z.p != p for z in point):
        raise FieldError("point coordinates over different fields")
    n_in = max(z.prec for z in point)
    lo = min(min(z.lead for z in point), 0)
    # exact constants must not be the binding precision constraint
    cprec = 2 * max(n_in, 1) - lo + 1
    return tuple(_eval(c, point, p, cprec) for c in f.components)
