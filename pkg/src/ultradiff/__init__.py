"""Exact difference calculus over local fields of positive characteristic.

Arithmetic happens in F_p((X)) with explicit O(X^N) tails, so every
reported coefficient is certified.
"""

__version__ = "0.1.0"

from .calculus import (
    AffineMap,
    CheckReport,
    check_fviaphi,
    check_recursion,
    check_simpfml,
    check_symmetry,
    check_transport,
    dd_direct,
    dd_recursive,
    dq1,
    dq_iter,
    flatten_multiindex,
    phi_k,
    theta_alpha,
)
from .domains import (
    AngleDomain,
    BallDomain,
    BlockPoint,
    BracketDomain,
    MultiIndex,
    PhiDomain,
    member_angle,
    member_bracket,
    member_phi,
    parse_domain,
    sample_points,
)
from .errors import (
    ArityError,
    DomainError,
    ExprSyntaxError,
    FieldError,
    InsufficientPrecision,
    PrecisionError,
    SamplerExhausted,
    ShapeError,
    UltradiffError,
    UndecidableAtPrecision,
    ZeroDivisorToPrecision,
)
from .expr import Expr, eval_expr, format_expr, gauss_expand, parse_expr
from .field import AbsValue, FpElement, LaurentSeries, PrimeField, parse_series
from .regularity import (
    HolderReport,
    c2_blowup_scan,
    counterexample_report,
    dd_boundedness_scan,
    holder_estimate,
)
