"""Floating-point arithmetic at a configurable mantissa width.

Precision 64 is served by hardware doubles; every wider precision uses its own
``mpmath.MPContext`` so that concurrent solves at different precisions never
share global state.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import Any, List, Sequence, Tuple

import mpmath
from mpmath import libmp

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import NumericalFailure, PrecisionLimitReached
from rational import RationalLP
from utils import DEFAULT_FEAS_TOL, DEFAULT_MAX_PRECISION, DEFAULT_OPT_TOL

DOUBLE_BITS = 64
FIRST_BOOST_BITS = 192
MAX_PRECISION_BITS = DEFAULT_MAX_PRECISION

# exponents c in 10^-floor(p' * c), p' = bits * log10(2)
ZERO_EPS_FACTOR = 1.0
PIVOT_EPS_FACTOR = 0.625
UPDATE_TOL_FACTOR = 0.8


def _ladder(limit: int = MAX_PRECISION_BITS) -> Tuple[int, ...]:
    bits = [DOUBLE_BITS]
    nxt = FIRST_BOOST_BITS
    while nxt <= limit:
        bits.append(nxt)
        nxt = (nxt * 3 + 1) // 2
    return tuple(bits)


PRECISION_LADDER = _ladder()


# ==============================================================================
# PRECISION AND TOLERANCES
# ==============================================================================
@dataclass(frozen=True, order=True)
class Precision:
    bits: int

    def __post_init__(self):
        if self.bits not in PRECISION_LADDER:
            raise ValueError(f"unsupported precision {self.bits} bits; valid: {list(PRECISION_LADDER)}")

    @property
    def is_double(self) -> bool:
        return self.bits == DOUBLE_BITS

    @property
    def decimal_digits(self) -> float:
        return self.bits * math.log10(2)

    def __str__(self) -> str:
        return f"{self.bits} bits"


DOUBLE = Precision(DOUBLE_BITS)


@dataclass(frozen=True)
class ToleranceSet:
    zero_eps: float
    pivot_eps: float
    feas_tol: float
    opt_tol: float
    update_tol: float

    def __post_init__(self):
        values = (self.zero_eps, self.pivot_eps, self.feas_tol, self.opt_tol, self.update_tol)
        if any(not v > 0 for v in values):
            raise ValueError("all tolerances must be strictly positive")
        if self.zero_eps > self.pivot_eps:
            raise ValueError("zero_eps must not exceed pivot_eps")


def power_of_ten_tolerance(p: Precision, factor: float) -> float:
    """10^-floor(p' * factor), correctly rounded to a double."""
    exponent = math.floor(p.decimal_digits * factor)
    return float(Fraction(1, 10 ** exponent))


def scale_tolerance(double_tol: float, bits: int) -> float:
    """Tolerance 2^(a*bits/64) for a double tolerance 2^a."""
    return double_tol ** (bits / DOUBLE_BITS)


def tolerance_set(p: Precision, feas_tol: float = DEFAULT_FEAS_TOL, opt_tol: float = DEFAULT_OPT_TOL,
                  scaled: bool = False) -> ToleranceSet:
    """Tolerances for precision `p`.

    With `scaled` (pure boosting) the feasibility and optimality tolerances
    shrink as tol^(bits/64); otherwise they keep their double-precision values.
    """
    if scaled:
        feas_tol = scale_tolerance(feas_tol, p.bits)
        opt_tol = scale_tolerance(opt_tol, p.bits)
    return ToleranceSet(
        zero_eps=power_of_ten_tolerance(p, ZERO_EPS_FACTOR),
        pivot_eps=power_of_ten_tolerance(p, PIVOT_EPS_FACTOR),
        feas_tol=feas_tol,
        opt_tol=opt_tol,
        update_tol=power_of_ten_tolerance(p, UPDATE_TOL_FACTOR),
    )


def boost_precision(p: Precision, limit: int = MAX_PRECISION_BITS) -> Precision:
    """Next rung of the ladder: 64 -> 192, then x1.5."""
    nxt = FIRST_BOOST_BITS if p.is_double else (p.bits * 3 + 1) // 2
    if nxt > min(limit, MAX_PRECISION_BITS):
        raise PrecisionLimitReached(p.bits, min(limit, MAX_PRECISION_BITS))
    return Precision(nxt)


# ==============================================================================
# ARITHMETIC
# ==============================================================================
class FloatArithmetic:
    """Round-to-nearest conversions and constants for one precision.

    Values are Python floats at 64 bits and ``mpf`` numbers of a private
    context otherwise; both support the ordinary arithmetic operators.
    """

    def __init__(self, precision: Precision):
        self.precision = precision
        if precision.is_double:
            self.ctx = None
        else:
            self.ctx = mpmath.MPContext()
            self.ctx.prec = precision.bits
        self.zero = self.from_rational(Fraction(0))
        self.one = self.from_rational(Fraction(1))

    @property
    def is_double(self) -> bool:
        return self.ctx is None

    def from_rational(self, q: Fraction) -> Any:
        q = Fraction(q)
        if self.ctx is None:
            try:
                # int / int true division is correctly rounded
                return q.numerator / q.denominator
            except OverflowError as exc:
                raise NumericalFailure(f"coefficient {q} exceeds double range") from exc
        raw = libmp.from_rational(q.numerator, q.denominator, self.precision.bits, libmp.round_nearest)
        return self.ctx.make_mpf(raw)

    def to_rational(self, value: Any) -> Fraction:
        """Exact rational value of a float or mpf."""
        if isinstance(value, float):
            if not math.isfinite(value):
                raise NumericalFailure(f"non-finite value {value}")
            return Fraction(value)
        if isinstance(value, int):
            return Fraction(value)
        if not self.ctx.isfinite(value):
            raise NumericalFailure(f"non-finite value {value}")
        sign, man, exp, _ = value._mpf_
        if sign:
            man = -man
        if exp >= 0:
            return Fraction(man << exp)
        return Fraction(man, 1 << -exp)

    def vector(self, values: Sequence[Fraction]) -> List[Any]:
        return [self.from_rational(v) for v in values]

    def rational_vector(self, values: Sequence[Any]) -> List[Fraction]:
        return [self.to_rational(v) for v in values]

    def __repr__(self) -> str:
        return f"FloatArithmetic({self.precision.bits})"


# ==============================================================================
# ROUNDED LP
# ==============================================================================
@dataclass
class FloatLP:
    """Nearest-rounded image of a RationalLP at one precision."""

    columns: Tuple[Tuple[Tuple[int, Any], ...], ...]
    b: List[Any]
    c: List[Any]
    lower: List[Any]
    precision: Precision
    tolerances: ToleranceSet
    arith: FloatArithmetic = field(repr=False)
    name: str = ""

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.c)

    def column_dot(self, j: int, y: Sequence[Any]) -> Any:
        total = self.arith.zero
        for i, v in self.columns[j]:
            total += v * y[i]
        return total

    def dense_column(self, j: int) -> List[Any]:
        out = [self.arith.zero] * self.m
        for i, v in self.columns[j]:
            out[i] = v
        return out


def round_columns(lp: RationalLP, arith: FloatArithmetic) -> Tuple[Tuple[Tuple[int, Any], ...], ...]:
    columns = []
    for col in lp.A.columns:
        rounded = []
        for i, v in col:
            fv = arith.from_rational(v)
            if fv != 0:
                rounded.append((i, fv))
        columns.append(tuple(rounded))
    return tuple(columns)


def round_lp(lp: RationalLP, p: Precision, tolerances: ToleranceSet = None) -> FloatLP:
    """Round every coefficient of `lp` to nearest at `p`."""
    arith = FloatArithmetic(p)
    return FloatLP(
        columns=round_columns(lp, arith),
        b=arith.vector(lp.b),
        c=arith.vector(lp.c),
        lower=arith.vector(lp.lower),
        precision=p,
        tolerances=tolerances or tolerance_set(p),
        arith=arith,
        name=lp.name,
    )
