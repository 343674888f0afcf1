"""Exact rational scalars, sparse matrices, the standard-form LP and residuals.

All values are ``fractions.Fraction`` which keeps numerator and denominator
coprime with a positive denominator after every operation.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import re
from typing import Iterable, List, Mapping, Sequence, Tuple, Union

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import DimensionError, RationalDomainError, RationalParseError

Rational = Fraction
RationalLike = Union[Fraction, int, str]
Entry = Tuple[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)

# digits, optional fraction part, optional exponent; ".5" and "5." are accepted too
_DECIMAL_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_QUOTIENT_RE = re.compile(r"^([+-]?\d+)/(\d+)$")


# ==============================================================================
# SCALARS
# ==============================================================================
def parse_rational(text: str) -> Fraction:
    """Parse a decimal, scientific or ``num/den`` numeral exactly."""
    token = text.strip() if isinstance(text, str) else text
    if not isinstance(token, str) or not token:
        raise RationalParseError(str(text))
    quotient = _QUOTIENT_RE.match(token)
    if quotient:
        num, den = int(quotient.group(1)), int(quotient.group(2))
        if den == 0:
            raise RationalDomainError(f"zero denominator in {token!r}")
        return Fraction(num, den)
    if not _DECIMAL_RE.match(token):
        raise RationalParseError(token)
    # Fraction parses decimal strings without passing through binary floats
    return Fraction(token)


def format_rational(value: Fraction) -> str:
    """Print as ``num/den``; parse_rational inverts it exactly."""
    q = Fraction(value)
    return f"{q.numerator}/{q.denominator}"


def as_rational(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def as_vector(values: Iterable[RationalLike]) -> Tuple[Fraction, ...]:
    return tuple(as_rational(v) for v in values)


def inf_norm(values: Iterable[Fraction]) -> Fraction:
    return max((abs(v) for v in values), default=ZERO)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v) if a and b), ZERO)


# ==============================================================================
# SPARSE MATRIX
# ==============================================================================
@dataclass(frozen=True)
class SparseRationalMatrix:
    """Column-major sparse matrix with strictly increasing row indices per column."""

    nrows: int
    ncols: int
    columns: Tuple[Tuple[Entry, ...], ...]

    def __post_init__(self):
        if self.nrows < 0 or self.ncols < 0:
            raise DimensionError("matrix dimensions must be nonnegative")
        if len(self.columns) != self.ncols:
            raise DimensionError(f"expected {self.ncols} columns, got {len(self.columns)}")
        for j, col in enumerate(self.columns):
            last = -1
            for i, value in col:
                if not 0 <= i < self.nrows:
                    raise DimensionError(f"row index {i} out of range in column {j}")
                if i <= last:
                    raise DimensionError(f"row indices not strictly increasing in column {j}")
                if value == 0:
                    raise DimensionError(f"explicit zero stored at ({i}, {j})")
                last = i

    @classmethod
    def from_columns(cls, nrows: int, columns: Sequence[Union[Mapping[int, RationalLike], Iterable[Tuple[int, RationalLike]]]]) -> "SparseRationalMatrix":
        """Build from per-column {row: value} maps or (row, value) pairs; zeros are dropped."""
        built = []
        for j, col in enumerate(columns):
            items = col.items() if isinstance(col, Mapping) else col
            entries = {}
            for i, value in items:
                if i in entries:
                    raise DimensionError(f"duplicate entry ({i}, {j})")
                entries[i] = as_rational(value)
            built.append(tuple((i, v) for i, v in sorted(entries.items()) if v != 0))
        return cls(nrows, len(built), tuple(built))

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[RationalLike]], ncols: int = None) -> "SparseRationalMatrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise DimensionError("ragged dense matrix")
        cols = []
        for j in range(ncols):
            cols.append([(i, rows[i][j]) for i in range(nrows)])
        return cls.from_columns(nrows, cols)

    @property
    def nnz(self) -> int:
        return sum(len(col) for col in self.columns)

    def column(self, j: int) -> Tuple[Entry, ...]:
        return self.columns[j]

    def dense_column(self, j: int) -> List[Fraction]:
        out = [ZERO] * self.nrows
        for i, v in self.columns[j]:
            out[i] = v
        return out

    @cached_property
    def rows(self) -> Tuple[Tuple[Entry, ...], ...]:
        """Row access materialised on first use; entries are (column, value)."""
        rows: List[List[Entry]] = [[] for _ in range(self.nrows)]
        for j, col in enumerate(self.columns):
            for i, v in col:
                rows[i].append((j, v))
        return tuple(tuple(r) for r in rows)

    def to_dense(self) -> List[List[Fraction]]:
        out = [[ZERO] * self.ncols for _ in range(self.nrows)]
        for j, col in enumerate(self.columns):
            for i, v in col:
                out[i][j] = v
        return out

    def matvec(self, x: Sequence[Fraction]) -> List[Fraction]:
        """A x."""
        if len(x) != self.ncols:
            raise DimensionError(f"vector length {len(x)} != {self.ncols} columns")
        out = [ZERO] * self.nrows
        for j, col in enumerate(self.columns):
            xj = x[j]
            if xj:
                for i, v in col:
                    out[i] += v * xj
        return out

    def column_dot(self, j: int, y: Sequence[Fraction]) -> Fraction:
        return sum((v * y[i] for i, v in self.columns[j] if y[i]), ZERO)

    def rmatvec(self, y: Sequence[Fraction]) -> List[Fraction]:
        """A^T y."""
        if len(y) != self.nrows:
            raise DimensionError(f"vector length {len(y)} != {self.nrows} rows")
        return [self.column_dot(j, y) for j in range(self.ncols)]

    def select_columns(self, indices: Sequence[int]) -> "SparseRationalMatrix":
        return SparseRationalMatrix(self.nrows, len(indices), tuple(self.columns[j] for j in indices))


# ==============================================================================
# LP DATA MODEL
# ==============================================================================
@dataclass(frozen=True)
class RationalLP:
    """min c^T x  s.t.  A x = b,  x >= lower  (all data exact)."""

    A: SparseRationalMatrix
    b: Tuple[Fraction, ...]
    c: Tuple[Fraction, ...]
    lower: Tuple[Fraction, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "b", as_vector(self.b))
        object.__setattr__(self, "c", as_vector(self.c))
        object.__setattr__(self, "lower", as_vector(self.lower))
        if len(self.b) != self.A.nrows:
            raise DimensionError(f"b has length {len(self.b)}, A has {self.A.nrows} rows")
        if len(self.c) != self.A.ncols:
            raise DimensionError(f"c has length {len(self.c)}, A has {self.A.ncols} columns")
        if len(self.lower) != self.A.ncols:
            raise DimensionError(f"lower has length {len(self.lower)}, A has {self.A.ncols} columns")

    @property
    def m(self) -> int:
        return self.A.nrows

    @property
    def n(self) -> int:
        return self.A.ncols

    @classmethod
    def from_dense(cls, A: Sequence[Sequence[RationalLike]], b, c, lower=None, name: str = "") -> "RationalLP":
        ncols = len(c)
        matrix = SparseRationalMatrix.from_dense(A, ncols=ncols)
        if lower is None:
            lower = [0] * ncols
        return cls(matrix, b, c, lower, name)


@dataclass(frozen=True)
class PrimalDualSolution:
    x: Tuple[Fraction, ...]
    y: Tuple[Fraction, ...]
    source_precision: int = 0  # 0: exact

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "y", as_vector(self.y))

    def check_dimensions(self, lp: RationalLP) -> None:
        if len(self.x) != lp.n or len(self.y) != lp.m:
            raise DimensionError(
                f"solution dimensions ({len(self.x)}, {len(self.y)}) do not match LP ({lp.n}, {lp.m})"
            )


@dataclass(frozen=True)
class Residuals:
    b_hat: Tuple[Fraction, ...]
    l_hat: Tuple[Fraction, ...]
    c_hat: Tuple[Fraction, ...]
    delta_P: Fraction
    delta_D: Fraction

    @property
    def max_violation(self) -> Fraction:
        return max(self.delta_P, self.delta_D)


def objective_value(lp: RationalLP, x: Sequence[Fraction]) -> Fraction:
    return dot(lp.c, x)


def reduced_costs(lp: RationalLP, y: Sequence[Fraction]) -> List[Fraction]:
    """c - A^T y."""
    return [cj - aty for cj, aty in zip(lp.c, lp.A.rmatvec(y))]


def compute_residuals(lp: RationalLP, sol: PrimalDualSolution) -> Residuals:
    """Exact primal and dual residuals of a candidate solution.

    Only positive parts of lower - x count as primal violation; a variable
    strictly above its bound is slack, not error.
    """
    sol.check_dimensions(lp)
    ax = lp.A.matvec(sol.x)
    b_hat = tuple(bi - axi for bi, axi in zip(lp.b, ax))
    l_hat = tuple(li - xi for li, xi in zip(lp.lower, sol.x))
    c_hat = tuple(reduced_costs(lp, sol.y))
    delta_P = max(inf_norm(b_hat), max((v for v in l_hat if v > 0), default=ZERO))
    delta_D = max(ZERO, max((-v for v in c_hat), default=ZERO))
    return Residuals(b_hat, l_hat, c_hat, delta_P, delta_D)
