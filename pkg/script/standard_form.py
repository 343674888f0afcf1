"""General LPs (ranged rows, upper bounds, free variables, max sense) and their
conversion into the standard form min{c^T x | Ax = b, x >= l}."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import DimensionError, FormatError
from rational import ONE, ZERO, RationalLP, SparseRationalMatrix, as_rational, dot

ROW_KINDS = ("E", "L", "G")


@dataclass
class GeneralRow:
    name: str
    kind: str
    rhs: Fraction = ZERO
    range: Optional[Fraction] = None

    def bounds(self) -> Tuple[Optional[Fraction], Optional[Fraction]]:
        """(lo, hi) of the row activity; None is infinite."""
        if self.kind not in ROW_KINDS:
            raise FormatError(f"row {self.name}: unknown kind {self.kind!r}")
        if self.kind == "E":
            if self.range is not None:
                raise FormatError(f"row {self.name} is declared both equality and ranged")
            return self.rhs, self.rhs
        if self.range is None:
            return (None, self.rhs) if self.kind == "L" else (self.rhs, None)
        width = abs(self.range)
        if self.kind == "L":
            return self.rhs - width, self.rhs
        return self.rhs, self.rhs + width


@dataclass
class GeneralVariable:
    name: str
    lower: Optional[Fraction] = ZERO
    upper: Optional[Fraction] = None


@dataclass
class GeneralLP:
    """LP in the shape MPS files describe it."""

    name: str
    rows: List[GeneralRow]
    variables: List[GeneralVariable]
    matrix: SparseRationalMatrix  # len(rows) x len(variables)
    objective: List[Fraction]
    objective_constant: Fraction = ZERO
    sense: str = "min"
    objective_name: str = "OBJ"

    def __post_init__(self):
        if self.matrix.nrows != len(self.rows) or self.matrix.ncols != len(self.variables):
            raise DimensionError(
                f"matrix is {self.matrix.nrows}x{self.matrix.ncols}, "
                f"expected {len(self.rows)}x{len(self.variables)}"
            )
        if len(self.objective) != len(self.variables):
            raise DimensionError("objective length does not match the number of variables")
        if self.sense not in ("min", "max"):
            raise FormatError(f"unknown objective sense {self.sense!r}")

    def objective_value(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.objective, x) + self.objective_constant


@dataclass(frozen=True)
class VariableMap:
    """x_orig[j] = offsets[j] + sum(coef * x_std[k] for k, coef in terms[j])."""

    terms: Tuple[Tuple[Tuple[int, Fraction], ...], ...]
    offsets: Tuple[Fraction, ...]
    sense_sign: int = 1
    objective_offset: Fraction = ZERO
    names: Tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def identity(cls, n: int, names: Sequence[str] = ()) -> "VariableMap":
        return cls(tuple(((j, ONE),) for j in range(n)), (ZERO,) * n, 1, ZERO, tuple(names))

    def recover(self, x_std: Sequence[Fraction]) -> List[Fraction]:
        return [off + sum((coef * x_std[k] for k, coef in terms), ZERO)
                for terms, off in zip(self.terms, self.offsets)]

    def recover_direction(self, v_std: Sequence[Fraction]) -> List[Fraction]:
        return [sum((coef * v_std[k] for k, coef in terms), ZERO) for terms in self.terms]

    def original_objective(self, std_objective: Fraction) -> Fraction:
        return self.sense_sign * std_objective + self.objective_offset

    @property
    def is_identity(self) -> bool:
        return (self.sense_sign == 1 and self.objective_offset == 0
                and all(o == 0 for o in self.offsets)
                and all(t == ((j, ONE),) for j, t in enumerate(self.terms)))


def to_standard_form(general: GeneralLP) -> Tuple[RationalLP, VariableMap]:
    """Rewrite a general LP into min{c^T x | Ax = b, x >= l} with an exact back-map."""
    sign = -1 if general.sense == "max" else 1
    row_bounds = [row.bounds() for row in general.rows]

    # structural columns: (original index, coefficient) with the lower bound of the new column
    std_cols: List[Dict[int, Fraction]] = []
    std_cost: List[Fraction] = []
    std_lower: List[Fraction] = []
    extra_rows: List[Tuple[Dict[int, Fraction], Fraction]] = []  # appended equality rows
    terms: List[Tuple[Tuple[int, Fraction], ...]] = []
    offsets: List[Fraction] = []
    rows = general.rows

    def new_column(entries: Dict[int, Fraction], cost: Fraction, lower: Fraction) -> int:
        std_cols.append({i: v for i, v in entries.items() if v != 0})
        std_cost.append(cost)
        std_lower.append(lower)
        return len(std_cols) - 1

    for j, var in enumerate(general.variables):
        column = {i: v for i, v in general.matrix.column(j)}
        cost = sign * general.objective[j]
        lo, hi = var.lower, var.upper
        if lo is not None and hi is not None and hi < lo:
            raise FormatError(f"variable {var.name} has upper bound below its lower bound")
        if lo is not None:
            k = new_column(column, cost, lo)
            terms.append(((k, ONE),))
            offsets.append(ZERO)
            if hi is not None:
                extra_rows.append(({k: ONE}, hi))
        elif hi is not None:
            # x = hi - x', x' >= 0
            k = new_column({i: -v for i, v in column.items()}, -cost, ZERO)
            terms.append(((k, -ONE),))
            offsets.append(hi)
        else:
            kp = new_column(column, cost, ZERO)
            kn = new_column({i: -v for i, v in column.items()}, -cost, ZERO)
            terms.append(((kp, ONE), (kn, -ONE)))
            offsets.append(ZERO)

    # rhs after substituting the constant offsets of shifted variables
    offset_activity = general.matrix.matvec([as_rational(o) for o in offsets])
    b: List[Fraction] = []
    for i, (lo, hi) in enumerate(row_bounds):
        shift = offset_activity[i]
        if lo is not None and hi is not None and lo == hi:
            b.append(lo - shift)
        elif lo is None:
            b.append(hi - shift)
            new_column({i: ONE}, ZERO, ZERO)
        elif hi is None:
            b.append(lo - shift)
            new_column({i: -ONE}, ZERO, ZERO)
        else:
            if hi < lo:
                raise FormatError(f"row {rows[i].name} has an empty range")
            b.append(lo - shift)
            s = new_column({i: -ONE}, ZERO, ZERO)
            extra_rows.append(({s: ONE}, hi - lo))

    # upper-bound and range rows: x_k + t = u with a fresh slack t >= 0
    for entries, rhs in extra_rows:
        row_index = len(b)
        for k, v in entries.items():
            std_cols[k][row_index] = v
        new_column({row_index: ONE}, ZERO, ZERO)
        b.append(rhs)

    nrows = len(b)
    matrix = SparseRationalMatrix.from_columns(nrows, std_cols)
    lp = RationalLP(matrix, tuple(b), tuple(std_cost), tuple(std_lower), general.name)
    objective_offset = dot(general.objective, offsets) + general.objective_constant
    vmap = VariableMap(tuple(terms), tuple(offsets), sign, objective_offset,
                       tuple(v.name for v in general.variables))
    return lp, vmap


def general_from_standard(lp: RationalLP, name: str = "") -> GeneralLP:
    """Wrap a standard-form LP as a general LP (equality rows, lower bounds only)."""
    rows = [GeneralRow(f"R{i + 1}", "E", lp.b[i]) for i in range(lp.m)]
    variables = [GeneralVariable(f"X{j + 1}", lp.lower[j], None) for j in range(lp.n)]
    return GeneralLP(name or lp.name or "LP", rows, variables, lp.A, list(lp.c))
