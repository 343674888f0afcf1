"""Exact MPS reader and writer (fixed and free format).

Every numeral goes through ``parse_rational``; nothing passes through binary
floating point on the way in.
"""

from fractions import Fraction
import gzip
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import MPSParseError, RationalDomainError, RationalParseError
from rational import ZERO, SparseRationalMatrix, parse_rational
from standard_form import GeneralLP, GeneralRow, GeneralVariable
from utils import LogLevel, log

UNSUPPORTED_BOUNDS = ("BV", "LI", "UI", "SC")

# 1-based column spans of the six fixed-format fields
FIXED_FIELDS = ((2, 3), (5, 12), (15, 22), (25, 36), (40, 47), (50, 61))


def _fixed_fields(line: str) -> List[str]:
    fields = [line[start - 1:end].strip() for start, end in FIXED_FIELDS]
    while fields and not fields[-1]:
        fields.pop()
    return fields


class _MPSReader:
    def __init__(self, fixed: bool):
        self.fixed = fixed
        self.name = ""
        self.sense = "min"
        self.objective_row: Optional[str] = None
        self.free_rows: set = set()
        self.rows: Dict[str, GeneralRow] = {}
        self.row_order: List[str] = []
        self.columns: Dict[str, Dict[str, Fraction]] = {}
        self.objective: Dict[str, Fraction] = {}
        self.objective_constant = ZERO
        self.bounds: Dict[str, List[Optional[Fraction]]] = {}
        self.last_column: Optional[str] = None
        self.line_number = 0

    def error(self, message: str) -> MPSParseError:
        return MPSParseError(message, self.line_number)

    def number(self, token: str) -> Fraction:
        try:
            return parse_rational(token)
        except (RationalParseError, RationalDomainError) as exc:
            raise self.error(f"bad numeral {token!r}: {exc}") from exc

    def fields(self, line: str, section: str) -> List[str]:
        if not self.fixed or section == "OBJSENSE":
            return line.split()
        fields = _fixed_fields(line)
        # field 1 is blank in data sections other than ROWS and BOUNDS
        if section in ("COLUMNS", "RHS", "RANGES"):
            fields = fields[1:]
        return fields

    # ------------------------------------------------------------ sections
    def read(self, text: str) -> GeneralLP:
        section = None
        for self.line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            if not line[0].isspace():
                tokens = line.split()
                head = tokens[0].upper()
                if head == "NAME":
                    self.name = tokens[1] if len(tokens) > 1 else ""
                    section = "NAME"
                elif head == "OBJSENSE":
                    section = "OBJSENSE"
                    if len(tokens) > 1:
                        self.set_sense(tokens[1])
                elif head in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                    section = head
                elif head == "ENDATA":
                    section = "ENDATA"
                    break
                else:
                    raise self.error(f"unknown section {tokens[0]!r}")
                continue
            if section is None or section in ("NAME", "ENDATA"):
                raise self.error("data line outside of a section")
            handler = getattr(self, f"section_{section.lower()}")
            handler(self.fields(line, section))
        if self.objective_row is None and not self.rows:
            raise MPSParseError("no ROWS section found")
        return self.build()

    def set_sense(self, token: str) -> None:
        token = token.upper()
        if token in ("MAX", "MAXIMIZE"):
            self.sense = "max"
        elif token in ("MIN", "MINIMIZE"):
            self.sense = "min"
        else:
            raise self.error(f"unknown objective sense {token!r}")

    def section_objsense(self, fields: List[str]) -> None:
        self.set_sense(fields[0])

    def section_rows(self, fields: List[str]) -> None:
        if len(fields) < 2:
            raise self.error("ROWS entry needs a type and a name")
        kind, name = fields[0].upper(), fields[1]
        if name in self.rows or name == self.objective_row or name in self.free_rows:
            raise self.error(f"row {name} declared twice")
        if kind == "N":
            if self.objective_row is None:
                self.objective_row = name
            else:
                self.free_rows.add(name)
            return
        if kind not in ("E", "L", "G"):
            raise self.error(f"unknown row type {kind!r}")
        self.rows[name] = GeneralRow(name, kind)
        self.row_order.append(name)

    def section_columns(self, fields: List[str]) -> None:
        if len(fields) >= 3 and fields[1].strip("'").upper() == "MARKER":
            raise self.error("integer MARKER lines are not supported; only continuous LPs are solved")
        if len(fields) not in (3, 5):
            raise self.error("COLUMNS entry needs a column name and one or two row/value pairs")
        column = fields[0]
        if column != self.last_column:
            if column in self.columns:
                raise self.error(f"column {column} is not contiguous")
            self.columns[column] = {}
            self.last_column = column
        for row, value in zip(fields[1::2], fields[2::2]):
            self.add_entry(column, row, self.number(value))

    def add_entry(self, column: str, row: str, value: Fraction) -> None:
        if row == self.objective_row:
            if column in self.objective:
                raise self.error(f"duplicate objective entry for column {column}")
            self.objective[column] = value
        elif row in self.free_rows:
            return
        elif row in self.rows:
            if row in self.columns[column]:
                raise self.error(f"duplicate entry for column {column} in row {row}")
            self.columns[column][row] = value
        else:
            raise self.error(f"column {column} references unknown row {row}")

    def _pairs(self, fields: List[str], what: str) -> List[Tuple[str, str]]:
        # the set name is optional: odd field counts carry it
        if len(fields) in (3, 5):
            fields = fields[1:]
        elif len(fields) not in (2, 4):
            raise self.error(f"malformed {what} entry")
        return list(zip(fields[0::2], fields[1::2]))

    def section_rhs(self, fields: List[str]) -> None:
        for row, value in self._pairs(fields, "RHS"):
            number = self.number(value)
            if row == self.objective_row:
                self.objective_constant = -number
            elif row in self.rows:
                self.rows[row].rhs = number
            elif row not in self.free_rows:
                raise self.error(f"RHS references unknown row {row}")

    def section_ranges(self, fields: List[str]) -> None:
        for row, value in self._pairs(fields, "RANGES"):
            if row not in self.rows:
                raise self.error(f"RANGES references unknown row {row}")
            target = self.rows[row]
            number = self.number(value)
            if target.kind == "E":
                # equality rows take the sign of the range value: [b, b+R] or [b+R, b]
                target.kind = "G" if number >= 0 else "L"
            target.range = abs(number)

    def section_bounds(self, fields: List[str]) -> None:
        if not fields:
            raise self.error("empty BOUNDS entry")
        kind = fields[0].upper()
        if kind in UNSUPPORTED_BOUNDS:
            raise self.error(f"bound type {kind} requires integrality, which is not supported")
        needs_value = kind in ("UP", "LO", "FX")
        if kind not in ("UP", "LO", "FX", "FR", "MI", "PL"):
            raise self.error(f"unknown bound type {kind!r}")
        rest = fields[1:]
        expected = 2 if needs_value else 1
        if len(rest) == expected + 1:
            rest = rest[1:]
        if len(rest) != expected:
            raise self.error(f"malformed {kind} bound")
        column = rest[0]
        if column not in self.columns:
            raise self.error(f"bound on unknown column {column}")
        bound = self.bounds.setdefault(column, [ZERO, None])
        value = self.number(rest[1]) if needs_value else None
        if kind == "UP":
            bound[1] = value
            if value < 0 and bound[0] == 0:
                log(f"Column {column}: negative upper bound with zero lower bound, lower bound set to -inf",
                    level=LogLevel.WARNING)
                bound[0] = None
        elif kind == "LO":
            bound[0] = value
        elif kind == "FX":
            bound[0] = bound[1] = value
        elif kind == "FR":
            bound[0] = bound[1] = None
        elif kind == "MI":
            bound[0] = None
        else:
            bound[1] = None

    # --------------------------------------------------------------- build
    def build(self) -> GeneralLP:
        row_index = {name: i for i, name in enumerate(self.row_order)}
        names = list(self.columns)
        matrix = SparseRationalMatrix.from_columns(
            len(self.row_order),
            [{row_index[r]: v for r, v in self.columns[c].items()} for c in names],
        )
        variables = []
        for name in names:
            lower, upper = self.bounds.get(name, [ZERO, None])
            variables.append(GeneralVariable(name, lower, upper))
        return GeneralLP(
            name=self.name,
            rows=[self.rows[r] for r in self.row_order],
            variables=variables,
            matrix=matrix,
            objective=[self.objective.get(c, ZERO) for c in names],
            objective_constant=self.objective_constant,
            sense=self.sense,
            objective_name=self.objective_row or "OBJ",
        )


def parse_mps(text: str, fixed: bool = False) -> GeneralLP:
    """Parse MPS text; `fixed` selects column-position fields instead of whitespace splitting."""
    return _MPSReader(fixed).read(text)


def read_mps(path: str, fixed: bool = False) -> GeneralLP:
    """Read an .mps or .mps.gz file."""
    p = Path(path)
    if p.suffix == ".gz":
        with gzip.open(p, "rt", encoding="utf-8") as f:
            text = f.read()
    else:
        text = p.read_text(encoding="utf-8")
    lp = parse_mps(text, fixed)
    if not lp.name:
        lp.name = p.name.split(".")[0]
    return lp


# ==============================================================================
# WRITER
# ==============================================================================
def format_mps_number(value: Fraction) -> str:
    """Exact decimal when the denominator allows one, otherwise num/den."""
    q = Fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    scaled = abs(q.numerator) * 10 ** digits // q.denominator
    sign = "-" if q < 0 else ""
    whole, frac = divmod(scaled, 10 ** digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def write_mps(general: GeneralLP) -> str:
    """Free-format MPS text that parse_mps reads back to identical rational data."""
    obj = general.objective_name or "OBJ"
    lines = [f"NAME {general.name or 'LP'}"]
    if general.sense == "max":
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(f" N  {obj}")
    for row in general.rows:
        lines.append(f" {row.kind}  {row.name}")
    lines.append("COLUMNS")
    for j, var in enumerate(general.variables):
        entries = []
        if general.objective[j] or not general.matrix.column(j):
            entries.append((obj, general.objective[j]))
        entries += [(general.rows[i].name, v) for i, v in general.matrix.column(j)]
        for row_name, value in entries:
            lines.append(f"    {var.name}  {row_name}  {format_mps_number(value)}")
    lines.append("RHS")
    if general.objective_constant:
        lines.append(f"    RHS  {obj}  {format_mps_number(-general.objective_constant)}")
    for row in general.rows:
        if row.rhs:
            lines.append(f"    RHS  {row.name}  {format_mps_number(row.rhs)}")
    ranged = [row for row in general.rows if row.range is not None]
    if ranged:
        lines.append("RANGES")
        for row in ranged:
            lines.append(f"    RNG  {row.name}  {format_mps_number(row.range)}")
    bounds = []
    for var in general.variables:
        lo, up = var.lower, var.upper
        if lo is None and up is None:
            bounds.append(f" FR BND  {var.name}")
        elif lo is not None and up is not None and lo == up:
            bounds.append(f" FX BND  {var.name}  {format_mps_number(lo)}")
        else:
            if lo is None:
                bounds.append(f" MI BND  {var.name}")
            elif lo != 0:
                bounds.append(f" LO BND  {var.name}  {format_mps_number(lo)}")
            if up is not None:
                bounds.append(f" UP BND  {var.name}  {format_mps_number(up)}")
    if bounds:
        lines.append("BOUNDS")
        lines += bounds
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
