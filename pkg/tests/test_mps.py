import gzip
import os
import sys
from fractions import Fraction
from pathlib import Path
import tempfile
import unittest
from unittest import mock


PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCRIPT_DIR = PROJECT_ROOT / "script"
TESTS_DIR = PROJECT_ROOT / "tests"

# Add script directory to path
sys.path.insert(0, str(SCRIPT_DIR))
sys.path.insert(0, str(TESTS_DIR))

from errors import FormatError, MPSParseError
import mps
from mps import FIXED_FIELDS, format_mps_number, parse_mps, read_mps, write_mps
from oracle import brute_force
from standard_form import to_standard_form

TINY = """NAME TINY
ROWS
 N COST
 E R1
COLUMNS
 X COST 1 R1 3
RHS
 RHS R1 1
ENDATA
"""

RICH = """* exercise every section
NAME RICH
OBJSENSE
    MAX
ROWS
 N  PROFIT
 L  CAP
 G  DEMAND
 E  BAL
 N  SPARE
COLUMNS
    X  PROFIT  0.1  CAP  1/3
    X  SPARE  7
    Y  PROFIT  -2.5e-1  DEMAND  1
    Y  BAL  1
    Z  BAL  -1  CAP  2
    W  PROFIT  0
RHS
    RHS  PROFIT  5  CAP  12
    RHS  DEMAND  1  BAL  0
RANGES
    RNG  CAP  4
BOUNDS
 UP BND  X  10
 LO BND  Y  -1/2
 FR BND  Z
 FX BND  W  3
ENDATA
"""


def _fixed_line(*fields):
    line = [" "] * FIXED_FIELDS[-1][1]
    for (start, _), text in zip(FIXED_FIELDS, fields):
        line[start - 1:start - 1 + len(text)] = list(text)
    return "".join(line).rstrip()


def _snapshot(general):
    return (
        general.name,
        general.sense,
        [(r.name, r.kind, r.rhs, r.range) for r in general.rows],
        [(v.name, v.lower, v.upper) for v in general.variables],
        general.matrix.to_dense(),
        list(general.objective),
        general.objective_constant,
    )


class ParseMPSTests(unittest.TestCase):
    def test_minimal_instance(self):
        general = parse_mps(TINY.replace(" R1 3", " R1 1"))
        lp, _ = to_standard_form(general)
        self.assertEqual(lp.A.to_dense(), [[1]])
        self.assertEqual(lp.b, (1,))
        self.assertEqual(lp.c, (1,))
        self.assertEqual(general.name, "TINY")

    def test_numerals_are_exact(self):
        general = parse_mps(RICH)
        self.assertEqual(general.objective[0], Fraction(1, 10))
        self.assertNotEqual(general.objective[0], Fraction(0.1))
        self.assertEqual(general.objective[1], Fraction(-1, 4))
        self.assertEqual(general.matrix.to_dense()[0][0], Fraction(1, 3))

    def test_sections(self):
        general = parse_mps(RICH)
        self.assertEqual(general.sense, "max")
        self.assertEqual([r.name for r in general.rows], ["CAP", "DEMAND", "BAL"])
        self.assertEqual(general.rows[0].bounds(), (8, 12))
        self.assertEqual(general.objective_constant, -5)
        self.assertEqual([(v.lower, v.upper) for v in general.variables],
                         [(0, 10), (Fraction(-1, 2), None), (None, None), (3, 3)])
        self.assertEqual(general.objective_name, "PROFIT")

    def test_inline_objsense(self):
        general = parse_mps(TINY.replace("ROWS", "OBJSENSE MAXIMIZE\nROWS"))
        self.assertEqual(general.sense, "max")

    def test_ranged_equality_rows(self):
        text = TINY.replace("ENDATA", "RANGES\n RNG R1 2\nENDATA")
        self.assertEqual(parse_mps(text).rows[0].bounds(), (1, 3))
        text = TINY.replace("ENDATA", "RANGES\n RNG R1 -2\nENDATA")
        self.assertEqual(parse_mps(text).rows[0].bounds(), (-1, 1))

    def test_negative_upper_bound_frees_lower(self):
        text = TINY.replace("ENDATA", "BOUNDS\n UP BND X -1\nENDATA")
        with mock.patch.object(mps, "log") as mock_log:
            general = parse_mps(text)
        self.assertEqual((general.variables[0].lower, general.variables[0].upper), (None, -1))
        mock_log.assert_called_once()

    def test_fixed_format(self):
        text = "\n".join([
            "NAME          FIXED",
            "ROWS",
            _fixed_line("N", "COST"),
            _fixed_line("L", "LIM"),
            "COLUMNS",
            _fixed_line("", "X ONE", "COST", "-1", "LIM", "2"),
            "RHS",
            _fixed_line("", "RHS", "LIM", "3"),
            "BOUNDS",
            _fixed_line("UP", "BND", "X ONE", "1"),
            "ENDATA",
        ])
        general = parse_mps(text, fixed=True)
        self.assertEqual(general.variables[0].name, "X ONE")
        self.assertEqual(general.variables[0].upper, 1)
        self.assertEqual(general.matrix.to_dense(), [[2]])
        self.assertEqual(general.rows[0].rhs, 3)
        lp, vmap = to_standard_form(general)
        self.assertEqual(brute_force(lp), ("optimal", -1))


class ParseErrorTests(unittest.TestCase):
    def assertParseError(self, text, line_number):
        with self.assertRaises(MPSParseError) as ctx:
            parse_mps(text)
        self.assertEqual(ctx.exception.line_number, line_number)
        self.assertIn(f"line {line_number}", str(ctx.exception))

    def test_unknown_section(self):
        self.assertParseError(TINY.replace("RHS\n", "FOO\n"), 7)

    def test_duplicate_entry(self):
        self.assertParseError(TINY.replace(" X COST 1 R1 3", " X COST 1 R1 3\n X R1 4"), 7)

    def test_unknown_row(self):
        self.assertParseError(TINY.replace(" X COST 1 R1 3", " X COST 1 R9 3"), 6)

    def test_column_not_contiguous(self):
        text = TINY.replace(" X COST 1 R1 3", " X COST 1\n Y R1 1\n X R1 3")
        self.assertParseError(text, 8)

    def test_bad_numeral(self):
        self.assertParseError(TINY.replace("R1 3", "R1 3..0"), 6)

    def test_integer_markers_rejected(self):
        text = TINY.replace(" X COST 1 R1 3", "    MARKER  'MARKER'  'INTORG'\n X COST 1 R1 3")
        self.assertParseError(text, 6)
        self.assertParseError(TINY.replace("ENDATA", "BOUNDS\n BV BND X\nENDATA"), 10)

    def test_data_outside_section(self):
        self.assertParseError(" X COST 1\n" + TINY, 1)

    def test_mps_errors_are_format_errors(self):
        with self.assertRaises(FormatError):
            parse_mps("ROWS\n E R1\nCOLUMNS\n X R1 1 R1 2\nENDATA\n")


class WriteMPSTests(unittest.TestCase):
    def test_number_formatting(self):
        self.assertEqual(format_mps_number(Fraction(1, 10)), "0.1")
        self.assertEqual(format_mps_number(Fraction(-3, 8)), "-0.375")
        self.assertEqual(format_mps_number(Fraction(1, 3)), "1/3")
        self.assertEqual(format_mps_number(Fraction(-7, 3)), "-7/3")
        self.assertEqual(format_mps_number(Fraction(5)), "5")

    def test_round_trip(self):
        general = parse_mps(RICH)
        again = parse_mps(write_mps(general))
        self.assertEqual(_snapshot(again), _snapshot(general))

    def test_round_trip_keeps_optimum(self):
        general = parse_mps(RICH)
        again = parse_mps(write_mps(general))
        first, _ = to_standard_form(general)
        second, _ = to_standard_form(again)
        self.assertEqual(brute_force(first), brute_force(second))


class ReadMPSTests(unittest.TestCase):
    def test_gzip_and_default_name(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "third.mps.gz")
            with gzip.open(path, "wt", encoding="utf-8") as f:
                f.write(TINY.replace("NAME TINY", "NAME"))
            general = read_mps(path)
        self.assertEqual(general.name, "third")
        self.assertEqual(general.matrix.to_dense(), [[3]])

    def test_missing_file(self):
        with self.assertRaises(OSError):
            read_mps("/nonexistent/instance.mps")


if __name__ == "__main__":
    unittest.main()
