import sys
from fractions import Fraction
import math
from pathlib import Path
import unittest


PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCRIPT_DIR = PROJECT_ROOT / "script"

# Add script directory to path
sys.path.insert(0, str(SCRIPT_DIR))

from errors import NumericalFailure, PrecisionLimitReached
from floatkernel import (DOUBLE, PRECISION_LADDER, FloatArithmetic, Precision, ToleranceSet, boost_precision,
                         round_lp, scale_tolerance, tolerance_set)
from rational import RationalLP


class PrecisionLadderTests(unittest.TestCase):
    def test_ladder(self):
        self.assertEqual(PRECISION_LADDER, (64, 192, 288, 432, 648, 972))

    def test_boost_steps(self):
        self.assertEqual(boost_precision(DOUBLE), Precision(192))
        self.assertEqual(boost_precision(Precision(192)), Precision(288))
        self.assertEqual(boost_precision(Precision(648)), Precision(972))

    def test_boost_past_limit(self):
        with self.assertRaises(PrecisionLimitReached) as ctx:
            boost_precision(Precision(972))
        self.assertEqual(ctx.exception.bits, 972)
        with self.assertRaises(PrecisionLimitReached):
            boost_precision(Precision(192), limit=200)

    def test_unsupported_precision(self):
        with self.assertRaises(ValueError):
            Precision(100)


class ToleranceTests(unittest.TestCase):
    def test_192_bit_tolerances(self):
        tol = tolerance_set(Precision(192))
        self.assertEqual(tol.zero_eps, 1e-57)
        self.assertEqual(tol.pivot_eps, 1e-36)

    def test_double_tolerances(self):
        tol = tolerance_set(DOUBLE)
        self.assertEqual(tol.zero_eps, 1e-19)
        self.assertEqual(tol.pivot_eps, 1e-12)
        self.assertEqual(tol.update_tol, 1e-15)
        self.assertEqual(tol.feas_tol, 1e-9)

    def test_scaled_tolerance_for_quad_mantissa(self):
        scaled = scale_tolerance(1e-6, 113)
        self.assertAlmostEqual(math.log10(scaled), math.log10(3e-11), delta=0.5)

    def test_pure_boosting_scales_feasibility(self):
        tol = tolerance_set(Precision(192), 1e-6, 1e-6, scaled=True)
        self.assertAlmostEqual(math.log10(tol.feas_tol), -18, delta=1e-9)
        self.assertEqual(tolerance_set(Precision(192), 1e-6, 1e-6).feas_tol, 1e-6)

    def test_invalid_tolerances(self):
        with self.assertRaises(ValueError):
            ToleranceSet(0.0, 1e-9, 1e-9, 1e-9, 1e-9)
        with self.assertRaises(ValueError):
            ToleranceSet(1e-6, 1e-9, 1e-9, 1e-9, 1e-9)


class FloatArithmeticTests(unittest.TestCase):
    def test_double_uses_hardware_floats(self):
        arith = FloatArithmetic(DOUBLE)
        self.assertTrue(arith.is_double)
        third = arith.from_rational(Fraction(1, 3))
        self.assertIsInstance(third, float)
        self.assertEqual(third, 1 / 3)

    def test_dyadic_values_are_exact(self):
        for bits in (64, 192, 972):
            arith = FloatArithmetic(Precision(bits))
            self.assertEqual(arith.to_rational(arith.from_rational(Fraction(1, 2))), Fraction(1, 2))
            self.assertEqual(arith.to_rational(arith.from_rational(Fraction(-3, 8))), Fraction(-3, 8))

    def test_nearest_rounding_at_192_bits(self):
        arith = FloatArithmetic(Precision(192))
        value = arith.to_rational(arith.from_rational(Fraction(1, 10)))
        # 1/10 lies in [2^-4, 2^-3)
        self.assertLessEqual(abs(value - Fraction(1, 10)), Fraction(1, 2 ** 193) * Fraction(1, 2 ** 3))
        self.assertNotEqual(value, Fraction(1, 10))

    def test_contexts_are_independent(self):
        low = FloatArithmetic(Precision(192))
        high = FloatArithmetic(Precision(288))
        a = low.to_rational(low.from_rational(Fraction(1, 3)))
        b = high.to_rational(high.from_rational(Fraction(1, 3)))
        self.assertLess(abs(b - Fraction(1, 3)), abs(a - Fraction(1, 3)))
        self.assertEqual(low.ctx.prec, 192)

    def test_overflow_and_non_finite(self):
        arith = FloatArithmetic(DOUBLE)
        with self.assertRaises(NumericalFailure):
            arith.from_rational(Fraction(10 ** 400))
        with self.assertRaises(NumericalFailure):
            arith.to_rational(float("inf"))


class RoundLPTests(unittest.TestCase):
    def test_round_lp_drops_underflowing_entries(self):
        lp = RationalLP.from_dense([[1, Fraction(1, 2 ** 1100)]], [Fraction(1, 3)], [1, 1], name="tiny")
        flp = round_lp(lp, DOUBLE)
        self.assertEqual(flp.columns[1], ())
        self.assertEqual(flp.b, [1 / 3])
        self.assertEqual((flp.m, flp.n), (1, 2))
        self.assertEqual(flp.precision, DOUBLE)

        wide = round_lp(lp, Precision(192))
        self.assertEqual(len(wide.columns[1]), 1)


if __name__ == "__main__":
    unittest.main()
