import sys
from fractions import Fraction
from itertools import permutations
from pathlib import Path
import random
import unittest


PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCRIPT_DIR = PROJECT_ROOT / "script"
TESTS_DIR = PROJECT_ROOT / "tests"

# Add script directory to path
sys.path.insert(0, str(SCRIPT_DIR))
sys.path.insert(0, str(TESTS_DIR))

from errors import DimensionError, SingularBasisError
from oracle import brute_force
from rational import PrimalDualSolution, RationalLP, SparseRationalMatrix
from simplex import Basis
from verify import (Certificate, CertificateKind, basic_direction, basic_solution, check_oracle_contract,
                    dual_objective, lu_factorize_rational, phase_one_duals, verify_certificate, verify_farkas,
                    verify_optimal, verify_ray)


def _leibniz_det(rows):
    size = len(rows)
    total = Fraction(0)
    for perm in permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        term = Fraction(-1 if inversions % 2 else 1)
        for i in range(size):
            term *= rows[i][perm[i]]
            if not term:
                break
        total += term
    return total


def _one_row_lp():
    # min -x s.t. x + s = 1
    return RationalLP.from_dense([[1, 1]], [1], [-1, 0])


class RationalLUTests(unittest.TestCase):
    def test_identity(self):
        lu = lu_factorize_rational(SparseRationalMatrix.from_dense([[1, 0], [0, 1]]))
        self.assertEqual(lu.determinant(), 1)
        self.assertEqual(lu.solve([Fraction(3), Fraction(4)]), [3, 4])

    def test_permutation_matrix(self):
        lu = lu_factorize_rational(SparseRationalMatrix.from_dense([[0, 1], [1, 0]]))
        self.assertEqual(lu.determinant(), -1)
        self.assertEqual(lu.solve([Fraction(1), Fraction(2)]), [2, 1])
        self.assertEqual(lu.solve_transpose([Fraction(1), Fraction(2)]), [2, 1])

    def test_random_determinant_and_solves(self):
        rng = random.Random(7)
        checked = 0
        while checked < 3:
            rows = [[Fraction(rng.randint(-9, 9)) for _ in range(6)] for _ in range(6)]
            det = _leibniz_det(rows)
            matrix = SparseRationalMatrix.from_dense(rows)
            if det == 0:
                with self.assertRaises(SingularBasisError):
                    lu_factorize_rational(matrix)
                continue
            lu = lu_factorize_rational(matrix)
            self.assertEqual(lu.determinant(), det)
            v = [Fraction(rng.randint(-5, 5)) for _ in range(6)]
            x = lu.solve(v)
            self.assertEqual(matrix.matvec(x), v)
            y = lu.solve_transpose(v)
            self.assertEqual(matrix.rmatvec(y), v)
            self.assertEqual(lu.multiply(x), v)
            checked += 1

    def test_singular(self):
        with self.assertRaises(SingularBasisError):
            lu_factorize_rational(SparseRationalMatrix.from_dense([[1, 2], [2, 4]]))
        with self.assertRaises(DimensionError):
            lu_factorize_rational(SparseRationalMatrix.from_dense([[1, 2]]))


class BasicSolutionTests(unittest.TestCase):
    def test_optimal_basis(self):
        lp = _one_row_lp()
        sol = basic_solution(lp, Basis(2, 1, (0,)))
        self.assertEqual(sol.x, (1, 0))
        self.assertEqual(sol.y, (-1,))
        self.assertTrue(verify_optimal(lp, sol))
        self.assertEqual(dual_objective(lp, sol.y), -1)

    def test_suboptimal_basis_rejected(self):
        lp = _one_row_lp()
        sol = basic_solution(lp, Basis(2, 1, (1,)))
        self.assertEqual(sol.x, (0, 1))
        self.assertEqual(sol.y, (0,))
        self.assertFalse(verify_optimal(lp, sol))

    def test_basic_logical_with_value_rejected(self):
        lp = _one_row_lp()
        sol = basic_solution(lp, Basis.slack(2, 1))
        self.assertFalse(verify_optimal(lp, sol))

    def test_matches_brute_force(self):
        lp = RationalLP.from_dense([[1, 1, 1, 0], [1, -1, 0, 1]], [4, 1], [-2, -3, 0, 0])
        status, value = brute_force(lp)
        self.assertEqual(status, "optimal")
        certified = 0
        for basic in permutations(range(4), 2):
            try:
                sol = basic_solution(lp, Basis(4, 2, basic))
            except SingularBasisError:
                continue
            if verify_optimal(lp, sol):
                certified += 1
                self.assertEqual(sum(c * x for c, x in zip(lp.c, sol.x)), value)
        self.assertGreater(certified, 0)

    def test_nonzero_lower_bounds(self):
        # min x s.t. x - s = 0 with x >= 2
        lp = RationalLP.from_dense([[1, -1]], [0], [1, 0], lower=[2, 0])
        sol = basic_solution(lp, Basis(2, 1, (1,)))
        self.assertEqual(sol.x, (2, 2))
        self.assertTrue(verify_optimal(lp, sol))


class FarkasTests(unittest.TestCase):
    def setUp(self):
        # x = -1, x >= 0
        self.lp = RationalLP.from_dense([[1]], [-1], [0])

    def test_valid_proof(self):
        self.assertTrue(verify_farkas(self.lp, [Fraction(-1)]))
        self.assertTrue(verify_certificate(self.lp, Certificate.infeasible([Fraction(-1, 3)])))

    def test_perturbed_proof(self):
        self.assertFalse(verify_farkas(self.lp, [Fraction(1, 10 ** 20)]))
        self.assertFalse(verify_farkas(self.lp, [Fraction(0)]))
        self.assertFalse(verify_farkas(self.lp, [Fraction(-1), Fraction(0)]))

    def test_feasible_lps_have_no_proof(self):
        rng = random.Random(3)
        for _ in range(20):
            rows = [[Fraction(rng.randint(-5, 5)) for _ in range(3)] for _ in range(2)]
            x0 = [Fraction(rng.randint(0, 4)) for _ in range(3)]
            b = [sum(a * x for a, x in zip(row, x0)) for row in rows]
            lp = RationalLP.from_dense(rows, b, [0, 0, 0])
            y = [Fraction(rng.randint(-5, 5)) for _ in range(2)]
            self.assertFalse(verify_farkas(lp, y))

    def test_phase_one_duals(self):
        y = phase_one_duals(self.lp, Basis.slack(1, 1))
        self.assertEqual(y, [-1])
        self.assertTrue(verify_farkas(self.lp, y))
        feasible = RationalLP.from_dense([[1]], [1], [0])
        self.assertIsNone(phase_one_duals(feasible, Basis(1, 1, (0,))))


class RayTests(unittest.TestCase):
    def test_unbounded_direction(self):
        # min -x - y s.t. x - y = 0
        lp = RationalLP.from_dense([[1, -1]], [0], [-1, -1])
        direction = basic_direction(lp, Basis(2, 1, (0,)), 1)
        self.assertEqual(direction[:2], [1, 1])
        self.assertTrue(verify_ray(lp, direction[:2]))
        cert = Certificate.unbounded([Fraction(0), Fraction(0)], direction[:2])
        self.assertTrue(verify_certificate(lp, cert))

    def test_bad_rays(self):
        lp = RationalLP.from_dense([[1, -1]], [0], [-1, -1])
        self.assertFalse(verify_ray(lp, [Fraction(1), Fraction(0)]))
        self.assertFalse(verify_ray(lp, [Fraction(-1), Fraction(-1)]))
        bounded = RationalLP.from_dense([[1, -1]], [0], [1, 1])
        self.assertFalse(verify_ray(bounded, [Fraction(1), Fraction(1)]))

    def test_witness_must_be_feasible(self):
        lp = RationalLP.from_dense([[1, -1]], [0], [-1, -1])
        cert = Certificate.unbounded([Fraction(1), Fraction(0)], [Fraction(1), Fraction(1)])
        self.assertFalse(verify_certificate(lp, cert))


class CertificateTests(unittest.TestCase):
    def test_optimal_certificate_embeds_objective(self):
        lp = _one_row_lp()
        sol = basic_solution(lp, Basis(2, 1, (0,)))
        cert = Certificate.optimal(lp, sol, Basis(2, 1, (0,)))
        self.assertIs(cert.kind, CertificateKind.OPTIMAL)
        self.assertEqual(cert.objective, -1)
        self.assertTrue(verify_certificate(lp, cert))

    def test_wrong_objective_rejected(self):
        lp = _one_row_lp()
        sol = basic_solution(lp, Basis(2, 1, (0,)))
        cert = Certificate(CertificateKind.OPTIMAL, x=sol.x, y=sol.y, objective=Fraction(-2))
        self.assertFalse(verify_certificate(lp, cert))


class OracleContractTests(unittest.TestCase):
    def setUp(self):
        # min x s.t. x = 1
        self.lp = RationalLP.from_dense([[1]], [1], [1])

    def test_exact_solution_passes(self):
        sol = PrimalDualSolution([1], [1])
        self.assertTrue(check_oracle_contract(self.lp, sol, Fraction(1, 2), Fraction(1, 10 ** 9)))

    def test_large_primal_violation_fails(self):
        sol = PrimalDualSolution([3], [1])
        self.assertFalse(check_oracle_contract(self.lp, sol, Fraction(1, 2), Fraction(1)))

    def test_parameters_checked(self):
        with self.assertRaises(ValueError):
            check_oracle_contract(self.lp, PrimalDualSolution([1], [1]), Fraction(1), Fraction(1))


if __name__ == "__main__":
    unittest.main()
