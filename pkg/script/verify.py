"""Exact checks: rational LU of basis matrices, basic solutions and certificates."""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import DimensionError, SingularBasisError
from rational import (ONE, ZERO, PrimalDualSolution, RationalLP, SparseRationalMatrix,
                      compute_residuals, dot, inf_norm, objective_value, reduced_costs)
from simplex import Basis


# ==============================================================================
# RATIONAL LU
# ==============================================================================
class RationalLU:
    """Sparse Gaussian elimination record of a square rational matrix.

    Step k pivots on (rows[k], cols[k]); `eliminations[k]` lists the row
    operations row_i -= l * row_p and `upper[k]` the pivot row at that step.
    """

    def __init__(self, size: int):
        self.size = size
        self.rows: List[int] = []
        self.cols: List[int] = []
        self.upper: List[Dict[int, Fraction]] = []
        self.eliminations: List[List[Tuple[int, Fraction]]] = []

    def pivot(self, k: int) -> Fraction:
        return self.upper[k][self.cols[k]]

    def solve(self, v: Sequence[Fraction]) -> List[Fraction]:
        """x with B x = v."""
        if len(v) != self.size:
            raise DimensionError(f"right-hand side has length {len(v)}, expected {self.size}")
        w = list(v)
        for k, ops in enumerate(self.eliminations):
            wp = w[self.rows[k]]
            if wp:
                for i, factor in ops:
                    w[i] -= factor * wp
        x = [ZERO] * self.size
        for k in range(self.size - 1, -1, -1):
            row = self.upper[k]
            col = self.cols[k]
            s = w[self.rows[k]]
            for j, u in row.items():
                if j != col and x[j]:
                    s -= u * x[j]
            x[col] = s / row[col]
        return x

    def solve_transpose(self, v: Sequence[Fraction]) -> List[Fraction]:
        """y with B^T y = v."""
        if len(v) != self.size:
            raise DimensionError(f"right-hand side has length {len(v)}, expected {self.size}")
        z = [ZERO] * self.size
        for k in range(self.size):
            col = self.cols[k]
            s = v[col]
            for kk in range(k):
                u = self.upper[kk].get(col)
                if u:
                    s -= u * z[self.rows[kk]]
            z[self.rows[k]] = s / self.pivot(k)
        for k in range(len(self.eliminations) - 1, -1, -1):
            p = self.rows[k]
            for i, factor in self.eliminations[k]:
                if z[i]:
                    z[p] -= factor * z[i]
        return z

    def determinant(self) -> Fraction:
        det = ONE
        for k in range(self.size):
            det *= self.pivot(k)
        return det * _permutation_sign(self.rows) * _permutation_sign(self.cols)

    def multiply(self, x: Sequence[Fraction]) -> List[Fraction]:
        """Reconstruct B x from the factors (P B Q = L U)."""
        # U x in elimination order, then undo the row operations
        w = [ZERO] * self.size
        for k in range(self.size):
            w[self.rows[k]] = sum((u * x[j] for j, u in self.upper[k].items()), ZERO)
        for k in range(len(self.eliminations) - 1, -1, -1):
            wp = w[self.rows[k]]
            for i, factor in self.eliminations[k]:
                w[i] += factor * wp
        return w


def _permutation_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def lu_factorize_rational(B: SparseRationalMatrix) -> RationalLU:
    """Exact LU with Markowitz pivot choice among nonzero entries."""
    if B.nrows != B.ncols:
        raise DimensionError(f"basis matrix is {B.nrows}x{B.ncols}, not square")
    size = B.nrows
    active: Dict[int, Dict[int, Fraction]] = {i: {} for i in range(size)}
    for j, col in enumerate(B.columns):
        for i, v in col:
            active[i][j] = v
    lu = RationalLU(size)
    for _ in range(size):
        col_count: Dict[int, int] = {}
        for row in active.values():
            for j in row:
                col_count[j] = col_count.get(j, 0) + 1
        best = None
        for i, row in active.items():
            for j in row:
                key = ((len(row) - 1) * (col_count[j] - 1), i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            raise SingularBasisError(f"basis matrix is singular (rank {len(lu.rows)} of {size})")
        _, p, q = best
        prow = active.pop(p)
        pivot = prow[q]
        ops = []
        for i, row in active.items():
            a = row.get(q)
            if a is None:
                continue
            factor = a / pivot
            ops.append((i, factor))
            for j, u in prow.items():
                value = row.get(j, ZERO) - factor * u
                if value:
                    row[j] = value
                else:
                    row.pop(j, None)
        lu.rows.append(p)
        lu.cols.append(q)
        lu.upper.append(prow)
        lu.eliminations.append(ops)
    return lu


# ==============================================================================
# BASIC SOLUTIONS
# ==============================================================================
def basis_matrix(lp: RationalLP, basis: Basis) -> SparseRationalMatrix:
    """Columns of the basic variables; logical n+i is the unit column e_i."""
    if basis.n != lp.n or basis.m != lp.m:
        raise DimensionError(f"basis is for a {basis.m}x{basis.n} LP, not {lp.m}x{lp.n}")
    columns = []
    for j in basis.basic:
        if j >= lp.n:
            columns.append(((j - lp.n, ONE),))
        else:
            columns.append(lp.A.column(j))
    return SparseRationalMatrix(lp.m, lp.m, tuple(columns))


def basic_primal(lp: RationalLP, basis: Basis, lu: RationalLU) -> List[Fraction]:
    """Values of all n+m variables with nonbasics at their lower bounds."""
    basic = set(basis.basic)
    values = [ZERO] * (lp.n + lp.m)
    rhs = list(lp.b)
    for j in range(lp.n):
        if j not in basic:
            values[j] = lp.lower[j]
            if lp.lower[j]:
                for i, v in lp.A.column(j):
                    rhs[i] -= v * lp.lower[j]
    for k, value in enumerate(lu.solve(rhs)):
        values[basis.basic[k]] = value
    return values


def basic_solution(lp: RationalLP, basis: Basis, lu: Optional[RationalLU] = None) -> PrimalDualSolution:
    """Exact primal-dual pair of a basis.

    A basic logical with a nonzero value leaves A x != b for the structural
    part, so verify_optimal rejects such a basis.
    """
    if lu is None:
        lu = lu_factorize_rational(basis_matrix(lp, basis))
    values = basic_primal(lp, basis, lu)
    cb = [lp.c[j] if j < lp.n else ZERO for j in basis.basic]
    y = lu.solve_transpose(cb)
    return PrimalDualSolution(tuple(values[:lp.n]), tuple(y))


def phase_one_duals(lp: RationalLP, basis: Basis, lu: Optional[RationalLU] = None) -> Optional[List[Fraction]]:
    """Exact duals of the sum-of-infeasibilities objective at `basis`.

    Returns None when the basic solution is exactly feasible.
    """
    if lu is None:
        lu = lu_factorize_rational(basis_matrix(lp, basis))
    values = basic_primal(lp, basis, lu)
    costs = []
    infeasible = False
    for j in basis.basic:
        lo = lp.lower[j] if j < lp.n else ZERO
        up = None if j < lp.n else ZERO
        if values[j] < lo:
            costs.append(-ONE)
            infeasible = True
        elif up is not None and values[j] > up:
            costs.append(ONE)
            infeasible = True
        else:
            costs.append(ZERO)
    if not infeasible:
        return None
    return lu.solve_transpose(costs)


def basic_direction(lp: RationalLP, basis: Basis, entering: int,
                    lu: Optional[RationalLU] = None) -> List[Fraction]:
    """Edge direction of raising nonbasic `entering`: v_q = 1, v_B = -B^-1 a_q."""
    if lu is None:
        lu = lu_factorize_rational(basis_matrix(lp, basis))
    rhs = [ZERO] * lp.m
    for i, v in lp.A.column(entering):
        rhs[i] = v
    alpha = lu.solve(rhs)
    direction = [ZERO] * (lp.n + lp.m)
    direction[entering] = ONE
    for k, j in enumerate(basis.basic):
        direction[j] = -alpha[k]
    return direction


# ==============================================================================
# VERIFICATION
# ==============================================================================
def is_primal_feasible(lp: RationalLP, x: Sequence[Fraction]) -> bool:
    if len(x) != lp.n:
        return False
    if any(xi < li for xi, li in zip(x, lp.lower)):
        return False
    return all(axi == bi for axi, bi in zip(lp.A.matvec(list(x)), lp.b))


def verify_optimal(lp: RationalLP, sol: PrimalDualSolution) -> bool:
    """A x = b, x >= l, c - A^T y >= 0 and complementary slackness, exactly."""
    if len(sol.x) != lp.n or len(sol.y) != lp.m:
        return False
    res = compute_residuals(lp, sol)
    if res.delta_P != 0 or res.delta_D != 0:
        return False
    if any(v > 0 for v in res.l_hat):
        return False
    slack = sum(((xj - lj) * dj for xj, lj, dj in zip(sol.x, lp.lower, res.c_hat)), ZERO)
    return slack == 0


def farkas_value(lp: RationalLP, y: Sequence[Fraction]) -> Tuple[List[Fraction], Fraction]:
    """(A^T y, y^T b - (A^T y)^T l)."""
    aty = lp.A.rmatvec(list(y))
    return aty, dot(y, lp.b) - dot(aty, lp.lower)


def verify_farkas(lp: RationalLP, y: Sequence[Fraction]) -> bool:
    """True iff A^T y <= 0 and y^T b - (y^T A) l > 0, which empties {Ax = b, x >= l}."""
    if len(y) != lp.m:
        return False
    aty, value = farkas_value(lp, y)
    return all(v <= 0 for v in aty) and value > 0


def verify_ray(lp: RationalLP, v: Sequence[Fraction]) -> bool:
    """A v = 0, v >= 0 and c^T v < 0, exactly."""
    if len(v) != lp.n:
        return False
    if any(vj < 0 for vj in v):
        return False
    if any(lp.A.matvec(list(v))):
        return False
    return dot(lp.c, v) < 0


def check_oracle_contract(lp: RationalLP, sol: PrimalDualSolution, eta: Fraction, sigma: Fraction) -> bool:
    """Violation bounds of an approximate LP oracle, evaluated exactly.

    |Ax - b| <= eta, x >= l - eta, c - A^T y >= -eta and
    |(x - l)^T (c - A^T y)| <= sigma.
    """
    if not 0 < eta < 1 or not sigma > 0:
        raise ValueError("eta must lie in (0, 1) and sigma must be positive")
    res = compute_residuals(lp, sol)
    if inf_norm(res.b_hat) > eta:
        return False
    if any(v > eta for v in res.l_hat):
        return False
    if any(d < -eta for d in res.c_hat):
        return False
    slack = sum(((xj - lj) * dj for xj, lj, dj in zip(sol.x, lp.lower, res.c_hat)), ZERO)
    return abs(slack) <= sigma


# ==============================================================================
# CERTIFICATES
# ==============================================================================
class CertificateKind(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Certificate:
    kind: CertificateKind
    x: Optional[Tuple[Fraction, ...]] = None
    y: Optional[Tuple[Fraction, ...]] = None
    basis: Optional[Basis] = None
    objective: Optional[Fraction] = None
    farkas_y: Optional[Tuple[Fraction, ...]] = None
    witness_x: Optional[Tuple[Fraction, ...]] = None
    ray_v: Optional[Tuple[Fraction, ...]] = None

    @classmethod
    def optimal(cls, lp: RationalLP, sol: PrimalDualSolution, basis: Optional[Basis] = None) -> "Certificate":
        return cls(CertificateKind.OPTIMAL, x=sol.x, y=sol.y, basis=basis,
                   objective=objective_value(lp, sol.x))

    @classmethod
    def infeasible(cls, farkas_y: Sequence[Fraction]) -> "Certificate":
        return cls(CertificateKind.INFEASIBLE, farkas_y=tuple(farkas_y))

    @classmethod
    def unbounded(cls, witness_x: Sequence[Fraction], ray_v: Sequence[Fraction]) -> "Certificate":
        return cls(CertificateKind.UNBOUNDED, witness_x=tuple(witness_x), ray_v=tuple(ray_v))


def verify_certificate(lp: RationalLP, cert: Certificate) -> bool:
    if cert.kind is CertificateKind.OPTIMAL:
        if cert.x is None or cert.y is None:
            return False
        sol = PrimalDualSolution(cert.x, cert.y)
        return verify_optimal(lp, sol) and cert.objective == objective_value(lp, sol.x)
    if cert.kind is CertificateKind.INFEASIBLE:
        return cert.farkas_y is not None and verify_farkas(lp, cert.farkas_y)
    if cert.witness_x is None or cert.ray_v is None:
        return False
    return is_primal_feasible(lp, cert.witness_x) and verify_ray(lp, cert.ray_v)


def dual_objective(lp: RationalLP, y: Sequence[Fraction]) -> Fraction:
    """b^T y + l^T (c - A^T y), equal to the primal objective at an optimal basis."""
    return dot(lp.b, y) + dot(lp.lower, reduced_costs(lp, y))
