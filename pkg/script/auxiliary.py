"""Auxiliary LPs deciding feasibility and unboundedness exactly.

Feasibility:   min -tau  s.t.  A xi - (b - A l) tau = 0,  tau + s = 1,  xi, tau, s >= 0.
Unboundedness: min 0     s.t.  A v = 0,  c^T v = -1,  v >= 0.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rational import ONE, ZERO, RationalLP, SparseRationalMatrix


class AuxKind(Enum):
    FEASIBILITY = "feasibility"
    UNBOUNDEDNESS = "unboundedness"


@dataclass(frozen=True)
class AuxiliaryLP:
    kind: AuxKind
    lp: RationalLP
    origin: RationalLP

    @property
    def tau_index(self) -> int:
        return self.origin.n

    def farkas_part(self, y: Sequence[Fraction]) -> List[Fraction]:
        """Duals of the original rows; a Farkas proof of `origin` when tau* = 0."""
        return list(y[:self.origin.m])

    def ray_part(self, x: Sequence[Fraction]) -> List[Fraction]:
        return list(x[:self.origin.n])


def build_feasibility_lp(lp: RationalLP) -> RationalLP:
    m, n = lp.m, lp.n
    residual = [bi - ai for bi, ai in zip(lp.b, lp.A.matvec(list(lp.lower)))]
    columns = [tuple(col) for col in lp.A.columns]
    columns.append(tuple((i, -r) for i, r in enumerate(residual) if r) + ((m, ONE),))
    columns.append(((m, ONE),))
    matrix = SparseRationalMatrix(m + 1, n + 2, tuple(columns))
    b = (ZERO,) * m + (ONE,)
    c = (ZERO,) * n + (-ONE, ZERO)
    lower = (ZERO,) * (n + 2)
    return RationalLP(matrix, b, c, lower, f"{lp.name}:feasibility" if lp.name else "feasibility")


def build_unboundedness_lp(lp: RationalLP) -> RationalLP:
    m, n = lp.m, lp.n
    columns = []
    for j, col in enumerate(lp.A.columns):
        cj = lp.c[j]
        columns.append(tuple(col) + (((m, cj),) if cj else ()))
    matrix = SparseRationalMatrix(m + 1, n, tuple(columns))
    b = (ZERO,) * m + (-ONE,)
    c = (ZERO,) * n
    lower = (ZERO,) * n
    return RationalLP(matrix, b, c, lower, f"{lp.name}:unboundedness" if lp.name else "unboundedness")


def feasibility_problem(lp: RationalLP) -> AuxiliaryLP:
    return AuxiliaryLP(AuxKind.FEASIBILITY, build_feasibility_lp(lp), lp)


def unboundedness_problem(lp: RationalLP) -> AuxiliaryLP:
    return AuxiliaryLP(AuxKind.UNBOUNDEDNESS, build_unboundedness_lp(lp), lp)


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    witness: Optional[Tuple[Fraction, ...]] = None


def interpret_feasibility(tau_star: Fraction, xi_star: Sequence[Fraction],
                          lower: Sequence[Fraction]) -> FeasibilityVerdict:
    """tau* > 0 gives the witness x = l + xi*/tau*; tau* = 0 means infeasible."""
    assert 0 <= tau_star <= 1, f"feasibility optimum tau* = {tau_star} outside [0, 1]"
    if tau_star == 0:
        return FeasibilityVerdict(False)
    witness = tuple(lj + xj / tau_star for lj, xj in zip(lower, xi_star))
    return FeasibilityVerdict(True, witness)
