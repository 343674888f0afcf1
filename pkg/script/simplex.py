"""Revised primal simplex over a FloatLP.

Variables 0..n-1 are the structural columns (x_j >= l_j). Variables n..n+m-1
are row logicals: unit columns e_i fixed at zero. They form the cold-start
basis and patch singular warm bases. They never enter; at a terminal basis
any logical still basic is exchanged for a structural whose tableau entry in
its row clears the pivot tolerance, so they leave whenever the rank allows.
Phase 1 minimises the sum of infeasibilities of the basic variables, so it
runs from any basis; its duals are the approximate Farkas ray.
"""

from dataclasses import dataclass, field
from enum import Enum
import json
import time
from typing import Any, Callable, List, Optional, Sequence, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import DimensionError, NumericalFailure
from floatkernel import FloatArithmetic, FloatLP
from utils import LogLevel, is_enabled, log

REFACTOR_INTERVAL = 100
LU_THRESHOLD = 0.1          # threshold partial pivoting: |a| >= u * max |a| in the column
BLAND_SWITCH_FACTOR = 3     # switch after 3*(n+m) consecutive non-improving pivots
CYCLING_FACTOR = 30         # give up after 30*(n+m) of them
TIME_CHECK_INTERVAL = 50

BASIC = "basic"
AT_LOWER = "at-lower"


# ==============================================================================
# BASIS
# ==============================================================================
@dataclass(frozen=True)
class Basis:
    """Ordered basic head over n structurals and m row logicals."""

    n: int
    m: int
    basic: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "basic", tuple(int(j) for j in self.basic))
        if len(self.basic) != self.m:
            raise DimensionError(f"basis has {len(self.basic)} basic variables, expected {self.m}")
        if len(set(self.basic)) != self.m:
            raise DimensionError("basis lists a variable twice")
        for j in self.basic:
            if not 0 <= j < self.n + self.m:
                raise DimensionError(f"basic index {j} out of range")

    @classmethod
    def slack(cls, n: int, m: int) -> "Basis":
        return cls(n, m, tuple(range(n, n + m)))

    @property
    def status(self) -> List[str]:
        """Status of every variable, structurals first."""
        basic = set(self.basic)
        return [BASIC if j in basic else AT_LOWER for j in range(self.n + self.m)]

    @property
    def logicals(self) -> List[int]:
        return [j for j in self.basic if j >= self.n]

    def serialize(self) -> str:
        return json.dumps({"n": self.n, "m": self.m, "basic": list(self.basic)}, separators=(",", ":"))

    @classmethod
    def deserialize(cls, text: str) -> "Basis":
        data = json.loads(text)
        return cls(int(data["n"]), int(data["m"]), tuple(data["basic"]))


# ==============================================================================
# LU FACTORIZATION WITH PRODUCT-FORM UPDATES
# ==============================================================================
class SingularColumn(Exception):
    """Internal signal: basis position `position` has no acceptable pivot."""

    def __init__(self, position: int, free_rows: List[int]):
        self.position = position
        self.free_rows = free_rows
        super().__init__(f"basis position {position} is numerically dependent")


class LUFactor:
    """P (B Q) = L U for a dense m x m basis matrix, plus eta updates."""

    def __init__(self, arith: FloatArithmetic, m: int, perm: List[int], order: List[int], lu: List[List[Any]]):
        self.arith = arith
        self.m = m
        self.perm = perm      # perm[i]: original row at elimination position i
        self.order = order    # order[k]: basis position eliminated at step k
        self.lu = lu          # strict lower part L (unit diagonal), upper part U
        self.etas: List[Tuple[int, List[Any]]] = []

    def _ftran_base(self, v: Sequence[Any]) -> List[Any]:
        m, lu = self.m, self.lu
        w = [v[self.perm[i]] for i in range(m)]
        for i in range(m):
            row = lu[i]
            s = w[i]
            for j in range(i):
                if row[j]:
                    s -= row[j] * w[j]
            w[i] = s
        z = [self.arith.zero] * m
        for i in range(m - 1, -1, -1):
            row = lu[i]
            s = w[i]
            for j in range(i + 1, m):
                if row[j]:
                    s -= row[j] * z[j]
            z[i] = s / row[i]
        x = [self.arith.zero] * m
        for k in range(m):
            x[self.order[k]] = z[k]
        return x

    def _btran_base(self, v: Sequence[Any]) -> List[Any]:
        m, lu = self.m, self.lu
        u = [v[self.order[k]] for k in range(m)]
        w = [self.arith.zero] * m
        for i in range(m):
            s = u[i]
            for j in range(i):
                if lu[j][i]:
                    s -= lu[j][i] * w[j]
            w[i] = s / lu[i][i]
        t = [self.arith.zero] * m
        for i in range(m - 1, -1, -1):
            s = w[i]
            for j in range(i + 1, m):
                if lu[j][i]:
                    s -= lu[j][i] * t[j]
            t[i] = s
        y = [self.arith.zero] * m
        for i in range(m):
            y[self.perm[i]] = t[i]
        return y

    def ftran(self, v: Sequence[Any]) -> List[Any]:
        """Solve B x = v; x is indexed by basis position."""
        x = self._ftran_base(v)
        for r, eta in self.etas:
            xr = x[r]
            if not xr:
                continue
            for i, e in enumerate(eta):
                if i == r:
                    x[i] = e * xr
                elif e:
                    x[i] += e * xr
        return x

    def btran(self, v: Sequence[Any]) -> List[Any]:
        """Solve B^T y = v for v indexed by basis position."""
        y = list(v)
        for r, eta in reversed(self.etas):
            total = self.arith.zero
            for i, e in enumerate(eta):
                if e:
                    total += e * y[i]
            y[r] = total
        return self._btran_base(y)

    def update(self, r: int, alpha: Sequence[Any]) -> None:
        """Replace the column at basis position r; alpha = B^-1 a_q."""
        pivot = alpha[r]
        eta = [-a / pivot if a else self.arith.zero for a in alpha]
        eta[r] = self.arith.one / pivot
        self.etas.append((r, eta))

    @property
    def updates(self) -> int:
        return len(self.etas)


def factorize(columns: Sequence[Sequence[Any]], arith: FloatArithmetic, pivot_eps: float,
              threshold: float = LU_THRESHOLD) -> LUFactor:
    """LU of the matrix whose basis positions are the dense `columns`.

    Columns are eliminated sparsest first; within a column any row passing the
    threshold test is eligible and the one with the fewest remaining nonzeros
    wins. A column whose largest candidate is below `pivot_eps` is singular.
    """
    try:
        return _factorize(columns, arith, pivot_eps, threshold)
    except SingularColumn as exc:
        raise NumericalFailure(str(exc)) from exc


def _factorize(columns, arith, pivot_eps, threshold) -> LUFactor:
    m = len(columns)
    order = sorted(range(m), key=lambda k: sum(1 for v in columns[k] if v))
    a = [[columns[order[k]][i] for k in range(m)] for i in range(m)]
    perm = list(range(m))
    for k in range(m):
        amax = max((abs(a[i][k]) for i in range(k, m)), default=0)
        if not amax or amax < pivot_eps:
            raise SingularColumn(order[k], perm[k:])
        best = None
        for i in range(k, m):
            mag = abs(a[i][k])
            if mag >= threshold * amax:
                count = sum(1 for j in range(k + 1, m) if a[i][j])
                key = (count, -mag, i)
                if best is None or key < best:
                    best = key
        p = best[2]
        if p != k:
            a[k], a[p] = a[p], a[k]
            perm[k], perm[p] = perm[p], perm[k]
        pivot_row = a[k]
        pivot = pivot_row[k]
        for i in range(k + 1, m):
            row = a[i]
            if row[k]:
                factor = row[k] / pivot
                row[k] = factor
                for j in range(k + 1, m):
                    if pivot_row[j]:
                        row[j] -= factor * pivot_row[j]
    return LUFactor(arith, m, perm, order, a)


def ftran(handle: LUFactor, v: Sequence[Any]) -> List[Any]:
    return handle.ftran(v)


def btran(handle: LUFactor, v: Sequence[Any]) -> List[Any]:
    return handle.btran(v)


# ==============================================================================
# OUTCOME
# ==============================================================================
class FpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"
    ITERATION_LIMIT = "iteration-limit"
    TIME_LIMIT = "time-limit"


@dataclass
class FpSolveOutcome:
    status: FpStatus
    basis: Basis
    iterations: int
    x: Optional[List[Any]] = None
    y: Optional[List[Any]] = None
    farkas_ray: Optional[List[Any]] = None
    primal_ray: Optional[List[Any]] = None
    entering: Optional[int] = None
    snapshots: List[Tuple[int, Basis]] = field(default_factory=list)
    trace: List[Tuple[int, int]] = field(default_factory=list)
    message: str = ""

    def __post_init__(self):
        required = {
            FpStatus.OPTIMAL: ("x", "y"),
            FpStatus.INFEASIBLE: ("farkas_ray",),
            FpStatus.UNBOUNDED: ("primal_ray",),
        }.get(self.status, ())
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"{self.status.value} outcome requires {name}")

    @property
    def solution(self) -> Optional[Tuple[List[Any], List[Any]]]:
        if self.status is not FpStatus.OPTIMAL:
            return None
        return self.x, self.y


# ==============================================================================
# SOLVER
# ==============================================================================
class _Simplex:
    def __init__(self, flp: FloatLP, iteration_limit: int,
                 snapshot_policy: Optional[Callable[[int, int], bool]], deadline: Optional[float]):
        self.flp = flp
        self.arith = flp.arith
        self.tol = flp.tolerances
        self.n, self.m = flp.n, flp.m
        self.iteration_limit = iteration_limit
        self.snapshot_policy = snapshot_policy
        self.deadline = deadline
        self.head: List[int] = []
        self.x: List[Any] = []          # values of all n+m variables
        self.lu: Optional[LUFactor] = None
        self.iterations = 0
        self.trace: List[Tuple[int, int]] = []
        self.snapshots: List[Tuple[int, Basis]] = []
        self.last_snapshot = 0
        self.non_improving = 0
        self.bland = False

    # ------------------------------------------------------------------ data
    def column(self, j: int) -> List[Any]:
        if j >= self.n:
            col = [self.arith.zero] * self.m
            col[j - self.n] = self.arith.one
            return col
        return self.flp.dense_column(j)

    def bounds(self, j: int) -> Tuple[Any, Optional[Any]]:
        if j >= self.n:
            return self.arith.zero, self.arith.zero
        return self.flp.lower[j], None

    def basis(self) -> Basis:
        return Basis(self.n, self.m, tuple(self.head))

    # ------------------------------------------------------------ factorize
    def refactor(self, repair: bool = False) -> None:
        for _ in range(2 * self.m + 1):
            try:
                self.lu = _factorize([self.column(j) for j in self.head], self.arith,
                                     self.tol.pivot_eps, LU_THRESHOLD)
                break
            except SingularColumn as exc:
                if not repair:
                    raise NumericalFailure(str(exc)) from exc
                basic = set(self.head)
                free = [r for r in exc.free_rows if self.n + r not in basic]
                if not free:
                    raise NumericalFailure(f"cannot repair basis: {exc}") from exc
                replaced = self.head[exc.position]
                self.head[exc.position] = self.n + free[0]
                log(f"Warm basis repair: variable {replaced} replaced by logical of row {free[0]}",
                    level=LogLevel.DEBUG)
        else:
            raise NumericalFailure("basis repair did not converge")
        self.recompute_primal()

    def recompute_primal(self) -> None:
        """x_B = B^-1 (b - N l_N) with nonbasics at their lower bounds."""
        basic = set(self.head)
        rhs = list(self.flp.b)
        for j in range(self.n):
            if j not in basic:
                self.x[j] = self.flp.lower[j]
                lj = self.flp.lower[j]
                if lj:
                    for i, v in self.flp.columns[j]:
                        rhs[i] -= v * lj
        for j in range(self.n, self.n + self.m):
            if j not in basic:
                self.x[j] = self.arith.zero
        xb = self.lu.ftran(rhs)
        for k, j in enumerate(self.head):
            self.x[j] = xb[k]

    # ---------------------------------------------------------- feasibility
    def infeasibility_costs(self) -> Tuple[List[Any], Any]:
        """Phase-1 costs of the basic variables and the total infeasibility."""
        arith, feas = self.arith, self.tol.feas_tol
        costs = [arith.zero] * self.m
        total = arith.zero
        for k, j in enumerate(self.head):
            lo, up = self.bounds(j)
            xj = self.x[j]
            if xj < lo - feas:
                costs[k] = -arith.one
                total += lo - xj
            elif up is not None and xj > up + feas:
                costs[k] = arith.one
                total += xj - up
        return costs, total

    # -------------------------------------------------------------- pricing
    def price(self, y: Sequence[Any], costs: Optional[Sequence[Any]]) -> Tuple[Optional[int], Any]:
        """Entering structural with negative reduced cost (Dantzig or Bland)."""
        basic = set(self.head)
        best_j, best_d = None, None
        threshold = -self.tol.opt_tol
        for j in range(self.n):
            if j in basic:
                continue
            d = (costs[j] if costs is not None else self.arith.zero) - self.flp.column_dot(j, y)
            if d < threshold:
                if self.bland:
                    return j, d
                if best_d is None or d < best_d:
                    best_j, best_d = j, d
        return best_j, best_d

    # ----------------------------------------------------------- ratio test
    def ratio_test(self, alpha: Sequence[Any]) -> Optional[Tuple[int, Any]]:
        feas, piv = self.tol.feas_tol, self.tol.pivot_eps
        best = None
        for k, j in enumerate(self.head):
            a = alpha[k]
            if abs(a) <= piv:
                continue
            lo, up = self.bounds(j)
            xj = self.x[j]
            if a > 0:     # x_j decreases
                if up is not None and xj > up + feas:
                    bound = up
                elif xj >= lo - feas:
                    bound = lo
                else:
                    continue
            else:         # x_j increases
                if xj < lo - feas:
                    bound = lo
                elif up is not None and xj <= up + feas:
                    bound = up
                else:
                    continue
            t = (xj - bound) / a
            if t < 0:
                t = self.arith.zero
            if self.bland:
                key = (t, j)
            else:
                key = (t, -abs(a), j)
            if best is None or key < best[0]:
                best = (key, k, t)
        if best is None:
            return None
        return best[1], best[2]

    # ---------------------------------------------------------------- pivot
    def pivot(self, q: int, r: int, t: Any, alpha: Sequence[Any]) -> None:
        leaving = self.head[r]
        self.x[q] = self.x[q] + t
        if t:
            for k, j in enumerate(self.head):
                if alpha[k]:
                    self.x[j] = self.x[j] - t * alpha[k]
        self.x[leaving] = self.bounds(leaving)[0]
        self.head[r] = q
        self.iterations += 1
        self.trace.append((q, leaving))
        if self.lu.updates + 1 >= REFACTOR_INTERVAL:
            self.refactor()
        else:
            self.lu.update(r, alpha)
        if self.snapshot_policy is not None and self.snapshot_policy(self.iterations, self.last_snapshot):
            self.snapshots.append((self.iterations, self.basis()))
            self.last_snapshot = self.iterations

    def checked_alpha(self, q: int) -> List[Any]:
        """B^-1 a_q; refactorizes when the updated factors have drifted."""
        col = self.column(q)
        alpha = self.lu.ftran(col)
        if self.lu.updates:
            residual = self.residual(alpha, col)
            scale = 1 + max((abs(v) for v in col), default=0)
            if residual > self.tol.update_tol * scale:
                log(f"LU update residual {float(residual):.3e} too large, refactorizing",
                    level=LogLevel.DEBUG)
                self.refactor()
                alpha = self.lu.ftran(col)
        return alpha

    def residual(self, alpha: Sequence[Any], col: Sequence[Any]) -> Any:
        out = list(col)
        for k, j in enumerate(self.head):
            a = alpha[k]
            if not a:
                continue
            if j >= self.n:
                out[j - self.n] -= a
            else:
                for i, v in self.flp.columns[j]:
                    out[i] -= v * a
        return max((abs(v) for v in out), default=self.arith.zero)

    def exchange_logical(self) -> bool:
        """Pivot one basic logical out on the structural with the largest tableau
        entry in its row. Returns False when no logical can leave."""
        arith, piv = self.arith, self.tol.pivot_eps
        basic = set(self.head)
        for r, leaving in enumerate(self.head):
            if leaving < self.n:
                continue
            unit = [arith.zero] * self.m
            unit[r] = arith.one
            rho = self.lu.btran(unit)
            best_q, best_entry = None, piv
            for j in range(self.n):
                if j in basic:
                    continue
                entry = abs(self.flp.column_dot(j, rho))
                if entry > best_entry:
                    best_q, best_entry = j, entry
            if best_q is None:
                continue
            alpha = self.checked_alpha(best_q)
            if abs(alpha[r]) <= piv:
                continue
            t = self.x[leaving] / alpha[r]
            log(f"exchanging logical {leaving} for {best_q} (entry {float(best_entry):.3e})",
                level=LogLevel.DEBUG)
            self.pivot(best_q, r, t, alpha)
            return True
        return False

    # ----------------------------------------------------------------- loop
    def outcome(self, status: FpStatus, **fields) -> FpSolveOutcome:
        return FpSolveOutcome(status, self.basis(), self.iterations, snapshots=self.snapshots,
                              trace=self.trace, **fields)

    def run(self, warm: Optional[Basis]) -> FpSolveOutcome:
        n, m, arith = self.n, self.m, self.arith
        if warm is not None:
            if warm.n != n or warm.m != m:
                raise DimensionError(f"warm basis is for a {warm.m}x{warm.n} LP, not {m}x{n}")
            self.head = list(warm.basic)
        else:
            self.head = list(range(n, n + m))
        self.x = [arith.zero] * (n + m)
        try:
            self.refactor(repair=True)
        except NumericalFailure as exc:
            return self.outcome(FpStatus.NUMERICAL_FAILURE, message=str(exc))
        self.snapshots.append((0, self.basis()))
        verified = False
        while True:
            if self.iterations >= self.iteration_limit:
                return self.outcome(FpStatus.ITERATION_LIMIT, message="pivot limit reached")
            if (self.deadline is not None and self.iterations % TIME_CHECK_INTERVAL == 0
                    and time.monotonic() > self.deadline):
                return self.outcome(FpStatus.TIME_LIMIT, message="time limit reached")
            try:
                step = self.iterate(verified)
            except NumericalFailure as exc:
                log(f"Simplex numerical failure at {self.flp.precision}: {exc}", level=LogLevel.DEBUG)
                return self.outcome(FpStatus.NUMERICAL_FAILURE, message=str(exc))
            if isinstance(step, FpSolveOutcome):
                return step
            verified = step

    def iterate(self, verified: bool):
        """One pricing/ratio/pivot step; returns an outcome at termination.

        `verified` is True when the factors were just rebuilt, so a terminal
        verdict is reported instead of refactorizing once more.
        """
        n, m, arith = self.n, self.m, self.arith
        costs_b, infeasibility = self.infeasibility_costs()
        phase_one = infeasibility > 0
        if phase_one:
            y = self.lu.btran(costs_b)
            q, d = self.price(y, None)
        else:
            cb = [self.flp.c[j] if j < n else arith.zero for j in self.head]
            y = self.lu.btran(cb)
            q, d = self.price(y, self.flp.c)

        if q is None:
            if not verified and self.lu.updates:
                self.refactor()
                return True
            if self.exchange_logical():
                return False
            if phase_one:
                return self.outcome(FpStatus.INFEASIBLE, farkas_ray=y,
                                    message=f"infeasibility {float(infeasibility):.3e}")
            x = self.x[:n]
            return self.outcome(FpStatus.OPTIMAL, x=x, y=y)

        alpha = self.checked_alpha(q)
        choice = self.ratio_test(alpha)
        if choice is None:
            if phase_one:
                raise NumericalFailure("phase-1 step without a blocking variable")
            if not verified and self.lu.updates:
                self.refactor()
                return True
            ray = [arith.zero] * n
            ray[q] = arith.one
            for k, j in enumerate(self.head):
                if j < n:
                    ray[j] = -alpha[k]
            return self.outcome(FpStatus.UNBOUNDED, primal_ray=ray, entering=q)

        r, t = choice
        if is_enabled(LogLevel.DEBUG):
            log(f"pivot {self.iterations + 1}: in {q} out {self.head[r]} step {float(t):.3e}",
                level=LogLevel.DEBUG)
        improving = t * abs(d) > self.tol.zero_eps
        self.pivot(q, r, t, alpha)
        self.track_progress(improving)
        return False

    def track_progress(self, improving: bool) -> None:
        if improving:
            self.non_improving = 0
            self.bland = False
            return
        self.non_improving += 1
        size = self.n + self.m
        if not self.bland and self.non_improving >= BLAND_SWITCH_FACTOR * size:
            log(f"Switching to Bland's rule after {self.non_improving} degenerate pivots",
                level=LogLevel.DEBUG)
            self.bland = True
        if self.non_improving >= CYCLING_FACTOR * max(size, 1):
            raise NumericalFailure("cycling: no progress under Bland's rule")


def solve_fp(flp: FloatLP, warm: Optional[Basis] = None, iteration_limit: int = 100000,
             snapshot_policy: Optional[Callable[[int, int], bool]] = None,
             deadline: Optional[float] = None) -> FpSolveOutcome:
    """Solve min{c^T x | Ax = b, x >= l} approximately at flp's precision."""
    solver = _Simplex(flp, iteration_limit, snapshot_policy, deadline)
    outcome = solver.run(warm)
    log(f"fp solve at {flp.precision}: {outcome.status.value} after {outcome.iterations} pivots",
        level=LogLevel.DEBUG, extra={"lp": flp.name} if flp.name else None)
    return outcome
