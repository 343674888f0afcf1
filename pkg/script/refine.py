"""LP iterative refinement.

Each round solves a transformed LP whose data are the scaled residuals of the
current rational candidate and applies the floating-point correction exactly.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import time
from typing import Callable, List, Optional, Sequence, Tuple

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import NumericalFailure, SingularBasisError
from floatkernel import (FloatArithmetic, FloatLP, Precision, ToleranceSet, round_columns, round_lp,
                         tolerance_set)
from rational import ONE, ZERO, PrimalDualSolution, RationalLP, Residuals, compute_residuals
from simplex import Basis, FpSolveOutcome, FpStatus, solve_fp
from utils import DEFAULT_REFINE_ROUNDS, LogLevel, log
from verify import basic_solution, check_oracle_contract, verify_optimal

STALL_FACTOR = 16                    # required decrease of the maximum violation per round
EXACT_CHECK_REDUCTION = Fraction(1, 10 ** 15)
EXACT_CHECK_EVERY = 5


@dataclass
class RefinementState:
    x: List[Fraction]
    y: List[Fraction]
    alpha: Fraction
    k: int = 1
    Delta_P: Fraction = ONE
    Delta_D: Fraction = ONE
    violation_history: List[Fraction] = field(default_factory=list)
    residuals: Optional[Residuals] = None

    @property
    def solution(self) -> PrimalDualSolution:
        return PrimalDualSolution(tuple(self.x), tuple(self.y))


class RefineStatus(Enum):
    EXACT_OPTIMAL = "exact-optimal"
    FP_INFEASIBLE = "fp-infeasible"
    FP_UNBOUNDED = "fp-unbounded"
    STALLED = "stalled"
    NUMERICAL_FAILURE = "numerical-failure"
    ORACLE_VIOLATION = "oracle-violation"
    ITERATION_LIMIT = "iteration-limit"
    TIME_LIMIT = "time-limit"


@dataclass
class RefineLimits:
    refine_rounds: int = DEFAULT_REFINE_ROUNDS
    iteration_limit: int = 100000
    deadline: Optional[float] = None
    check_initial: bool = True
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    snapshot_policy: Optional[Callable[[int, int], bool]] = None
    oracle_eta: Optional[Fraction] = None
    oracle_sigma: Optional[Fraction] = None

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


@dataclass
class RefineOutcome:
    status: RefineStatus
    basis: Optional[Basis]
    precision: Precision
    solution: Optional[PrimalDualSolution] = None
    ray: Optional[List[Fraction]] = None
    state: Optional[RefinementState] = None
    pivots: List[int] = field(default_factory=list)      # per fp solve, initial solve first
    trace: List[Tuple[int, int]] = field(default_factory=list)
    snapshots: List[Tuple[int, Basis]] = field(default_factory=list)
    failure_iteration: int = 0
    exact_factorizations: int = 0
    oracle_checks: int = 0
    oracle_passes: int = 0
    initial_basis_optimal: Optional[bool] = None
    time_initial: float = 0.0
    time_refine: float = 0.0
    time_verify: float = 0.0
    message: str = ""

    @property
    def rounds(self) -> int:
        return max(len(self.pivots) - 1, 0)


# ==============================================================================
# BUILDING BLOCKS
# ==============================================================================
def scale_factors(delta: Fraction, Delta_prev: Fraction, alpha: Fraction) -> Fraction:
    """1 / max(delta, 1 / (alpha * Delta_prev)), exactly."""
    return 1 / max(Fraction(delta), 1 / (Fraction(alpha) * Delta_prev))


def build_transformed_lp(lp: RationalLP, res: Residuals, Delta_P: Fraction, Delta_D: Fraction,
                         p: Precision, tolerances: Optional[ToleranceSet] = None) -> FloatLP:
    """min (Delta_D c_hat)^T x  s.t.  A x = Delta_P b_hat,  x >= Delta_P l_hat, rounded at p."""
    arith = FloatArithmetic(p)
    return FloatLP(
        columns=round_columns(lp, arith),
        b=[arith.from_rational(Delta_P * v) for v in res.b_hat],
        c=[arith.from_rational(Delta_D * v) for v in res.c_hat],
        lower=[arith.from_rational(Delta_P * v) for v in res.l_hat],
        precision=p,
        tolerances=tolerances or tolerance_set(p),
        arith=arith,
        name=f"{lp.name}:transformed" if lp.name else "transformed",
    )


def correct(state: RefinementState, x_hat: Sequence[Fraction], y_hat: Sequence[Fraction],
            Delta_P: Fraction, Delta_D: Fraction, lp: Optional[RationalLP] = None) -> RefinementState:
    """x += x_hat / Delta_P, y += y_hat / Delta_D; appends the new violation when `lp` is given."""
    state.x = [xi + xh / Delta_P if xh else xi for xi, xh in zip(state.x, x_hat)]
    state.y = [yi + yh / Delta_D if yh else yi for yi, yh in zip(state.y, y_hat)]
    state.Delta_P, state.Delta_D = Delta_P, Delta_D
    state.k += 1
    if lp is not None:
        state.residuals = compute_residuals(lp, state.solution)
        state.violation_history.append(state.residuals.max_violation)
    return state


def detect_stall(violation_history: Sequence[Fraction]) -> bool:
    """True iff each of the last two rounds shrank the violation by less than 16x."""
    if len(violation_history) < 3:
        return False
    a, b, c = violation_history[-3:]
    if b <= 0 or c <= 0:
        return False
    return a < STALL_FACTOR * b and b < STALL_FACTOR * c


def _lift(arith: FloatArithmetic, outcome: FpSolveOutcome) -> Tuple[List[Fraction], List[Fraction]]:
    return arith.rational_vector(outcome.x), arith.rational_vector(outcome.y)


# ==============================================================================
# LOOP
# ==============================================================================
class _Refiner:
    def __init__(self, lp: RationalLP, p: Precision, alpha: Fraction, limits: RefineLimits,
                 tolerances: Optional[ToleranceSet]):
        self.lp = lp
        self.p = p
        self.alpha = Fraction(alpha)
        self.limits = limits
        self.tolerances = tolerances or tolerance_set(p, limits.feas_tol, limits.opt_tol)
        self.out = RefineOutcome(RefineStatus.NUMERICAL_FAILURE, None, p)
        self.basis: Optional[Basis] = None
        self.optimal_basis: Optional[Basis] = None

    def fp_solve(self, flp: FloatLP, warm: Optional[Basis]) -> FpSolveOutcome:
        outcome = solve_fp(flp, warm, self.limits.iteration_limit, self.limits.snapshot_policy,
                           self.limits.deadline)
        self.out.pivots.append(outcome.iterations)
        self.out.trace.extend(outcome.trace)
        self.out.snapshots = outcome.snapshots
        self.basis = outcome.basis
        return outcome

    def finish(self, status: RefineStatus, **fields) -> RefineOutcome:
        self.out.status = status
        if self.out.basis is None:
            self.out.basis = self.basis
        for key, value in fields.items():
            setattr(self.out, key, value)
        return self.out

    def fp_failure(self, outcome: FpSolveOutcome) -> RefineOutcome:
        if outcome.status is FpStatus.TIME_LIMIT:
            return self.finish(RefineStatus.TIME_LIMIT, message=outcome.message)
        if outcome.status is FpStatus.ITERATION_LIMIT:
            return self.finish(RefineStatus.ITERATION_LIMIT, message=outcome.message)
        self.out.failure_iteration = outcome.iterations
        return self.finish(RefineStatus.NUMERICAL_FAILURE, message=outcome.message or outcome.status.value)

    def exact_check(self, state: RefinementState) -> Optional[RefineOutcome]:
        """Certify the current basis, or the candidate itself when it is already exact."""
        started = time.monotonic()
        try:
            if state.residuals.max_violation == 0 and verify_optimal(self.lp, state.solution):
                return self.finish(RefineStatus.EXACT_OPTIMAL, solution=state.solution,
                                   basis=self.optimal_basis)
            self.out.exact_factorizations += 1
            try:
                sol = basic_solution(self.lp, self.optimal_basis)
            except SingularBasisError as exc:
                log(f"Basis singular in exact arithmetic: {exc}", level=LogLevel.DEBUG)
                return None
            if verify_optimal(self.lp, sol):
                return self.finish(RefineStatus.EXACT_OPTIMAL, solution=sol, basis=self.optimal_basis)
            return None
        finally:
            self.out.time_verify += time.monotonic() - started

    def oracle_diagnostic(self, sol: PrimalDualSolution) -> None:
        if self.limits.oracle_eta is None:
            return
        sigma = self.limits.oracle_sigma
        if sigma is None:
            c_norm = max((abs(v) for v in self.lp.c), default=ZERO)
            sigma = self.lp.n * Fraction(self.tolerances.feas_tol) * (1 + c_norm)
            if sigma <= 0:
                sigma = Fraction(self.tolerances.feas_tol)
        self.out.oracle_checks += 1
        if check_oracle_contract(self.lp, sol, self.limits.oracle_eta, sigma):
            self.out.oracle_passes += 1

    def run(self, warm: Optional[Basis]) -> RefineOutcome:
        lp, limits = self.lp, self.limits
        if limits.expired():
            return self.finish(RefineStatus.TIME_LIMIT, basis=warm, message="time limit reached")
        started = time.monotonic()
        flp = round_lp(lp, self.p, self.tolerances)
        outcome = self.fp_solve(flp, warm)
        self.out.time_initial = time.monotonic() - started
        arith = flp.arith

        if outcome.status is FpStatus.INFEASIBLE:
            return self.finish(RefineStatus.FP_INFEASIBLE, ray=arith.rational_vector(outcome.farkas_ray))
        if outcome.status is FpStatus.UNBOUNDED:
            return self.finish(RefineStatus.FP_UNBOUNDED, ray=arith.rational_vector(outcome.primal_ray))
        if outcome.status is not FpStatus.OPTIMAL:
            return self.fp_failure(outcome)

        self.optimal_basis = outcome.basis
        x, y = _lift(arith, outcome)
        state = RefinementState(x, y, self.alpha)
        state.residuals = compute_residuals(lp, state.solution)
        state.violation_history.append(state.residuals.max_violation)
        self.out.state = state
        self.oracle_diagnostic(state.solution)
        initial = state.violation_history[0]
        refine_started = time.monotonic()
        try:
            return self.refine(state, initial)
        finally:
            self.out.time_refine = time.monotonic() - refine_started - self.out.time_verify

    def refine(self, state: RefinementState, initial: Fraction) -> RefineOutcome:
        lp, limits = self.lp, self.limits
        while True:
            violation = state.violation_history[-1]
            check_now = (
                (state.k == 1 and limits.check_initial)
                or violation == 0
                or violation <= EXACT_CHECK_REDUCTION * initial
                or (state.k > 1 and (state.k - 1) % EXACT_CHECK_EVERY == 0)
            )
            if check_now:
                certified = self.exact_check(state)
                if state.k == 1 and self.out.initial_basis_optimal is None:
                    self.out.initial_basis_optimal = certified is not None
                if certified is not None:
                    log(f"Exact optimum certified after {state.k - 1} refinement rounds at {self.p}",
                        level=LogLevel.DEBUG)
                    return certified

            scaled = max(state.residuals.delta_P * state.Delta_P, state.residuals.delta_D * state.Delta_D)
            if scaled >= 1:
                log(f"fp solution violates its LP by {float(scaled):.3e} after scaling",
                    level=LogLevel.WARNING)
                return self.finish(RefineStatus.ORACLE_VIOLATION, basis=self.optimal_basis)
            if detect_stall(state.violation_history):
                log(f"Refinement stalled at {self.p} after {state.k - 1} rounds", level=LogLevel.INFO)
                return self.finish(RefineStatus.STALLED, basis=self.optimal_basis)
            if state.k > limits.refine_rounds:
                return self.finish(RefineStatus.ITERATION_LIMIT, basis=self.optimal_basis,
                                   message="refinement round limit reached")
            if limits.expired():
                return self.finish(RefineStatus.TIME_LIMIT, basis=self.optimal_basis,
                                   message="time limit reached")

            res = state.residuals
            Delta_P = scale_factors(res.delta_P, state.Delta_P, state.alpha)
            Delta_D = scale_factors(res.delta_D, state.Delta_D, state.alpha)
            transformed = build_transformed_lp(lp, res, Delta_P, Delta_D, self.p, self.tolerances)
            outcome = self.fp_solve(transformed, self.optimal_basis)
            if outcome.status is not FpStatus.OPTIMAL:
                if outcome.status in (FpStatus.INFEASIBLE, FpStatus.UNBOUNDED):
                    outcome.message = f"transformed LP reported {outcome.status.value}"
                return self.fp_failure(outcome)
            self.optimal_basis = outcome.basis
            x_hat, y_hat = _lift(transformed.arith, outcome)
            correct(state, x_hat, y_hat, Delta_P, Delta_D, lp)
            log(f"refinement round {state.k - 1}: violation {float(state.violation_history[-1]):.3e}",
                level=LogLevel.DEBUG)


def refine_loop(lp: RationalLP, p: Precision, warm: Optional[Basis] = None,
                limits: Optional[RefineLimits] = None, alpha: Fraction = Fraction(10 ** 12),
                tolerances: Optional[ToleranceSet] = None) -> RefineOutcome:
    """Refine at precision `p` until the candidate is certified or a failure class is hit."""
    refiner = _Refiner(lp, p, alpha, limits or RefineLimits(), tolerances)
    try:
        return refiner.run(warm)
    except NumericalFailure as exc:
        return refiner.finish(RefineStatus.NUMERICAL_FAILURE, message=str(exc))
