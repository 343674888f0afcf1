"""Exact LP solving: iterative refinement with precision boosting as fallback.

Three modes share one entry point, ``solve_exact``:

* ``ir-double``      refinement at 64 bits only; any boost trigger is a failure
* ``boosting-pure``  solve at growing precision, certify the returned basis
* ``ir-boosting``    refinement, boosting on stalls, numerical trouble,
                     oracle violations and rejected infeasibility/unboundedness
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
import time
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from auxiliary import feasibility_problem, interpret_feasibility, unboundedness_problem
from errors import NumericalFailure, PrecisionLimitReached, SingularBasisError
from floatkernel import DOUBLE_BITS, Precision, boost_precision, round_lp, tolerance_set
from rational import RationalLP, parse_rational
from refine import RefineLimits, RefineOutcome, RefineStatus, refine_loop
from simplex import REFACTOR_INTERVAL, Basis, FpSolveOutcome, FpStatus, solve_fp
from utils import (DEFAULT_ALPHA, DEFAULT_FEAS_TOL, DEFAULT_ITERATION_LIMIT, DEFAULT_MAX_PRECISION,
                   DEFAULT_MODE, DEFAULT_OPT_TOL, DEFAULT_REFINE_ROUNDS, DEFAULT_TIME_LIMIT,
                   DEFAULT_UNBOUNDED_RETRY_BASIS, LogLevel, log, resolve_setting)
from verify import (Certificate, basic_direction, basic_solution, basis_matrix, is_primal_feasible,
                    lu_factorize_rational, phase_one_duals, verify_certificate, verify_farkas,
                    verify_optimal, verify_ray)

SNAPSHOT_SPACING = 10000
STABLE_SNAPSHOT_GAP = 2 * REFACTOR_INTERVAL

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILURE = "failure"
TIMEOUT = "timeout"
RESULT_STATUSES = (OPTIMAL, INFEASIBLE, UNBOUNDED, FAILURE, TIMEOUT)

RETRY_BASIS_CHOICES = ("original", "unboundedness")


class Mode(Enum):
    IR_DOUBLE = "ir-double"
    BOOSTING_PURE = "boosting-pure"
    IR_BOOSTING = "ir-boosting"


# ==============================================================================
# CONFIGURATION AND STATE
# ==============================================================================
@dataclass
class SolveConfig:
    mode: Mode = Mode.IR_BOOSTING
    alpha: Fraction = Fraction(10 ** 12)
    time_limit: float = DEFAULT_TIME_LIMIT
    iteration_limit: int = DEFAULT_ITERATION_LIMIT
    max_precision_bits: int = DEFAULT_MAX_PRECISION
    feas_tol: float = DEFAULT_FEAS_TOL
    opt_tol: float = DEFAULT_OPT_TOL
    refine_rounds: int = DEFAULT_REFINE_ROUNDS
    check_initial: bool = True
    oracle_check: bool = False
    eta: Fraction = Fraction(1, 2)
    sigma: Optional[Fraction] = None
    unbounded_retry_basis: str = DEFAULT_UNBOUNDED_RETRY_BASIS
    log_file: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            self.mode = Mode(str(self.mode).lower())
        self.alpha = Fraction(self.alpha)
        if self.alpha <= 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.max_precision_bits < DOUBLE_BITS:
            raise ValueError(f"max precision must be at least {DOUBLE_BITS} bits")
        if self.time_limit <= 0 or self.iteration_limit <= 0 or self.refine_rounds <= 0:
            raise ValueError("time, iteration and refinement limits must be positive")
        if self.unbounded_retry_basis not in RETRY_BASIS_CHOICES:
            raise ValueError(f"unbounded retry basis must be one of {RETRY_BASIS_CHOICES}")

    @classmethod
    def from_settings(cls, settings: Dict[str, str], **overrides) -> "SolveConfig":
        """Build from config-file values; environment variables win, `overrides` win over both."""
        def setting(name: str) -> str:
            return resolve_setting(name, settings)

        values = dict(
            mode=Mode(setting("EXACTLP_MODE") or DEFAULT_MODE),
            alpha=parse_rational(setting("EXACTLP_ALPHA") or DEFAULT_ALPHA),
            time_limit=float(setting("EXACTLP_TIME_LIMIT") or DEFAULT_TIME_LIMIT),
            iteration_limit=int(setting("EXACTLP_ITERATION_LIMIT") or DEFAULT_ITERATION_LIMIT),
            max_precision_bits=int(setting("EXACTLP_MAX_PRECISION") or DEFAULT_MAX_PRECISION),
            feas_tol=float(setting("EXACTLP_FEAS_TOL") or DEFAULT_FEAS_TOL),
            opt_tol=float(setting("EXACTLP_OPT_TOL") or DEFAULT_OPT_TOL),
            refine_rounds=int(setting("EXACTLP_REFINE_ROUNDS") or DEFAULT_REFINE_ROUNDS),
            unbounded_retry_basis=setting("EXACTLP_UNBOUNDED_RETRY_BASIS") or DEFAULT_UNBOUNDED_RETRY_BASIS,
            log_file=setting("EXACTLP_LOG_FILE") or None,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class AdvancedBases:
    original: Optional[Basis] = None
    feasibility: Optional[Basis] = None
    unboundedness: Optional[Basis] = None


@dataclass
class FeasKnowledge:
    feasibility_established: bool = False
    boundedness_established: bool = False
    witness: Optional[Tuple[Fraction, ...]] = None
    ray: Optional[Tuple[Fraction, ...]] = None


@dataclass
class SolveStatistics:
    boosts: int = 0
    precisions: List[int] = field(default_factory=list)
    pivots_by_precision: Dict[int, int] = field(default_factory=dict)
    pivots_initial: int = 0
    pivots_boosted: int = 0
    fp_solves: int = 0
    refinement_rounds: int = 0
    exact_factorizations: int = 0
    auxiliary_solves: int = 0
    oracle_checks: int = 0
    oracle_passes: int = 0
    initial_basis_optimal: Optional[bool] = None
    time_initial: float = 0.0
    time_refine: float = 0.0
    time_verify: float = 0.0
    time_aux: float = 0.0
    time_total: float = 0.0
    trace: List[Tuple[int, int]] = field(default_factory=list)

    def note_precision(self, bits: int) -> None:
        if not self.precisions or self.precisions[-1] != bits:
            self.precisions.append(bits)

    def record_pivots(self, bits: int, pivots: Sequence[int], trace: Sequence[Tuple[int, int]]) -> None:
        total = sum(pivots)
        self.fp_solves += len(pivots)
        self.pivots_by_precision[bits] = self.pivots_by_precision.get(bits, 0) + total
        if bits == DOUBLE_BITS:
            self.pivots_initial += total
        else:
            self.pivots_boosted += total
        self.trace.extend(trace)

    def absorb(self, outcome: RefineOutcome, first: bool) -> None:
        self.record_pivots(outcome.precision.bits, outcome.pivots, outcome.trace)
        self.refinement_rounds += outcome.rounds
        self.exact_factorizations += outcome.exact_factorizations
        self.oracle_checks += outcome.oracle_checks
        self.oracle_passes += outcome.oracle_passes
        self.time_refine += outcome.time_refine
        self.time_verify += outcome.time_verify
        if first:
            self.time_initial += outcome.time_initial
            self.initial_basis_optimal = outcome.initial_basis_optimal
        else:
            self.time_refine += outcome.time_initial

    @property
    def pivots(self) -> int:
        return self.pivots_initial + self.pivots_boosted

    @property
    def precision_final(self) -> int:
        return self.precisions[-1] if self.precisions else DOUBLE_BITS

    def to_dict(self, include_trace: bool = False) -> dict:
        data = asdict(self)
        data["pivots_by_precision"] = {str(k): v for k, v in self.pivots_by_precision.items()}
        if include_trace:
            data["trace"] = [list(pair) for pair in self.trace]
        else:
            data.pop("trace")
        return data


@dataclass
class ExactResult:
    status: str
    precision_final: int
    statistics: SolveStatistics
    certificate: Optional[Certificate] = None
    failure_reason: str = ""
    basis: Optional[Basis] = None

    @property
    def certified(self) -> bool:
        return self.status in (OPTIMAL, INFEASIBLE, UNBOUNDED)

    @property
    def objective(self) -> Optional[Fraction]:
        if self.status != OPTIMAL or self.certificate is None:
            return None
        return self.certificate.objective


# ==============================================================================
# SNAPSHOTS
# ==============================================================================
def snapshot_policy(iteration: int, last_snapshot: int) -> bool:
    """Snapshot at powers of two and at least every 10000 iterations."""
    if iteration < 1:
        return False
    is_power_of_two = iteration & (iteration - 1) == 0
    return is_power_of_two or iteration - last_snapshot >= SNAPSHOT_SPACING


def stable_snapshot(snapshots: Sequence[Tuple[int, Basis]], failure_iteration: int,
                    gap: int = STABLE_SNAPSHOT_GAP) -> Optional[Basis]:
    """Latest snapshot taken at least `gap` pivots before the failure."""
    best = None
    for iteration, basis in snapshots:
        if iteration <= failure_iteration - gap:
            best = basis
    return best


def project_basis(basis: Basis, n: int, m: int) -> Basis:
    """Carry the structural part of `basis` over to an n-column, m-row LP."""
    head = [j for j in basis.basic if j < min(n, basis.n)][:m]
    for j in range(n, n + m):
        if len(head) == m:
            break
        head.append(j)
    return Basis(n, m, tuple(head))


# ==============================================================================
# ORCHESTRATION
# ==============================================================================
class _Orchestrator:
    def __init__(self, lp: RationalLP, config: SolveConfig, knowledge: FeasKnowledge,
                 bases: AdvancedBases, stats: SolveStatistics, deadline: float, depth: int):
        self.lp = lp
        self.config = config
        self.knowledge = knowledge
        self.bases = bases
        self.stats = stats
        self.deadline = deadline
        self.depth = depth
        self.log_file = config.log_file

    # ------------------------------------------------------------- results
    def result(self, status: str, precision: Precision, certificate: Optional[Certificate] = None,
               reason: str = "", basis: Optional[Basis] = None) -> ExactResult:
        return ExactResult(status, precision.bits, self.stats, certificate, reason, basis)

    def certified(self, certificate: Certificate, precision: Precision,
                  basis: Optional[Basis] = None) -> ExactResult:
        if not verify_certificate(self.lp, certificate):
            return self.failure("certificate rejected by exact check", precision)
        status = certificate.kind.value
        if self.depth == 0:
            log(f"{self.lp.name or 'LP'}: {status} at {precision}", self.log_file, LogLevel.INFO,
                extra={"mode": self.config.mode.value, "boosts": self.stats.boosts})
        return self.result(status, precision, certificate, basis=basis)

    def failure(self, reason: str, precision: Precision) -> ExactResult:
        log(f"{self.lp.name or 'LP'}: failure ({reason}) at {precision}", self.log_file, LogLevel.WARNING)
        return self.result(FAILURE, precision, reason=reason)

    def timeout(self, precision: Precision) -> ExactResult:
        log(f"{self.lp.name or 'LP'}: time limit reached at {precision}", self.log_file, LogLevel.WARNING)
        return self.result(TIMEOUT, precision, reason="time limit")

    def expired(self) -> bool:
        return time.monotonic() > self.deadline

    def boost(self, precision: Precision, reason: str,
              floor: Optional[int] = None) -> Union[Precision, ExactResult]:
        if self.config.mode is Mode.IR_DOUBLE:
            log(f"Boost trigger ({reason}) without boosting", self.log_file, LogLevel.DEBUG)
            return self.failure("numerical", precision)
        try:
            nxt = boost_precision(precision, self.config.max_precision_bits)
        except PrecisionLimitReached as exc:
            log(str(exc), self.log_file, LogLevel.WARNING)
            return self.failure("precision limit", precision)
        if floor is not None and floor > nxt.bits:
            nxt = Precision(floor)
        self.stats.boosts += 1
        log(f"Precision boost {precision.bits} -> {nxt.bits} bits ({reason})", self.log_file, LogLevel.INFO,
            extra={"lp": self.lp.name} if self.lp.name else None)
        return nxt

    # -------------------------------------------------------- auxiliaries
    def sub_solve(self, lp: RationalLP, knowledge: FeasKnowledge, warm: Optional[Basis],
                  precision: Precision) -> ExactResult:
        self.stats.auxiliary_solves += 1
        log(f"Solving auxiliary problem {lp.name} at {precision}", self.log_file, LogLevel.INFO)
        started = time.monotonic()
        child = _Orchestrator(lp, self.config, knowledge, AdvancedBases(original=warm), self.stats,
                              self.deadline, self.depth + 1)
        try:
            return child.solve(precision)
        finally:
            if self.depth == 0:
                self.stats.time_aux += time.monotonic() - started

    def test_feasibility(self, precision: Precision) -> Union[ExactResult, int]:
        """Decide feasibility exactly; returns a final result or the auxiliary precision."""
        aux = feasibility_problem(self.lp)
        sub = self.sub_solve(aux.lp, FeasKnowledge(True, True), self.bases.feasibility, precision)
        self.bases.feasibility = sub.basis
        if sub.status != OPTIMAL:
            if sub.status == TIMEOUT:
                return self.timeout(precision)
            return self.failure(f"feasibility problem: {sub.failure_reason or sub.status}", precision)
        x = sub.certificate.x
        verdict = interpret_feasibility(x[aux.tau_index], x[:self.lp.n], self.lp.lower)
        if not verdict.feasible:
            farkas = aux.farkas_part(sub.certificate.y)
            if not verify_farkas(self.lp, farkas):
                return self.failure("Farkas proof rejected", Precision(sub.precision_final))
            return self.certified(Certificate.infeasible(farkas), Precision(sub.precision_final))
        self.knowledge.feasibility_established = True
        self.knowledge.witness = verdict.witness
        return sub.precision_final

    def handle_infeasible(self, precision: Precision) -> Union[ExactResult, Optional[int]]:
        if self.knowledge.feasibility_established:
            log("Infeasibility claim contradicts a known feasible point", self.log_file, LogLevel.INFO)
            return None
        return self.test_feasibility(precision)

    def handle_unbounded(self, precision: Precision) -> Union[ExactResult, Optional[int]]:
        if self.knowledge.boundedness_established:
            log("Unboundedness claim contradicts established boundedness", self.log_file, LogLevel.INFO)
            return None
        aux = unboundedness_problem(self.lp)
        sub = self.sub_solve(aux.lp, FeasKnowledge(False, True), self.bases.unboundedness, precision)
        self.bases.unboundedness = sub.basis
        if sub.status == INFEASIBLE:
            self.knowledge.boundedness_established = True
            if self.config.unbounded_retry_basis == "unboundedness" and sub.basis is not None:
                self.bases.original = project_basis(sub.basis, self.lp.n, self.lp.m)
            return sub.precision_final
        if sub.status != OPTIMAL:
            if sub.status == TIMEOUT:
                return self.timeout(precision)
            return self.failure(f"unboundedness problem: {sub.failure_reason or sub.status}", precision)
        ray = tuple(aux.ray_part(sub.certificate.x))
        if not verify_ray(self.lp, ray):
            return self.failure("ray rejected", Precision(sub.precision_final))
        self.knowledge.ray = ray
        final = Precision(sub.precision_final)
        if self.knowledge.witness is None:
            decided = self.test_feasibility(max(precision, final))
            if isinstance(decided, ExactResult):
                return decided
            final = max(final, Precision(decided))
        return self.certified(Certificate.unbounded(self.knowledge.witness, ray), final)

    # ------------------------------------------------------------- solving
    def limits(self) -> RefineLimits:
        eta = self.config.eta if self.config.oracle_check else None
        return RefineLimits(
            refine_rounds=self.config.refine_rounds,
            iteration_limit=self.config.iteration_limit,
            deadline=self.deadline,
            check_initial=self.config.check_initial,
            feas_tol=self.config.feas_tol,
            opt_tol=self.config.opt_tol,
            snapshot_policy=snapshot_policy,
            oracle_eta=eta,
            oracle_sigma=self.config.sigma,
        )

    def solve(self, start: Precision) -> ExactResult:
        if self.config.mode is Mode.BOOSTING_PURE:
            return self.solve_pure(start)
        return self.solve_refined(start)

    def solve_refined(self, start: Precision) -> ExactResult:
        precision = start
        warm = self.bases.original
        first = self.depth == 0 and not self.stats.precisions
        while True:
            if self.expired():
                return self.timeout(precision)
            self.stats.note_precision(precision.bits)
            outcome = refine_loop(self.lp, precision, warm, self.limits(), self.config.alpha)
            self.stats.absorb(outcome, first)
            first = False
            status = outcome.status
            floor = None
            if outcome.basis is not None:
                self.bases.original = outcome.basis

            if status is RefineStatus.EXACT_OPTIMAL:
                cert = Certificate.optimal(self.lp, outcome.solution, outcome.basis)
                return self.certified(cert, precision, outcome.basis)
            if status is RefineStatus.TIME_LIMIT:
                return self.timeout(precision)
            if status is RefineStatus.ITERATION_LIMIT:
                return self.failure(outcome.message or "iteration limit", precision)

            if status in (RefineStatus.STALLED, RefineStatus.ORACLE_VIOLATION):
                warm = outcome.basis
            elif status is RefineStatus.NUMERICAL_FAILURE:
                warm = stable_snapshot(outcome.snapshots, outcome.failure_iteration)
                self.bases.original = warm
            elif status is RefineStatus.FP_INFEASIBLE:
                decided = self.handle_infeasible(precision)
                if isinstance(decided, ExactResult):
                    return decided
                floor = decided
                warm = self.bases.original
            elif status is RefineStatus.FP_UNBOUNDED:
                decided = self.handle_unbounded(precision)
                if isinstance(decided, ExactResult):
                    return decided
                floor = decided
                warm = self.bases.original

            reason = f"{status.value}: {outcome.message}" if outcome.message else status.value
            nxt = self.boost(precision, reason, floor)
            if isinstance(nxt, ExactResult):
                return nxt
            precision = nxt

    def solve_pure(self, start: Precision) -> ExactResult:
        precision = start
        warm = self.bases.original
        while True:
            if self.expired():
                return self.timeout(precision)
            self.stats.note_precision(precision.bits)
            tolerances = tolerance_set(precision, self.config.feas_tol, self.config.opt_tol, scaled=True)
            try:
                flp = round_lp(self.lp, precision, tolerances)
            except NumericalFailure as exc:
                nxt = self.boost(precision, f"rounding: {exc}")
                if isinstance(nxt, ExactResult):
                    return nxt
                precision = nxt
                continue
            started = time.monotonic()
            outcome = solve_fp(flp, warm, self.config.iteration_limit, snapshot_policy, self.deadline)
            elapsed = time.monotonic() - started
            if self.depth == 0 and self.stats.fp_solves == 0:
                self.stats.time_initial += elapsed
            else:
                self.stats.time_refine += elapsed
            self.stats.record_pivots(precision.bits, [outcome.iterations], outcome.trace)

            if outcome.status is FpStatus.TIME_LIMIT:
                return self.timeout(precision)
            if outcome.status is FpStatus.ITERATION_LIMIT:
                return self.failure(outcome.message or "iteration limit", precision)

            started = time.monotonic()
            certificate = self.certify_basis(outcome)
            self.stats.time_verify += time.monotonic() - started
            if self.stats.initial_basis_optimal is None and self.depth == 0:
                self.stats.initial_basis_optimal = (outcome.status is FpStatus.OPTIMAL
                                                    and certificate is not None)
            if certificate is not None:
                self.bases.original = outcome.basis
                return self.certified(certificate, precision, outcome.basis)

            if outcome.status is FpStatus.NUMERICAL_FAILURE:
                warm = stable_snapshot(outcome.snapshots, outcome.iterations)
            else:
                warm = outcome.basis
            self.bases.original = warm
            nxt = self.boost(precision, f"basis not certified ({outcome.status.value})")
            if isinstance(nxt, ExactResult):
                return nxt
            precision = nxt

    def certify_basis(self, outcome: FpSolveOutcome) -> Optional[Certificate]:
        """Exact certificate derived from the basis an fp solve returned, if it holds."""
        if outcome.status not in (FpStatus.OPTIMAL, FpStatus.INFEASIBLE, FpStatus.UNBOUNDED):
            return None
        lp, basis = self.lp, outcome.basis
        self.stats.exact_factorizations += 1
        try:
            lu = lu_factorize_rational(basis_matrix(lp, basis))
        except SingularBasisError:
            return None
        if outcome.status is FpStatus.OPTIMAL:
            sol = basic_solution(lp, basis, lu)
            return Certificate.optimal(lp, sol, basis) if verify_optimal(lp, sol) else None
        if outcome.status is FpStatus.INFEASIBLE:
            y = phase_one_duals(lp, basis, lu)
            if y is not None and verify_farkas(lp, y):
                return Certificate.infeasible(y)
            return None
        direction = basic_direction(lp, basis, outcome.entering, lu)
        ray = direction[:lp.n]
        if any(direction[lp.n:]) or not verify_ray(lp, ray):
            return None
        witness = basic_solution(lp, basis, lu).x
        if not is_primal_feasible(lp, witness):
            return None
        return Certificate.unbounded(witness, ray)


def solve_exact(lp: RationalLP, config: Optional[SolveConfig] = None, *,
                knowledge: Optional[FeasKnowledge] = None, bases: Optional[AdvancedBases] = None,
                start_bits: int = DOUBLE_BITS, statistics: Optional[SolveStatistics] = None,
                deadline: Optional[float] = None) -> ExactResult:
    """Solve `lp` exactly; every non-failure result carries a verified certificate."""
    config = config or SolveConfig()
    stats = statistics if statistics is not None else SolveStatistics()
    started = time.monotonic()
    if deadline is None:
        deadline = started + config.time_limit
    orchestrator = _Orchestrator(lp, config, knowledge or FeasKnowledge(), bases or AdvancedBases(),
                                 stats, deadline, 0)
    try:
        result = orchestrator.solve(Precision(start_bits))
    finally:
        stats.time_total += time.monotonic() - started
    return result
