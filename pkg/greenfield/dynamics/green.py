import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from greenfield.arith.homopoly import ProjPoint
from greenfield.arith.linalg import bareiss_det
from greenfield.arith.macaulay import RConvention, r_normalized
from greenfield.arith.pf_field import (
    ARCHIMEDEAN,
    EPS,
    MINUS_INFINITY,
    PLUS_INFINITY,
    LogMag,
    Place,
    Unbounded,
    abs_log,
)
from greenfield.config import config
from greenfield.dynamics.basis import BasisFamily, basis_dimension, factor_count_range
from greenfield.dynamics.dynsys import DynSystem, Membership, escape_rate, julia_membership
from greenfield.errors import DimensionMismatch, DomainError, PreconditionViolation, SearchFailed

# numeric determinants with cond·EPS above this are treated as singular
_SINGULAR_CONDITION = 1e-3
_GRADIENT_STEP = 1e-5


@dataclass(frozen=True)
class EvalDetLog:
    value: LogMag | Unbounded
    dimension: int
    degree: int
    flagged: bool = False

    @property
    def singular(self) -> bool:
        return self.value is MINUS_INFINITY

    def to_dict(self) -> dict:
        value = str(self.value) if self.singular else self.value.to_dict()
        return {"value": value, "dimension": self.dimension, "degree": self.degree, "flagged": self.flagged}


@dataclass(frozen=True)
class GreenValue:
    place: Place
    value: float | Unbounded
    error: float
    ledger: LogMag | None = None
    components: dict = field(default_factory=dict)

    @property
    def infinite(self) -> bool:
        return self.value is PLUS_INFINITY

    def to_dict(self) -> dict:
        return {
            "place": str(self.place),
            "value": str(self.value) if self.infinite else self.value,
            "error": self.error,
            "exact": self.ledger is not None and self.ledger.is_exact,
            "components": self.components,
        }


def _numeric_logdet(matrix: np.ndarray) -> tuple[float, float, bool]:
    sign, logabs = np.linalg.slogdet(matrix)
    if sign == 0 or not np.isfinite(logabs):
        return -math.inf, 0.0, True
    cond = np.linalg.cond(matrix)
    size = matrix.shape[0]
    if not np.isfinite(cond) or cond * EPS * size > _SINGULAR_CONDITION:
        return float(logabs), math.inf, True
    return float(logabs), float(cond * EPS * size * 4), False


def eval_det_log(basis: BasisFamily, lifts: Sequence[ProjPoint], place: Place) -> EvalDetLog:
    rows = basis.evaluate(lifts)
    if lifts[0].exact:
        det = bareiss_det(rows)
        if det == 0:
            return EvalDetLog(MINUS_INFINITY, basis.c, basis.n)
        return EvalDetLog(abs_log(place, det), basis.c, basis.n)
    if not place.is_archimedean:
        raise DomainError("numeric evaluation matrices live at the archimedean place")
    logabs, err, singular = _numeric_logdet(np.array(rows, dtype=complex))
    if singular:
        logging.warning(f"Evaluation matrix of size {basis.c} is numerically singular")
        return EvalDetLog(MINUS_INFINITY, basis.c, basis.n, flagged=True)
    return EvalDetLog(LogMag((), logabs, err), basis.c, basis.n)


def green_value(
    system: DynSystem,
    basis: BasisFamily,
    lifts: Sequence[ProjPoint],
    place: Place,
    convention: RConvention | str | None = None,
    tol: float = 1e-9,
) -> GreenValue:
    """g_n = (1/c)·Σ Ĥ_F(P̃_i) − (1/(n·c))·log|det η_j(P̃_i)| + r(F)."""
    convention = system.convention if convention is None else RConvention(convention)
    c, n = basis.c, basis.n
    det = eval_det_log(basis, lifts, place)
    r = r_normalized(system.map, place, convention)
    if det.singular:
        return GreenValue(place, PLUS_INFINITY, 0.0, None, {"det": str(MINUS_INFINITY)})
    rates = [escape_rate(system, place, lift, tol) for lift in lifts]
    escape_sum = LogMag()
    escape_err = 0.0
    for rate in rates:
        escape_sum = escape_sum + rate.ledger
        escape_err += rate.error
    total = escape_sum.scale(Fraction(1, c)) - det.value.scale(Fraction(1, n * c)) + r
    value, rounding = total.bound()
    exact = all(rate.exact for rate in rates) and det.value.is_exact and r.is_exact
    error = escape_err / c + rounding
    components = {
        "avg_escape": escape_sum.value / c,
        "log_det": det.value.value,
        "r": r.value,
    }
    return GreenValue(place, value, 0.0 if exact else error, total if exact else None, components)


def _on_hypersurface(system: DynSystem, lift: ProjPoint, tol: float) -> bool:
    G = system.hypersurface
    if G is None:
        return True
    value = G.evaluate(lift)
    if lift.exact:
        return value == 0
    scale = max(abs(x) for x in lift.coords) ** G.degree
    return abs(value) <= tol * max(scale, 1.0) * max(float(G.l1_norm()), 1.0)


def membership_checked(system: DynSystem, lifts: Sequence[ProjPoint], place: Place, tol: float = 1e-9) -> int | None:
    """Index of the first lift outside the filled Julia set or off the hypersurface."""
    for i, lift in enumerate(lifts):
        if julia_membership(system, place, lift, tol) is Membership.OUTSIDE:
            return i
        if not _on_hypersurface(system, lift, tol):
            return i
    return None


def dbn_witness(
    system: DynSystem, basis: BasisFamily, lifts: Sequence[ProjPoint], place: Place, tol: float = 1e-9
) -> LogMag | Unbounded:
    """(1/(n·c))·log|det|: a lower bound for log d_{B_n} from an admissible tuple."""
    bad = membership_checked(system, lifts, place, tol)
    if bad is not None:
        raise PreconditionViolation(f"lift {bad} is outside the filled Julia set or off X at {place}", index=bad)
    det = eval_det_log(basis, lifts, place)
    if det.singular:
        return MINUS_INFINITY
    return det.value.scale(Fraction(1, basis.n * basis.c))


def hadamard_envelope(system: DynSystem, n: int, R_log: float, place: Place = ARCHIMEDEAN) -> float:
    """Upper bound for log|det| over tuples in the filled Julia set with log‖P‖ ≤ R_log.

    R_log is clamped at 0, and the archimedean bound carries the Euclidean
    (c/2)·log c term, so at ∞ the envelope is positive even for the power map.
    """
    if n < 2:
        raise PreconditionViolation(f"the envelope needs n >= 2, got {n}")
    d, N = system.degree, system.N
    c = basis_dimension(system, n)
    _, t2 = factor_count_range(system, n)
    columns = d * (N + 1) - 1 + t2 * (d - 1)
    bound = c * columns * max(R_log, 0.0)
    if place.is_archimedean:
        bound += 0.5 * c * math.log(c)
    return bound


class Chart(Protocol):
    """Real parameters → numeric lifts with Ĥ_F = 0 at the archimedean place."""

    dimension: int
    span: float

    def lift(self, params: Sequence[float]) -> ProjPoint: ...

    def sample(self, rng: np.random.Generator) -> np.ndarray: ...


class SphereChart:
    """P¹ through two angles on the Riemann sphere: (cos(φ/2)·e^{iθ}, sin(φ/2))."""

    dimension = 2
    span = math.pi

    def __init__(self, system: DynSystem, tol: float = 1e-9):
        if system.N != 1:
            raise PreconditionViolation("the sphere chart parametrizes P^1 only")
        self.system = system
        self.tol = tol

    def lift(self, params: Sequence[float]) -> ProjPoint:
        theta, phi = params
        raw = ProjPoint.numeric([math.cos(phi / 2) * complex(math.cos(theta), math.sin(theta)), math.sin(phi / 2)])
        rate = escape_rate(self.system, ARCHIMEDEAN, raw, self.tol)
        return raw.scaled(math.exp(-rate.value))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(0, 2 * math.pi), math.acos(rng.uniform(-1, 1))])


@dataclass
class FeketeResult:
    n: int
    seed: int
    params: list[np.ndarray]
    lifts: list[ProjPoint]
    log_det: float
    evaluations: int

    @property
    def witness(self) -> float:
        return self.log_det / (self.n * len(self.lifts))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "witness_logd": self.witness,
            "log_det": self.log_det,
            "evaluations": self.evaluations,
            "tuple": [lift.to_json() for lift in self.lifts],
        }


class _BudgetExhausted(Exception):
    pass


class _Search:
    def __init__(self, basis: BasisFamily, chart: Chart, budget: int, seed: int):
        self.basis = basis
        self.chart = chart
        self.budget = budget
        self.seed = seed
        self.evaluations = 0
        self.best_log_det = -math.inf
        self.best_params: list[np.ndarray] | None = None

    def charge(self) -> None:
        if self.evaluations >= self.budget:
            raise _BudgetExhausted()
        self.evaluations += 1

    def row(self, params) -> np.ndarray:
        lift = self.chart.lift(params)
        return np.array([form.evaluate(lift) for form in self.basis.forms()], dtype=complex)

    def rows(self, params: list[np.ndarray]) -> np.ndarray:
        return np.array([self.row(p) for p in params])

    def score(self, params: list[np.ndarray], rows: np.ndarray) -> float:
        self.charge()
        sign, logabs = np.linalg.slogdet(rows)
        value = float(logabs) if sign != 0 and np.isfinite(logabs) else -math.inf
        if value > self.best_log_det:
            self.best_log_det = value
            self.best_params = [p.copy() for p in params]
        return value

    def leja(self, rng: np.random.Generator) -> tuple[list[np.ndarray], np.ndarray]:
        c = self.basis.c
        pool = [self.chart.sample(rng) for _ in range(32 + 8 * c)]
        F = np.array([self.row(p) for p in pool])
        G = np.zeros(F.shape, dtype=complex)
        chosen: list[int] = []
        for k in range(c):
            residual = np.abs(F[:, : k + 1] - G[:, : k + 1]).max(axis=1)
            residual[chosen] = -1.0
            chosen.append(int(np.argmax(residual)))
            cols = list(range(k + 1))
            G = F[:, cols] @ np.linalg.solve(F[np.ix_(chosen, cols)], F[chosen, :])
        params = [pool[i] for i in chosen]
        return params, F[chosen, :]

    def run(self) -> None:
        """Alternate coordinate sweeps and quasi-Newton polishing until the budget is spent.

        Every evaluation is charged in a fixed order, so a larger budget
        replays the smaller run first and never ends worse.
        """
        rng = np.random.default_rng(self.seed)
        try:
            params, rows = self.leja(rng)
        except np.linalg.LinAlgError:
            logging.warning(f"Leja start singular for seed {self.seed}")
            return
        try:
            current = self.score(params, rows)
            width = self.chart.span / self.basis.c
            while True:
                before = self.best_log_det
                params, rows, current = self.ascend(params, rows, current, width)
                params, rows, current = self.polish(params, rows, current)
                if self.best_params is None:
                    params, rows = self.leja(rng)
                    current = self.score(params, rows)
                elif self.best_log_det - before <= 1e-12 * max(1.0, abs(before)):
                    params, rows, current = self.perturb(rng, width / 4)
                else:
                    params = [p.copy() for p in self.best_params]
                    rows, current = self.rows(params), self.best_log_det
                    width = self.chart.span / self.basis.c / 4
        except _BudgetExhausted:
            pass
        except np.linalg.LinAlgError:
            logging.warning(f"Leja restart singular for seed {self.seed}")
        logging.info(f"Search seed {self.seed} spent {self.evaluations}/{self.budget} evaluations")

    def ascend(self, params, rows, current, width: float):
        while width >= 1e-9:
            for i in range(len(params)):
                for axis in range(self.chart.dimension):
                    params, rows, current = self._coordinate_step(params, rows, current, i, axis, width)
            width *= 0.5
        return params, rows, current

    def gradient(self, params: list[np.ndarray], rows: np.ndarray) -> np.ndarray:
        # d log|det M| = Re Σ_j (M⁻¹)_{j,i}·∂row_i[j] when only row i moves
        inverse = np.linalg.inv(rows)
        grad = np.zeros((len(params), self.chart.dimension))
        for i, point in enumerate(params):
            for axis in range(self.chart.dimension):
                self.charge()
                up, down = point.copy(), point.copy()
                up[axis] += _GRADIENT_STEP
                down[axis] -= _GRADIENT_STEP
                drow = (self.row(up) - self.row(down)) / (2 * _GRADIENT_STEP)
                grad[i, axis] = float(np.real(drow @ inverse[:, i]))
        return grad.ravel()

    def polish(self, params, rows, current):
        shape = (len(params), self.chart.dimension)

        def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
            trial = [np.array(p) for p in x.reshape(shape)]
            trial_rows = self.rows(trial)
            value = self.score(trial, trial_rows)
            if not np.isfinite(value):
                return 1e300, np.zeros(x.size)
            try:
                return -value, -self.gradient(trial, trial_rows)
            except np.linalg.LinAlgError:
                return -value, np.zeros(x.size)

        minimize(objective, np.concatenate(params), jac=True, method="L-BFGS-B", options={"maxiter": 500})
        if self.best_params is None:
            return params, rows, current
        params = [p.copy() for p in self.best_params]
        return params, self.rows(params), self.best_log_det

    def perturb(self, rng: np.random.Generator, scale: float):
        params = [p + rng.normal(0.0, scale, size=p.shape) for p in self.best_params]
        rows = self.rows(params)
        return params, rows, self.score(params, rows)

    def _coordinate_step(self, params, rows, current, i, axis, width):
        center = params[i][axis]

        def objective(x: float) -> float:
            trial = params[i].copy()
            trial[axis] = x
            trial_rows = rows.copy()
            trial_rows[i] = self.row(trial)
            trial_params = list(params)
            trial_params[i] = trial
            value = self.score(trial_params, trial_rows)
            return -value if np.isfinite(value) else 1e300

        found = minimize_scalar(
            objective,
            bounds=(center - width, center + width),
            method="bounded",
            options={"maxiter": 40, "xatol": width * 1e-4},
        )
        if found.fun < 1e300 and -found.fun > current:
            params = list(params)
            params[i] = params[i].copy()
            params[i][axis] = found.x
            rows = rows.copy()
            rows[i] = self.row(params[i])
            current = -found.fun
        return params, rows, current


def _run_restart(basis: BasisFamily, chart: Chart, budget: int, seed: int) -> _Search:
    search = _Search(basis, chart, budget, seed)
    search.run()
    return search


def fekete_search(
    system: DynSystem,
    basis: BasisFamily,
    n: int | None = None,
    budget: int = 20000,
    seed: int = 7,
    restarts: int = 1,
    chart: Chart | None = None,
) -> FeketeResult:
    """Greedy Leja start, then coordinate ascent and L-BFGS polishing of log|det| over Ĥ = 0 lifts."""
    n = basis.n if n is None else n
    if n != basis.n:
        raise DimensionMismatch(f"basis of degree {basis.n} for a search in degree {n}")
    if chart is None:
        if system.hypersurface is not None or system.N != 1:
            raise PreconditionViolation("searches off P^1 need a chart for the hypersurface")
        chart = SphereChart(system)
    share = max(budget // max(restarts, 1), 1)
    seeds = [seed + i for i in range(max(restarts, 1))]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        searches = list(pool.map(lambda s: _run_restart(basis, chart, share, s), seeds))
    best = max(searches, key=lambda s: s.best_log_det)
    used = sum(s.evaluations for s in searches)
    if best.best_params is None or not np.isfinite(best.best_log_det):
        raise SearchFailed(f"no nonsingular tuple within {budget} evaluations")
    logging.info(f"Fekete search n={n}: log|det| {best.best_log_det:.12g} after {used} evaluations")
    lifts = [chart.lift(p) for p in best.best_params]
    return FeketeResult(n, best.seed, best.best_params, lifts, best.best_log_det, used)
