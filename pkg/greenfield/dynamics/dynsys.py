import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint
from greenfield.arith.macaulay import (
    RConvention,
    macaulay_certificates,
    macaulay_degree,
    macaulay_resultant,
    resultant_scaling_exponent,
)
from greenfield.arith.pf_field import (
    ARCHIMEDEAN,
    EPS,
    LogMag,
    Place,
    abs_log,
    min_valuation,
    support,
)
from greenfield.errors import (
    DimensionMismatch,
    DomainError,
    InternalError,
    NotAMorphism,
    PrecisionLost,
    PreconditionViolation,
)

# escape-rate tails are cut at a quarter of the requested tolerance
_TAIL_SHARE = 4
_MAX_STEPS = 4000


class ReductionType(str, Enum):
    GOOD = "Good"
    BAD = "Bad"


class Membership(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ReductionInfo:
    place: Place
    kind: ReductionType
    scale: Fraction | None = None
    needs_extension: bool = False

    @property
    def is_good(self) -> bool:
        return self.kind is ReductionType.GOOD


@dataclass(frozen=True)
class GrowthConstants:
    """log‖F(Q)‖ − d·log‖Q‖ ∈ [−c_lo, c_hi] for every Q ≠ 0 at the place.

    At a prime the constants are integer multiples of log p, kept in
    lo_exponent / hi_exponent.
    """

    place: Place
    c_lo: float
    c_hi: float
    lo_exponent: int = 0
    hi_exponent: int = 0

    @property
    def drop_bound(self) -> int:
        return max(self.lo_exponent + self.hi_exponent, 0)


@dataclass(frozen=True)
class EscapeRate:
    place: Place
    ledger: LogMag
    error: float
    steps: int

    @property
    def value(self) -> float:
        return self.ledger.value

    @property
    def exact(self) -> bool:
        return self.error == 0.0 and self.ledger.is_exact

    def to_dict(self) -> dict:
        return {
            "place": str(self.place),
            "value": self.value,
            "error": self.error,
            "exact": self.exact,
            "steps": self.steps,
            "ledger": self.ledger.to_dict(),
        }


@dataclass(frozen=True)
class InvarianceResult:
    invariant: bool
    witness: HomoForm

    def __bool__(self) -> bool:
        return self.invariant


def invariance_check(fmap: PolyMap, hypersurface: HomoForm) -> InvarianceResult:
    """G∘F = Q·G? Returns Q on success, the division remainder otherwise."""
    if hypersurface.nvars != fmap.nvars:
        raise DimensionMismatch(f"hypersurface in {hypersurface.nvars} variables for a map of P^{fmap.N}")
    if hypersurface.is_zero():
        raise DomainError("the zero form defines no hypersurface")
    pulled = hypersurface.substitute(fmap.forms)
    quotient, remainder = pulled.divide(hypersurface)
    if remainder.is_zero():
        return InvarianceResult(True, quotient)
    return InvarianceResult(False, remainder)


class DynSystem:
    """A morphism of P^N (given by a lift F) with an optional invariant hypersurface."""

    def __init__(
        self,
        fmap: PolyMap,
        hypersurface: HomoForm | None = None,
        convention: RConvention | str = RConvention.INVARIANT,
    ):
        if fmap.degree < 2:
            raise PreconditionViolation(f"a dynamical system needs degree >= 2, got {fmap.degree}")
        self.map = fmap
        self.convention = RConvention(convention)
        self.resultant = macaulay_resultant(fmap)
        if self.resultant == 0:
            raise NotAMorphism("Res(F) = 0: the forms have a common projective zero")
        self.hypersurface = hypersurface
        if hypersurface is not None:
            check = invariance_check(fmap, hypersurface)
            if not check:
                raise PreconditionViolation(f"hypersurface {hypersurface} is not invariant: remainder {check.witness}")
            self.invariance_witness = check.witness
        else:
            self.invariance_witness = None
        self._lock = threading.RLock()
        self._iterates: dict[int, PolyMap] = {1: fmap}
        self._growth: dict[Place, GrowthConstants] = {}
        self._reduction: dict[Place, ReductionInfo] = {}
        self._certificates: list[tuple[HomoForm, ...]] | None = None
        self._forms_cache: dict = {}

    @property
    def degree(self) -> int:
        return self.map.degree

    @property
    def N(self) -> int:
        return self.map.N

    @property
    def nvars(self) -> int:
        return self.map.nvars

    @property
    def macaulay_degree(self) -> int:
        return macaulay_degree(self.map)

    def memo(self, key, compute):
        """Per-system memo table shared by the basis machinery."""
        with self._lock:
            if key not in self._forms_cache:
                self._forms_cache[key] = compute()
            return self._forms_cache[key]

    def iterate(self, k: int) -> PolyMap:
        if k < 1:
            raise PreconditionViolation(f"iterate needs k >= 1, got {k}")
        with self._lock:
            if k not in self._iterates:
                half = self.iterate(k // 2) if k > 1 else None
                if k % 2 == 0:
                    self._iterates[k] = half.compose(half)
                else:
                    self._iterates[k] = self.map.compose(self.iterate(k - 1))
            return self._iterates[k]

    def coordinate_certificates(self) -> list[tuple[HomoForm, ...]]:
        """η_ij with x_j^e = Σ_i η_ij·F_i at the Macaulay degree e."""
        with self._lock:
            if self._certificates is None:
                e = self.macaulay_degree
                powers = [
                    HomoForm.monomial([e if k == j else 0 for k in range(self.nvars)])
                    for j in range(self.nvars)
                ]
                self._certificates = macaulay_certificates(self.map, powers)
            return self._certificates

    def growth_constants(self, place: Place) -> GrowthConstants:
        with self._lock:
            if place not in self._growth:
                self._growth[place] = self._compute_growth(place)
            return self._growth[place]

    def _compute_growth(self, place: Place) -> GrowthConstants:
        certs = self.coordinate_certificates()
        if place.is_archimedean:
            top = max(f.l1_norm() for f in self.map.forms)
            spread = max(sum((eta.l1_norm() for eta in etas), Fraction(0)) for etas in certs)
            return GrowthConstants(
                place,
                c_lo=abs_log(ARCHIMEDEAN, spread).value,
                c_hi=abs_log(ARCHIMEDEAN, top).value,
            )
        hi = -min_valuation(place, self.map.coefficients())
        lo_candidates = [
            -min_valuation(place, eta.terms.values()) for etas in certs for eta in etas if not eta.is_zero()
        ]
        lo = max(lo_candidates)
        log_p = math.log(place.prime)
        return GrowthConstants(place, c_lo=lo * log_p, c_hi=hi * log_p, lo_exponent=lo, hi_exponent=hi)

    def reduction(self, place: Place) -> ReductionInfo:
        with self._lock:
            if place not in self._reduction:
                self._reduction[place] = _classify(self, place)
            return self._reduction[place]

    def __repr__(self) -> str:
        return f"DynSystem({self.map.to_json()}, hypersurface={self.hypersurface})"


def _classify(system: DynSystem, place: Place) -> ReductionInfo:
    if place.is_archimedean:
        return ReductionInfo(place, ReductionType.BAD)
    r = place.valuation(system.resultant)
    k = resultant_scaling_exponent(system.map)
    if r % k:
        logging.info(f"ord_{place.prime}(Res) = {r} is not divisible by {k}; good reduction would need an extension")
        return ReductionInfo(place, ReductionType.BAD, None, needs_extension=True)
    t = r // k
    scale = Fraction(place.prime) ** -t
    coeff_ord = min_valuation(place, system.map.coefficients())
    kind = ReductionType.GOOD if coeff_ord == t else ReductionType.BAD
    return ReductionInfo(place, kind, scale)


def check_invariance(system: DynSystem) -> InvarianceResult:
    if system.hypersurface is None:
        raise PreconditionViolation("the system has no hypersurface")
    return invariance_check(system.map, system.hypersurface)


def reduction_type(system: DynSystem, place: Place) -> ReductionType:
    return system.reduction(place).kind


def _checked_lift(system: DynSystem, lift: ProjPoint, tol: float) -> ProjPoint:
    if not isinstance(lift, ProjPoint):
        lift = ProjPoint(lift)
    if lift.nvars != system.nvars:
        raise DimensionMismatch(f"lift with {lift.nvars} coordinates for a map of P^{system.N}")
    if not tol > 0:
        raise PreconditionViolation(f"tolerance must be positive, got {tol}")
    return lift


def _steps_for(spread: float, d: int, tol: float) -> int:
    if spread <= 0:
        return 0
    steps = 0
    while spread / (2 * d**steps * (d - 1)) > tol / _TAIL_SHARE:
        steps += 1
        if steps > _MAX_STEPS:
            raise PreconditionViolation(f"tolerance {tol} is out of reach")
    return steps


def _good_escape(system: DynSystem, info: ReductionInfo, coords) -> EscapeRate:
    base = LogMag.log_prime(info.place.prime, -min_valuation(info.place, coords))
    shift = abs_log(info.place, info.scale).scale(Fraction(1, system.degree - 1))
    return EscapeRate(info.place, base - shift, 0.0, 0)


def _ord_mod(x: int, p: int, precision: int) -> int:
    if x == 0:
        return precision
    count = 0
    while x % p == 0 and count < precision:
        x //= p
        count += 1
    return count


def _residue(q: Fraction, modulus: int) -> int:
    return q.numerator * pow(q.denominator, -1, modulus) % modulus


def _padic_escape(system: DynSystem, place: Place, coords, tol: float) -> EscapeRate:
    p = place.prime
    d = system.degree
    growth = system.growth_constants(place)
    s, b = growth.hi_exponent, growth.drop_bound
    start = min_valuation(place, coords)
    log_p = math.log(p)
    steps = _steps_for(b * log_p, d, tol)
    precision = steps * b + b + 4
    modulus = p**precision
    unit = Fraction(p) ** -start
    q = [_residue(Fraction(c) * unit, modulus) for c in coords]
    lifted = Fraction(p) ** s
    forms = [
        [(e, _residue(c * lifted, modulus)) for e, c in f.terms.items()] for f in system.map.forms
    ]
    drops: list[int] = []
    current = precision
    for k in range(steps):
        mod = p**current
        values = []
        for terms in forms:
            total = 0
            for e, c in terms:
                v = c
                for x, a in zip(q, e):
                    if a:
                        v = v * pow(x, a, mod) % mod
                total += v
            values.append(total % mod)
        m = min(_ord_mod(v, p, current) for v in values)
        if m >= current or m > b:
            raise InternalError(f"valuation drop {m} at step {k} exceeds the bound {b} at {place}")
        drops.append(m)
        current -= m
        scale = p**m
        q = [(v // scale) % p**current for v in values]
    exponent = Fraction(-start) + Fraction(s, d - 1)
    exponent -= sum((Fraction(m, d ** (k + 1)) for k, m in enumerate(drops)), Fraction(0))
    exponent -= Fraction(b, 2 * d**steps * (d - 1))
    error = b * log_p / (2 * d**steps * (d - 1))
    return EscapeRate(place, LogMag.log_prime(p, exponent), error, steps)


def _archimedean_escape(system: DynSystem, lift: ProjPoint, tol: float) -> EscapeRate:
    d = system.degree
    growth = system.growth_constants(ARCHIMEDEAN)
    if lift.exact:
        top = max(abs(c) for c in lift.coords)
        base = abs_log(ARCHIMEDEAN, top)
        q = [complex(float(c / top)) for c in lift.coords]
        base_value, base_err = base.arch, base.arch_err
    else:
        top = max(abs(c) for c in lift.coords)
        base_value = math.log(top)
        base_err = abs(base_value) * EPS + math.ulp(base_value)
        q = [c / top for c in lift.coords]
    spread = growth.c_lo + growth.c_hi
    steps = _steps_for(spread, d, tol)
    nterms = max(len(f.terms) for f in system.map.forms)
    # log of the binary64 rounding bound 8·nterms·EPS·e^spread/(d−1)
    rounding_log = math.log(8 * nterms * EPS / (d - 1)) + spread
    if steps and rounding_log >= 0.0:
        raise PrecisionLost(
            f"binary64 iteration of this lift of f cannot resolve escape rates: "
            f"rounding bound e^{rounding_log:.1f} at growth spread {spread:.1f}"
        )
    increments = [base_value]
    for k in range(steps):
        values = system.map.apply(q)
        top = max(abs(v) for v in values)
        increments.append(math.log(top) / d ** (k + 1))
        q = [v / top for v in values]
    increments.append((growth.c_hi - growth.c_lo) / (2 * d**steps * (d - 1)))
    value = math.fsum(increments)
    error = base_err + max(spread, 0.0) / (2 * d**steps * (d - 1))
    if steps:
        error += math.exp(rounding_log)
        error += steps * EPS * (abs(value) + 1)
    if error > tol:
        logging.warning(f"Escape rate error {error:.3g} exceeds tolerance {tol:.3g}")
    return EscapeRate(ARCHIMEDEAN, LogMag((), value, error), error, steps)


def escape_rate(system: DynSystem, place: Place, lift: ProjPoint, tol: float = 1e-9) -> EscapeRate:
    """Ĥ_F at the place, within tol (exactly at good nonarchimedean places)."""
    lift = _checked_lift(system, lift, tol)
    if place.is_archimedean:
        return _archimedean_escape(system, lift, tol)
    if not lift.exact:
        raise DomainError("nonarchimedean escape rates need an exact lift")
    info = system.reduction(place)
    if info.is_good:
        return _good_escape(system, info, lift.coords)
    return _padic_escape(system, place, lift.coords, tol)


def julia_membership(system: DynSystem, place: Place, lift: ProjPoint, tol: float = 1e-9) -> Membership:
    rate = escape_rate(system, place, lift, tol)
    if rate.exact and not place.is_archimedean:
        inside = rate.ledger.coefficient(place.prime) <= 0
        return Membership.INSIDE if inside else Membership.OUTSIDE
    if rate.value > tol:
        return Membership.OUTSIDE
    if rate.value < -tol:
        return Membership.INSIDE
    return Membership.UNDETERMINED


def julia_radius_log(system: DynSystem, place: Place) -> LogMag:
    """Sup of log‖P‖_v over the filled Julia set."""
    info = system.reduction(place)
    d = system.degree
    if info.is_good:
        return abs_log(place, info.scale).scale(Fraction(1, d - 1))
    growth = system.growth_constants(place)
    if place.is_archimedean:
        value = growth.c_lo / (d - 1)
        return LogMag((), value, abs(value) * 4 * EPS)
    return LogMag.log_prime(place.prime, Fraction(growth.lo_exponent, d - 1))


def normalize_into_julia(system: DynSystem, place: Place, lift: ProjPoint, tol: float = 1e-9) -> ProjPoint:
    """Rescale a lift by a power of p (of 2 at ∞; by exp(−Ĥ) numerically) into 𝒦_v."""
    lift = _checked_lift(system, lift, tol)
    rate = escape_rate(system, place, lift, tol)
    if not lift.exact:
        if not place.is_archimedean:
            raise DomainError("numeric lifts live at the archimedean place")
        return lift.scaled(math.exp(-rate.value))
    base = 2 if place.is_archimedean else place.prime
    if rate.exact:
        q = rate.ledger.coefficient(base)
        m = math.ceil(q)
    else:
        m = math.ceil((rate.value + rate.error) / math.log(base))
    # |base^m|_v = base^(−m) at a prime, base^m at ∞
    factor = Fraction(base) ** m if not place.is_archimedean else Fraction(base) ** -m
    return lift.scaled(factor)


def contributing_places(system: DynSystem, lift: ProjPoint) -> list[Place]:
    """Places where the local canonical height of the lift can be nonzero."""
    places = {ARCHIMEDEAN}
    for c in lift.coords:
        if c:
            places |= support(c)
    for c in system.map.coefficients():
        places |= support(c)
    places |= support(system.resultant)
    return sorted(places)
