from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from greenfield.arith.homopoly import ProjPoint
from greenfield.arith.pf_field import ARCHIMEDEAN, LogMag, Place, norm_log, support
from greenfield.config import config
from greenfield.dynamics.dynsys import DynSystem, EscapeRate, contributing_places, escape_rate
from greenfield.errors import DomainError


@dataclass(frozen=True)
class HeightValue:
    value: float
    error: float
    local_profile: dict[Place, LogMag] = field(default_factory=dict)
    ledger: LogMag = field(default_factory=LogMag)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "error": self.error,
            "local_profile": {str(v): term.to_dict() for v, term in sorted(self.local_profile.items())},
        }


def _exact_lift(point) -> ProjPoint:
    lift = point if isinstance(point, ProjPoint) else ProjPoint(point)
    if not lift.exact:
        raise DomainError("heights are defined here for rational lifts")
    return lift


def _coordinate_places(lift: ProjPoint) -> set[Place]:
    places = {ARCHIMEDEAN}
    for c in lift.coords:
        if c:
            places |= support(c)
    return places


def weil_height(point) -> HeightValue:
    """h(P) = Σ_v log max_i |x_i|_v."""
    lift = _exact_lift(point)
    profile: dict[Place, LogMag] = {}
    total = LogMag()
    for place in sorted(_coordinate_places(lift)):
        term = norm_log(place, lift.coords)
        profile[place] = term
        total = total + term
    value, error = total.bound()
    return HeightValue(value, error, profile, total)


def _sum_rates(rates: list[EscapeRate]) -> HeightValue:
    total = LogMag()
    error = 0.0
    profile: dict[Place, LogMag] = {}
    for rate in rates:
        profile[rate.place] = rate.ledger
        total = total + LogMag(rate.ledger.padic, rate.ledger.arch, 0.0)
        error += rate.error
    value, rounding = total.bound()
    return HeightValue(value, error + rounding, profile, total)


def local_height_profile(system: DynSystem, point, tol: float = 1e-9) -> HeightValue:
    """Per-place escape rates of this lift; their total does not depend on the lift."""
    lift = _exact_lift(point)
    places = contributing_places(system, lift)
    share = tol / len(places)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        rates = list(pool.map(lambda v: escape_rate(system, v, lift, share), places))
    return _sum_rates(rates)


def canonical_height(system: DynSystem, point, tol: float = 1e-9) -> HeightValue:
    """ĥ_f(P) as the sum of local escape rates; total error within tol."""
    return local_height_profile(system, point, tol)
