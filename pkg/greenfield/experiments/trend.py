import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TypedDict

from sympy import integer_nthroot

from greenfield.arith.homopoly import ProjPoint
from greenfield.arith.macaulay import resultant_scaling_exponent
from greenfield.arith.pf_field import MINUS_INFINITY, Place, format_rational
from greenfield.config import config
from greenfield.dynamics.basis import special_basis
from greenfield.dynamics.dynsys import DynSystem, julia_radius_log, normalize_into_julia
from greenfield.dynamics.green import dbn_witness, hadamard_envelope
from greenfield.errors import DomainError
from greenfield.experiments.adelic import exact_witness_tuple


class TrendRow(TypedDict):
    n: int
    c: int
    envelope_logd: float
    witness_logd: float | None
    log_n_over_n: float
    error: str | None


@dataclass
class TrendTable:
    place: str
    scale: str | None
    skipped: str | None = None
    rows: list[TrendRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"place": self.place, "scale": self.scale, "skipped": self.skipped, "rows": self.rows}


def unit_rescaling(system: DynSystem, place: Place) -> Fraction:
    """λ ∈ ℚ with |Res(λF)|_v = 1; DomainError when no rational λ exists."""
    if not place.is_archimedean:
        info = system.reduction(place)
        if info.scale is None:
            raise DomainError(f"no rational rescaling of F has a unit resultant at {place}")
        return info.scale
    k = resultant_scaling_exponent(system.map)
    res = abs(system.resultant)
    num, num_exact = integer_nthroot(res.numerator, k)
    den, den_exact = integer_nthroot(res.denominator, k)
    if not (num_exact and den_exact):
        raise DomainError(f"|Res(F)| = {res} has no rational {k}-th root")
    return Fraction(int(den), int(num))


def roots_of_unity_tuple(c: int) -> list[ProjPoint]:
    return [ProjPoint.numeric([cmath.exp(2j * math.pi * k / c), 1.0]) for k in range(c)]


def _trend_row(system: DynSystem, place: Place, n: int, tol: float) -> TrendRow:
    try:
        basis = special_basis(system, n)
        c = basis.c
        radius = julia_radius_log(system, place).value
        envelope = hadamard_envelope(system, n, radius, place) / (n * c)
        if place.is_archimedean and system.N == 1:
            raw = roots_of_unity_tuple(c)
        else:
            raw = exact_witness_tuple(system, basis)
        lifts = [normalize_into_julia(system, place, lift, tol) for lift in raw]
        value = dbn_witness(system, basis, lifts, place, tol)
        witness = None if value is MINUS_INFINITY else value.value
        return TrendRow(
            n=n,
            c=c,
            envelope_logd=envelope,
            witness_logd=witness,
            log_n_over_n=math.log(n) / n,
            error=None,
        )
    except Exception as e:
        logging.exception(f"Skipped degree {n} at {place}: {e}")
        return TrendRow(
            n=n, c=0, envelope_logd=math.nan, witness_logd=None, log_n_over_n=math.log(n) / n, error=f"{type(e).__name__}: {e}"
        )


def transfin_trend(system: DynSystem, n_list: list[int], place: Place, tol: float = 1e-9) -> TrendTable:
    """(witness, envelope) for log d_{H(n)} at one place, after rescaling F to a unit resultant there."""
    try:
        scale = unit_rescaling(system, place)
    except DomainError as e:
        logging.warning(f"Trend at {place} skipped: {e}")
        return TrendTable(str(place), None, skipped=str(e))
    scaled = system if scale == 1 else DynSystem(system.map.scale(scale), system.hypersurface, system.convention)
    table = TrendTable(str(place), format_rational(scale))
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for i, row in enumerate(pool.map(lambda n: _trend_row(scaled, place, n, tol), n_list), 1):
            table.rows.append(row)
            logging.info(f"Processed {i}/{len(n_list)} degrees at {place} so far")
    return table
