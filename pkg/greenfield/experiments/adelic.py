import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, TypedDict

from greenfield.arith.homopoly import ProjPoint
from greenfield.arith.linalg import RowReducer, bareiss_det
from greenfield.arith.pf_field import ARCHIMEDEAN, MINUS_INFINITY, Place, product_formula_sum, support
from greenfield.config import config
from greenfield.dynamics.basis import BasisFamily, special_basis
from greenfield.dynamics.dynsys import DynSystem, julia_radius_log, normalize_into_julia
from greenfield.dynamics.green import dbn_witness, fekete_search, hadamard_envelope
from greenfield.errors import SearchFailed

# integer points of P^N (N ≥ 2) are searched up to this sup-norm
_POINT_SEARCH_HEIGHT = 24


class PlaceRow(TypedDict):
    n: int
    c: int
    place: str
    reduction: str
    radius_log: float
    envelope_logd: float
    witness_logd: float | None
    witness_source: str
    consistent: bool | None


class DegreeRow(TypedDict):
    n: int
    c: int
    relaxed: bool
    envelope_sum: float
    witness_sum: float | None
    exact_sum_zero: bool | None
    bad_place_gap: float | None
    reference_logd: float | None
    error: str | None


@dataclass
class AdelicReport:
    degrees: list[DegreeRow] = field(default_factory=list)
    places: list[PlaceRow] = field(default_factory=list)
    c_fit: float | None = None

    def to_dict(self) -> dict:
        return {"c_fit": self.c_fit, "degrees": self.degrees, "places": self.places}


def report_places(system: DynSystem) -> list[Place]:
    places = {ARCHIMEDEAN} | set(support(system.resultant))
    for c in system.map.coefficients():
        places |= support(c)
    return sorted(places)


def _candidate_points(system: DynSystem) -> Iterator[ProjPoint]:
    if system.N == 1:
        yield ProjPoint((1, 0))
        j = 0
        while True:
            yield ProjPoint((j, 1))
            j += 1
    G = system.hypersurface
    for bound in range(1, _POINT_SEARCH_HEIGHT + 1):
        for coords in product(range(-bound, bound + 1), repeat=system.nvars):
            if max(abs(x) for x in coords) != bound:
                continue
            if math.gcd(*coords) != 1 or next(x for x in coords if x) < 0:
                continue
            lift = ProjPoint(coords)
            if G is None or G.evaluate(lift) == 0:
                yield lift


def exact_witness_tuple(system: DynSystem, basis: BasisFamily) -> list[ProjPoint]:
    """c(n) integer points of X of small height with a nonzero evaluation determinant.

    On P¹ these are ∞, 0, 1, 2, ...: distinct residues modulo every p > n.
    """
    reducer = RowReducer(basis.c)
    chosen: list[ProjPoint] = []
    for lift in _candidate_points(system):
        if reducer.add([form.evaluate(lift) for form in basis.forms()]):
            chosen.append(lift)
            if len(chosen) == basis.c:
                return chosen
    raise SearchFailed(f"only {len(chosen)} of {basis.c} independent integer points up to height {_POINT_SEARCH_HEIGHT}")


def ledger_sum_zero(basis: BasisFamily, lifts: list[ProjPoint], tol: float) -> bool:
    det = bareiss_det(basis.evaluate(lifts))
    return product_formula_sum(det).is_zero_within(tol)


def _place_row(system, basis, place, raw, budget, seed, tol) -> PlaceRow:
    n, c = basis.n, basis.c
    radius = julia_radius_log(system, place).value
    envelope = hadamard_envelope(system, n, radius, place) / (n * c)
    if place.is_archimedean and system.N == 1:
        witness = fekete_search(system, basis, budget=budget, seed=seed).witness
        source = "fekete"
    else:
        lifts = [normalize_into_julia(system, place, lift, tol) for lift in raw]
        value = dbn_witness(system, basis, lifts, place, tol)
        witness = None if value is MINUS_INFINITY else value.value
        source = "exact"
    return PlaceRow(
        n=n,
        c=c,
        place=str(place),
        reduction=system.reduction(place).kind.value,
        radius_log=radius,
        envelope_logd=envelope,
        witness_logd=witness,
        witness_source=source,
        consistent=None if witness is None else witness <= envelope + tol,
    )


def _degree(system: DynSystem, n: int, budget: int, seed: int, tol: float) -> tuple[DegreeRow, list[PlaceRow]]:
    try:
        basis = special_basis(system, n)
        raw = exact_witness_tuple(system, basis)
        rows = [_place_row(system, basis, v, raw, budget, seed, tol) for v in report_places(system)]
        witnesses = [r["witness_logd"] for r in rows]
        gaps = [
            r["witness_logd"]
            for r in rows
            if r["reduction"] == "Bad" and r["place"] != str(ARCHIMEDEAN) and r["witness_logd"] is not None
        ]
        degree = DegreeRow(
            n=n,
            c=basis.c,
            relaxed=basis.relaxed,
            envelope_sum=math.fsum(r["envelope_logd"] for r in rows),
            witness_sum=None if None in witnesses else math.fsum(witnesses),
            exact_sum_zero=ledger_sum_zero(basis, raw, tol),
            bad_place_gap=min(gaps) if gaps else None,
            reference_logd=None,
            error=None,
        )
        return degree, rows
    except Exception as e:
        logging.exception(f"Skipped degree {n}: {e}")
        return DegreeRow(
            n=n,
            c=0,
            relaxed=False,
            envelope_sum=math.nan,
            witness_sum=None,
            exact_sum_zero=None,
            bad_place_gap=None,
            reference_logd=None,
            error=f"{type(e).__name__}: {e}",
        ), []


def adelic_report(
    system: DynSystem, n_list: list[int], budget: int = 20000, seed: int = 7, tol: float = 1e-9
) -> AdelicReport:
    """Per-place envelopes and witnesses for log d_{H(n)}, with C fitted to Σ_v envelope ≤ C·log n/n."""
    report = AdelicReport()
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        results = pool.map(lambda n: _degree(system, n, budget, seed, tol), n_list)
        for i, (degree, rows) in enumerate(results, 1):
            report.degrees.append(degree)
            report.places.extend(rows)
            logging.info(f"Processed {i}/{len(n_list)} degrees so far")
    fits = [
        d["envelope_sum"] * d["n"] / math.log(d["n"])
        for d in report.degrees
        if d["error"] is None and d["n"] >= 2
    ]
    if fits:
        report.c_fit = max(fits)
        for d in report.degrees:
            if d["error"] is None and d["n"] >= 2:
                d["reference_logd"] = report.c_fit * math.log(d["n"]) / d["n"]
    return report
