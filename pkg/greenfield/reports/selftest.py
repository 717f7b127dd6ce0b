import logging
import math
from fractions import Fraction
from typing import Callable, TypedDict

from greenfield.arith.homopoly import PolyMap, ProjPoint
from greenfield.arith.macaulay import macaulay_resultant
from greenfield.arith.pf_field import ARCHIMEDEAN, Place, product_formula_sum
from greenfield.dynamics.dynsys import DynSystem, escape_rate
from greenfield.dynamics.heights import canonical_height, weil_height
from greenfield.dynamics.lattes import EllipticCurve, LattesSystem, torsion_order


class CheckResult(TypedDict):
    name: str
    passed: bool
    detail: str


def _product_formula() -> str:
    for x in (Fraction(12, 35), Fraction(-1024, 3), Fraction(7), Fraction(1, 360)):
        if not product_formula_sum(x).is_zero_within(1e-12):
            raise AssertionError(f"adelic sum of {x} is not zero")
    return "4 rationals"


def _resultants() -> str:
    cases = [
        (["x^2", "y^2"], Fraction(1)),
        (["x^2 - y^2", "x*y"], Fraction(-1)),
        (["x^2 - 2*y^2", "y^2"], Fraction(1)),
        (["x^2", "y^2", "z^2"], Fraction(1)),
    ]
    for forms, expected in cases:
        got = macaulay_resultant(PolyMap.parse(forms))
        if got != expected:
            raise AssertionError(f"Res{forms} = {got}, expected {expected}")
    return f"{len(cases)} maps"


def _escape_rates() -> str:
    system = DynSystem(PolyMap.power(2, 2))
    rate = escape_rate(system, ARCHIMEDEAN, ProjPoint((2, 1)))
    if abs(rate.value - math.log(2)) > 1e-9:
        raise AssertionError(f"escape rate at (2,1) is {rate.value}")
    rate = escape_rate(system, Place.at(2), ProjPoint((Fraction(1, 2), 1)))
    if not rate.exact or rate.ledger.coefficient(2) != 1:
        raise AssertionError(f"2-adic escape rate at (1/2,1) is {rate.ledger}")
    return "power map at inf and 2"


def _heights() -> str:
    system = DynSystem(PolyMap.power(2, 2))
    point = ProjPoint((Fraction(3, 4), 1))
    hat = canonical_height(system, point)
    weil = weil_height(point)
    if abs(hat.value - weil.value) > 1e-9 or abs(hat.value - math.log(4)) > 1e-9:
        raise AssertionError(f"heights {hat.value}, {weil.value} of 3/4 differ from log 4")
    return "power map height equals Weil height"


def _lattes() -> str:
    lattes = LattesSystem.from_coefficients(0, -2, 3, 5)
    for k in range(1, 5):
        if not lattes.check_duplication(lattes.base * k):
            raise AssertionError(f"duplication fails at {k}P")
    curve = EllipticCurve(0, 1)
    if torsion_order(curve.point(2, 3)) != 6:
        raise AssertionError("(2,3) on y^2 = x^3 + 1 should have order 6")
    return "y^2 = x^3 - 2 and y^2 = x^3 + 1"


CHECKS: list[tuple[str, Callable[[], str]]] = [
    ("product_formula", _product_formula),
    ("resultants", _resultants),
    ("escape_rates", _escape_rates),
    ("heights", _heights),
    ("lattes", _lattes),
]


def run_selftest() -> list[CheckResult]:
    results: list[CheckResult] = []
    for name, check in CHECKS:
        try:
            results.append(CheckResult(name=name, passed=True, detail=check()))
        except Exception as e:
            logging.exception(f"Selftest {name} failed: {e}")
            results.append(CheckResult(name=name, passed=False, detail=f"{type(e).__name__}: {e}"))
    logging.info(f"Selftest: {sum(r['passed'] for r in results)}/{len(results)} checks passed")
    return results
