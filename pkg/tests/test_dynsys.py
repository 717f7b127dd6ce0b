import math
import random
from fractions import Fraction

import pytest

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint
from greenfield.arith.pf_field import ARCHIMEDEAN, Place
from greenfield.dynamics.dynsys import (
    DynSystem,
    Membership,
    ReductionType,
    check_invariance,
    contributing_places,
    escape_rate,
    invariance_check,
    julia_membership,
    julia_radius_log,
    normalize_into_julia,
    reduction_type,
)
from greenfield.errors import DomainError, DimensionMismatch, NotAMorphism, PrecisionLost, PreconditionViolation

TOL = 1e-9


def test_construction_preconditions():
    with pytest.raises(PreconditionViolation):
        DynSystem(PolyMap.identity(2))
    with pytest.raises(NotAMorphism):
        DynSystem(PolyMap.parse(["x^2", "x*y"]))
    fmap = PolyMap.power(3, 2)
    with pytest.raises(PreconditionViolation):
        DynSystem(fmap, HomoForm.parse("x + y + z", 3))


def test_invariant_hypersurface():
    fmap = PolyMap.power(3, 2)
    G = HomoForm.parse("x - y", 3)
    result = invariance_check(fmap, G)
    assert result
    assert result.witness == HomoForm.parse("x + y", 3)
    system = DynSystem(fmap, G)
    assert check_invariance(system).invariant
    assert not invariance_check(fmap, HomoForm.parse("x + y + z", 3))


def test_power_map_escape_at_infinity(power_map):
    rate = escape_rate(power_map, ARCHIMEDEAN, ProjPoint((2, 1)))
    assert rate.value == pytest.approx(math.log(2), abs=1e-12)
    assert rate.error <= TOL


def test_good_reduction_escape_is_exact(power_map):
    rate = escape_rate(power_map, Place.at(3), ProjPoint((Fraction(1, 3), 1)))
    assert rate.exact
    assert rate.ledger.padic_dict == {3: 1}


def test_rescaled_good_reduction():
    system = DynSystem(PolyMap.parse(["2*x^2", "2*y^2"]))
    info = system.reduction(Place.at(2))
    assert info.kind is ReductionType.GOOD
    assert info.scale == Fraction(1, 2)
    rate = escape_rate(system, Place.at(2), ProjPoint((1, 1)))
    assert rate.exact
    assert rate.ledger.coefficient(2) == -1


def test_reduction_types(perturbed, chebyshev):
    assert reduction_type(perturbed, Place.at(2)) is ReductionType.BAD
    assert reduction_type(perturbed, Place.at(3)) is ReductionType.GOOD
    assert reduction_type(chebyshev, Place.at(2)) is ReductionType.GOOD
    assert reduction_type(chebyshev, ARCHIMEDEAN) is ReductionType.BAD
    info = DynSystem(PolyMap.parse(["2*x^2", "y^2"])).reduction(Place.at(2))
    assert info.kind is ReductionType.BAD
    assert info.needs_extension


def test_growth_constants(chebyshev, perturbed):
    growth = chebyshev.growth_constants(ARCHIMEDEAN)
    assert growth.c_hi == pytest.approx(math.log(3))
    assert growth.c_lo == pytest.approx(math.log(3))
    at_two = perturbed.growth_constants(Place.at(2))
    assert at_two.hi_exponent == 1
    assert at_two.lo_exponent == 1
    assert at_two.drop_bound == 2


def test_fixed_point_at_bad_place(perturbed):
    rate = escape_rate(perturbed, Place.at(2), ProjPoint((1, 0)), TOL)
    assert abs(rate.value) <= rate.error + 1e-15
    assert rate.error <= TOL


@pytest.mark.parametrize("place", [ARCHIMEDEAN, Place.at(2)])
def test_functional_equation(perturbed, place):
    point = ProjPoint((1, 1))
    image = perturbed.map(point)
    here = escape_rate(perturbed, place, point, TOL)
    there = escape_rate(perturbed, place, image, TOL)
    assert abs(there.value - 2 * here.value) <= 2 * TOL


def test_escape_is_lift_covariant(perturbed):
    point = ProjPoint((3, 1))
    scaled = point.scaled(Fraction(5, 2))
    a = escape_rate(perturbed, ARCHIMEDEAN, point, TOL)
    b = escape_rate(perturbed, ARCHIMEDEAN, scaled, TOL)
    assert abs(b.value - a.value - math.log(2.5)) <= 2 * TOL


def test_escape_rejects_bad_input(power_map):
    with pytest.raises(DomainError):
        escape_rate(power_map, Place.at(2), ProjPoint.numeric([1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        escape_rate(power_map, ARCHIMEDEAN, ProjPoint((1, 2, 3)))
    with pytest.raises(PreconditionViolation):
        escape_rate(power_map, ARCHIMEDEAN, ProjPoint((1, 2)), tol=0)


def test_julia_membership(power_map):
    assert julia_membership(power_map, ARCHIMEDEAN, ProjPoint((2, 1))) is Membership.OUTSIDE
    assert julia_membership(power_map, ARCHIMEDEAN, ProjPoint((Fraction(1, 3), Fraction(1, 3)))) is Membership.INSIDE
    assert julia_membership(power_map, ARCHIMEDEAN, ProjPoint((1, 1))) is Membership.UNDETERMINED
    assert julia_membership(power_map, Place.at(3), ProjPoint((1, 1))) is Membership.INSIDE
    assert julia_membership(power_map, Place.at(3), ProjPoint((Fraction(1, 3), 1))) is Membership.OUTSIDE


def test_julia_radius(power_map, perturbed):
    assert julia_radius_log(power_map, Place.at(5)).is_exact_zero
    assert julia_radius_log(perturbed, Place.at(2)).padic_dict == {2: 1}
    assert julia_radius_log(perturbed, ARCHIMEDEAN).value == pytest.approx(math.log(1.5))


@pytest.mark.parametrize("place", [ARCHIMEDEAN, Place.at(2), Place.at(3)])
def test_normalize_into_julia(perturbed, place):
    lift = normalize_into_julia(perturbed, place, ProjPoint((Fraction(1, 4), 9)), TOL)
    assert lift.same_point(ProjPoint((Fraction(1, 4), 9)))
    assert julia_membership(perturbed, place, lift, TOL) is not Membership.OUTSIDE


def test_contributing_places(perturbed):
    assert contributing_places(perturbed, ProjPoint((3, 1))) == [ARCHIMEDEAN, Place.at(2), Place.at(3)]


def test_iterates_are_cached(chebyshev):
    second = chebyshev.iterate(2)
    assert second == chebyshev.map.iterate(2)
    assert chebyshev.iterate(2) is second


def test_chebyshev_escape_closed_form(chebyshev):
    # 3 = w + 1/w with w = (3 + sqrt 5)/2
    rate = escape_rate(chebyshev, ARCHIMEDEAN, ProjPoint((3, 1)), TOL)
    assert abs(rate.value - math.log((3 + math.sqrt(5)) / 2)) <= TOL
    inside = escape_rate(chebyshev, ARCHIMEDEAN, ProjPoint((1, 1)), TOL)
    assert abs(inside.value) <= TOL


@pytest.mark.parametrize("place", [ARCHIMEDEAN, Place.at(2)])
def test_functional_equation_on_random_lifts(perturbed, chebyshev, place):
    rng = random.Random(17)
    for _ in range(100):
        a, c = rng.randint(-30, 30), rng.randint(-30, 30)
        if a == 0 and c == 0:
            c = 1
        lift = ProjPoint((Fraction(a, rng.randint(1, 30)), Fraction(c, rng.randint(1, 30))))
        for system in (perturbed, chebyshev):
            here = escape_rate(system, place, lift, TOL)
            there = escape_rate(system, place, system.map(lift), TOL)
            assert abs(there.value - 2 * here.value) <= 2 * TOL


def test_ill_conditioned_lift_loses_precision():
    K = 10**200
    fmap = PolyMap([HomoForm(2, 2, {(2, 0): 1}), HomoForm(2, 2, {(0, 2): 1, (1, 1): K})])
    system = DynSystem(fmap)
    assert system.resultant == 1
    with pytest.raises(PrecisionLost):
        escape_rate(system, ARCHIMEDEAN, ProjPoint((1, 1)), TOL)
    assert escape_rate(system, Place.at(3), ProjPoint((1, 1)), TOL).exact
