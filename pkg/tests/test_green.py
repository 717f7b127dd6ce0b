import math
import random
from fractions import Fraction

import pytest

from greenfield.arith.homopoly import PolyMap, ProjPoint
from greenfield.arith.linalg import bareiss_det
from greenfield.arith.pf_field import ARCHIMEDEAN, LogMag, Place, support
from greenfield.dynamics.basis import BasisFamily, GenElement, special_basis
from greenfield.dynamics.dynsys import DynSystem, julia_radius_log, normalize_into_julia
from greenfield.dynamics.green import dbn_witness, eval_det_log, fekete_search, green_value, hadamard_envelope
from greenfield.errors import PreconditionViolation

UNIT_TUPLE = [ProjPoint((1, 0)), ProjPoint((0, 1)), ProjPoint((1, 1))]


def test_eval_det_log_exact(power_map):
    basis = special_basis(power_map, 2)
    assert eval_det_log(basis, UNIT_TUPLE, ARCHIMEDEAN).value.is_exact_zero
    lifts = [ProjPoint((1, 0)), ProjPoint((0, 1)), ProjPoint((2, 1))]
    assert eval_det_log(basis, lifts, Place.at(2)).value.coefficient(2) == -1
    assert eval_det_log(basis, lifts, ARCHIMEDEAN).value.value == pytest.approx(math.log(2))


def test_singular_tuple(power_map):
    basis = special_basis(power_map, 2)
    lifts = [ProjPoint((1, 0)), ProjPoint((2, 0)), ProjPoint((0, 1))]
    assert eval_det_log(basis, lifts, ARCHIMEDEAN).singular
    assert green_value(power_map, basis, lifts, ARCHIMEDEAN).infinite


def test_determinant_obeys_product_formula(power_map):
    basis = special_basis(power_map, 2)
    lifts = [ProjPoint((1, 0)), ProjPoint((0, 1)), ProjPoint((3, 2))]
    total = LogMag()
    for place in sorted(support(6) | {ARCHIMEDEAN}):
        total = total + eval_det_log(basis, lifts, place).value
    assert total.is_zero_within(1e-12)


def test_green_value_of_unit_tuple(power_map):
    basis = special_basis(power_map, 2)
    value = green_value(power_map, basis, UNIT_TUPLE, ARCHIMEDEAN)
    assert value.value == pytest.approx(0.0, abs=1e-12)
    exact = green_value(power_map, basis, UNIT_TUPLE, Place.at(3))
    assert exact.error == 0.0
    assert exact.ledger.is_exact_zero


def test_witness_rejects_points_outside(power_map):
    basis = special_basis(power_map, 2)
    lifts = [ProjPoint((1, 0)), ProjPoint((2, 1)), ProjPoint((0, 1))]
    with pytest.raises(PreconditionViolation) as info:
        dbn_witness(power_map, basis, lifts, ARCHIMEDEAN)
    assert info.value.index == 1
    assert dbn_witness(power_map, basis, UNIT_TUPLE, Place.at(7)).is_exact_zero


def test_hadamard_envelope(power_map):
    assert hadamard_envelope(power_map, 4, 0.0, Place.at(5)) == 0.0
    assert hadamard_envelope(power_map, 4, 0.0) == pytest.approx(2.5 * math.log(5))
    assert hadamard_envelope(power_map, 4, -1.0, Place.at(5)) == 0.0
    with pytest.raises(PreconditionViolation):
        hadamard_envelope(power_map, 1, 0.0)


def test_fekete_needs_a_chart_off_the_line():
    system = DynSystem(PolyMap.power(3, 2))
    with pytest.raises(PreconditionViolation):
        fekete_search(system, special_basis(system, 1))


def test_determinant_product_formula_on_random_tuples(chebyshev):
    rng = random.Random(23)
    basis = special_basis(chebyshev, 3)
    checked = 0
    while checked < 100:
        lifts = [ProjPoint((rng.randint(-20, 20), rng.randint(1, 20))) for _ in range(basis.c)]
        det = bareiss_det(basis.evaluate(lifts))
        if det == 0:
            continue
        total = LogMag()
        for place in sorted(support(det) | {ARCHIMEDEAN}):
            total = total + eval_det_log(basis, lifts, place).value
        assert total.padic_dict == {}
        assert total.is_zero_within(1e-9)
        checked += 1


def test_green_value_invariances(chebyshev):
    basis = special_basis(chebyshev, 2)
    lifts = [ProjPoint((1, 0)), ProjPoint((0, 1)), ProjPoint((3, 2))]
    scaled_lifts = [lifts[0], lifts[1].scaled(6), lifts[2].scaled(Fraction(5, 3))]
    rescaled = DynSystem(chebyshev.map.scale(3))
    f0, f1, f2 = basis.forms()
    # unimodular change of basis
    changed = BasisFamily(2, 2, [GenElement(f0 + f1.scale(4)), GenElement(f1), GenElement(f2 - f0)])
    for place in (ARCHIMEDEAN, Place.at(2), Place.at(3), Place.at(5)):
        base = green_value(chebyshev, basis, lifts, place).value
        assert green_value(chebyshev, basis, scaled_lifts, place).value == pytest.approx(base, abs=1e-8)
        assert green_value(rescaled, basis, lifts, place).value == pytest.approx(base, abs=1e-8)
        assert green_value(chebyshev, changed, lifts, place).value == pytest.approx(base, abs=1e-8)


ENVELOPE_DEGREES = (4, 8, 16, 32)


@pytest.mark.parametrize("place", [ARCHIMEDEAN, Place.at(2)])
def test_envelope_bounds_sampled_tuples(perturbed, place):
    rng = random.Random(5)
    R_log = julia_radius_log(perturbed, place).value
    for n in ENVELOPE_DEGREES:
        basis = special_basis(perturbed, n)
        envelope = hadamard_envelope(perturbed, n, R_log, place)
        for _ in range(3):
            xs = set()
            while len(xs) < basis.c:
                xs.add(Fraction(rng.randint(-40, 40), rng.randint(1, 40)))
            lifts = [normalize_into_julia(perturbed, place, ProjPoint((x, 1))) for x in sorted(xs)]
            det = eval_det_log(basis, lifts, place)
            assert not det.singular
            assert det.value.value <= envelope + 1e-9


@pytest.mark.parametrize("place", [ARCHIMEDEAN, Place.at(2)])
def test_envelope_decay_rate_is_stable(perturbed, place):
    R_log = julia_radius_log(perturbed, place).value
    per_entry = [hadamard_envelope(perturbed, n, R_log, place) / (n * (n + 1)) for n in ENVELOPE_DEGREES]
    assert per_entry == sorted(per_entry, reverse=True)
    fits = [value / (math.log(n) / n) for value, n in zip(per_entry, ENVELOPE_DEGREES)]
    assert max(fits) <= 1.2 * min(fits)


@pytest.mark.parametrize("n", [4, 8])
def test_fekete_search_finds_roots_of_unity(power_map, n):
    result = fekete_search(power_map, special_basis(power_map, n), budget=20000, seed=7)
    assert result.witness == pytest.approx(math.log(n + 1) / (2 * n), abs=1e-6)
    assert len(result.lifts) == n + 1
    assert result.evaluations == 20000


def test_fekete_search_in_degree_twenty(power_map):
    result = fekete_search(power_map, special_basis(power_map, 20), budget=20000, seed=7)
    optimum = math.log(21) / 40
    assert optimum - 1e-3 <= result.witness <= optimum + 1e-9


def test_fekete_search_never_loses_with_more_budget(power_map):
    basis = special_basis(power_map, 6)
    witnesses = []
    for budget in (300, 900, 2700):
        result = fekete_search(power_map, basis, budget=budget, seed=5)
        assert result.evaluations == budget
        witnesses.append(result.witness)
    assert witnesses == sorted(witnesses)
    assert fekete_search(power_map, basis, budget=900, seed=5).witness == witnesses[1]
