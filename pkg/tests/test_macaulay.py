import random
from fractions import Fraction

import pytest
from sympy import Rational, Symbol, resultant

from greenfield.arith.homopoly import HomoForm, PolyMap, monomials
from greenfield.arith.macaulay import (
    RConvention,
    column_count,
    elimination_certificate,
    macaulay_certificate,
    macaulay_matrix,
    macaulay_resultant,
    r_normalized,
    reexpand,
    resultant_scaling_exponent,
)
from greenfield.arith.pf_field import Place
from greenfield.errors import NotAMorphism, PreconditionViolation

t = Symbol("t")


def _random_map(rng: random.Random, nvars: int, degree: int) -> PolyMap:
    forms = [
        HomoForm(nvars, degree, {e: rng.randint(-3, 3) for e in monomials(nvars, degree)}) for _ in range(nvars)
    ]
    return PolyMap(forms)


def test_power_maps_have_unit_resultant():
    assert macaulay_resultant(PolyMap.power(2, 2)) == 1
    assert macaulay_resultant(PolyMap.power(2, 3)) == 1
    assert macaulay_resultant(PolyMap.power(3, 2)) == 1


def test_binary_resultant_values():
    assert macaulay_resultant(PolyMap.parse(["x^2 - y^2", "x*y"])) == -1
    assert macaulay_resultant(PolyMap.parse(["x^2 - 2*y^2", "y^2"])) == 1
    assert macaulay_resultant(PolyMap.parse(["x^2", "x*y"])) == 0
    assert macaulay_resultant(PolyMap.parse(["2*x^2", "y^2"])) == 4


def test_binary_resultant_matches_sympy():
    rng = random.Random(8)
    for _ in range(20):
        fmap = _random_map(rng, 2, 3)
        f0, f1 = fmap.forms
        if f0.terms.get((3, 0), 0) == 0 or f1.terms.get((3, 0), 0) == 0:
            continue
        p = sum(Rational(c.numerator, c.denominator) * t ** e[0] for e, c in f0.terms.items())
        q = sum(Rational(c.numerator, c.denominator) * t ** e[0] for e, c in f1.terms.items())
        assert macaulay_resultant(fmap) == Fraction(int(resultant(p, q, t)))


def test_resultant_scales_with_the_lift():
    rng = random.Random(4)
    fmap = _random_map(rng, 3, 2)
    k = resultant_scaling_exponent(fmap)
    assert k == 12
    assert macaulay_resultant(fmap.scale(2)) == 2**k * macaulay_resultant(fmap)


def test_resultant_is_homogeneous_in_each_form():
    rng = random.Random(9)
    fmap = _random_map(rng, 3, 2)
    forms = list(fmap.forms)
    forms[1] = forms[1].scale(3)
    assert macaulay_resultant(PolyMap(forms)) == 3**4 * macaulay_resultant(fmap)


def test_common_zero_in_three_variables():
    fmap = PolyMap.parse(["x^2 - y^2", "y^2 - z^2", "x*y - z^2"])
    assert macaulay_resultant(fmap) == 0


def test_macaulay_matrix_shape():
    matrix = macaulay_matrix(PolyMap.power(3, 2))
    assert matrix.degree == 4
    assert matrix.shape == (15, 15)
    assert column_count(PolyMap.power(3, 2)) == 15
    assert len(matrix.nonreduced) == 3
    assert len(matrix.reduced_minor()) == 3


def test_r_normalized_conventions():
    fmap = PolyMap.parse(["2*x^2", "2*y^2"])
    assert macaulay_resultant(fmap) == 16
    place = Place.at(2)
    assert r_normalized(fmap, place).coefficient(2) == 1
    assert r_normalized(fmap, place, RConvention.PAPER).coefficient(2) == -1
    assert r_normalized(PolyMap.power(2, 2), place).is_exact_zero


def test_r_normalized_preconditions():
    with pytest.raises(PreconditionViolation):
        r_normalized(PolyMap.identity(2), Place.at(2))
    with pytest.raises(NotAMorphism):
        r_normalized(PolyMap.parse(["x^2", "x*y"]), Place.at(2))


def test_certificates_reexpand():
    fmap = PolyMap.parse(["x^2 - 2*y^2", "y^2"])
    x3 = HomoForm.parse("x^3", 2)
    etas = macaulay_certificate(fmap, x3)
    assert reexpand(fmap, etas) == x3
    phi = HomoForm.parse("x^3*y + 5*y^4", 2)
    assert reexpand(fmap, elimination_certificate(fmap, phi)) == phi
    with pytest.raises(PreconditionViolation):
        elimination_certificate(fmap, x3)


def test_certificates_in_three_variables():
    rng = random.Random(1)
    fmap = _random_map(rng, 3, 2)
    if macaulay_resultant(fmap) == 0:
        pytest.skip("degenerate random map")
    phi = HomoForm.parse("x*y*z^2", 3)
    assert reexpand(fmap, macaulay_certificate(fmap, phi)) == phi


def test_certificate_of_non_morphism():
    with pytest.raises(NotAMorphism):
        macaulay_certificate(PolyMap.parse(["x^2", "x*y"]), HomoForm.parse("x^3", 2))


def test_resultant_scaling_law_on_random_maps():
    rng = random.Random(21)
    shapes = [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)]
    for _ in range(50):
        nvars, degree = rng.choice(shapes)
        fmap = _random_map(rng, nvars, degree)
        lam = Fraction(rng.choice([-3, -2, 2, 3, 5]), rng.choice([1, 2, 7]))
        k = resultant_scaling_exponent(fmap)
        assert k == nvars * degree ** (nvars - 1)
        assert macaulay_resultant(fmap.scale(lam)) == lam**k * macaulay_resultant(fmap)
