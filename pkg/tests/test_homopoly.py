import random
from fractions import Fraction

import pytest

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint, compose, iterate, monomials
from greenfield.arith.pf_field import ARCHIMEDEAN, Place
from greenfield.arith.homopoly import coeff_sup_log
from greenfield.errors import ConfigError, DimensionMismatch, DomainError, PreconditionViolation


def _random_form(rng: random.Random, nvars: int, degree: int) -> HomoForm:
    return HomoForm(nvars, degree, {e: Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for e in monomials(nvars, degree)})


def test_monomials_descending_lex():
    assert monomials(2, 2) == ((2, 0), (1, 1), (0, 2))
    assert monomials(3, 1) == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert len(monomials(3, 4)) == 15


def test_parse_and_print():
    form = HomoForm.parse("x^2 + 1/2*y^2 - 3*x*y", 2)
    assert form.degree == 2
    assert form.terms == {(2, 0): 1, (0, 2): Fraction(1, 2), (1, 1): -3}
    assert str(form) == "x0^2 - 3*x0*x1 + 1/2*x1^2"
    assert HomoForm.parse(str(form), 2) == form
    assert str(HomoForm.zero(2, 3)) == "0"


def test_parse_errors_carry_columns():
    with pytest.raises(ConfigError) as info:
        HomoForm.parse("x^2 + y", 2)
    assert info.value.column == 7
    with pytest.raises(ConfigError):
        HomoForm.parse("x^2 + z^2", 2)
    with pytest.raises(ConfigError) as info:
        PolyMap.parse(["x^2", "y^2 $"])
    assert info.value.message.startswith("form 1")


def test_arithmetic():
    x = HomoForm.variable(2, 0)
    y = HomoForm.variable(2, 1)
    square = (x + y) ** 2
    assert square == x**2 + (x * y).scale(2) + y**2
    assert (square - square).is_zero()
    assert 3 * x == x.scale(3)
    with pytest.raises(DomainError):
        x + y**2


def test_divide():
    x = HomoForm.variable(2, 0)
    y = HomoForm.variable(2, 1)
    product = (x**2 - y**2) * (x + y.scale(3))
    quotient, remainder = product.divide(x**2 - y**2)
    assert remainder.is_zero()
    assert quotient == x + y.scale(3)
    _, remainder = (x**3 + y**3).divide(x**2)
    assert remainder == y**3


def test_substitute_matches_evaluation():
    rng = random.Random(2)
    form = _random_form(rng, 3, 3)
    inner = [_random_form(rng, 3, 2) for _ in range(3)]
    composed = form.substitute(inner)
    for _ in range(5):
        point = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)]
        assert composed.evaluate(point) == form.evaluate([f.evaluate(point) for f in inner])


def test_numeric_evaluation():
    form = HomoForm.parse("x^2 - y^2", 2)
    value = form.evaluate(ProjPoint.numeric([1j, 1.0]))
    assert value == pytest.approx(-2.0)


def test_projpoint_modes():
    exact = ProjPoint((Fraction(1, 2), 3))
    assert exact.exact
    assert not ProjPoint((0.5, 3.0)).exact
    with pytest.raises(DomainError):
        ProjPoint((1, 0.5))
    with pytest.raises(DomainError):
        ProjPoint((0, 0))
    with pytest.raises(DimensionMismatch):
        ProjPoint((1,))
    assert exact.same_point(ProjPoint((1, 6)))
    assert not exact.same_point(ProjPoint((1, 5)))
    assert ProjPoint.parse("1/2, 3") == exact
    with pytest.raises(ConfigError):
        ProjPoint.parse("1/2,x")


def test_polymap_validation():
    with pytest.raises(DomainError):
        PolyMap([HomoForm.parse("x^2", 2), HomoForm.parse("y^3", 2)])
    with pytest.raises(DimensionMismatch):
        PolyMap([HomoForm.parse("x^2", 3), HomoForm.parse("y^2", 3)])
    assert PolyMap.power(3, 2).degree == 2


def test_iterate_agrees_with_repeated_composition():
    fmap = PolyMap.parse(["x^2 - 2*y^2", "y^2"])
    third = compose(fmap, compose(fmap, fmap))
    assert iterate(fmap, 3) == third
    assert fmap.iterate(1) == fmap
    assert iterate(fmap, 4).degree == 16
    with pytest.raises(PreconditionViolation):
        iterate(fmap, 0)


def test_chebyshev_conjugacy():
    # T_2(2cos t) = 2cos 2t: the map sends (2,1) to (2,1) and (-2,1) to (2,1)
    fmap = PolyMap.parse(["x^2 - 2*y^2", "y^2"])
    assert fmap(ProjPoint((2, 1))).same_point(ProjPoint((2, 1)))
    assert fmap(ProjPoint((-2, 1))).same_point(ProjPoint((2, 1)))


def test_coeff_sup_log():
    fmap = PolyMap.parse(["x^2 + 1/2*y^2", "y^2"])
    assert coeff_sup_log(fmap, Place.at(2)).coefficient(2) == 1
    assert coeff_sup_log(fmap, ARCHIMEDEAN).is_exact_zero
