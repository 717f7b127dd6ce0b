import math
import random
from fractions import Fraction

import pytest

from greenfield.arith.pf_field import (
    ARCHIMEDEAN,
    LogMag,
    Place,
    abs_log,
    format_rational,
    min_valuation,
    norm_log,
    parse_rational,
    product_formula_sum,
    rational_log_expansion,
    support,
)
from greenfield.errors import ConfigError, DomainError


def test_padic_abs_log_is_exact():
    term = abs_log(Place.at(2), Fraction(12))
    assert term.is_exact
    assert term.coefficient(2) == -2
    assert term.value == pytest.approx(-2 * math.log(2))


def test_archimedean_abs_log():
    term = abs_log(ARCHIMEDEAN, Fraction(-3, 2))
    value, err = term.bound()
    assert abs(value - math.log(1.5)) <= err + 1e-15
    assert abs_log(ARCHIMEDEAN, 1).is_exact_zero


def test_log_of_zero_is_rejected():
    with pytest.raises(DomainError):
        abs_log(Place.at(3), 0)
    with pytest.raises(DomainError):
        support(0)


def test_support():
    assert support(Fraction(12, 35)) == {ARCHIMEDEAN, Place.at(2), Place.at(3), Place.at(5), Place.at(7)}
    assert support(1) == frozenset()
    assert support(-1) == frozenset()
    assert support(Fraction(1, 2)) == {ARCHIMEDEAN, Place.at(2)}


def test_product_formula_on_random_rationals():
    rng = random.Random(11)
    for _ in range(1000):
        x = Fraction(rng.randint(-10**30, 10**30) or 1, rng.randint(1, 10**30))
        total = product_formula_sum(x)
        assert total.padic_dict == {p: -q for p, q in rational_log_expansion(x).items()}
        assert total.is_zero_within(1e-9)


def test_logmag_cancels_exactly():
    total = LogMag.log_prime(2, 3) + LogMag.log_prime(5, 1) - LogMag.log_prime(2, 3)
    assert total.padic_dict == {5: 1}
    assert (total - LogMag.log_prime(5)).is_exact_zero


def test_logmag_scale():
    term = LogMag.log_prime(3, Fraction(2, 3)).scale(Fraction(3, 4))
    assert term.coefficient(3) == Fraction(1, 2)
    assert LogMag.log_prime(3).scale(0).is_exact_zero
    assert LogMag.log_prime(3, 2).compare_at_prime(LogMag.log_prime(3, Fraction(3, 2)), 3) == 1
    assert LogMag.log_prime(3).compare_at_prime(LogMag.log_prime(2), 3) == 1
    assert LogMag().compare_at_prime(LogMag.log_prime(5), 5) == -1


def test_norm_log_and_min_valuation():
    place = Place.at(2)
    assert norm_log(place, [Fraction(1, 2), 4]).coefficient(2) == 1
    assert norm_log(place, [0, 8]).coefficient(2) == -3
    assert min_valuation(place, [0, 12, Fraction(1, 4)]) == -2
    assert min_valuation(place, [0]) is None
    with pytest.raises(DomainError):
        norm_log(place, [0, 0])


def test_place_parse_and_str():
    assert Place.parse("inf") is ARCHIMEDEAN
    assert Place.parse("p=7") == Place.at(7)
    assert str(Place.at(7)) == "p=7"
    assert str(ARCHIMEDEAN) == "inf"
    with pytest.raises(ConfigError):
        Place.parse("p=4")
    with pytest.raises(ConfigError):
        Place.parse("q")


def test_places_sort_archimedean_first():
    assert sorted([Place.at(5), ARCHIMEDEAN, Place.at(2)]) == [ARCHIMEDEAN, Place.at(2), Place.at(5)]


def test_parse_rational():
    assert parse_rational("-3/6") == Fraction(-1, 2)
    assert parse_rational(" 7 ") == 7
    assert format_rational(Fraction(-1, 2)) == "-1/2"
    assert format_rational(Fraction(4)) == "4"
    with pytest.raises(ConfigError) as info:
        parse_rational("3/0")
    assert info.value.column == 3
    with pytest.raises(ConfigError):
        parse_rational("1.5")
