from fractions import Fraction
from math import comb

import pytest

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint
from greenfield.arith.linalg import RowReducer
from greenfield.dynamics.basis import (
    basis_dimension,
    floor_G,
    gen_degrees,
    keyratio_threshold,
    monomial_basis,
    spanning_rank,
    special_basis,
    threshold,
)
from greenfield.dynamics.dynsys import DynSystem
from greenfield.errors import DimensionMismatch, PreconditionViolation


def _rank(basis) -> int:
    reducer = RowReducer(len(basis.forms()[0].coefficient_vector()))
    for form in basis.forms():
        reducer.add(form.coefficient_vector())
    return reducer.rank


def test_dimension_counts():
    plane = DynSystem(PolyMap.power(3, 2))
    assert basis_dimension(plane, 3) == 10
    line = DynSystem(PolyMap.power(3, 2), HomoForm.parse("x - y", 3))
    assert [basis_dimension(line, n) for n in range(1, 6)] == [2, 3, 4, 5, 6]


def test_generating_degrees(power_map):
    assert threshold(power_map) == 4
    assert gen_degrees(power_map, 10) == [2, 4, 8]
    assert floor_G(power_map, 4) == 2
    assert floor_G(power_map, 9) == 4
    with pytest.raises(PreconditionViolation):
        floor_G(power_map, 3)


def test_keyratio_threshold_matches_d_times_n_plus_one(power_map):
    assert keyratio_threshold(power_map, 64).n0 == 4
    assert keyratio_threshold(DynSystem(PolyMap.power(3, 2)), 64).n0 == 6


@pytest.mark.parametrize("n", range(1, 11))
def test_special_basis_has_full_rank(chebyshev, n):
    basis = special_basis(chebyshev, n)
    assert basis.c == n + 1
    assert _rank(basis) == n + 1
    assert all(form.degree == n for form in basis.forms())


def test_power_map_basis_is_monomial(power_map):
    basis = special_basis(power_map, 8)
    assert basis.c == 9
    assert all(len(form.terms) == 1 for form in basis.forms())
    assert basis.to_dict()["c"] == 9


def test_basis_is_memoized(chebyshev):
    assert special_basis(chebyshev, 6) is special_basis(chebyshev, 6)


def test_basis_modulo_hypersurface():
    system = DynSystem(PolyMap.power(3, 2), HomoForm.parse("x - y", 3))
    basis = special_basis(system, 3)
    assert basis.c == 4
    assert basis.hypersurface is not None


def test_evaluate_checks_shapes(power_map):
    basis = special_basis(power_map, 2)
    rows = basis.evaluate([ProjPoint((1, 0)), ProjPoint((0, 1)), ProjPoint((1, 1))])
    assert len(rows) == 3 and all(len(r) == 3 for r in rows)
    with pytest.raises(DimensionMismatch):
        basis.evaluate([ProjPoint((1, 0))])
    with pytest.raises(DimensionMismatch):
        basis.evaluate([ProjPoint((1, 0)), ProjPoint.numeric([0.0, 1.0]), ProjPoint((1, 1))])


def test_monomial_basis():
    basis = monomial_basis(1, 3)
    assert basis.c == 4
    assert str(basis.elements[0].expanded) == "x0^3"
    with pytest.raises(PreconditionViolation):
        special_basis(DynSystem(PolyMap.power(2, 2)), 0)


@pytest.mark.parametrize(
    "forms,nmax",
    [
        (["x^2 - 2*y^2", "y^2"], 40),
        (["x^3", "y^3"], 40),
        (["x^2", "y^2", "z^2"], 12),
        (["x^3", "y^3", "z^3"], 12),
    ],
)
def test_spanning_family_reaches_full_rank(forms, nmax):
    system = DynSystem(PolyMap.parse(forms))
    for n in range(threshold(system), nmax + 1):
        assert spanning_rank(system, n) == comb(n + system.N, system.N)


@pytest.mark.parametrize("nvars", [2, 3, 4])
@pytest.mark.parametrize("d", [2, 3])
def test_degree_sandwich_up_to_200(nvars, d):
    system = DynSystem(PolyMap.power(nvars, d))
    N = system.N
    key = keyratio_threshold(system, 200)
    assert key.last_violation is None or key.last_violation == key.n0 - 1
    for n in range(max(key.n0, threshold(system)), 201):
        m = floor_G(system, n)
        assert m in gen_degrees(system, n)
        assert nvars * m <= n
        assert Fraction(N * n, N + 1) <= n - m <= Fraction((2 * N + 1) * n, 2 * N + 2)
