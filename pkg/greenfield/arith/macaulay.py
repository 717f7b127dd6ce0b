import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

from greenfield.arith.homopoly import Exponent, HomoForm, PolyMap, monomial_index, monomials
from greenfield.arith.linalg import bareiss_det, solve_minimal
from greenfield.arith.pf_field import LogMag, Place, abs_log
from greenfield.errors import DomainError, InternalError, NotAMorphism, PreconditionViolation


class RConvention(str, Enum):
    PAPER = "paper"
    INVARIANT = "invariant"


@dataclass(frozen=True)
class MacaulayMatrix:
    """Rows (i, μ) hold the coefficients of μ·F_i in the degree-e monomials."""

    degree: int
    columns: tuple[Exponent, ...]
    row_labels: tuple[tuple[int, Exponent], ...]
    entries: tuple[tuple[Fraction, ...], ...]
    nonreduced: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.columns)

    def reduced_minor(self) -> list[list[Fraction]]:
        return [[self.entries[r][c] for c in self.nonreduced] for r in self.nonreduced]


def _shifted_row(form: HomoForm, shift: Exponent, index: dict[Exponent, int]) -> list[Fraction]:
    row = [Fraction(0)] * len(index)
    for e, c in form.terms.items():
        row[index[tuple(a + b for a, b in zip(e, shift))]] = c
    return row


def macaulay_degree(fmap: PolyMap) -> int:
    return (fmap.N + 1) * (fmap.degree - 1) + 1


def sylvester_matrix(fmap: PolyMap) -> list[list[Fraction]]:
    if fmap.nvars != 2:
        raise PreconditionViolation("the Sylvester matrix is defined for two binary forms")
    d = fmap.degree
    index = monomial_index(2, 2 * d - 1)
    rows = []
    for form in fmap.forms:
        for j in range(d):
            rows.append(_shifted_row(form, (d - 1 - j, j), index))
    return rows


def macaulay_matrix(fmap: PolyMap) -> MacaulayMatrix:
    d = fmap.degree
    e = macaulay_degree(fmap)
    columns = monomials(fmap.nvars, e)
    index = monomial_index(fmap.nvars, e)
    labels = []
    entries = []
    nonreduced = []
    for pos, alpha in enumerate(columns):
        big = [i for i, a in enumerate(alpha) if a >= d]
        i = big[0]
        shift = tuple(a - (d if k == i else 0) for k, a in enumerate(alpha))
        labels.append((i, shift))
        entries.append(tuple(_shifted_row(fmap.forms[i], shift, index)))
        if len(big) > 1:
            nonreduced.append(pos)
    return MacaulayMatrix(e, columns, tuple(labels), tuple(entries), tuple(nonreduced))


def _perturbed(fmap: PolyMap, t: int) -> PolyMap:
    d, n = fmap.degree, fmap.nvars
    forms = []
    for i, f in enumerate(fmap.forms):
        power = [0] * n
        power[i] = d
        forms.append(f + HomoForm.monomial(power, t))
    return PolyMap(forms)


def _quotient_resultant(fmap: PolyMap) -> Fraction | None:
    matrix = macaulay_matrix(fmap)
    minor = bareiss_det(matrix.reduced_minor())
    if minor == 0:
        return None
    return bareiss_det(matrix.entries) / minor


@lru_cache(maxsize=256)
def macaulay_resultant(fmap: PolyMap) -> Fraction:
    if fmap.degree < 1:
        raise DomainError("resultant of constant forms")
    if fmap.nvars == 2:
        return bareiss_det(sylvester_matrix(fmap))
    res = _quotient_resultant(fmap)
    if res is not None:
        return res
    # Res(F + t·x^d) is a polynomial in t of degree (N+1)d^N; its value at t = 0 is Res(F).
    needed = fmap.nvars * fmap.degree**fmap.N + 1
    logging.info(f"Reduced Macaulay minor vanishes, interpolating over {needed} perturbations")
    points: list[tuple[int, Fraction]] = []
    t = 0
    while len(points) < needed:
        t += 1
        value = _quotient_resultant(_perturbed(fmap, t))
        if value is not None:
            points.append((t, value))
    total = Fraction(0)
    for k, (tk, yk) in enumerate(points):
        weight = Fraction(1)
        for j, (tj, _) in enumerate(points):
            if j != k:
                weight *= Fraction(-tj, tk - tj)
        total += yk * weight
    return total


def resultant_scaling_exponent(fmap: PolyMap) -> int:
    """Res(λF) = λ^k·Res(F) with k = (N+1)d^N."""
    return fmap.nvars * fmap.degree**fmap.N


def r_normalized(fmap: PolyMap, place: Place, convention: RConvention | str = RConvention.INVARIANT) -> LogMag:
    convention = RConvention(convention)
    d, N = fmap.degree, fmap.N
    if d < 2:
        raise PreconditionViolation("r(F) needs degree at least 2")
    res = macaulay_resultant(fmap)
    if res == 0:
        raise NotAMorphism("Res(F) = 0: the map is not a morphism")
    log_res = abs_log(place, res)
    if convention is RConvention.PAPER:
        return log_res.scale(Fraction(1, d * (d - 1) * (N + 1)))
    return log_res.scale(Fraction(-1, d**N * (d - 1) * (N + 1)))


def _solve_in_ideal(fmap: PolyMap, phis: Sequence[HomoForm]) -> list[tuple[HomoForm, ...]]:
    degree = phis[0].degree
    if any(p.degree != degree or p.nvars != fmap.nvars for p in phis):
        raise DomainError("certificates are solved for forms of one common degree")
    d = fmap.degree
    cof_monos = monomials(fmap.nvars, degree - d)
    index = monomial_index(fmap.nvars, degree)
    columns = [
        _shifted_row(fmap.forms[i], mu, index) for i in range(fmap.nvars) for mu in cof_monos
    ]
    # unknowns ordered (i, μ) with μ descending lex; earliest pivots give the lex-first solution
    matrix = [[col[r] for col in columns] for r in range(len(index))]
    solutions = solve_minimal(matrix, [p.coefficient_vector() for p in phis])
    out = []
    for phi, sol in zip(phis, solutions):
        if sol is None:
            raise InternalError(f"{phi} is not in the ideal of the map although Res(F) != 0")
        width = len(cof_monos)
        etas = tuple(
            HomoForm.from_vector(fmap.nvars, degree - d, sol[i * width:(i + 1) * width])
            for i in range(fmap.nvars)
        )
        out.append(etas)
    return out


def _certify(fmap: PolyMap, phis: Sequence[HomoForm], threshold: int) -> list[tuple[HomoForm, ...]]:
    for phi in phis:
        if phi.degree < threshold:
            raise PreconditionViolation(f"certificate needs degree >= {threshold}, got {phi.degree}")
    if macaulay_resultant(fmap) == 0:
        raise NotAMorphism("Res(F) = 0: the map is not a morphism")
    return _solve_in_ideal(fmap, phis)


def elimination_certificate(fmap: PolyMap, phi: HomoForm) -> list[HomoForm]:
    """η with phi = Σ η_i·F_i, for deg phi ≥ (N+1)d."""
    return list(_certify(fmap, [phi], fmap.nvars * fmap.degree)[0])


def macaulay_certificate(fmap: PolyMap, phi: HomoForm) -> list[HomoForm]:
    return list(_certify(fmap, [phi], macaulay_degree(fmap))[0])


def macaulay_certificates(fmap: PolyMap, phis: Sequence[HomoForm]) -> list[tuple[HomoForm, ...]]:
    return _certify(fmap, phis, macaulay_degree(fmap))


def reexpand(fmap: PolyMap, etas: Sequence[HomoForm]) -> HomoForm:
    total = etas[0] * fmap.forms[0]
    for eta, form in zip(etas[1:], fmap.forms[1:]):
        total = total + eta * form
    return total


def column_count(fmap: PolyMap) -> int:
    return comb(macaulay_degree(fmap) + fmap.N, fmap.N)

