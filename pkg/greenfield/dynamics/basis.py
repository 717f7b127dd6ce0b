import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain
from math import comb
from typing import Iterator, Sequence

from greenfield.arith.homopoly import Exponent, HomoForm, ProjPoint, monomials
from greenfield.arith.linalg import RowReducer
from greenfield.config import config
from greenfield.dynamics.dynsys import DynSystem
from greenfield.errors import (
    BasisRankError,
    DimensionMismatch,
    InternalError,
    PreconditionViolation,
    ResourceLimitExceeded,
)

Triple = tuple[int, int, int]


@dataclass(frozen=True)
class GenElement:
    """A degree-n form with its provenance: a monomial, or η·Π (F_i^(k))^j."""

    expanded: HomoForm
    monomial: Exponent | None = None
    cofactor: HomoForm | None = None
    factors: tuple[Triple, ...] = ()
    relaxed: bool = False

    @property
    def is_monomial(self) -> bool:
        return self.monomial is not None

    def describe(self) -> str:
        if self.is_monomial:
            return str(HomoForm.monomial(self.monomial))
        parts = [] if self.cofactor.degree == 0 else [f"({self.cofactor})"]
        for i, k, j in self.factors:
            parts.append(f"F{i}^[{k}]" if j == 1 else f"(F{i}^[{k}])^{j}")
        return " * ".join(parts)

    def to_dict(self) -> dict:
        out = {"provenance": self.describe(), "form": str(self.expanded)}
        if not self.is_monomial:
            out["factors"] = [list(t) for t in self.factors]
            out["cofactor"] = str(self.cofactor)
            out["relaxed"] = self.relaxed
        return out


@dataclass
class BasisFamily:
    n: int
    nvars: int
    elements: list[GenElement]
    rank_profile: list[int] = field(default_factory=list)
    relaxed: bool = False
    hypersurface: HomoForm | None = None

    @property
    def c(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def forms(self) -> list[HomoForm]:
        return [e.expanded for e in self.elements]

    def evaluate(self, lifts: Sequence[ProjPoint]) -> list[list]:
        """Rows η_j(P̃_i): one row per lift, one column per element."""
        if len(lifts) != self.c:
            raise DimensionMismatch(f"{len(lifts)} lifts for a basis of size {self.c}")
        modes = {lift.exact for lift in lifts}
        if len(modes) > 1:
            raise DimensionMismatch("exact and numeric lifts mixed in one tuple")
        for lift in lifts:
            if lift.nvars != self.nvars:
                raise DimensionMismatch(f"lift with {lift.nvars} coordinates, expected {self.nvars}")
        return [[e.expanded.evaluate(lift) for e in self.elements] for lift in lifts]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "relaxed": self.relaxed,
            "rank_profile": self.rank_profile,
            "elements": [e.to_dict() for e in self.elements],
        }


@dataclass(frozen=True)
class KeyRatio:
    n0: int
    last_violation: int | None


def threshold(system: DynSystem) -> int:
    """d(N+1): from here on the spanning family replaces monomials."""
    return system.degree * system.nvars


def gen_degrees(system: DynSystem, nmax: int) -> list[int]:
    d = system.degree
    out = set()
    k = 1
    while d**k <= nmax:
        for j in range(1, d):
            if j * d**k <= nmax:
                out.add(j * d**k)
        k += 1
    return sorted(out)


def _largest_below(system: DynSystem, n: int) -> int | None:
    degrees = [m for m in gen_degrees(system, n) if system.nvars * m <= n]
    return degrees[-1] if degrees else None


def floor_G(system: DynSystem, n: int) -> int:
    if n < threshold(system):
        raise PreconditionViolation(f"floor_G needs n >= {threshold(system)}, got {n}")
    value = _largest_below(system, n)
    if value is None:
        raise InternalError(f"no degree of the collection fits below {n}")
    return value


def _sandwiched(system: DynSystem, n: int) -> bool:
    N = system.N
    m = _largest_below(system, n)
    if m is None:
        return False
    rest = n - m
    return Fraction(N * n, N + 1) <= rest <= Fraction((2 * N + 1) * n, 2 * N + 2)


def keyratio_threshold(system: DynSystem, nmax: int) -> KeyRatio:
    """Smallest n0 with the degree sandwich holding on [n0, nmax], and the last n below it that fails."""

    def scan() -> KeyRatio:
        last = None
        for n in range(1, nmax + 1):
            if not _sandwiched(system, n):
                last = n
        return KeyRatio(1 if last is None else last + 1, last)

    return system.memo(("keyratio", nmax), scan)


def _floor_log(x: int, base: Fraction) -> int:
    k = 0
    power = Fraction(1)
    while power * base <= x:
        power *= base
        k += 1
    return k


def factor_count_range(system: DynSystem, n: int) -> tuple[int, int]:
    """(⌊t₁⌋, ⌊t₂⌋) bounding the number of 𝒢-factors in degree n."""
    N, d = system.N, system.degree
    t1 = _floor_log(max(1, n - d * (N + 1)), Fraction(N + 1, N))
    t2 = _floor_log(n, Fraction(2 * N + 2, 2 * N + 1))
    return t1, t2


def _triples(system: DynSystem, n: int) -> list[tuple[Triple, int]]:
    d = system.degree
    out = []
    for i in range(system.nvars):
        k = 1
        while d**k <= n:
            for j in range(1, d):
                if j * d**k <= n:
                    out.append(((i, k, j), j * d**k))
            k += 1
    return sorted(out)


def _multisets(triples: list[tuple[Triple, int]], count: int, total: int, start: int = 0) -> Iterator[tuple[Triple, ...]]:
    if count == 0:
        if total == 0:
            yield ()
        return
    tail = [deg for _, deg in triples[start:]]
    if not tail or count * min(tail) > total or count * max(tail) < total:
        return
    for idx in range(start, len(triples)):
        triple, deg = triples[idx]
        if deg > total:
            continue
        for rest in _multisets(triples, count - 1, total - deg, idx):
            yield (triple,) + rest


def factor_form(system: DynSystem, triple: Triple) -> HomoForm:
    i, k, j = triple
    return system.memo(("factor", triple), lambda: system.iterate(k).forms[i] ** j)


def _product_element(system: DynSystem, eta: Exponent, factors: tuple[Triple, ...], relaxed: bool) -> GenElement:
    cofactor = HomoForm.monomial(eta)
    expanded = cofactor
    for triple in factors:
        expanded = expanded * factor_form(system, triple)
    return GenElement(expanded, None, cofactor, factors, relaxed)


def monomial_elements(nvars: int, n: int) -> Iterator[GenElement]:
    for e in monomials(nvars, n):
        yield GenElement(HomoForm.monomial(e), monomial=e)


def spanning_family(system: DynSystem, n: int, relaxed: bool = False) -> Iterator[GenElement]:
    """Lazily enumerate η·G₁⋯G_j in degree n, deg η < d(N+1).

    Order: factor count j ascending, η by degree then descending lex,
    factor multisets in lex order. relaxed=True enumerates the counts
    1 ≤ j < ⌊t₁⌋ instead. Below d(N+1) the family is the monomials.
    """
    if n < threshold(system):
        if not relaxed:
            yield from monomial_elements(system.nvars, n)
        return
    t1, t2 = factor_count_range(system, n)
    counts = range(1, t1) if relaxed else range(t1, t2 + 1)
    triples = _triples(system, n)
    for j in counts:
        for eta_degree in range(threshold(system)):
            rest = n - eta_degree
            if rest < 0:
                break
            for eta in monomials(system.nvars, eta_degree):
                for factors in _multisets(triples, j, rest):
                    yield _product_element(system, eta, factors, relaxed)


def basis_dimension(system: DynSystem, n: int) -> int:
    """c(n) = h⁰(X, O(n))."""
    N = system.N
    full = comb(n + N, N)
    if system.hypersurface is None:
        return full
    g = system.hypersurface.degree
    return full - (comb(n - g + N, N) if n >= g else 0)


def _seeded_reducer(system: DynSystem, n: int) -> RowReducer:
    reducer = RowReducer(comb(n + system.N, system.N))
    G = system.hypersurface
    if G is not None and n >= G.degree:
        for mu in monomials(system.nvars, n - G.degree):
            reducer.add((G * HomoForm.monomial(mu)).coefficient_vector())
    return reducer


def _greedy(system: DynSystem, n: int, candidates: Iterator[GenElement]) -> BasisFamily:
    target = basis_dimension(system, n)
    reducer = _seeded_reducer(system, n)
    seeded = reducer.rank
    cap = config.candidate_factor * comb(n + system.N, system.N)
    kept: list[GenElement] = []
    seen = 0
    for element in candidates:
        seen += 1
        if seen > cap:
            raise ResourceLimitExceeded(
                f"basis enumeration in degree {n} passed {cap} candidates at rank {len(kept)} of {target}",
                partial=len(kept),
            )
        if reducer.add(element.expanded.coefficient_vector()):
            kept.append(element)
            if element.relaxed:
                logging.info(f"Degree {n}: kept an element with fewer than floor(t1) factors")
            if len(kept) == target:
                break
    if len(kept) < target:
        if system.hypersurface is None:
            raise InternalError(f"spanning family in degree {n} has rank {len(kept)} < {target}")
        raise BasisRankError(f"family in degree {n} does not span modulo {system.hypersurface}", len(kept), target)
    logging.info(f"Degree {n}: basis of {target} elements after {seen} candidates")
    return BasisFamily(
        n=n,
        nvars=system.nvars,
        elements=kept,
        rank_profile=reducer.pivots[seeded:],
        relaxed=any(e.relaxed for e in kept),
        hypersurface=system.hypersurface,
    )


def special_basis(system: DynSystem, n: int) -> BasisFamily:
    """H(n): greedy independent subset of the spanning family, modulo the hypersurface."""
    if n < 1:
        raise PreconditionViolation(f"basis degree must be positive, got {n}")

    def build() -> BasisFamily:
        candidates = chain(spanning_family(system, n), spanning_family(system, n, relaxed=True))
        return _greedy(system, n, candidates)

    return system.memo(("special_basis", n), build)


def spanning_rank(system: DynSystem, n: int) -> int:
    """Rank of the (non-relaxed) spanning family in degree n, stopping at full rank."""
    full = comb(n + system.N, system.N)
    reducer = RowReducer(full)
    for element in spanning_family(system, n):
        reducer.add(element.expanded.coefficient_vector())
        if reducer.rank == full:
            break
    return reducer.rank


def monomial_basis(N: int, n: int) -> BasisFamily:
    if n < 1:
        raise PreconditionViolation(f"basis degree must be positive, got {n}")
    elements = list(monomial_elements(N + 1, n))
    return BasisFamily(n=n, nvars=N + 1, elements=elements, rank_profile=list(range(len(elements))))
