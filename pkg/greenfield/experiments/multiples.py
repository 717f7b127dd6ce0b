import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from greenfield.arith.homopoly import ProjPoint
from greenfield.arith.linalg import RowReducer, bareiss_det
from greenfield.arith.pf_field import format_rational
from greenfield.dynamics.basis import special_basis
from greenfield.dynamics.dynsys import DynSystem
from greenfield.errors import InternalError, PreconditionViolation, SearchFailed


@dataclass(frozen=True)
class MultiplesResult:
    n: int
    c: int
    bound: int
    indices: list[int]
    determinant: Fraction

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "bound": self.bound,
            "indices": self.indices,
            "determinant": format_rational(self.determinant),
        }


def orbit_dimension(system: DynSystem) -> int:
    return system.N - (0 if system.hypersurface is None else 1)


def required_bound(system: DynSystem, n: int, c: int) -> int:
    return 2 * n ** orbit_dimension(system) + c


def _check_orbit(system: DynSystem, orbit: Sequence[ProjPoint]) -> None:
    G = system.hypersurface
    for k, point in enumerate(orbit):
        if not point.exact:
            raise PreconditionViolation(f"orbit entry {k + 1} is not exact", index=k + 1)
        if point.nvars != system.nvars:
            raise PreconditionViolation(f"orbit entry {k + 1} lives in P^{point.nvars - 1}", index=k + 1)
        if G is not None and G.evaluate(point) != 0:
            raise PreconditionViolation(f"orbit entry {k + 1} is off the hypersurface", index=k + 1)
    seen: dict[ProjPoint, int] = {}
    for k, point in enumerate(orbit):
        key = point.scaled(1 / next(x for x in point.coords if x))
        if key in seen:
            raise PreconditionViolation(
                f"orbit entries {seen[key]} and {k + 1} are the same point (torsion?)", index=k + 1
            )
        seen[key] = k + 1


def multiples_search(system: DynSystem, orbit: Sequence[ProjPoint], n: int) -> MultiplesResult:
    """Scan the orbit in order, keeping each point whose evaluation row raises the exact rank.

    Returns the 1-based indices of the c(n) kept points and their nonzero
    evaluation determinant.
    """
    basis = special_basis(system, n)
    c = basis.c
    bound = required_bound(system, n, c)
    if len(orbit) < bound:
        raise PreconditionViolation(f"orbit of length {len(orbit)} is shorter than the bound {bound}")
    _check_orbit(system, orbit)
    forms = basis.forms()
    reducer = RowReducer(c)
    rows: list[list[Fraction]] = []
    indices: list[int] = []
    for k, point in enumerate(orbit[:bound], 1):
        row = [form.evaluate(point) for form in forms]
        if reducer.add(row):
            rows.append(row)
            indices.append(k)
            if len(indices) == c:
                break
    if len(indices) < c:
        raise SearchFailed(f"rank {len(indices)} of {c} after {bound} orbit points")
    det = bareiss_det(rows)
    if det == 0:
        raise InternalError("independent rows with a vanishing determinant")
    logging.info(f"Multiples search n={n}: indices {indices} out of {bound}")
    return MultiplesResult(n, c, bound, indices, det)
