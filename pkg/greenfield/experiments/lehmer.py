import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TypedDict

from sympy import QQ, Poly, Rational, Symbol, factor_list

from greenfield.arith.homopoly import HomoForm
from greenfield.config import config
from greenfield.dynamics.heights import HeightValue, canonical_height
from greenfield.dynamics.lattes import LattesSystem, torsion_order
from greenfield.errors import PreconditionViolation

MAX_DEPTH = 3

X = Symbol("x")


class PreimageRow(TypedDict):
    depth: int
    degree: int
    multiplicity: int
    factor: str
    height: float
    lehmer_product: float
    error: str | None


@dataclass
class LehmerTable:
    base_height: float
    base_error: float
    rows: list[PreimageRow] = field(default_factory=list)
    empirical_constant: float | None = None

    def to_dict(self) -> dict:
        return {
            "base_height": self.base_height,
            "base_error": self.base_error,
            "empirical_constant": self.empirical_constant,
            "rows": self.rows,
        }


def _dehomogenize(form: HomoForm) -> Poly:
    return Poly.from_dict({(a,): Rational(c.numerator, c.denominator) for (a, _), c in form.terms.items()}, X, domain=QQ)


def preimage_polynomial(lattes: LattesSystem, depth: int) -> Poly:
    """F⁽ᵏ⁾₀(x,1) − x(P)·F⁽ᵏ⁾₁(x,1), whose roots are the x-coordinates Q with f^k(Q) = x(P)."""
    x0 = lattes.base.x
    if depth == 0:
        return Poly(X - Rational(x0.numerator, x0.denominator), X, domain=QQ)
    f0, f1 = lattes.system.iterate(depth).forms
    return _dehomogenize(f0 - f1.scale(x0))


def lehmer_product(height: float, degree: int) -> float:
    """ĥ·D⁵·(log max{D, 2})²."""
    return height * degree**5 * math.log(max(degree, 2)) ** 2


def _depth_rows(lattes: LattesSystem, base: HeightValue, depth: int) -> list[PreimageRow]:
    try:
        if depth < 0 or depth > MAX_DEPTH:
            raise PreconditionViolation(f"preimage depth must lie in [0, {MAX_DEPTH}], got {depth}")
        height = base.ledger.scale(Fraction(1, 4**depth)).value
        _, factors = factor_list(preimage_polynomial(lattes, depth))
        rows = []
        for factor, multiplicity in factors:
            D = factor.degree()
            rows.append(
                PreimageRow(
                    depth=depth,
                    degree=D,
                    multiplicity=multiplicity,
                    factor=str(factor.as_expr()),
                    height=height,
                    lehmer_product=lehmer_product(height, D),
                    error=None,
                )
            )
        rows.sort(key=lambda r: (r["degree"], r["factor"]))
        return rows
    except Exception as e:
        logging.exception(f"Skipped depth {depth}: {e}")
        return [
            PreimageRow(
                depth=depth, degree=0, multiplicity=0, factor="", height=math.nan, lehmer_product=math.nan, error=f"{type(e).__name__}: {e}"
            )
        ]


def lehmer_scan(lattes: LattesSystem, depths: list[int], tol: float = 1e-9) -> LehmerTable:
    """Heights and degrees of the iterated preimages of x(P), with ĥ·D⁵(log D)² per factor."""
    order = torsion_order(lattes.base)
    if order is not None:
        raise PreconditionViolation(f"base point {lattes.base} is torsion of order {order}")
    base = canonical_height(lattes.system, lattes.base.x_point(), tol)
    if base.value - base.error <= tol:
        raise PreconditionViolation(f"canonical height {base.value:.3g} of the base point is not certified above {tol}")
    table = LehmerTable(base.value, base.error)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for i, rows in enumerate(pool.map(lambda k: _depth_rows(lattes, base, k), depths), 1):
            table.rows.extend(rows)
            logging.info(f"Processed {i}/{len(depths)} depths so far")
    products = [r["lehmer_product"] for r in table.rows if r["error"] is None]
    if products:
        table.empirical_constant = min(products)
    return table
