import logging
from dataclasses import dataclass, field
from fractions import Fraction

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint
from greenfield.dynamics.dynsys import DynSystem
from greenfield.errors import DomainError, InternalError, PreconditionViolation

# rational torsion has order at most 12 (Mazur)
MAX_RATIONAL_TORSION = 12


@dataclass(frozen=True)
class EllipticCurve:
    """y² = x³ + ax + b over ℚ."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.discriminant == 0:
            raise DomainError(f"singular curve: 4a^3 + 27b^2 = 0 for a={self.a}, b={self.b}")

    @property
    def discriminant(self) -> Fraction:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    def contains(self, x, y) -> bool:
        x, y = Fraction(x), Fraction(y)
        return y * y == x**3 + self.a * x + self.b

    def point(self, x, y) -> "CurvePoint":
        if not self.contains(x, y):
            raise DomainError(f"({x}, {y}) is not on {self}")
        return CurvePoint(self, Fraction(x), Fraction(y))

    def infinity(self) -> "CurvePoint":
        return CurvePoint(self, None, None)

    def __str__(self) -> str:
        return f"y^2 = x^3 + ({self.a})x + ({self.b})"


@dataclass(frozen=True)
class CurvePoint:
    curve: EllipticCurve = field(repr=False)
    x: Fraction | None
    y: Fraction | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __neg__(self) -> "CurvePoint":
        if self.is_infinity:
            return self
        return CurvePoint(self.curve, self.x, -self.y)

    def __add__(self, other: "CurvePoint") -> "CurvePoint":
        if self.is_infinity:
            return other
        if other.is_infinity:
            return self
        if self.x == other.x:
            if self.y + other.y == 0:
                return self.curve.infinity()
            slope = (3 * self.x * self.x + self.curve.a) / (2 * self.y)
        else:
            slope = (other.y - self.y) / (other.x - self.x)
        x = slope * slope - self.x - other.x
        y = slope * (self.x - x) - self.y
        return CurvePoint(self.curve, x, y)

    def __sub__(self, other: "CurvePoint") -> "CurvePoint":
        return self + (-other)

    def double(self) -> "CurvePoint":
        return self + self

    def __mul__(self, k: int) -> "CurvePoint":
        if not isinstance(k, int):
            raise TypeError(f"cannot multiply a point by {type(k).__name__}")
        if k < 0:
            return (-self) * -k
        result = self.curve.infinity()
        addend = self
        while k:
            if k & 1:
                result = result + addend
            addend = addend.double()
            k >>= 1
        return result

    __rmul__ = __mul__

    def x_point(self) -> ProjPoint:
        """x(P) on P¹, with O ↦ (1 : 0)."""
        if self.is_infinity:
            return ProjPoint((1, 0))
        return ProjPoint((self.x, 1))

    def __str__(self) -> str:
        return "O" if self.is_infinity else f"({self.x}, {self.y})"


def torsion_order(point: CurvePoint) -> int | None:
    """Order of a rational point if it is torsion, else None."""
    multiple = point
    for k in range(1, MAX_RATIONAL_TORSION + 1):
        if multiple.is_infinity:
            return k
        multiple = multiple + point
    return None


def lattes_map(curve: EllipticCurve) -> PolyMap:
    """x(2P) = F0(x,1)/F1(x,1) for the duplication on the curve."""
    a, b = curve.a, curve.b
    X = HomoForm.variable(2, 0)
    Y = HomoForm.variable(2, 1)
    f0 = X**4 - (X**2 * Y**2).scale(2 * a) - (X * Y**3).scale(8 * b) + (Y**4).scale(a * a)
    f1 = (X**3 * Y + (X * Y**3).scale(a) + (Y**4).scale(b)).scale(4)
    return PolyMap([f0, f1])


class LattesSystem:
    """The duplication map on x-coordinates of a curve, with a base point."""

    def __init__(self, curve: EllipticCurve, base: CurvePoint):
        if base.curve != curve:
            raise PreconditionViolation("base point lives on another curve")
        self.curve = curve
        self.base = base
        self.fmap = lattes_map(curve)
        self.system = DynSystem(self.fmap)
        self._check_duplication(base)

    @classmethod
    def from_coefficients(cls, a, b, x0, y0) -> "LattesSystem":
        curve = EllipticCurve(a, b)
        return cls(curve, curve.point(x0, y0))

    def _check_duplication(self, point: CurvePoint) -> None:
        if point.is_infinity:
            return
        image = self.fmap(point.x_point())
        if not image.same_point(point.double().x_point()):
            raise InternalError(f"x(2P) disagrees with the Lattès map at {point}")

    def check_duplication(self, point: CurvePoint) -> bool:
        try:
            self._check_duplication(point)
        except InternalError as e:
            logging.warning(f"{e}")
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "curve": {"a": str(self.curve.a), "b": str(self.curve.b)},
            "base": str(self.base),
            "map": self.fmap.to_json(),
        }


def lattes_orbit(lattes: LattesSystem, bound: int) -> list[ProjPoint]:
    """[x(kP) for k = 1..bound] on P¹."""
    orbit = []
    multiple = lattes.curve.infinity()
    for _ in range(bound):
        multiple = multiple + lattes.base
        orbit.append(multiple.x_point())
    return orbit
