import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Protocol, Sequence

from sympy import factorint, isprime

from greenfield.errors import ConfigError, DomainError, InternalError

EPS = 2.0**-52
_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


class ValuedPlace(Protocol):
    @property
    def is_archimedean(self) -> bool: ...

    @property
    def residue_characteristic(self) -> int: ...

    def valuation(self, x: Fraction) -> int: ...


@dataclass(frozen=True, order=True)
class Place:
    """A normalized absolute value on ℚ. prime == 0 is the archimedean place."""

    prime: int = 0

    def __post_init__(self):
        if self.prime != 0 and not _is_prime(self.prime):
            raise DomainError(f"{self.prime} is not a prime")

    @classmethod
    def archimedean(cls) -> "Place":
        return cls(0)

    @classmethod
    def at(cls, p: int) -> "Place":
        if p <= 0:
            raise DomainError(f"{p} is not a prime")
        return cls(p)

    @classmethod
    def parse(cls, text: str) -> "Place":
        text = text.strip()
        if text in ("inf", "∞"):
            return ARCHIMEDEAN
        if text.startswith("p="):
            try:
                return cls.at(int(text[2:]))
            except ValueError as e:
                raise ConfigError(f"bad place {text!r}: {e}") from e
        raise ConfigError(f"bad place {text!r}, expected 'inf' or 'p=<prime>'")

    @property
    def is_archimedean(self) -> bool:
        return self.prime == 0

    @property
    def kind(self) -> str:
        return "Archimedean" if self.prime == 0 else "Prime"

    @property
    def residue_characteristic(self) -> int:
        return self.prime

    def valuation(self, x: Fraction) -> int:
        if self.is_archimedean:
            raise DomainError("the archimedean place has no valuation")
        x = Fraction(x)
        if x == 0:
            raise DomainError("valuation of zero")
        return _ord(x.numerator, self.prime) - _ord(x.denominator, self.prime)

    def __str__(self) -> str:
        return "inf" if self.prime == 0 else f"p={self.prime}"


ARCHIMEDEAN = Place(0)


class Unbounded(Enum):
    """log 0 and the +∞ value of a Green's function, kept out of float ledgers."""

    MINUS_INFINITY = "-inf"
    PLUS_INFINITY = "+inf"

    def __str__(self) -> str:
        return self.value


MINUS_INFINITY = Unbounded.MINUS_INFINITY
PLUS_INFINITY = Unbounded.PLUS_INFINITY


@lru_cache(maxsize=4096)
def _is_prime(p: int) -> bool:
    return bool(isprime(p))


@lru_cache(maxsize=8192)
def prime_factors(n: int) -> tuple[int, ...]:
    n = abs(n)
    if n <= 1:
        return ()
    return tuple(sorted(factorint(n)))


def _ord(n: int, p: int) -> int:
    n = abs(n)
    count = 0
    while n % p == 0:
        n //= p
        count += 1
    return count


@dataclass(frozen=True)
class LogMag:
    """Σ q_p·log p (exact) plus an archimedean binary64 term with error bound."""

    padic: tuple[tuple[int, Fraction], ...] = ()
    arch: float = 0.0
    arch_err: float = 0.0

    @classmethod
    def from_padic(cls, coefficients: dict[int, Fraction], arch: float = 0.0, arch_err: float = 0.0) -> "LogMag":
        items = tuple(
            sorted((p, Fraction(q)) for p, q in coefficients.items() if q != 0)
        )
        return cls(items, float(arch), float(arch_err))

    @classmethod
    def log_prime(cls, p: int, q: Fraction | int = 1) -> "LogMag":
        return cls.from_padic({p: Fraction(q)})

    @property
    def padic_dict(self) -> dict[int, Fraction]:
        return dict(self.padic)

    def coefficient(self, p: int) -> Fraction:
        for prime, q in self.padic:
            if prime == p:
                return q
        return Fraction(0)

    def compare_at_prime(self, other: "LogMag", p: int) -> int:
        """Sign of the difference of the log p coefficients, decided exactly."""
        diff = self.coefficient(p) - other.coefficient(p)
        return (diff > 0) - (diff < 0)

    def __add__(self, other: "LogMag") -> "LogMag":
        merged = self.padic_dict
        for p, q in other.padic:
            merged[p] = merged.get(p, Fraction(0)) + q
        total = self.arch + other.arch
        err = self.arch_err + other.arch_err
        if self.arch != 0.0 and other.arch != 0.0:
            err += 0.5 * math.ulp(total)
        return LogMag.from_padic(merged, total, err)

    def __neg__(self) -> "LogMag":
        return LogMag(tuple((p, -q) for p, q in self.padic), -self.arch, self.arch_err)

    def __sub__(self, other: "LogMag") -> "LogMag":
        return self + (-other)

    def scale(self, q: Fraction | int) -> "LogMag":
        q = Fraction(q)
        if q == 0:
            return LogMag()
        arch = self.arch * float(q)
        err = self.arch_err * abs(float(q))
        if self.arch != 0.0:
            err += abs(arch) * EPS * 2
        return LogMag(tuple((p, c * q) for p, c in self.padic), arch, err)

    @property
    def value(self) -> float:
        return math.fsum([self.arch] + [float(q) * math.log(p) for p, q in self.padic])

    def bound(self) -> tuple[float, float]:
        """Float value and a bound on |value − exact|, rounding of Σ q_p log p included."""
        val = self.value
        err = self.arch_err
        err += sum(abs(float(q) * math.log(p)) * 2 * EPS for p, q in self.padic)
        err += abs(val) * EPS
        return val, err

    @property
    def is_exact(self) -> bool:
        return self.arch == 0.0 and self.arch_err == 0.0

    @property
    def is_exact_zero(self) -> bool:
        return not self.padic and self.is_exact

    def is_zero_within(self, tol: float) -> bool:
        val, err = self.bound()
        return abs(val) <= tol + err

    def to_dict(self) -> dict:
        return {
            "padic": {str(p): format_rational(q) for p, q in self.padic},
            "arch": self.arch,
            "arch_err": self.arch_err,
            "value": self.value,
        }


def abs_log(place: Place, x) -> LogMag:
    x = Fraction(x)
    if x == 0:
        raise DomainError("log of zero magnitude")
    if not place.is_archimedean:
        v = place.valuation(x)
        return LogMag.from_padic({place.prime: Fraction(-v)})
    ax = abs(x)
    if ax == 1:
        return LogMag()
    if 1e-300 < ax < 1e300:
        # float(Fraction) is correctly rounded
        arch = math.log(float(ax))
        return LogMag((), arch, 0.5 * EPS + math.ulp(arch))
    log_num = math.log(ax.numerator)
    log_den = math.log(ax.denominator)
    arch = log_num - log_den
    return LogMag((), arch, (abs(log_num) + abs(log_den)) * EPS + math.ulp(arch))


def support(x) -> frozenset[Place]:
    x = Fraction(x)
    if x == 0:
        raise DomainError("support of zero")
    primes = set(prime_factors(x.numerator)) | set(prime_factors(x.denominator))
    places = {Place.at(p) for p in primes}
    if abs(x) != 1:
        places.add(ARCHIMEDEAN)
    return frozenset(places)


def rational_log_expansion(x) -> dict[int, Fraction]:
    """log|x| = Σ ord_p(x)·log p, computed from the factorizations."""
    x = Fraction(x)
    if x == 0:
        raise DomainError("log of zero magnitude")
    expansion: dict[int, Fraction] = {}
    for p, e in factorint(abs(x.numerator)).items():
        expansion[p] = expansion.get(p, Fraction(0)) + e
    for p, e in factorint(x.denominator).items():
        expansion[p] = expansion.get(p, Fraction(0)) - e
    return {p: q for p, q in expansion.items() if q != 0}


def product_formula_sum(x) -> LogMag:
    x = Fraction(x)
    places = set(support(x)) | {ARCHIMEDEAN}
    total = LogMag()
    for place in sorted(places):
        total = total + abs_log(place, x)
    expected = {p: -q for p, q in rational_log_expansion(x).items()}
    if total.padic_dict != expected:
        raise InternalError(f"p-adic ledger of {x} does not cancel its archimedean expansion")
    return total


def norm_log(place: Place, coords: Sequence) -> LogMag:
    """log of the sup-norm max_i |x_i|_v of a nonzero exact vector."""
    values = [Fraction(c) for c in coords if c != 0]
    if not values:
        raise DomainError("log of zero magnitude (zero vector)")
    if place.is_archimedean:
        return abs_log(place, max(abs(c) for c in values))
    smallest = min(place.valuation(c) for c in values)
    return LogMag.from_padic({place.prime: Fraction(-smallest)})


def min_valuation(place: Place, values: Iterable) -> int | None:
    vals = [place.valuation(Fraction(c)) for c in values if c != 0]
    return min(vals) if vals else None


def parse_rational(text: str) -> Fraction:
    match = _RATIONAL_RE.match(text)
    if not match:
        raise ConfigError(f"bad rational {text!r}", 1, 1)
    num, den = match.group(1), match.group(2)
    if den is not None and int(den) == 0:
        raise ConfigError(f"zero denominator in {text!r}", 1, text.index("/") + 2)
    return Fraction(int(num), int(den) if den else 1)


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
