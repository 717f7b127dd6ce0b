import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from greenfield.arith.pf_field import (
    ARCHIMEDEAN,
    LogMag,
    Place,
    abs_log,
    format_rational,
    parse_rational,
)
from greenfield.config import config
from greenfield.errors import (
    ConfigError,
    DimensionMismatch,
    DomainError,
    PreconditionViolation,
    ResourceLimitExceeded,
)

Exponent = tuple[int, ...]
Terms = dict[Exponent, Fraction]

_ALIASES = {2: "xy", 3: "xyz", 4: "xyzw"}
_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(x\d+|[xyzw])|(\^)|(\*)|(/)|([+-]))")


@lru_cache(maxsize=512)
def monomials(nvars: int, degree: int) -> tuple[Exponent, ...]:
    """All exponent vectors of the given degree, in descending lex order."""
    if nvars == 1:
        return ((degree,),)
    out: list[Exponent] = []
    for first in range(degree, -1, -1):
        for rest in monomials(nvars - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=512)
def monomial_index(nvars: int, degree: int) -> dict[Exponent, int]:
    return {e: i for i, e in enumerate(monomials(nvars, degree))}


def _check_cap(size: int) -> None:
    if size > config.max_expansion_terms:
        raise ResourceLimitExceeded(
            f"expansion of {size} terms exceeds the cap of {config.max_expansion_terms}"
        )


def _mul_terms(a: Terms, b: Terms) -> Terms:
    _check_cap(len(a) * len(b))
    out: Terms = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _add_into(acc: Terms, other: Terms, factor: Fraction | int = 1) -> None:
    for e, c in other.items():
        v = acc.get(e, 0) + factor * c
        if v:
            acc[e] = v
        else:
            acc.pop(e, None)


def _monomial_text(e: Exponent) -> str:
    parts = []
    for i, a in enumerate(e):
        if a == 1:
            parts.append(f"x{i}")
        elif a > 1:
            parts.append(f"x{i}^{a}")
    return "*".join(parts)


class HomoForm:
    """A homogeneous polynomial with rational coefficients, stored sparsely."""

    __slots__ = ("nvars", "degree", "terms", "_hash")

    def __init__(self, nvars: int, degree: int, terms: dict | None = None):
        if nvars < 1:
            raise DimensionMismatch("a form needs at least one variable")
        if degree < 0:
            raise DomainError(f"negative degree {degree}")
        clean: Terms = {}
        for e, c in (terms or {}).items():
            e = tuple(int(a) for a in e)
            if len(e) != nvars:
                raise DimensionMismatch(f"exponent {e} has {len(e)} entries, expected {nvars}")
            if sum(e) != degree or min(e) < 0:
                raise DomainError(f"exponent {e} is not of degree {degree}")
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, 0) + c
        self.nvars = nvars
        self.degree = degree
        self.terms: Terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, degree: int, terms: Terms) -> "HomoForm":
        form = cls.__new__(cls)
        form.nvars = nvars
        form.degree = degree
        form.terms = terms
        form._hash = None
        return form

    @classmethod
    def zero(cls, nvars: int, degree: int) -> "HomoForm":
        return cls._raw(nvars, degree, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "HomoForm":
        return cls(nvars, 0, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coeff=1) -> "HomoForm":
        exponent = tuple(exponent)
        return cls(len(exponent), sum(exponent), {exponent: coeff})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "HomoForm":
        e = [0] * nvars
        e[i] = 1
        return cls.monomial(e)

    @classmethod
    def from_vector(cls, nvars: int, degree: int, vector: Sequence) -> "HomoForm":
        basis = monomials(nvars, degree)
        if len(vector) != len(basis):
            raise DimensionMismatch(f"vector of length {len(vector)} for {len(basis)} monomials")
        return cls(nvars, degree, dict(zip(basis, vector)))

    def coefficient_vector(self) -> list[Fraction]:
        index = monomial_index(self.nvars, self.degree)
        vec = [Fraction(0)] * len(index)
        for e, c in self.terms.items():
            vec[index[e]] = c
        return vec

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self.terms.items(), reverse=True)

    def leading_term(self) -> tuple[Exponent, Fraction]:
        if not self.terms:
            raise DomainError("the zero form has no leading term")
        e = max(self.terms)
        return e, self.terms[e]

    def coefficients(self) -> list[Fraction]:
        return [c for _, c in self.sorted_terms()]

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self.terms.values()), Fraction(0))

    def _check_same_space(self, other: "HomoForm") -> None:
        if self.nvars != other.nvars:
            raise DimensionMismatch(f"forms in {self.nvars} and {other.nvars} variables")

    def __add__(self, other: "HomoForm") -> "HomoForm":
        self._check_same_space(other)
        if self.degree != other.degree and self.terms and other.terms:
            raise DomainError(f"adding forms of degrees {self.degree} and {other.degree}")
        degree = self.degree if self.terms else other.degree
        acc = dict(self.terms)
        _add_into(acc, other.terms)
        return HomoForm._raw(self.nvars, degree, acc)

    def __neg__(self) -> "HomoForm":
        return HomoForm._raw(self.nvars, self.degree, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "HomoForm") -> "HomoForm":
        return self + (-other)

    def scale(self, c) -> "HomoForm":
        c = Fraction(c)
        if not c:
            return HomoForm.zero(self.nvars, self.degree)
        return HomoForm._raw(self.nvars, self.degree, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other) -> "HomoForm":
        if isinstance(other, HomoForm):
            self._check_same_space(other)
            return HomoForm._raw(self.nvars, self.degree + other.degree, _mul_terms(self.terms, other.terms))
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other) -> "HomoForm":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> "HomoForm":
        if k < 0:
            raise DomainError("negative power of a form")
        result = HomoForm.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def divide(self, divisor: "HomoForm") -> tuple["HomoForm", "HomoForm"]:
        """Division by one form w.r.t. lex order; remainder 0 iff divisor | self."""
        self._check_same_space(divisor)
        lead_e, lead_c = divisor.leading_term()
        remaining = dict(self.terms)
        quotient: Terms = {}
        remainder: Terms = {}
        while remaining:
            e = max(remaining)
            c = remaining[e]
            if all(a >= b for a, b in zip(e, lead_e)):
                qe = tuple(a - b for a, b in zip(e, lead_e))
                qc = c / lead_c
                quotient[qe] = quotient.get(qe, 0) + qc
                for de, dc in divisor.terms.items():
                    te = tuple(a + b for a, b in zip(qe, de))
                    v = remaining.get(te, 0) - qc * dc
                    if v:
                        remaining[te] = v
                    else:
                        remaining.pop(te, None)
            else:
                remainder[e] = c
                del remaining[e]
        qdeg = max(self.degree - divisor.degree, 0)
        return (
            HomoForm._raw(self.nvars, qdeg, {e: c for e, c in quotient.items() if c}),
            HomoForm._raw(self.nvars, self.degree, remainder),
        )

    def evaluate(self, point) -> Fraction | complex:
        coords = point.coords if isinstance(point, ProjPoint) else tuple(point)
        if len(coords) != self.nvars:
            raise DimensionMismatch(f"point with {len(coords)} coordinates for a form in {self.nvars} variables")
        if isinstance(point, ProjPoint):
            numeric = not point.exact
        else:
            numeric = any(isinstance(x, (float, complex)) for x in coords)
        if not numeric:
            total = Fraction(0)
            for e, c in self.terms.items():
                v = c
                for x, a in zip(coords, e):
                    if a:
                        v *= x**a
                total += v
            return total
        re_parts: list[float] = []
        im_parts: list[float] = []
        for e, c in self.terms.items():
            v = complex(float(c))
            for x, a in zip(coords, e):
                if a:
                    v *= complex(x) ** a
            re_parts.append(v.real)
            im_parts.append(v.imag)
        return complex(math.fsum(re_parts), math.fsum(im_parts))

    def substitute(self, forms: Sequence["HomoForm"]) -> "HomoForm":
        """self(forms[0], ..., forms[N]), grouped variable by variable."""
        if len(forms) != self.nvars:
            raise DimensionMismatch(f"substituting {len(forms)} forms into {self.nvars} variables")
        nvars = forms[0].nvars
        inner_degree = forms[0].degree
        for f in forms:
            if f.nvars != nvars:
                raise DimensionMismatch("substituted forms live in different rings")
            if f.degree != inner_degree:
                raise DomainError("substituted forms must share one degree")
        powers: list[dict[int, Terms]] = [{0: {(0,) * nvars: Fraction(1)}, 1: f.terms} for f in forms]

        def power(i: int, a: int) -> Terms:
            cache = powers[i]
            if a not in cache:
                half = power(i, a // 2)
                sq = _mul_terms(half, half)
                cache[a] = _mul_terms(sq, forms[i].terms) if a % 2 else sq
            return cache[a]

        def expand(items: list[tuple[Exponent, Fraction]], var: int) -> Terms:
            if var == self.nvars - 1:
                acc: Terms = {}
                for e, c in items:
                    _add_into(acc, power(var, e[var]), c)
                return acc
            groups: dict[int, list[tuple[Exponent, Fraction]]] = {}
            for e, c in items:
                groups.setdefault(e[var], []).append((e, c))
            acc = {}
            for a, group in sorted(groups.items(), reverse=True):
                rest = expand(group, var + 1)
                _add_into(acc, _mul_terms(power(var, a), rest) if a else rest)
            return acc

        terms = expand(list(self.terms.items()), 0) if self.terms else {}
        return HomoForm._raw(nvars, self.degree * inner_degree, terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomoForm):
            return NotImplemented
        return self.nvars == other.nvars and self.degree == other.degree and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, self.degree, frozenset(self.terms.items())))
        return self._hash

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces: list[str] = []
        for e, c in self.sorted_terms():
            mono = _monomial_text(e)
            if not mono:
                text = format_rational(c)
            elif c == 1:
                text = mono
            elif c == -1:
                text = f"-{mono}"
            else:
                text = f"{format_rational(c)}*{mono}"
            if not pieces:
                pieces.append(text)
            elif text.startswith("-"):
                pieces.append(f" - {text[1:]}")
            else:
                pieces.append(f" + {text}")
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"HomoForm({self.nvars}, {self.degree}, '{self}')"

    @classmethod
    def parse(cls, text: str, nvars: int, degree: int | None = None) -> "HomoForm":
        """Parse "c*x0^a0*...*xN^aN" sums; x, y, z, w alias x0..x3 in up to 4 variables."""
        tokens = _tokenize(text)
        aliases = _ALIASES.get(nvars, "")
        terms: Terms = {}
        pos = 0

        def fail(message: str, column: int):
            raise ConfigError(f"{message} in form {text!r}", 1, column)

        if not tokens:
            fail("empty form", 1)
        while pos < len(tokens):
            sign = 1
            kind, value, col = tokens[pos]
            if kind == "sign":
                sign = -1 if value == "-" else 1
                pos += 1
            elif terms:
                fail("expected '+' or '-'", col)
            coeff = Fraction(sign)
            exps = [0] * nvars
            expect_factor = True
            while expect_factor:
                if pos >= len(tokens):
                    fail("unexpected end", len(text) + 1)
                kind, value, col = tokens[pos]
                if kind == "num":
                    num = value
                    pos += 1
                    if pos + 1 < len(tokens) and tokens[pos][0] == "/" and tokens[pos + 1][0] == "num":
                        num = f"{value}/{tokens[pos + 1][1]}"
                        pos += 2
                    try:
                        coeff *= parse_rational(num)
                    except ConfigError:
                        fail(f"bad coefficient {num!r}", col)
                elif kind == "var":
                    if value[1:]:
                        idx = int(value[1:])
                    elif value in aliases:
                        idx = aliases.index(value)
                    else:
                        fail(f"variable {value!r} needs an index", col)
                    if idx >= nvars:
                        fail(f"variable {value!r} out of range for {nvars} variables", col)
                    pos += 1
                    power = 1
                    if pos < len(tokens) and tokens[pos][0] == "^":
                        if pos + 1 >= len(tokens) or tokens[pos + 1][0] != "num":
                            fail("expected an exponent", tokens[pos][2] + 1)
                        power = int(tokens[pos + 1][1])
                        pos += 2
                    exps[idx] += power
                else:
                    fail(f"unexpected {value!r}", col)
                if pos < len(tokens) and tokens[pos][0] == "*":
                    pos += 1
                else:
                    expect_factor = False
            e = tuple(exps)
            if degree is not None and sum(e) != degree and coeff:
                fail(f"term of degree {sum(e)} in a form of degree {degree}", col)
            if terms and coeff and sum(e) != sum(next(iter(terms))):
                fail("form is not homogeneous", col)
            terms[e] = terms.get(e, 0) + coeff
            if not terms[e]:
                del terms[e]
                if degree is None:
                    degree = sum(e)
        if degree is None:
            degree = sum(next(iter(terms))) if terms else 0
        return cls(nvars, degree, terms)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    kinds = ("num", "var", "^", "*", "/", "sign")
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN_RE.match(stripped, pos)
        if not match or match.end() == pos:
            column = pos + 1 + (len(stripped[pos:]) - len(stripped[pos:].lstrip()))
            raise ConfigError(f"unexpected character in form {text!r}", 1, column)
        for kind, value in zip(kinds, match.groups()):
            if value is not None:
                tokens.append((kind, value, match.start(match.lastindex) + 1))
        pos = match.end()
    return tokens


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


class ProjPoint:
    """A lift of a point of P^N: exact rationals or complex floats, never both."""

    __slots__ = ("coords", "exact")

    def __init__(self, coords: Iterable):
        coords = tuple(coords)
        if len(coords) < 2:
            raise DimensionMismatch("a projective point needs at least two coordinates")
        if all(_is_exact_scalar(x) for x in coords):
            self.coords = tuple(Fraction(x) for x in coords)
            self.exact = True
        elif all(isinstance(x, (float, complex)) for x in coords):
            self.coords = tuple(complex(x) for x in coords)
            self.exact = False
        else:
            raise DomainError("exact and numeric coordinates mixed in one lift")
        if not any(self.coords):
            raise DomainError("zero lift")

    @classmethod
    def numeric(cls, coords: Iterable) -> "ProjPoint":
        return cls(complex(x) for x in coords)

    @classmethod
    def parse(cls, text: str) -> "ProjPoint":
        parts = text.split(",")
        coords = []
        for i, part in enumerate(parts):
            try:
                coords.append(parse_rational(part))
            except ConfigError as e:
                column = sum(len(p) + 1 for p in parts[:i]) + 1
                raise ConfigError(f"bad coordinate {part.strip()!r} in point {text!r}", 1, column) from e
        return cls(coords)

    @property
    def nvars(self) -> int:
        return len(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def scaled(self, lam) -> "ProjPoint":
        if self.exact:
            lam = Fraction(lam)
            if not lam:
                raise DomainError("zero lift")
        else:
            lam = complex(lam)
        return ProjPoint(lam * x for x in self.coords)

    def same_point(self, other: "ProjPoint") -> bool:
        """Projective equality of exact lifts (all 2x2 minors vanish)."""
        if not (self.exact and other.exact):
            raise DomainError("projective equality is decided for exact lifts only")
        if self.nvars != other.nvars:
            return False
        a, b = self.coords, other.coords
        return all(a[i] * b[j] == a[j] * b[i] for i in range(len(a)) for j in range(i + 1, len(a)))

    def to_json(self) -> list:
        if self.exact:
            return [format_rational(x) for x in self.coords]
        return [[x.real, x.imag] for x in self.coords]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self.exact == other.exact and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.exact, self.coords))

    def __repr__(self) -> str:
        if self.exact:
            return f"ProjPoint({','.join(format_rational(x) for x in self.coords)})"
        return f"ProjPoint({self.coords})"


class PolyMap:
    """N+1 forms of a common degree in N+1 variables: a homogeneous lift."""

    __slots__ = ("forms", "_hash")

    def __init__(self, forms: Sequence[HomoForm]):
        forms = tuple(forms)
        if len(forms) < 2:
            raise DimensionMismatch("a map of projective space needs at least two forms")
        for f in forms:
            if f.nvars != len(forms):
                raise DimensionMismatch(f"form in {f.nvars} variables in a map with {len(forms)} coordinates")
        degrees = {f.degree for f in forms}
        if len(degrees) != 1:
            raise DomainError(f"degree mismatch among forms: {sorted(degrees)}")
        if forms[0].degree < 1:
            raise DomainError("a map needs degree at least 1")
        if all(f.is_zero() for f in forms):
            raise DomainError("all forms of the map are zero")
        self.forms = forms
        self._hash = None

    @classmethod
    def identity(cls, nvars: int) -> "PolyMap":
        return cls([HomoForm.variable(nvars, i) for i in range(nvars)])

    @classmethod
    def power(cls, nvars: int, d: int) -> "PolyMap":
        """(x0^d, ..., xN^d)."""
        return cls([HomoForm.monomial([d if k == i else 0 for k in range(nvars)]) for i in range(nvars)])

    @classmethod
    def parse(cls, texts: Sequence[str]) -> "PolyMap":
        forms = []
        for i, text in enumerate(texts):
            try:
                forms.append(HomoForm.parse(text, len(texts)))
            except ConfigError as e:
                raise ConfigError(f"form {i}: {e.message}", e.line, e.column) from e
        degrees = {f.degree for f in forms if not f.is_zero()}
        if len(degrees) == 1:
            d = degrees.pop()
            forms = [HomoForm.zero(f.nvars, d) if f.is_zero() else f for f in forms]
        return cls(forms)

    from_json = parse

    def to_json(self) -> list[str]:
        return [str(f) for f in self.forms]

    @property
    def degree(self) -> int:
        return self.forms[0].degree

    @property
    def nvars(self) -> int:
        return len(self.forms)

    @property
    def N(self) -> int:
        return len(self.forms) - 1

    def coefficients(self) -> list[Fraction]:
        return [c for f in self.forms for c in f.terms.values()]

    def apply(self, coords: Sequence) -> tuple:
        return tuple(f.evaluate(coords) for f in self.forms)

    def __call__(self, point: ProjPoint) -> ProjPoint:
        if point.nvars != self.nvars:
            raise DimensionMismatch(f"point in P^{point.nvars - 1} for a map of P^{self.N}")
        return ProjPoint(self.apply(point))

    def compose(self, inner: "PolyMap") -> "PolyMap":
        if inner.nvars != self.nvars:
            raise DimensionMismatch(f"composing maps of P^{self.N} and P^{inner.N}")
        return PolyMap([f.substitute(inner.forms) for f in self.forms])

    def scale(self, lam) -> "PolyMap":
        lam = Fraction(lam)
        if not lam:
            raise DomainError("scaling a map by zero")
        return PolyMap([f.scale(lam) for f in self.forms])

    def iterate(self, k: int) -> "PolyMap":
        return iterate(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.forms == other.forms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.forms)
        return self._hash

    def __repr__(self) -> str:
        return f"PolyMap({self.to_json()})"


def evaluate(form: HomoForm, point: ProjPoint) -> Fraction | complex:
    return form.evaluate(point)


def compose(outer: PolyMap, inner: PolyMap) -> PolyMap:
    return outer.compose(inner)


def iterate(fmap: PolyMap, k: int) -> PolyMap:
    """F^(k) by repeated squaring on composition."""
    if k < 1:
        raise PreconditionViolation(f"iterate needs k >= 1, got {k}")
    result: PolyMap | None = None
    base = fmap
    while k:
        if k & 1:
            result = base if result is None else base.compose(result)
        k >>= 1
        if k:
            base = base.compose(base)
    return result


def coeff_sup_log(fmap: PolyMap, place: Place) -> LogMag:
    coeffs = fmap.coefficients()
    if place.is_archimedean:
        return abs_log(ARCHIMEDEAN, max(abs(c) for c in coeffs))
    smallest = min(place.valuation(c) for c in coeffs)
    return LogMag.from_padic({place.prime: Fraction(-smallest)})
