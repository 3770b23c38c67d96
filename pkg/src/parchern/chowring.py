"""Truncated graded commutative Q-algebras given by structure constants.

A :class:`RingPresentation` fixes, for each degree ``0..d``, an ordered list of
basis labels together with the products of basis elements.  Everything above
degree ``d`` is zero, so every element of positive degree is nilpotent and
``exp``/``log``-type series terminate.  A :class:`GradedClass` is an immutable
vector of exact rationals over the full basis.

Canonical text form (used by the CLI and round-tripped by :func:`parse_class`)::

    deg 0: 2; deg 1: 1*H; deg 2: 1/4*H^2
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence, Union

from gmpy2 import mpq as Q, mpz

from .errors import PreconditionError, RingMismatchError, ValidationError

Rational = Union[int, Fraction, str, "Q"]

_SCALAR_TYPES = (int, Fraction, type(Q()), type(mpz()))

_LABEL_RE = re.compile(r"^[^\s;:+*,]+$")


def as_rational(value: Rational) -> Fraction:
    """Exact rational (a gmpy2 ``mpq``) from an int, Fraction, mpq or ``"p/q"`` string.

    Floats are refused.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, _SCALAR_TYPES):
        return Q(value)
    if isinstance(value, str):
        text = value.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", text):
            raise ValueError(f"not an exact rational: {value!r}")
        return Q(text)
    raise TypeError(f"expected int, rational or 'p/q' string, got {type(value).__name__}")


def format_rational(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class RingPresentation:
    """A truncated graded commutative algebra over Q with designated divisors.

    Parameters
    ----------
    name:
        Free-form label.
    bases:
        ``bases[k]`` is the ordered list of basis labels in degree ``k``; the
        single degree-0 label is the unit.  The top degree is ``len(bases) - 1``.
    products:
        Maps ``(label_a, label_b)`` to ``{label: coefficient}`` in degree
        ``deg a + deg b``.  Products with the unit are implicit, one ordering of
        each pair suffices, and missing pairs are zero.
    divisors:
        Degree-1 classes ``D_1..D_m`` as ``{label: coefficient}`` mappings.
    point:
        Optional top-degree class.
    validate:
        Check symmetry, unit and associativity eagerly (cubic in the basis size).
    """

    def __init__(
        self,
        name: str,
        bases: Sequence[Sequence[str]],
        products: Mapping[tuple[str, str], Mapping[str, Rational]],
        divisors: Sequence[Mapping[str, Rational]] = (),
        point: Mapping[str, Rational] | None = None,
        validate: bool = True,
    ):
        self.name = name
        self.bases = tuple(tuple(b) for b in bases)
        if len(self.bases) < 2:
            raise ValidationError(f"ring {name!r}: need top degree d >= 1")
        if len(self.bases[0]) != 1:
            raise ValidationError(f"ring {name!r}: degree 0 must have exactly one basis label")
        self.dim = len(self.bases) - 1

        self.labels: tuple[str, ...] = tuple(lab for b in self.bases for lab in b)
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"ring {name!r}: duplicate basis labels")
        for lab in self.labels:
            if not _LABEL_RE.match(lab):
                raise ValidationError(f"ring {name!r}: bad basis label {lab!r}")
        self.offsets = []
        pos = 0
        for b in self.bases:
            self.offsets.append(pos)
            pos += len(b)
        self.size = pos
        self.degree_of = tuple(k for k, b in enumerate(self.bases) for _ in b)
        self.index = {lab: i for i, lab in enumerate(self.labels)}

        self._table = self._build_table(products)
        self._mult_pairs = {
            (i, j): t for i, row in enumerate(self._table) for j, t in enumerate(row) if t
        }
        self._divisor_vectors = tuple(self._homogeneous_vector(dv, 1, "divisor") for dv in divisors)
        self._point_vector = None if point is None else self._homogeneous_vector(point, self.dim, "point")
        if validate:
            self.check_invariants()

    # -- construction helpers ------------------------------------------------

    def _homogeneous_vector(self, mapping: Mapping[str, Rational], degree: int, what: str):
        vec = [Q(0)] * self.size
        for lab, c in mapping.items():
            if lab not in self.index:
                raise ValidationError(f"ring {self.name!r}: {what} uses unknown label {lab!r}")
            i = self.index[lab]
            if self.degree_of[i] != degree:
                raise ValidationError(
                    f"ring {self.name!r}: {what} label {lab!r} is not in degree {degree}"
                )
            vec[i] += as_rational(c)
        return tuple(vec)

    def _build_table(self, products):
        n = self.size
        table: list[list[tuple | None]] = [[None] * n for _ in range(n)]
        for (la, lb), value in products.items():
            for lab in (la, lb):
                if lab not in self.index:
                    raise ValidationError(f"ring {self.name!r}: product uses unknown label {lab!r}")
            i, j = self.index[la], self.index[lb]
            deg = self.degree_of[i] + self.degree_of[j]
            if deg > self.dim:
                if any(as_rational(c) for c in value.values()):
                    raise ValidationError(
                        f"ring {self.name!r}: product {la}*{lb} exceeds top degree but is nonzero"
                    )
                continue
            entry = []
            for lab, c in value.items():
                if lab not in self.index:
                    raise ValidationError(f"ring {self.name!r}: product value uses unknown label {lab!r}")
                k = self.index[lab]
                if self.degree_of[k] != deg:
                    raise ValidationError(
                        f"ring {self.name!r}: product {la}*{lb} lands outside degree {deg}"
                    )
                q = as_rational(c)
                if q:
                    entry.append((k, q))
            entry = tuple(sorted(entry))
            for a, b in ((i, j), (j, i)):
                if table[a][b] is not None and table[a][b] != entry:
                    raise ValidationError(
                        f"ring {self.name!r}: products {la}*{lb} and {lb}*{la} disagree"
                    )
            table[i][j] = entry
            table[j][i] = entry
        for k in range(n):
            for a, b in ((0, k), (k, 0)):
                if table[a][b] is None:
                    table[a][b] = ((k, Q(1)),)
                elif table[a][b] != ((k, Q(1)),):
                    raise ValidationError(
                        f"ring {self.name!r}: unit is not neutral on {self.labels[k]!r}"
                    )
        for i in range(n):
            for j in range(n):
                if table[i][j] is None:
                    table[i][j] = ()
        return table

    def check_invariants(self) -> None:
        """Raise :class:`ValidationError` unless the product is associative."""
        n = self.size
        basis = [self.basis_element(lab) for lab in self.labels]
        for i, j, k in combinations_with_replacement(range(n), 3):
            if self.degree_of[i] + self.degree_of[j] + self.degree_of[k] > self.dim:
                continue
            # commutativity is built in, so all orderings reduce to these three
            x, y, z = basis[i], basis[j], basis[k]
            v1 = (x * y) * z
            v2 = x * (y * z)
            v3 = (x * z) * y
            if v1 != v2 or v1 != v3:
                raise ValidationError(
                    f"ring {self.name!r}: product not associative on "
                    f"({self.labels[i]}, {self.labels[j]}, {self.labels[k]})"
                )

    def with_divisors(self, divisors: Sequence[Mapping[str, Rational]], name: str | None = None):
        """Same algebra, different designated divisors (a new presentation object)."""
        products = self.products()
        point = None if self._point_vector is None else self._vector_to_mapping(self._point_vector)
        return RingPresentation(name or self.name, self.bases, products, divisors, point, validate=False)

    def products(self) -> dict[tuple[str, str], dict[str, Fraction]]:
        out = {}
        for i in range(1, self.size):
            for j in range(i, self.size):
                if self.degree_of[i] + self.degree_of[j] > self.dim:
                    continue
                out[(self.labels[i], self.labels[j])] = {
                    self.labels[k]: c for k, c in self._table[i][j]
                }
        return out

    def _vector_to_mapping(self, vec):
        return {self.labels[i]: c for i, c in enumerate(vec) if c}

    # -- element access ------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self._divisor_vectors)

    @property
    def unit_label(self) -> str:
        return self.bases[0][0]

    def zero(self) -> "GradedClass":
        return GradedClass(self, (Q(0),) * self.size)

    def one(self) -> "GradedClass":
        return self.scalar(1)

    def scalar(self, value: Rational) -> "GradedClass":
        return GradedClass(self, (as_rational(value),) + (Q(0),) * (self.size - 1))

    def basis_element(self, label: str) -> "GradedClass":
        vec = [Q(0)] * self.size
        vec[self.index[label]] = Q(1)
        return GradedClass(self, tuple(vec))

    def element(self, mapping: Mapping[str, Rational]) -> "GradedClass":
        vec = [Q(0)] * self.size
        for lab, c in mapping.items():
            if lab not in self.index:
                raise ValidationError(f"ring {self.name!r}: unknown basis label {lab!r}")
            vec[self.index[lab]] += as_rational(c)
        return GradedClass(self, tuple(vec))

    def divisor(self, i: int) -> "GradedClass":
        """The ``i``-th designated divisor, 0-based."""
        return GradedClass(self, self._divisor_vectors[i])

    @property
    def divisors(self) -> tuple["GradedClass", ...]:
        return tuple(GradedClass(self, v) for v in self._divisor_vectors)

    @property
    def point(self) -> "GradedClass | None":
        return None if self._point_vector is None else GradedClass(self, self._point_vector)

    def linear_combination(self, coeffs: Sequence[Rational]) -> "GradedClass":
        """``sum_i coeffs[i] * D_i``."""
        if len(coeffs) != self.m:
            raise PreconditionError(f"expected {self.m} divisor coefficients, got {len(coeffs)}")
        vec = [Q(0)] * self.size
        for c, dv in zip(coeffs, self._divisor_vectors):
            c = as_rational(c)
            if c:
                for i, x in enumerate(dv):
                    if x:
                        vec[i] += c * x
        return GradedClass(self, tuple(vec))

    def __repr__(self):
        return f"RingPresentation({self.name!r}, dim={self.dim}, basis={self.size}, m={self.m})"


class GradedClass:
    """An element of a :class:`RingPresentation`; immutable."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: RingPresentation, coeffs: Sequence[Fraction]):
        if len(coeffs) != ring.size:
            raise ValidationError(
                f"class has {len(coeffs)} coefficients, ring {ring.name!r} has {ring.size}"
            )
        self.ring = ring
        self.coeffs = tuple(coeffs)

    def _same_ring(self, other: "GradedClass") -> None:
        if other.ring is not self.ring:
            raise RingMismatchError(
                f"classes live on different rings ({self.ring.name!r} vs {other.ring.name!r})"
            )

    def _coerce(self, other) -> "GradedClass":
        if isinstance(other, GradedClass):
            self._same_ring(other)
            return other
        return self.ring.scalar(other)

    # -- structure -----------------------------------------------------------

    def degree_part(self, k: int) -> tuple[Fraction, ...]:
        ring = self.ring
        if k < 0 or k > ring.dim:
            return ()
        start = ring.offsets[k]
        return self.coeffs[start:start + len(ring.bases[k])]

    def homogeneous(self, k: int) -> "GradedClass":
        ring = self.ring
        vec = [Q(0)] * ring.size
        start = ring.offsets[k]
        for t, c in enumerate(self.degree_part(k)):
            vec[start + t] = c
        return GradedClass(ring, tuple(vec))

    @property
    def rank(self) -> Fraction:
        """Degree-0 coefficient."""
        return self.coeffs[0]

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def vanishes_below(self, k: int) -> bool:
        return not any(self.coeffs[: self.ring.offsets[k]] if k <= self.ring.dim else self.coeffs)

    def as_mapping(self) -> dict[str, Fraction]:
        return {self.ring.labels[i]: c for i, c in enumerate(self.coeffs) if c}

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return GradedClass(self.ring, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return GradedClass(self.ring, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return GradedClass(self.ring, tuple(-a for a in self.coeffs))

    def scale(self, q: Rational) -> "GradedClass":
        q = as_rational(q)
        return GradedClass(self.ring, tuple(q * a for a in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, GradedClass):
            return self.scale(other)
        self._same_ring(other)
        ring = self.ring
        out = [Q(0)] * ring.size
        xs = [(i, a) for i, a in enumerate(self.coeffs) if a]
        ys = [(j, b) for j, b in enumerate(other.coeffs) if b]
        pairs = ring._mult_pairs
        for i, a in xs:
            for j, b in ys:
                entry = pairs.get((i, j))
                if entry:
                    ab = a * b
                    for k, c in entry:
                        out[k] += ab * c
        return GradedClass(ring, tuple(out))

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, GradedClass):
            return self * invert(other)
        return self.scale(1 / as_rational(other))

    def __pow__(self, k: int) -> "GradedClass":
        if k < 0:
            return invert(self) ** (-k)
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, GradedClass):
            return self.ring is other.ring and self.coeffs == other.coeffs
        if isinstance(other, _SCALAR_TYPES) and not isinstance(other, bool):
            return self == self.ring.scalar(other)
        return NotImplemented

    def __hash__(self):
        return hash((id(self.ring), self.coeffs))

    def __repr__(self):
        return f"GradedClass({render(self)})"

    def __str__(self):
        return render(self)


# -- module-level operations -------------------------------------------------


def add(x: GradedClass, y: GradedClass) -> GradedClass:
    return x + y


def sub(x: GradedClass, y: GradedClass) -> GradedClass:
    return x - y


def scale(x: GradedClass, q: Rational) -> GradedClass:
    return x.scale(q)


def mul(x: GradedClass, y: GradedClass) -> GradedClass:
    return x * y


def _require_nilpotent(x: GradedClass, what: str) -> None:
    if x.coeffs[0]:
        raise PreconditionError(f"{what}: degree-0 part must vanish, got {format_rational(x.coeffs[0])}")


def eval_series(coefficients: Sequence[Rational], x: GradedClass) -> GradedClass:
    """``sum_k c_k x^k`` for nilpotent ``x``; terms with ``k > d`` vanish."""
    _require_nilpotent(x, "eval_series")
    ring = x.ring
    coeffs = [as_rational(c) for c in coefficients[: ring.dim + 1]]
    result = ring.zero()
    power = ring.one()
    for k, c in enumerate(coeffs):
        if k:
            power = power * x
            if power.is_zero():
                break
        if c:
            result = result + power.scale(c)
    return result


def exp(x: GradedClass) -> GradedClass:
    _require_nilpotent(x, "exp")
    d = x.ring.dim
    return eval_series([Q(1, math.factorial(k)) for k in range(d + 1)], x)


def invert(x: GradedClass) -> GradedClass:
    """Multiplicative inverse via the geometric series on the nilpotent part."""
    c = x.coeffs[0]
    if not c:
        raise PreconditionError("invert: degree-0 part is zero")
    u = x.scale(1 / c) - 1
    d = x.ring.dim
    return eval_series([(-1) ** k for k in range(d + 1)], u).scale(1 / c)


# -- standard presentations --------------------------------------------------


def projective_space_ring(
    d: int, divisors: Sequence[Mapping[str, Rational]] | None = None, name: str | None = None
) -> RingPresentation:
    """``Q[H]/(H^{d+1})`` with basis ``1, H, H^2, ...``; default divisor ``H``."""
    if d < 1:
        raise PreconditionError("projective space needs d >= 1")
    labels = ["1", "H"] + [f"H^{k}" for k in range(2, d + 1)]
    products = {
        (labels[j], labels[k]): {labels[j + k]: 1}
        for j in range(1, d + 1)
        for k in range(j, d + 1 - j)
    }
    if divisors is None:
        divisors = [{"H": 1}]
    return RingPresentation(
        name or f"P{d}", [[lab] for lab in labels], products, divisors, {labels[d]: 1}
    )


def surface_ring(
    m: int, intersections: Sequence[Sequence[Rational]], name: str = "surface"
) -> RingPresentation:
    """Basis ``1; D1..Dm; pt`` with ``Di*Dj = intersections[i][j] * pt``."""
    mat = [[as_rational(v) for v in row] for row in intersections]
    if len(mat) != m or any(len(row) != m for row in mat):
        raise PreconditionError(f"intersection matrix must be {m}x{m}")
    for i in range(m):
        for j in range(m):
            if mat[i][j] != mat[j][i]:
                raise PreconditionError("intersection matrix must be symmetric")
    labels = [f"D{i + 1}" for i in range(m)]
    products = {
        (labels[i], labels[j]): {"pt": mat[i][j]} for i in range(m) for j in range(i, m)
    }
    return RingPresentation(
        name, [["1"], labels, ["pt"]], products, [{lab: 1} for lab in labels], {"pt": 1}
    )


def product_projective_ring(dims: Sequence[int], name: str | None = None) -> RingPresentation:
    """Cohomology of ``P^{a_1} x ... x P^{a_k}`` with divisors the hyperplane pullbacks.

    Basis monomials ``h1^e1*...`` are labelled like ``h1^2.h3``.
    """
    dims = list(dims)
    if not dims or any(a < 1 for a in dims):
        raise PreconditionError("need at least one factor, each of dimension >= 1")
    top = sum(dims)

    def exps_of_degree(k, factors):
        if not factors:
            return [()] if k == 0 else []
        out = []
        for e in range(min(k, factors[0]), -1, -1):
            out.extend((e,) + rest for rest in exps_of_degree(k - e, factors[1:]))
        return out

    def label(exps):
        parts = []
        for t, e in enumerate(exps):
            if e == 1:
                parts.append(f"h{t + 1}")
            elif e > 1:
                parts.append(f"h{t + 1}^{e}")
        return ".".join(parts) or "1"

    bases = [[label(e) for e in exps_of_degree(k, dims)] for k in range(top + 1)]
    monos = [e for k in range(top + 1) for e in exps_of_degree(k, dims)]
    products = {}
    for a in range(1, len(monos)):
        for b in range(a, len(monos)):
            s = tuple(x + y for x, y in zip(monos[a], monos[b]))
            if sum(s) > top:
                continue
            value = {label(s): 1} if all(x <= c for x, c in zip(s, dims)) else {}
            products[(label(monos[a]), label(monos[b]))] = value
    divisors = [{f"h{t + 1}": 1} for t in range(len(dims))]
    point = {label(tuple(dims)): 1}
    return RingPresentation(
        name or "x".join(f"P{a}" for a in dims), bases, products, divisors, point
    )


# -- text form ---------------------------------------------------------------


def render(x: GradedClass) -> str:
    """Canonical text: ``deg k: c*label + ...`` per nonzero degree, ``0`` if zero."""
    ring = x.ring
    parts = []
    for k in range(ring.dim + 1):
        terms = []
        for lab, c in zip(ring.bases[k], x.degree_part(k)):
            if not c:
                continue
            terms.append(format_rational(c) if k == 0 else f"{format_rational(c)}*{lab}")
        if terms:
            parts.append(f"deg {k}: " + " + ".join(terms))
    return "; ".join(parts) if parts else "0"


def render_homogeneous(x: GradedClass) -> str:
    """Compact form for classes like Chern classes: ``H``, ``1/4*H^2``, ``0``."""
    ring = x.ring
    terms = []
    for i, c in enumerate(x.coeffs):
        if not c:
            continue
        lab = ring.labels[i]
        if ring.degree_of[i] == 0:
            terms.append(format_rational(c))
        elif c == 1:
            terms.append(lab)
        elif c == -1:
            terms.append(f"-{lab}")
        else:
            terms.append(f"{format_rational(c)}*{lab}")
    return " + ".join(terms) if terms else "0"


def parse_class(ring: RingPresentation, text: str) -> GradedClass:
    """Inverse of :func:`render`."""
    text = text.strip()
    if text == "0":
        return ring.zero()
    vec = [Q(0)] * ring.size
    seen = set()
    for chunk in text.split(";"):
        m = re.fullmatch(r"\s*deg\s+(\d+)\s*:\s*(.+?)\s*", chunk)
        if not m:
            raise ValueError(f"cannot parse degree block {chunk.strip()!r}")
        k = int(m.group(1))
        if k > ring.dim:
            raise ValueError(f"degree {k} exceeds top degree {ring.dim}")
        if k in seen:
            raise ValueError(f"degree {k} listed twice")
        seen.add(k)
        for term in m.group(2).split(" + "):
            term = term.strip()
            if k == 0:
                coef, lab = term, ring.unit_label
            else:
                if "*" not in term:
                    raise ValueError(f"term {term!r} lacks 'coefficient*label'")
                coef, lab = term.split("*", 1)
            if lab not in ring.index or ring.degree_of[ring.index[lab]] != k:
                raise ValueError(f"label {lab!r} is not a degree-{k} basis label")
            vec[ring.index[lab]] += as_rational(coef)
    return GradedClass(ring, tuple(vec))
