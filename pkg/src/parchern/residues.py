"""Filtrations attached to a nilpotent residue operator, over Q.

Subspaces of ``Q^r`` are stored as matrices whose columns are a basis in
reduced column echelon form, so equal subspaces have identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from gmpy2 import mpq as Q
from typing import Sequence

from .chowring import GradedClass, Rational, as_rational, exp
from .errors import PreconditionError, ValidationError

Matrix = tuple[tuple[Q, ...], ...]
Vector = tuple[Q, ...]


# -- exact linear algebra --------------------------------------------------------


def to_matrix(rows: Sequence[Sequence[Rational]]) -> Matrix:
    mat = tuple(tuple(as_rational(x) for x in row) for row in rows)
    if mat and len({len(row) for row in mat}) != 1:
        raise ValidationError("matrix rows have different lengths")
    return mat


def identity(r: int) -> Matrix:
    return tuple(tuple(Q(int(i == j)) for j in range(r)) for i in range(r))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Q(0)) for col in cols) for row in a)


def apply(a: Matrix, v: Vector) -> Vector:
    return tuple(sum((x * y for x, y in zip(row, v)), Q(0)) for row in a)


def matpow(a: Matrix, k: int) -> Matrix:
    out = identity(len(a))
    for _ in range(k):
        out = matmul(out, a)
    return out


def _rref_rows(rows: list[list[Q]]) -> list[list[Q]]:
    """Reduced row echelon form; zero rows dropped."""
    rows = [list(r) for r in rows]
    if not rows:
        return []
    ncols = len(rows[0])
    pivot_row = 0
    for col in range(ncols):
        sel = next((i for i in range(pivot_row, len(rows)) if rows[i][col]), None)
        if sel is None:
            continue
        rows[pivot_row], rows[sel] = rows[sel], rows[pivot_row]
        p = rows[pivot_row][col]
        rows[pivot_row] = [x / p for x in rows[pivot_row]]
        for i in range(len(rows)):
            if i != pivot_row and rows[i][col]:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[pivot_row])]
        pivot_row += 1
        if pivot_row == len(rows):
            break
    return rows[:pivot_row]


def rank(vectors: Sequence[Vector]) -> int:
    return len(_rref_rows([list(v) for v in vectors]))


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``Q^ambient`` with a canonical basis (rows = basis vectors)."""

    ambient: int
    basis: tuple[Vector, ...]

    @classmethod
    def span(cls, ambient: int, vectors: Sequence[Sequence[Rational]]) -> "Subspace":
        rows = _rref_rows([[as_rational(x) for x in v] for v in vectors if len(v)])
        return cls(ambient, tuple(tuple(r) for r in rows))

    @classmethod
    def whole(cls, r: int) -> "Subspace":
        return cls(r, identity(r))

    @classmethod
    def zero(cls, r: int) -> "Subspace":
        return cls(r, ())

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace.span(self.ambient, self.basis + other.basis)

    def contains(self, v: Sequence[Q]) -> bool:
        return rank(self.basis + (tuple(v),)) == self.dim

    def __le__(self, other: "Subspace") -> bool:
        return all(other.contains(v) for v in self.basis)

    def image(self, a: Matrix) -> "Subspace":
        return Subspace.span(self.ambient, [apply(a, v) for v in self.basis])

    def preimage_within(self, a: Matrix, target: "Subspace") -> "Subspace":
        """``{x in self : a x in target}``."""
        # solve sum_k t_k a(b_k) in target: kernel of the map t -> a(B t) mod target
        k = self.dim
        if k == 0:
            return self
        images = [apply(a, v) for v in self.basis]
        comp = complement_projector(target)
        rows = [[comp(img)[j] for img in images] for j in range(self.ambient)]
        coeffs = nullspace(rows, k)
        vecs = [
            tuple(sum((c * v[j] for c, v in zip(t, self.basis)), Q(0)) for j in range(self.ambient))
            for t in coeffs
        ]
        return Subspace.span(self.ambient, vecs)

    def intersect(self, other: "Subspace") -> "Subspace":
        return self.preimage_within(identity(self.ambient), other)

    def matrix(self) -> Matrix:
        """Basis as columns."""
        return tuple(zip(*self.basis)) if self.basis else tuple(() for _ in range(self.ambient))


def nullspace(rows: Sequence[Sequence[Q]], ncols: int) -> list[Vector]:
    red = _rref_rows([list(r) for r in rows]) if rows else []
    pivots = []
    for r in red:
        pivots.append(next(j for j, x in enumerate(r) if x))
    free = [j for j in range(ncols) if j not in pivots]
    out = []
    for f in free:
        v = [Q(0)] * ncols
        v[f] = Q(1)
        for r, p in zip(red, pivots):
            v[p] = -r[f]
        out.append(tuple(v))
    return out


def complement_projector(s: Subspace):
    """A linear map ``Q^r -> Q^r`` whose kernel is exactly ``s``."""
    pivots = [next(j for j, x in enumerate(b) if x) for b in s.basis]

    def proj(v):
        v = list(v)
        for b, p in zip(s.basis, pivots):
            if v[p]:
                f = v[p]
                v = [x - f * y for x, y in zip(v, b)]
        return tuple(v)

    return proj


# -- operators and filtrations -----------------------------------------------------


@dataclass(frozen=True)
class NilpotentOperator:
    matrix: Matrix
    order: int

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Rational]]) -> "NilpotentOperator":
        mat = to_matrix(rows)
        r = len(mat)
        if r == 0 or any(len(row) != r for row in mat):
            raise ValidationError("residue operator must be a nonempty square matrix")
        power = identity(r)
        for k in range(1, r + 1):
            power = matmul(power, mat)
            if not any(any(row) for row in power):
                return cls(mat, k)
        raise PreconditionError(f"matrix is not nilpotent (eta^{r} is nonzero)")

    @property
    def size(self) -> int:
        return len(self.matrix)

    @property
    def l(self) -> int:
        """Largest exponent with a nonzero power: ``order - 1``."""
        return self.order - 1


@dataclass(frozen=True)
class Filtration:
    steps: tuple[Subspace, ...]
    increasing: bool

    def __post_init__(self):
        for a, b in zip(self.steps, self.steps[1:]):
            ok = a <= b if self.increasing else b <= a
            if not ok:
                raise ValidationError("filtration steps are not nested")

    @property
    def dims(self) -> list[int]:
        return [s.dim for s in self.steps]


def _as_operator(eta) -> NilpotentOperator:
    return eta if isinstance(eta, NilpotentOperator) else NilpotentOperator.from_rows(eta)


def image_filtration(eta) -> Filtration:
    """``im eta^0 >= im eta^1 >= ... >= im eta^order = 0``."""
    eta = _as_operator(eta)
    r = eta.size
    steps = []
    space = Subspace.whole(r)
    for _ in range(eta.order + 1):
        steps.append(space)
        space = space.image(eta.matrix)
    return Filtration(tuple(steps), increasing=False)


def kernel_filtration(eta) -> Filtration:
    """``F_j = ker eta^{l+1-j}`` for ``j = 0..l+1``.

    ``F_0`` is everything and ``F_{l+1}`` is zero, so the steps decrease with ``j``.
    """
    eta = _as_operator(eta)
    r, l = eta.size, eta.l
    steps = []
    for j in range(l + 2):
        power = matpow(eta.matrix, l + 1 - j)
        steps.append(Subspace.whole(r).preimage_within(power, Subspace.zero(r)))
    return Filtration(tuple(steps), increasing=False)


def monodromy_weight_filtration(eta) -> Filtration:
    """``W_0 <= ... <= W_{2l}`` with ``eta W_k <= W_{k-2}`` and ``eta^k: Gr_{l+k} ~ Gr_{l-k}``.

    Built from the outside in: with ``W_{k-1}`` and ``W_{2l-k}`` known,
    ``W_k = eta^{l-k} W_{2l-k} + W_{k-1}`` and
    ``W_{2l-k-1} = {x in W_{2l-k} : eta^{l-k} x in W_{k-1}}``.
    """
    eta = _as_operator(eta)
    r, l = eta.size, eta.l
    W: dict[int, Subspace] = {-1: Subspace.zero(r), 2 * l: Subspace.whole(r)}
    for k in range(l):
        power = matpow(eta.matrix, l - k)
        upper = W[2 * l - k]
        W[k] = upper.image(power) + W[k - 1]
        W[2 * l - k - 1] = upper.preimage_within(power, W[k - 1])
    steps = tuple(W[k] for k in range(2 * l + 1))
    return Filtration(steps, increasing=True)


def weight_filtration_defects(eta, W: Filtration) -> list[str]:
    """Human-readable list of violated defining conditions (empty when ``W`` is valid)."""
    eta = _as_operator(eta)
    r, l = eta.size, eta.l
    steps = {k: s for k, s in enumerate(W.steps)}
    steps[-1] = Subspace.zero(r)
    steps[-2] = Subspace.zero(r)
    problems = []
    if steps[2 * l] != Subspace.whole(r):
        problems.append(f"W_{2 * l} is not the whole space")
    for k in range(2 * l + 1):
        if not steps[k].image(eta.matrix) <= steps[k - 2]:
            problems.append(f"eta(W_{k}) not inside W_{k - 2}")
    for k in range(1, l + 1):
        power = matpow(eta.matrix, k)
        hi, lo = l + k, l - k
        g_hi = steps[hi].dim - steps[hi - 1].dim
        g_lo = steps[lo].dim - steps[lo - 1].dim
        # images of a complement of W_{hi-1} in W_hi, taken modulo W_{lo-1}
        comp = _complement_basis(steps[hi - 1], steps[hi])
        imgs = [apply(power, v) for v in comp]
        if not all(steps[lo].contains(v) for v in imgs):
            problems.append(f"eta^{k}(W_{hi}) not inside W_{lo}")
        induced_rank = rank(steps[lo - 1].basis + tuple(imgs)) - steps[lo - 1].dim
        if not (g_hi == g_lo == induced_rank):
            problems.append(f"eta^{k}: Gr_{hi} -> Gr_{lo} is not an isomorphism")
    return problems


def _complement_basis(small: Subspace, big: Subspace) -> list[Vector]:
    out = []
    current = small
    for v in big.basis:
        if not current.contains(v):
            out.append(v)
            current = current + Subspace(current.ambient, (v,))
    return out


def graded_dims(W: Filtration) -> list[int]:
    dims = W.dims
    return [b - a for a, b in zip([0] + dims, dims)]


# -- weight-one Gauss-Manin example ------------------------------------------------


def weightone_ch(g: Sequence[int], alpha: Sequence[Rational], D: GradedClass) -> GradedClass:
    """``sum_i g_i exp(-alpha_i D)`` for graded ranks ``(g0, g1, g2)`` with ``g0 = g2``.

    The value is also recomputed through the single-divisor closed form with
    ``ch E = g0 + g1 + g2`` and pieces ``g_i (1 - e^{-D})``; the two must agree.
    """
    from .chernformulas import GrPieceList, single_divisor_closed_form

    if len(g) != 3 or len(alpha) != 3:
        raise PreconditionError("weight one needs three graded ranks and three weights")
    g = [int(x) for x in g]
    if any(x < 0 for x in g):
        raise PreconditionError("graded ranks must be nonnegative")
    if g[0] != g[2]:
        raise PreconditionError(f"weight-zero and weight-two ranks must agree, got {g[0]} and {g[2]}")
    alpha = [as_rational(a) for a in alpha]
    if not (-1 < alpha[0] < alpha[1] < alpha[2] <= 0):
        raise PreconditionError("weights must satisfy -1 < a0 < a1 < a2 <= 0")
    ring = D.ring
    direct = sum((exp(D.scale(-a)).scale(gi) for gi, a in zip(g, alpha)), ring.zero())
    pushed = 1 - exp(-D)
    proof_path = single_divisor_closed_form(
        ring.scalar(sum(g)), GrPieceList((a, pushed.scale(gi)) for gi, a in zip(g, alpha)), D
    )
    if proof_path != direct:
        raise ArithmeticError("closed-form evaluation disagrees with the direct sum")
    return direct
