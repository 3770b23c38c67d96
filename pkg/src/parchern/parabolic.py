"""Parabolic bundles at the level of Chern data.

Three representations are used:

* :class:`ComponentTable` -- ``ch(F_[a])`` for ``a`` in the window ``[0, n)^m``;
  every other index is reached through ``F_[a + n e_i] = F_[a](D_i)``.
* :class:`SplitBundle` -- a formal sum of parabolic line bundles
  ``O(sum_i gamma_i D_i)``; locally abelian by construction and the reference
  against which every formula is checked.
* :class:`FiltrationData` -- ``ch(E)`` plus the pushed-forward Chern characters
  of the multi-quotients ``Q^S_[a_S]`` (and optionally the multi-graded pieces
  ``Gr^S_[c_S]``) on the intersections ``D_S``.

Divisor indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from gmpy2 import mpq as Q
from itertools import combinations, product
from math import floor
from typing import Iterable, Mapping, Sequence

from .chowring import GradedClass, RingPresentation, Rational, as_rational, exp
from .errors import PreconditionError, RingMismatchError, ValidationError

DEFAULT_MAX_CELLS = 10**6
MAX_CELLS_ENV = "PARCHERN_MAX_CELLS"

MultiIndex = tuple[int, ...]


def max_cells() -> int:
    raw = os.environ.get(MAX_CELLS_ENV)
    return int(raw) if raw else DEFAULT_MAX_CELLS


def check_cell_budget(n: int, m: int) -> None:
    limit = max_cells()
    if n**m > limit:
        raise PreconditionError(
            f"table would need n^m = {n}^{m} = {n**m} cells, above the limit {limit} "
            f"(raise it with {MAX_CELLS_ENV})"
        )


def window(n: int, m: int, start: Sequence[int] | None = None) -> Iterable[MultiIndex]:
    """All multi-indices in ``prod_i [start_i, start_i + n)`` in lexicographic order."""
    if start is None:
        start = (0,) * m
    return product(*(range(s, s + n) for s in start))


def nonempty_subsets(m: int) -> list[tuple[int, ...]]:
    return [s for k in range(1, m + 1) for s in combinations(range(m), k)]


def integer_twist(ring: RingPresentation, q: Sequence[int]) -> GradedClass:
    """``exp(sum_i q_i D_i)``; cached per ring because the same twists recur."""
    q = tuple(q)
    cache = ring.__dict__.setdefault("_twist_cache", {})
    if q not in cache:
        cache[q] = exp(ring.linear_combination(q)) if any(q) else ring.one()
    return cache[q]


@dataclass(frozen=True, eq=False)
class ComponentTable:
    ring: RingPresentation
    n: int
    cells: Mapping[MultiIndex, GradedClass] = field(repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("denominator n must be positive")
        m = self.ring.m
        check_cell_budget(self.n, m)
        expected = set(window(self.n, m))
        keys = set(self.cells)
        if keys != expected:
            missing = sorted(expected - keys)[:3]
            extra = sorted(keys - expected)[:3]
            raise ValidationError(
                f"component table must have exactly the {self.n}^{m} cells of [0,{self.n})^{m}; "
                f"missing {missing}, unexpected {extra}"
            )
        rank = None
        for a in sorted(keys):
            cls = self.cells[a]
            if cls.ring is not self.ring:
                raise RingMismatchError(f"cell {list(a)} lives on another ring")
            if rank is None:
                rank = cls.rank
            elif cls.rank != rank:
                raise ValidationError(
                    f"cell {list(a)} has rank {cls.rank}, expected {rank} like the other cells"
                )
        object.__setattr__(self, "cells", dict(self.cells))

    @property
    def m(self) -> int:
        return self.ring.m

    @property
    def rank(self) -> Q:
        return self.cells[(0,) * self.m].rank

    def __eq__(self, other):
        if not isinstance(other, ComponentTable):
            return NotImplemented
        return self.ring is other.ring and self.n == other.n and self.cells == other.cells

    __hash__ = None


@dataclass(frozen=True)
class SplitBundle:
    """``(+)_k O(sum_i gamma[k][i] D_i)^{rank[k]}``."""

    pieces: tuple[tuple[int, tuple[Q, ...]], ...]

    def __init__(self, pieces: Iterable[tuple[int, Sequence[Rational]]]):
        norm = []
        for rank, gamma in pieces:
            if int(rank) != rank or rank < 1:
                raise ValidationError(f"piece ranks must be positive integers, got {rank}")
            norm.append((int(rank), tuple(as_rational(g) for g in gamma)))
        lengths = {len(g) for _, g in norm}
        if len(lengths) > 1:
            raise ValidationError("all pieces need the same number of weights")
        object.__setattr__(self, "pieces", tuple(norm))

    @property
    def rank(self) -> int:
        return sum(r for r, _ in self.pieces)

    def direct_ch(self, ring: RingPresentation) -> GradedClass:
        """``sum_k r_k exp(sum_i gamma_i D_i)`` -- the value every formula must reproduce."""
        total = ring.zero()
        for r, gamma in self.pieces:
            _check_weight_count(ring, gamma)
            total = total + exp(ring.linear_combination(gamma)).scale(r)
        return total


def _check_weight_count(ring: RingPresentation, gamma: Sequence[Q]) -> None:
    if len(gamma) != ring.m:
        raise PreconditionError(f"piece has {len(gamma)} weights but the ring has {ring.m} divisors")


def _check_denominators(b: SplitBundle, ring: RingPresentation, n: int) -> None:
    for _, gamma in b.pieces:
        _check_weight_count(ring, gamma)
        for g in gamma:
            if n % g.denominator:
                raise PreconditionError(f"weight {g} has denominator not dividing n = {n}")


# -- operations on tables ------------------------------------------------------


def component_ch(t: ComponentTable, a: Sequence[int]) -> GradedClass:
    """``ch(F_[a])`` for any integer multi-index via the periodicity rule."""
    if len(a) != t.m:
        raise PreconditionError(f"multi-index has length {len(a)}, expected {t.m}")
    qs, rs = zip(*(divmod(ai, t.n) for ai in a)) if t.m else ((), ())
    cell = t.cells[tuple(rs)]
    if any(qs):
        return cell * integer_twist(t.ring, qs)
    return cell


def split_to_table(b: SplitBundle, ring: RingPresentation, n: int) -> ComponentTable:
    _check_denominators(b, ring, n)
    m = ring.m
    check_cell_budget(n, m)
    shifts = [(r, [int(g * n) for g in gamma]) for r, gamma in b.pieces]
    cells = {}
    for a in window(n, m):
        total = ring.zero()
        for r, s in shifts:
            total = total + integer_twist(ring, [(ai + si) // n for ai, si in zip(a, s)]).scale(r)
        cells[a] = total
    return ComponentTable(ring, n, cells)


def tensor_line_table(t: ComponentTable, b: Sequence[int]) -> ComponentTable:
    """Table of ``F (x) O(sum_i (b_i/n) D_i)``."""
    if len(b) != t.m:
        raise PreconditionError(f"twist has length {len(b)}, expected {t.m}")
    cells = {a: component_ch(t, [ai + bi for ai, bi in zip(a, b)]) for a in window(t.n, t.m)}
    return ComponentTable(t.ring, t.n, cells)


def direct_sum(tables: Sequence[ComponentTable]) -> ComponentTable:
    if not tables:
        raise PreconditionError("direct_sum of no tables")
    first = tables[0]
    for t in tables[1:]:
        if t.ring is not first.ring:
            raise RingMismatchError("direct_sum: tables on different rings")
        if t.n != first.n:
            raise PreconditionError(f"direct_sum: denominators differ ({first.n} vs {t.n})")
    cells = {a: sum((t.cells[a] for t in tables[1:]), first.cells[a]) for a in first.cells}
    return ComponentTable(first.ring, first.n, cells)


def scale_table(t: ComponentTable, q: Rational) -> ComponentTable:
    return ComponentTable(t.ring, t.n, {a: c.scale(q) for a, c in t.cells.items()})


def refine_denominator(t: ComponentTable, p: int) -> ComponentTable:
    """Same parabolic structure with denominator ``n*p``; each cell copied ``p^m`` times."""
    if p < 1:
        raise PreconditionError("refinement factor must be >= 1")
    n = t.n * p
    check_cell_budget(n, t.m)
    cells = {b: t.cells[tuple(bi // p for bi in b)] for b in window(n, t.m)}
    return ComponentTable(t.ring, n, cells)


def structure_sheaf_class(r: Rational, S: Iterable[int], ring: RingPresentation) -> GradedClass:
    """Pushed Chern character of a sheaf with constant Chern character ``r`` on ``D_S``."""
    S = tuple(S)
    if not S:
        raise PreconditionError("structure_sheaf_class needs a nonempty divisor set")
    out = ring.scalar(r)
    for i in S:
        out = out * (1 - exp(-ring.divisor(i)))
    return out


# -- filtration data -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiltrationData:
    """``ch(E)`` and pushed multi-quotient (and optionally multi-graded) classes.

    ``quotients[S][a_S]`` is indexed by a sorted tuple ``S`` of 0-based divisor
    indices and levels ``-n <= a_i <= -1``; ``gradeds[S][c_S]`` by levels
    ``1-n <= c_i <= 0``.  Either payload may be omitted (``None``) if the other
    is given; quotients are then derived from the gradeds.
    """

    ring: RingPresentation
    n: int
    chE: GradedClass
    quotients: Mapping[tuple[int, ...], Mapping[MultiIndex, GradedClass]] | None = field(repr=False)
    gradeds: Mapping[tuple[int, ...], Mapping[MultiIndex, GradedClass]] | None = field(
        default=None, repr=False
    )

    def __post_init__(self):
        ring, n = self.ring, self.n
        if n < 1:
            raise ValidationError("denominator n must be positive")
        if self.chE.ring is not ring:
            raise RingMismatchError("chE lives on another ring")
        check_cell_budget(n, ring.m)
        subsets = nonempty_subsets(ring.m)
        g = None
        if self.gradeds is not None:
            g = _normalize_payload(self.gradeds, subsets, n, 1 - n, "graded")
            object.__setattr__(self, "gradeds", g)
        if self.quotients is None and g is not None:
            q = quotients_from_gradeds(ring, n, g)
        else:
            q = _normalize_payload(self.quotients, subsets, n, -n, "quotient")
        object.__setattr__(self, "quotients", q)
        if g is not None:
            for i in range(ring.m):
                total = sum(g[(i,)].values(), ring.zero())
                if total != self.chE * (1 - exp(-ring.divisor(i))):
                    raise ValidationError(
                        f"graded pieces on divisor {i + 1} do not add up to ch(E)*(1 - exp(-D{i + 1}))"
                    )
            derived = quotients_from_gradeds(ring, n, g)
            for S in subsets:
                for a, cls in q[S].items():
                    if derived[S][a] != cls:
                        raise ValidationError(
                            f"quotient {list(S)} at {list(a)} disagrees with the sum of its graded pieces"
                        )

    @property
    def m(self) -> int:
        return self.ring.m


def _normalize_payload(payload, subsets, n, low, what):
    if payload is None:
        raise ValidationError(f"{what} payload missing")
    out = {}
    for S in subsets:
        entries = payload.get(S)
        if entries is None:
            raise ValidationError(f"{what} payload missing divisor set {[i + 1 for i in S]}")
        expected = set(product(range(low, low + n), repeat=len(S)))
        keys = set(entries)
        if keys != expected:
            missing = sorted(expected - keys)[:3]
            extra = sorted(keys - expected)[:3]
            raise ValidationError(
                f"{what} payload for divisor set {[i + 1 for i in S]} must cover levels "
                f"[{low},{low + n - 1}]; missing {missing}, unexpected {extra}"
            )
        for a, cls in entries.items():
            if not cls.vanishes_below(len(S)):
                raise ValidationError(
                    f"{what} {[i + 1 for i in S]} at {list(a)} has nonzero parts below degree {len(S)}"
                )
        out[S] = dict(entries)
    extra_sets = set(payload) - set(subsets)
    if extra_sets:
        raise ValidationError(f"{what} payload has unknown divisor sets {sorted(extra_sets)}")
    return out


def quotients_from_gradeds(ring, n, gradeds):
    """``Q^S_[a] = sum_{a < c <= 0} Gr^S_[c]`` evaluated by suffix sums over the grid."""
    out = {}
    for S, g in gradeds.items():
        k = len(S)
        # acc[c] = sum of g over the orthant {c' >= c} inside [1-n, 0]^k
        acc = dict(g)
        for axis in range(k):
            for c in sorted(acc, key=lambda c: -c[axis]):
                nxt = c[:axis] + (c[axis] + 1,) + c[axis + 1:]
                if nxt in acc:
                    acc[c] = acc[c] + acc[nxt]
        out[S] = {
            a: acc[tuple(ai + 1 for ai in a)] for a in product(range(-n, 0), repeat=k)
        }
    return out


def gradeds_from_quotients(ring, n, quotients):
    """Inverse of :func:`quotients_from_gradeds`: ``Gr[c] = sum_T (-1)^|T| Q[c - 1 + e_T]``."""
    out = {}
    for S, q in quotients.items():
        k = len(S)
        g = {}
        for c in product(range(1 - n, 1), repeat=k):
            total = ring.zero()
            for T in product((0, 1), repeat=k):
                a = tuple(ci - 1 + ti for ci, ti in zip(c, T))
                if any(ai == 0 for ai in a):
                    continue
                term = q[a]
                total = total - term if sum(T) % 2 else total + term
            g[c] = total
        out[S] = g
    return out


def with_gradeds(f: FiltrationData) -> FiltrationData:
    if f.gradeds is not None:
        return f
    return FiltrationData(f.ring, f.n, f.chE, f.quotients, gradeds_from_quotients(f.ring, f.n, f.quotients))


def split_to_filtration(b: SplitBundle, ring: RingPresentation, n: int) -> FiltrationData:
    """Filtration data of a split bundle.

    A piece ``O(gamma . D)`` is written ``O(floor(gamma) . D) (x) O(frac . D)``; on
    ``D_i`` its filtration jumps at level ``-n*frac_i``, so it survives in
    ``Q^S_[a_S]`` exactly when ``a_i < -n*frac_i`` for every ``i`` in ``S`` and
    sits in the graded piece at ``c_i = -n*frac_i``.
    """
    _check_denominators(b, ring, n)
    m = ring.m
    check_cell_budget(n, m)
    pieces = []
    chE = ring.zero()
    for r, gamma in b.pieces:
        fl = [floor(g) for g in gamma]
        levels = tuple(-int((g - f) * n) for g, f in zip(gamma, fl))
        base = integer_twist(ring, fl).scale(r)
        chE = chE + base
        pieces.append((levels, base))
    quotients, gradeds = {}, {}
    for S in nonempty_subsets(m):
        koszul = ring.one()
        for i in S:
            koszul = koszul * (1 - exp(-ring.divisor(i)))
        pushed = [(lv, base * koszul) for lv, base in pieces]
        qS = {}
        for a in product(range(-n, 0), repeat=len(S)):
            total = ring.zero()
            for lv, cls in pushed:
                if all(ai < lv[i] for ai, i in zip(a, S)):
                    total = total + cls
            qS[a] = total
        gS = {c: ring.zero() for c in product(range(1 - n, 1), repeat=len(S))}
        for lv, cls in pushed:
            c = tuple(lv[i] for i in S)
            gS[c] = gS[c] + cls
        quotients[S] = qS
        gradeds[S] = gS
    return FiltrationData(ring, n, chE, quotients, gradeds)


def table_to_filtration(t: ComponentTable) -> FiltrationData:
    """Recover multi-quotient data from a table by inclusion-exclusion.

    With ``f(T)`` the Chern character of ``F_[a]`` where ``a_i`` is kept for
    ``i in T`` and set to 0 elsewhere, ``ch Q^S_[a_S] = sum_{T <= S} (-1)^|T| f(T)``.
    Raises :class:`ValidationError` if the table is not realizable by filtrations
    (a quotient with nonzero parts below its codimension).
    """
    ring, n, m = t.ring, t.n, t.m
    chE = component_ch(t, (0,) * m)
    quotients = {}
    for S in nonempty_subsets(m):
        qS = {}
        for a in product(range(-n, 0), repeat=len(S)):
            total = ring.zero()
            for mask in product((0, 1), repeat=len(S)):
                idx = [0] * m
                for keep, i, ai in zip(mask, S, a):
                    if keep:
                        idx[i] = ai
                term = component_ch(t, idx)
                total = total - term if sum(mask) % 2 else total + term
            qS[a] = total
        quotients[S] = qS
    return FiltrationData(ring, n, chE, quotients)


def filtration_from_ranks(
    ring: RingPresentation,
    n: int,
    chE: GradedClass,
    quotient_ranks: Mapping[tuple[int, ...], Mapping[MultiIndex, Rational]],
) -> FiltrationData:
    """Payload whose quotients have constant Chern character (rank only) on ``D_S``.

    Missing entries are rank 0.
    """
    quotients = {}
    for S in nonempty_subsets(ring.m):
        ranks = quotient_ranks.get(S, {})
        quotients[S] = {
            a: structure_sheaf_class(ranks.get(a, 0), S, ring)
            for a in product(range(-n, 0), repeat=len(S))
        }
    return FiltrationData(ring, n, chE, quotients)
