"""Formulas for the Chern character of a parabolic bundle.

Every function here returns an exact :class:`~parchern.chowring.GradedClass`,
and all of them agree on locally abelian input:

``weighted_average_ch``
    weighted average of the component Chern characters over ``[0, n)^m``
    with weights ``exp(-sum_i (a_i/n) D_i)``.
``shifted_window_ch``
    the same numerator taken over a shifted window ``b + [0, n)^m``.
``gysin_ch`` / ``graded_gysin_ch``
    ``e^D ch(E)`` plus a correction built from the multi-quotients (resp.
    multi-graded pieces) on the divisor intersections.
``single_divisor_closed_form``
    one divisor, brackets ``(e^D - e^{-alpha D}) / (1 - e^{-D})`` expanded as
    formal series.
``integral_ch``
    sums replaced by integrals over ``[0, 1]^m`` of piecewise-constant data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from gmpy2 import mpq as Q
from itertools import product
from typing import Mapping, Sequence

from .chowring import GradedClass, RingPresentation, Rational, as_rational, eval_series, exp, invert
from .errors import PreconditionError, RingMismatchError, ValidationError
from .parabolic import (
    ComponentTable,
    FiltrationData,
    MultiIndex,
    check_cell_budget,
    component_ch,
    nonempty_subsets,
    window,
    with_gradeds,
)


# -- weights -----------------------------------------------------------------


def _axis_weights(ring: RingPresentation, n: int, start: int, stop: int, i: int):
    """``{a: exp(-(a/n) D_i)}`` for ``start <= a < stop``."""
    D = ring.divisor(i)
    return {a: exp(D.scale(Q(-a, n))) for a in range(start, stop)}


def _weight(axis_weights, a: Sequence[int], ring: RingPresentation) -> GradedClass:
    w = None
    for i, ai in enumerate(a):
        f = axis_weights[i][ai]
        w = f if w is None else w * f
    return ring.one() if w is None else w


def _window_weights(ring: RingPresentation, n: int, start: Sequence[int]):
    axes = [_axis_weights(ring, n, s, s + n, i) for i, s in enumerate(start)]
    return axes, {a: _weight(axes, a, ring) for a in window(n, ring.m, start)}


def weight_denominator(ring: RingPresentation, n: int) -> GradedClass:
    """``sum_{a in [0,n)^m} exp(-sum_i (a_i/n) D_i)``; degree-0 part ``n^m``."""
    total = ring.one()
    for i in range(ring.m):
        total = total * sum(_axis_weights(ring, n, 0, n, i).values(), ring.zero())
    return total


# -- main formula --------------------------------------------------------------


def weighted_average_ch(t: ComponentTable) -> GradedClass:
    ring, n = t.ring, t.n
    _, weights = _window_weights(ring, n, (0,) * t.m)
    num = ring.zero()
    den = ring.zero()
    for a, w in weights.items():
        num = num + w * t.cells[a]
        den = den + w
    return num * invert(den)


def shifted_window_ch(t: ComponentTable, b: Sequence[int]) -> GradedClass:
    """Numerator over ``prod_i [b_i, b_i + n)``, denominator over ``[0, n)^m``."""
    if len(b) != t.m:
        raise PreconditionError(f"shift has length {len(b)}, expected {t.m}")
    ring, n = t.ring, t.n
    _, weights = _window_weights(ring, n, b)
    num = ring.zero()
    for a, w in weights.items():
        num = num + w * component_ch(t, a)
    return num * invert(weight_denominator(ring, n))


def deligne_ch(t: ComponentTable) -> GradedClass:
    """Weighted average read in a presentation of rational Deligne cohomology.

    The computation is that of :func:`weighted_average_ch`; the ring is whatever
    presentation the table lives on.
    """
    return weighted_average_ch(t)


# -- filtration formulas -------------------------------------------------------


def filtration_to_table(f: FiltrationData) -> ComponentTable:
    """Component table from the Koszul resolution of each ``F_[a]``.

    ``ch F_[a] = ch E + sum_{S nonempty} (-1)^|S| ch Q^S_[a_S]`` for
    ``a in [-n, -1]^m``, moved to the window ``[0, n)^m`` by twisting with
    ``e^D``.
    """
    ring, n, m = f.ring, f.n, f.m
    check_cell_budget(n, m)
    subsets = nonempty_subsets(m)
    eD = exp(sum(ring.divisors, ring.zero()))
    cells = {}
    for r in window(n, m):
        a = tuple(ri - n for ri in r)
        total = f.chE
        for S in subsets:
            q = f.quotients[S][tuple(a[i] for i in S)]
            total = total - q if len(S) % 2 else total + q
        cells[r] = total * eD
    return ComponentTable(ring, n, cells)


def _koszul_correction(f: FiltrationData, quotients) -> GradedClass:
    """``sum_{a in [-n,-1]^m} w(a) sum_S (-1)^|S| Q^S_[a_S]``.

    The sum over coordinates outside ``S`` only touches the weight, so it is
    carried out as the product of the one-variable weight sums.
    """
    ring, n, m = f.ring, f.n, f.m
    axes = [_axis_weights(ring, n, -n, 0, i) for i in range(m)]
    axis_totals = [sum(ax.values(), ring.zero()) for ax in axes]
    total = ring.zero()
    for S in nonempty_subsets(m):
        inner = ring.zero()
        for aS, q in quotients[S].items():
            if q.is_zero():
                continue
            w = axes[S[0]][aS[0]]
            for i, ai in zip(S[1:], aS[1:]):
                w = w * axes[i][ai]
            inner = inner + w * q
        for i in range(m):
            if i not in S:
                inner = inner * axis_totals[i]
        total = total - inner if len(S) % 2 else total + inner
    return total


def gysin_ch(f: FiltrationData) -> GradedClass:
    ring = f.ring
    eD = exp(sum(ring.divisors, ring.zero()))
    corr = _koszul_correction(f, f.quotients)
    return eD * f.chE + corr * invert(weight_denominator(ring, f.n))


def graded_gysin_ch(f: FiltrationData) -> GradedClass:
    """Same as :func:`gysin_ch` with each quotient replaced by the sum of its graded pieces.

    The inner sum ``sum_{a_i < c_i <= 0} Gr^S_[c]`` runs over ``c`` in ``[1-n, 0]^S``.
    """
    ring, n = f.ring, f.n
    g = with_gradeds(f).gradeds
    summed = {}
    for S, gS in g.items():
        summed[S] = _orthant_sums(ring, n, gS, len(S))
    eD = exp(sum(ring.divisors, ring.zero()))
    corr = _koszul_correction(f, summed)
    return eD * f.chE + corr * invert(weight_denominator(ring, n))


def _orthant_sums(ring, n, gS, k):
    """``{a: sum_{c > a, c <= 0} gS[c]}`` for ``a in [-n, -1]^k``."""
    acc = dict(gS)
    for axis in range(k):
        for c in sorted(acc, key=lambda c: -c[axis]):
            nxt = c[:axis] + (c[axis] + 1,) + c[axis + 1:]
            if nxt in acc:
                acc[c] = acc[c] + acc[nxt]
    return {a: acc[tuple(x + 1 for x in a)] for a in product(range(-n, 0), repeat=k)}


# -- single divisor --------------------------------------------------------------


def exp_series(c: Rational, d: int) -> list[Q]:
    """Taylor coefficients of ``exp(c t)`` up to ``t^d``."""
    c = as_rational(c)
    return [c**k / math.factorial(k) for k in range(d + 1)]


def _order(series: Sequence[Q]) -> int | None:
    for k, c in enumerate(series):
        if c:
            return k
    return None


def series_quotient(num: Sequence[Rational], den: Sequence[Rational], d: int) -> list[Q]:
    """Coefficients ``q_0..q_d`` of ``num/den`` after cancelling the common power of ``t``.

    ``den`` must not vanish to higher order than ``num``; both are padded with
    zeros, so callers must supply ``d + ord(den) + 1`` terms for an exact result.
    """
    num = [as_rational(c) for c in num]
    den = [as_rational(c) for c in den]
    vd = _order(den)
    if vd is None:
        raise PreconditionError("series_quotient: denominator is identically zero")
    vn = _order(num)
    if vn is None:
        return [Q(0)] * (d + 1)
    if vn < vd:
        raise PreconditionError(
            f"series_quotient: numerator vanishes to order {vn} < denominator order {vd}"
        )
    a = num[vd:] + [Q(0)] * (d + 1)
    b = den[vd:] + [Q(0)] * (d + 1)
    q = []
    for k in range(d + 1):
        acc = a[k] - sum(b[j] * q[k - j] for j in range(1, k + 1))
        q.append(acc / b[0])
    return q


def bracket_series(alpha: Rational, d: int) -> list[Q]:
    """Series of ``(e^t - e^{-alpha t}) / (1 - e^{-t})`` to order ``d``."""
    alpha = as_rational(alpha)
    e_t = exp_series(1, d + 1)
    e_alpha = exp_series(-alpha, d + 1)
    num = [x - y for x, y in zip(e_t, e_alpha)]
    den = [-c for c in exp_series(-1, d + 1)]
    den[0] += 1
    return series_quotient(num, den, d)


@dataclass(frozen=True)
class GrPieceList:
    """Graded pieces ``(alpha, ch Gr_alpha)`` with ``alpha`` in ``(-1, 0]``, pushed to X."""

    pieces: tuple[tuple[Q, GradedClass], ...]

    def __init__(self, pieces):
        norm = [(as_rational(a), c) for a, c in pieces]
        alphas = [a for a, _ in norm]
        if len(set(alphas)) != len(alphas):
            raise ValidationError("graded pieces must have distinct alpha values")
        for a in alphas:
            if not (-1 < a <= 0):
                raise PreconditionError(f"alpha = {a} outside (-1, 0]")
        object.__setattr__(self, "pieces", tuple(norm))


def single_divisor_closed_form(chE: GradedClass, gr: GrPieceList, D: GradedClass) -> GradedClass:
    """``e^D ch(E) - sum_alpha [(e^D - e^{-alpha D}) / (1 - e^{-D})] ch(Gr_alpha)``."""
    if not isinstance(gr, GrPieceList):
        gr = GrPieceList(gr)
    ring = chE.ring
    if D.ring is not ring:
        raise RingMismatchError("divisor and ch(E) live on different rings")
    total = exp(D) * chE
    for alpha, cls in gr.pieces:
        if cls.ring is not ring:
            raise RingMismatchError("graded piece lives on another ring")
        total = total - eval_series(bracket_series(alpha, ring.dim), D) * cls
    return total


def filtration_gr_pieces(f: FiltrationData) -> GrPieceList:
    """Single-divisor graded pieces ``Gr_{c/n}`` read off a filtration payload."""
    if f.m != 1:
        raise PreconditionError(f"closed form needs exactly one divisor, got m = {f.m}")
    g = with_gradeds(f).gradeds[(0,)]
    return GrPieceList(
        (Q(c[0], f.n), cls) for c, cls in sorted(g.items()) if not cls.is_zero()
    )


# -- real-weight style data ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpData:
    """Piecewise-constant ``alpha -> ch(F_alpha)`` on ``[0, 1)^m``.

    ``breakpoints[i]`` starts at 0 and is strictly increasing in ``[0, 1)``;
    ``cells[(j_1..j_m)]`` is the value on the box
    ``prod_i [w_i^{j_i}, w_i^{j_i + 1})`` (the last interval closes at 1).
    """

    ring: RingPresentation
    breakpoints: tuple[tuple[Q, ...], ...]
    cells: Mapping[MultiIndex, GradedClass] = field(repr=False)

    def __post_init__(self):
        bps = tuple(tuple(as_rational(w) for w in row) for row in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if len(bps) != self.ring.m:
            raise ValidationError(f"need breakpoints for {self.ring.m} divisors, got {len(bps)}")
        for i, row in enumerate(bps):
            if not row or row[0] != 0:
                raise ValidationError(f"breakpoints of divisor {i + 1} must start at 0")
            if any(b <= a for a, b in zip(row, row[1:])) or row[-1] >= 1:
                raise ValidationError(f"breakpoints of divisor {i + 1} must increase strictly inside [0, 1)")
        expected = set(product(*(range(len(row)) for row in bps)))
        if set(self.cells) != expected:
            raise ValidationError("jump data cells must cover every box of the breakpoint grid")
        for cls in self.cells.values():
            if cls.ring is not self.ring:
                raise RingMismatchError("jump data cell lives on another ring")
        object.__setattr__(self, "cells", dict(self.cells))

    def intervals(self, i: int) -> list[tuple[Q, Q]]:
        row = self.breakpoints[i]
        return list(zip(row, row[1:] + (Q(1),)))


def box_integral(u: Rational, v: Rational, D: GradedClass) -> GradedClass:
    """``int_u^v exp(-alpha D) d alpha = sum_k (-D)^k (v^{k+1} - u^{k+1}) / (k+1)!``."""
    u, v = as_rational(u), as_rational(v)
    d = D.ring.dim
    coeffs = [(-1) ** k * (v ** (k + 1) - u ** (k + 1)) / math.factorial(k + 1) for k in range(d + 1)]
    return eval_series(coeffs, D)


def integral_ch(j: JumpData) -> GradedClass:
    ring = j.ring
    boxes = [
        [box_integral(u, v, ring.divisor(i)) for u, v in j.intervals(i)] for i in range(ring.m)
    ]
    num = ring.zero()
    den = ring.zero()
    for idx, value in j.cells.items():
        w = ring.one()
        for i, ji in enumerate(idx):
            w = w * boxes[i][ji]
        num = num + w * value
        den = den + w
    return num * invert(den)


def table_to_jumps(t: ComponentTable) -> JumpData:
    """Jump data constant on the grid boxes ``[a/n, (a+1)/n)``."""
    grid = tuple(tuple(Q(k, t.n) for k in range(t.n)) for _ in range(t.m))
    return JumpData(t.ring, grid, t.cells)


def perturb_to_grid(j: JumpData, n: int) -> ComponentTable:
    """Snap every breakpoint up to ``ceil(n w)/n`` and read the result on the grid.

    The grid must be fine enough that no breakpoint reaches the next one (or 1).
    """
    if n < 1:
        raise PreconditionError("grid denominator must be positive")
    m = j.ring.m
    check_cell_budget(n, m)
    snapped = []
    for i, row in enumerate(j.breakpoints):
        new = [Q(math.ceil(w * n), n) for w in row]
        bounds = list(row[1:]) + [Q(1)]
        for w, s, nxt in zip(row, new, bounds):
            if s >= nxt:
                raise PreconditionError(
                    f"grid 1/{n} too coarse: breakpoint {w} on divisor {i + 1} snaps to {s}, "
                    f"reaching the next jump at {nxt}"
                )
        snapped.append(new)
    cells = {}
    for a in window(n, m):
        idx = []
        for i, ai in enumerate(a):
            x = Q(ai, n)
            idx.append(max(k for k, s in enumerate(snapped[i]) if s <= x))
        cells[a] = j.cells[tuple(idx)]
    return ComponentTable(j.ring, n, cells)


def common_denominator(j: JumpData) -> int:
    return math.lcm(*(w.denominator for row in j.breakpoints for w in row)) if j.breakpoints else 1


# -- Chern classes -------------------------------------------------------------


def chern_classes(ch: GradedClass) -> list[GradedClass]:
    """``c_1..c_d`` from a Chern character by Newton's identities.

    With power sums ``p_k = k! ch_k``: ``k c_k = sum_{i=1}^k (-1)^{i-1} c_{k-i} p_i``.
    """
    r = ch.rank
    if r.denominator != 1 or r < 0:
        raise PreconditionError(f"Chern classes need a nonnegative integer rank, got {r}")
    ring = ch.ring
    p = [None] + [ch.homogeneous(k).scale(math.factorial(k)) for k in range(1, ring.dim + 1)]
    c = [ring.one()]
    for k in range(1, ring.dim + 1):
        acc = ring.zero()
        for i in range(1, k + 1):
            term = c[k - i] * p[i]
            acc = acc + term if i % 2 else acc - term
        c.append(acc.scale(Q(1, k)))
    return c[1:]


def higher_classes_vanish(ch: GradedClass, start: int = 2) -> bool:
    """True when ``c_p = 0`` for every ``p >= start``."""
    return all(cls.is_zero() for cls in chern_classes(ch)[start - 1:])


def total_chern_class(ch: GradedClass) -> GradedClass:
    return sum(chern_classes(ch), ch.ring.one())
