"""Blow-ups of a surface at crossing points and pushforward of Chern data.

Upstairs the degree-1 basis is the pullback of the base degree-1 basis (same
labels) followed by the exceptional curves ``E1..Er``; the top degree is the
base one.  Intersections: ``pi*a . pi*b = a.b``, ``E_j . pi*a = 0``,
``E_j . E_k = -delta_jk pt``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .chernformulas import gysin_ch
from .chowring import GradedClass, RingPresentation
from .errors import PreconditionError, RingMismatchError, ValidationError
from .parabolic import FiltrationData


@dataclass(frozen=True, eq=False)
class BlowupRing:
    base: RingPresentation
    incidence: tuple[frozenset[int], ...]
    ring: RingPresentation
    exceptional_labels: tuple[str, ...]

    @property
    def centers(self) -> int:
        return len(self.incidence)

    def exceptional(self, j: int) -> GradedClass:
        return self.ring.basis_element(self.exceptional_labels[j])


def blowup_surface(base: RingPresentation, incidence: Sequence[Sequence[int]]) -> BlowupRing:
    """Blow up ``base`` at points ``P_j``, where ``incidence[j]`` lists the (0-based)
    divisors through ``P_j``.  Upstairs divisors are the strict transforms
    ``D_i' = pi*D_i - sum_{j : i in I_j} E_j`` followed by ``E_1..E_r``.
    """
    if base.dim != 2:
        raise PreconditionError(f"blow-ups are supported on surfaces only (ring has d = {base.dim})")
    pt = base.point
    if pt is None:
        raise PreconditionError("base ring needs a designated point class")
    if len(base.bases[2]) != 1:
        raise PreconditionError("base ring must have a one-dimensional degree-2 part")
    top = base.bases[2][0]
    pt_coeff = pt.degree_part(2)[0]
    if not pt_coeff:
        raise PreconditionError("designated point class is zero")
    inc = []
    for j, s in enumerate(incidence):
        s = frozenset(int(i) for i in s)
        if len(s) < 2:
            raise PreconditionError(
                f"center {j + 1} must lie on at least two divisors (got {sorted(i + 1 for i in s)})"
            )
        if any(i < 0 or i >= base.m for i in s):
            raise PreconditionError(f"center {j + 1} refers to an unknown divisor")
        inc.append(s)

    taken = set(base.labels)
    ex_labels = []
    for j in range(len(inc)):
        lab = f"E{j + 1}"
        while lab in taken:
            lab = "x" + lab
        taken.add(lab)
        ex_labels.append(lab)

    deg1 = list(base.bases[1]) + ex_labels
    products = {
        key: val for key, val in base.products().items() if key[0] in base.bases[1] and key[1] in base.bases[1]
    }
    for a in ex_labels:
        for b in base.bases[1]:
            products[(a, b)] = {}
        for b in ex_labels:
            products[(a, b)] = {top: -pt_coeff} if a == b else {}

    divisors = []
    for i, D in enumerate(base.divisors):
        mapping = {lab: c for lab, c in zip(base.bases[1], D.degree_part(1)) if c}
        for j, s in enumerate(inc):
            if i in s:
                mapping[ex_labels[j]] = mapping.get(ex_labels[j], 0) - 1
        divisors.append(mapping)
    divisors.extend({lab: 1} for lab in ex_labels)
    point = {top: pt_coeff}
    ring = RingPresentation(
        f"Bl({base.name})", [list(base.bases[0]), deg1, [top]], products, divisors, point
    )
    return BlowupRing(base, tuple(inc), ring, tuple(ex_labels))


def pullback_class(bl: BlowupRing, x: GradedClass) -> GradedClass:
    if x.ring is not bl.base:
        raise RingMismatchError("pullback_class expects a class on the base ring")
    return bl.ring.element(x.as_mapping())


def pushforward_class(bl: BlowupRing, y: GradedClass) -> GradedClass:
    """Drop the exceptional coefficients; degrees 0 and 2 are unchanged."""
    if y.ring is not bl.ring:
        raise RingMismatchError("pushforward_class expects a class on the blown-up ring")
    ex = set(bl.exceptional_labels)
    return bl.base.element({lab: c for lab, c in y.as_mapping().items() if lab not in ex})


def exceptionally_constant_ch(bl: BlowupRing, chH: GradedClass, f: FiltrationData) -> GradedClass:
    """``pi_* ch`` of the parabolic structure upstairs described by ``f``."""
    if f.ring is not bl.ring:
        raise RingMismatchError("filtration payload must live on the blown-up ring")
    if f.chE != pullback_class(bl, chH):
        raise PreconditionError("ch(E) upstairs is not the pullback of ch(H)")
    return pushforward_class(bl, gysin_ch(f))


def base_class_of(bl: BlowupRing, y: GradedClass) -> GradedClass:
    """The base class whose pullback is ``y``; error if ``y`` involves exceptional curves."""
    x = pushforward_class(bl, y)
    if pullback_class(bl, x) != y:
        raise PreconditionError("class is not pulled back from the base")
    return x
