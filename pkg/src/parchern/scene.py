"""JSON scene files: a ring presentation, bundles on it, residue operators.

Rationals are written as strings ``"p/q"`` (plain JSON integers are accepted,
floats are not).  Divisor indices and divisor sets are 1-based in the file.
A class is either canonical text (``"deg 0: 2; deg 1: 1*H"``) or a mapping
``{label: rational}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import chernformulas as cf
from .blowup import BlowupRing, base_class_of, blowup_surface, exceptionally_constant_ch
from .chowring import (
    GradedClass,
    RingPresentation,
    as_rational,
    parse_class,
    product_projective_ring,
    projective_space_ring,
    surface_ring,
)
from .errors import ParchernError, PreconditionError, ValidationError
from .parabolic import (
    ComponentTable,
    FiltrationData,
    SplitBundle,
    split_to_filtration,
    split_to_table,
    table_to_filtration,
    with_gradeds,
)
from .residues import NilpotentOperator

FORMAT_VERSION = 1
METHODS = ("average", "window", "gysin", "graded", "closed", "integral", "deligne", "direct")


class SceneError(ParchernError):
    """Malformed scene file; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnknownNameError(ParchernError, KeyError):
    def __str__(self):
        return str(self.args[0])


def _rational(value: Any, path: str) -> Fraction:
    if isinstance(value, float):
        raise SceneError(path, f"floating-point value {value!r}; write rationals as \"p/q\" strings")
    try:
        return as_rational(value)
    except (TypeError, ValueError) as exc:
        raise SceneError(path, str(exc)) from None


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SceneError(path, f"expected an integer, got {value!r}")
    return value


def _get(obj: dict, key: str, path: str, default=...):
    if not isinstance(obj, dict):
        raise SceneError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise SceneError(f"{path}.{key}", "missing field")
        return default
    return obj[key]


def _index_key(text: str, path: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise SceneError(path, f"bad index key {text!r}; expected comma-joined integers") from None


def parse_class_value(ring: RingPresentation, value: Any, path: str) -> GradedClass:
    if isinstance(value, str):
        try:
            return parse_class(ring, value)
        except ValueError as exc:
            raise SceneError(path, str(exc)) from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ring.scalar(_rational(value, path))
    if isinstance(value, dict):
        mapping = {}
        for lab, c in value.items():
            if lab not in ring.index:
                raise SceneError(f"{path}.{lab}", f"unknown basis label {lab!r}")
            mapping[lab] = _rational(c, f"{path}.{lab}")
        return ring.element(mapping)
    raise SceneError(path, "expected a class (canonical text or {label: rational})")


def _bundle_class(ring, value, path) -> GradedClass:
    cls = parse_class_value(ring, value, path)
    r = cls.rank
    if r < 0 or r.denominator != 1:
        raise ValidationError(f"{path}: a bundle Chern character needs a nonnegative integer rank, got {r}")
    return cls


# -- rings -----------------------------------------------------------------------


def _divisor_specs(value, path):
    if not isinstance(value, list):
        raise SceneError(path, "expected a list of divisors")
    out = []
    for k, d in enumerate(value):
        p = f"{path}[{k}]"
        if isinstance(d, str):
            out.append({d: 1})
        elif isinstance(d, dict):
            out.append({lab: _rational(c, f"{p}.{lab}") for lab, c in d.items()})
        else:
            raise SceneError(p, "divisor must be a label or {label: rational}")
    return out


def parse_ring(spec: dict, path: str = "ring") -> RingPresentation:
    kind = _get(spec, "type", path)
    if kind == "projective_space":
        dim = _int(_get(spec, "dim", path), f"{path}.dim")
        divisors = spec.get("divisors")
        divs = None if divisors is None else _divisor_specs(divisors, f"{path}.divisors")
        return projective_space_ring(dim, divs, name=spec.get("name"))
    if kind == "surface":
        mat = _get(spec, "intersections", path)
        if not isinstance(mat, list) or not all(isinstance(r, list) for r in mat):
            raise SceneError(f"{path}.intersections", "expected a square matrix")
        rows = [[_rational(v, f"{path}.intersections[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(mat)]
        m = _int(spec.get("m", len(rows)), f"{path}.m")
        try:
            return surface_ring(m, rows, name=spec.get("name", "surface"))
        except PreconditionError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    if kind == "product_projective":
        dims = _get(spec, "dims", path)
        return product_projective_ring([_int(x, f"{path}.dims") for x in dims], name=spec.get("name"))
    if kind == "explicit":
        bases = _get(spec, "bases", path)
        if not isinstance(bases, list) or not all(isinstance(b, list) for b in bases):
            raise SceneError(f"{path}.bases", "expected a list of label lists, one per degree")
        table = _get(spec, "mult_table", path, {})
        products = {}
        for key, value in table.items():
            p = f"{path}.mult_table.{key}"
            if key.count("*") != 1:
                raise SceneError(p, "product keys look like \"a*b\"")
            a, b = key.split("*")
            if not isinstance(value, dict):
                raise SceneError(p, "product value must be {label: rational}")
            products[(a, b)] = {lab: _rational(c, f"{p}.{lab}") for lab, c in value.items()}
        divisors = _divisor_specs(spec.get("divisors", []), f"{path}.divisors")
        point = spec.get("point")
        if point is not None:
            if isinstance(point, str):
                point = {point: 1}
            point = {lab: _rational(c, f"{path}.point.{lab}") for lab, c in point.items()}
        validate = spec.get("validate", True)
        return RingPresentation(
            spec.get("name", "explicit"), bases, products, divisors, point, validate=bool(validate)
        )
    raise SceneError(f"{path}.type", f"unknown ring type {kind!r}")


# -- bundles -----------------------------------------------------------------------


@dataclass
class Bundle:
    """A bundle as declared in a scene, convertible between representations."""

    name: str
    kind: str
    ring: RingPresentation
    n: int | None
    payload: Any
    on_blowup: bool = False
    chH: GradedClass | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def table(self) -> ComponentTable:
        def build():
            if self.kind == "split":
                return split_to_table(self.payload, self.ring, self.n)
            if self.kind == "table":
                return self.payload
            if self.kind == "filtration":
                return cf.filtration_to_table(self.payload)
            return cf.perturb_to_grid(self.payload, cf.common_denominator(self.payload))

        return self._cached("table", build)

    def filtration(self) -> FiltrationData:
        def build():
            if self.kind == "split":
                return split_to_filtration(self.payload, self.ring, self.n)
            if self.kind == "filtration":
                return self.payload
            return table_to_filtration(self.table())

        return self._cached("filtration", build)

    def jumps(self) -> cf.JumpData:
        if self.kind == "jumps":
            return self.payload
        return self._cached("jumps", lambda: cf.table_to_jumps(self.table()))

    def ch(self, method: str, shift=None) -> GradedClass:
        if method == "average":
            return cf.weighted_average_ch(self.table())
        if method == "deligne":
            return cf.deligne_ch(self.table())
        if method == "window":
            t = self.table()
            b = shift if shift is not None else [-t.n] * t.m
            return cf.shifted_window_ch(t, b)
        if method == "gysin":
            return cf.gysin_ch(self.filtration())
        if method == "graded":
            return cf.graded_gysin_ch(with_gradeds(self.filtration()))
        if method == "closed":
            f = self.filtration()
            if f.m != 1:
                raise PreconditionError(f"method 'closed' needs one divisor, bundle {self.name!r} has {f.m}")
            return cf.single_divisor_closed_form(f.chE, cf.filtration_gr_pieces(f), self.ring.divisor(0))
        if method == "integral":
            return cf.integral_ch(self.jumps())
        if method == "direct":
            if self.kind != "split":
                raise PreconditionError("method 'direct' is only defined for split bundles")
            return self.payload.direct_ch(self.ring)
        raise UnknownNameError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _parse_split(spec, ring, path):
    pieces_spec = _get(spec, "pieces", path)
    if not isinstance(pieces_spec, list) or not pieces_spec:
        raise SceneError(f"{path}.pieces", "expected a nonempty list")
    pieces = []
    for k, pc in enumerate(pieces_spec):
        p = f"{path}.pieces[{k}]"
        rank = _int(_get(pc, "rank", p, 1), f"{p}.rank")
        weights = _get(pc, "weights", p)
        if not isinstance(weights, list):
            raise SceneError(f"{p}.weights", "expected a list")
        if len(weights) != ring.m:
            raise ValidationError(f"{p}.weights: expected {ring.m} weights, got {len(weights)}")
        pieces.append((rank, [_rational(w, f"{p}.weights[{i}]") for i, w in enumerate(weights)]))
    b = SplitBundle(pieces)
    n = spec.get("n")
    if n is None:
        n = math.lcm(*(g.denominator for _, gamma in b.pieces for g in gamma)) if ring.m else 1
    n = _int(n, f"{path}.n")
    for _, gamma in b.pieces:
        for g in gamma:
            if n % g.denominator:
                raise ValidationError(f"{path}: weight {g} has denominator not dividing n = {n}")
    return b, n


def _parse_payload(value, ring, n, path, low):
    out = {}
    if not isinstance(value, dict):
        raise SceneError(path, "expected {divisor set: {levels: class}}")
    for skey, entries in value.items():
        S = tuple(i - 1 for i in _index_key(skey, f"{path}.{skey}"))
        if list(S) != sorted(set(S)) or any(i < 0 or i >= ring.m for i in S):
            raise ValidationError(f"{path}.{skey}: divisor sets must be increasing 1-based indices <= {ring.m}")
        if not isinstance(entries, dict):
            raise SceneError(f"{path}.{skey}", "expected {levels: class}")
        out[S] = {}
        for akey, cls in entries.items():
            a = _index_key(akey, f"{path}.{skey}.{akey}")
            if len(a) != len(S):
                raise ValidationError(f"{path}.{skey}.{akey}: expected {len(S)} levels")
            out[S][a] = parse_class_value(ring, cls, f"{path}.{skey}.{akey}")
    return out


def parse_bundle(name: str, spec: dict, ring: RingPresentation, path: str, chH_ring=None) -> Bundle:
    kind = _get(spec, "type", path)
    if kind == "split":
        b, n = _parse_split(spec, ring, path)
        return Bundle(name, kind, ring, n, b)
    if kind == "table":
        n = _int(_get(spec, "n", path), f"{path}.n")
        cells_spec = _get(spec, "cells", path)
        if not isinstance(cells_spec, dict):
            raise SceneError(f"{path}.cells", "expected {\"i,j,...\": class}")
        cells = {}
        for key, value in cells_spec.items():
            a = _index_key(key, f"{path}.cells.{key}") if key else ()
            cells[a] = _bundle_class(ring, value, f"{path}.cells.{key}")
        return Bundle(name, kind, ring, n, ComponentTable(ring, n, cells))
    if kind == "filtration":
        n = _int(_get(spec, "n", path), f"{path}.n")
        chE = _bundle_class(ring, _get(spec, "chE", path), f"{path}.chE")
        quot = spec.get("quotients")
        grad = spec.get("gradeds")
        if quot is None and grad is None:
            raise SceneError(path, "filtration needs 'quotients' or 'gradeds'")
        q = None if quot is None else _parse_payload(quot, ring, n, f"{path}.quotients", -n)
        g = None if grad is None else _parse_payload(grad, ring, n, f"{path}.gradeds", 1 - n)
        chH = None
        if "chH" in spec:
            if chH_ring is None:
                raise SceneError(f"{path}.chH", "chH only makes sense for bundles on the blow-up")
            chH = _bundle_class(chH_ring, spec["chH"], f"{path}.chH")
        return Bundle(name, kind, ring, n, FiltrationData(ring, n, chE, q, g), chH=chH)
    if kind == "jumps":
        bps = _get(spec, "breakpoints", path)
        if not isinstance(bps, list):
            raise SceneError(f"{path}.breakpoints", "expected one list per divisor")
        rows = [[_rational(w, f"{path}.breakpoints[{i}][{k}]") for k, w in enumerate(r)] for i, r in enumerate(bps)]
        cells_spec = _get(spec, "cells", path)
        cells = {}
        for key, value in cells_spec.items():
            a = _index_key(key, f"{path}.cells.{key}") if key else ()
            cells[a] = _bundle_class(ring, value, f"{path}.cells.{key}")
        return Bundle(name, kind, ring, None, cf.JumpData(ring, rows, cells))
    raise SceneError(f"{path}.type", f"unknown bundle type {kind!r}")


# -- scene ---------------------------------------------------------------------------


@dataclass
class Scene:
    ring: RingPresentation
    bundles: dict[str, Bundle]
    operators: dict[str, NilpotentOperator]
    blowup: BlowupRing | None = None

    def bundle(self, name: str) -> Bundle:
        if name not in self.bundles:
            raise UnknownNameError(f"unknown bundle {name!r}; scene defines {sorted(self.bundles)}")
        return self.bundles[name]

    def operator(self, name: str) -> NilpotentOperator:
        if name not in self.operators:
            raise UnknownNameError(f"unknown operator {name!r}; scene defines {sorted(self.operators)}")
        return self.operators[name]

    def blowup_ch(self, name: str) -> GradedClass:
        bundle = self.bundle(name)
        if self.blowup is None:
            raise PreconditionError("scene has no 'blowup' stanza")
        if not bundle.on_blowup:
            raise PreconditionError(f"bundle {name!r} is not declared on the blow-up (set \"on\": \"blowup\")")
        f = bundle.filtration()
        chH = bundle.chH if bundle.chH is not None else base_class_of(self.blowup, f.chE)
        return exceptionally_constant_ch(self.blowup, chH, f)


def load_scene(source: str | dict) -> Scene:
    """Parse a scene from JSON text or an already-decoded dict."""
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SceneError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    else:
        data = source
    if not isinstance(data, dict):
        raise SceneError("<root>", "scene must be a JSON object")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise SceneError("format_version", f"unsupported version {version!r}")
    ring = parse_ring(_get(data, "ring", "<root>"))

    blowup = None
    if "blowup" in data:
        centers = _get(data["blowup"], "centers", "blowup")
        inc = []
        for j, c in enumerate(centers):
            if not isinstance(c, list):
                raise SceneError(f"blowup.centers[{j}]", "expected a list of 1-based divisor indices")
            inc.append([_int(i, f"blowup.centers[{j}]") - 1 for i in c])
        blowup = blowup_surface(ring, inc)

    bundles = {}
    for name, spec in _get(data, "bundles", "<root>", {}).items():
        path = f"bundles.{name}"
        on = spec.get("on", "base") if isinstance(spec, dict) else "base"
        if on not in ("base", "blowup"):
            raise SceneError(f"{path}.on", "expected \"base\" or \"blowup\"")
        if on == "blowup":
            if blowup is None:
                raise SceneError(f"{path}.on", "bundle declared on the blow-up but the scene has no 'blowup' stanza")
            b = parse_bundle(name, spec, blowup.ring, path, chH_ring=ring)
            b.on_blowup = True
        else:
            b = parse_bundle(name, spec, ring, path)
        bundles[name] = b

    operators = {}
    for name, rows in _get(data, "operators", "<root>", {}).items():
        path = f"operators.{name}"
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise SceneError(path, "expected a row-major matrix")
        mat = [[_rational(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(rows)]
        operators[name] = NilpotentOperator.from_rows(mat)
    return Scene(ring, bundles, operators, blowup)


def load_scene_file(path: str) -> Scene:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SceneError(path, exc.strerror or str(exc)) from None
    return load_scene(text)


# -- serialization ---------------------------------------------------------------------


def class_to_json(x: GradedClass) -> dict:
    from .chowring import format_rational, render

    ring = x.ring
    return {
        "text": render(x),
        "degrees": [
            {lab: format_rational(c) for lab, c in zip(ring.bases[k], x.degree_part(k)) if c}
            for k in range(ring.dim + 1)
        ],
    }
