"""Command-line front end.

Exit codes: 0 success (for ``compare``: the two values agree), 1 ``compare``
found a nonzero difference, 2 parse error, 3 validation error, 4 unknown
method/bundle/operator, 5 formula precondition violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import chernformulas as cf
from .chowring import render, render_homogeneous, format_rational
from .errors import PreconditionError, RingMismatchError, ValidationError
from .residues import (
    graded_dims,
    image_filtration,
    kernel_filtration,
    monodromy_weight_filtration,
    weight_filtration_defects,
)
from .scene import FORMAT_VERSION, METHODS, SceneError, UnknownNameError, class_to_json, load_scene_file

EXIT_OK, EXIT_DIFFERENT, EXIT_PARSE, EXIT_VALIDATION, EXIT_UNKNOWN, EXIT_PRECONDITION = range(6)


def _emit(args, text_lines: list[str], payload: dict) -> None:
    if args.output == "json":
        payload = {"format_version": FORMAT_VERSION, "command": args.command, **payload}
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _shift(args):
    if not getattr(args, "shift", None):
        return None
    try:
        return [int(x) for x in args.shift.split(",")]
    except ValueError:
        raise SceneError("--shift", "expected comma-joined integers") from None


def cmd_ch(args) -> int:
    scene = load_scene_file(args.scene)
    value = scene.bundle(args.bundle).ch(args.method, _shift(args))
    _emit(args, [render(value)], {"bundle": args.bundle, "method": args.method, "ch": class_to_json(value)})
    return EXIT_OK


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.methods.split(",")]
    if len(methods) != 2:
        raise UnknownNameError("--methods takes exactly two comma-separated methods")
    scene = load_scene_file(args.scene)
    bundle = scene.bundle(args.bundle)
    a, b = (bundle.ch(m, _shift(args)) for m in methods)
    diff = a - b
    _emit(
        args,
        [f"{methods[0]}: {render(a)}", f"{methods[1]}: {render(b)}", f"difference: {render(diff)}"],
        {
            "bundle": args.bundle,
            "methods": methods,
            "values": [class_to_json(a), class_to_json(b)],
            "difference": class_to_json(diff),
            "equal": diff.is_zero(),
        },
    )
    return EXIT_OK if diff.is_zero() else EXIT_DIFFERENT


def cmd_classes(args) -> int:
    scene = load_scene_file(args.scene)
    ch = scene.bundle(args.bundle).ch(args.method)
    classes = cf.chern_classes(ch)
    line = "; ".join(f"c{k} = {render_homogeneous(c)}" for k, c in enumerate(classes, start=1))
    vanish = cf.higher_classes_vanish(ch)
    lines = [line]
    if args.check_vanishing:
        lines.append(f"c_p = 0 for all p >= 2: {'yes' if vanish else 'no'}")
    _emit(
        args,
        lines,
        {
            "bundle": args.bundle,
            "method": args.method,
            "classes": [class_to_json(c) for c in classes],
            "higher_classes_vanish": vanish,
        },
    )
    return EXIT_OK


def _vec(v) -> str:
    return "[" + ", ".join(format_rational(x) for x in v) + "]"


def cmd_weight_filtration(args) -> int:
    scene = load_scene_file(args.scene)
    eta = scene.operator(args.operator)
    build = {"weight": monodromy_weight_filtration, "image": image_filtration, "kernel": kernel_filtration}
    filt = build[args.kind](eta)
    name = "W" if args.kind == "weight" else "F"
    lines = [
        f"kind: {args.kind}",
        f"order: {eta.order}",
        f"dims: {' '.join(str(d) for d in filt.dims)}",
    ]
    if args.kind == "weight":
        lines.append(f"graded dims: {' '.join(str(d) for d in graded_dims(filt))}")
    for k, step in enumerate(filt.steps):
        lines.append(f"{name}_{k}: [" + ", ".join(_vec(v) for v in step.basis) + "]")
    payload = {
        "operator": args.operator,
        "kind": args.kind,
        "order": eta.order,
        "increasing": filt.increasing,
        "dims": filt.dims,
        "bases": [[[format_rational(x) for x in v] for v in s.basis] for s in filt.steps],
    }
    if args.kind == "weight":
        defects = weight_filtration_defects(eta, filt)
        if defects:
            raise ArithmeticError("; ".join(defects))
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_blowup_ch(args) -> int:
    scene = load_scene_file(args.scene)
    value = scene.blowup_ch(args.bundle)
    _emit(args, [render(value)], {"bundle": args.bundle, "ch": class_to_json(value)})
    return EXIT_OK


def cmd_validate(args) -> int:
    scene = load_scene_file(args.scene)  # ring and payload invariants run at load
    lines = [f"ring {scene.ring.name}: ok (d = {scene.ring.dim}, m = {scene.ring.m})"]
    if scene.blowup is not None:
        lines.append(f"blowup: ok ({scene.blowup.centers} centers)")
    for name in sorted(scene.bundles):
        b = scene.bundles[name]
        t = b.table()
        lines.append(f"bundle {name}: ok ({b.kind}, n = {t.n}, rank {format_rational(t.rank)})")
    for name in sorted(scene.operators):
        eta = scene.operators[name]
        lines.append(f"operator {name}: ok (size {eta.size}, order {eta.order})")
    _emit(args, lines, {"ok": True, "report": lines})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parchern", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bundle=True):
        p.add_argument("--scene", required=True, help="scene file (JSON)")
        p.add_argument("--output", choices=("text", "json"), default="text")
        if bundle:
            p.add_argument("--bundle", required=True)

    p = sub.add_parser("ch", help="Chern character of a bundle by one formula")
    common(p)
    p.add_argument("--method", default="average", help=f"one of {', '.join(METHODS)}")
    p.add_argument("--shift", help="window start for --method window, e.g. -2,-2")
    p.set_defaults(func=cmd_ch)

    p = sub.add_parser("compare", help="evaluate two formulas and print their difference")
    common(p)
    p.add_argument("--methods", required=True, help="two methods, e.g. average,gysin")
    p.add_argument("--shift", help="window start for the window method")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("classes", help="Chern classes c_1..c_d")
    common(p)
    p.add_argument("--method", default="average")
    p.add_argument("--check-vanishing", action="store_true", help="also report whether c_p = 0 for p >= 2")
    p.set_defaults(func=cmd_classes)

    p = sub.add_parser("weight-filtration", help="filtrations of a nilpotent residue operator")
    common(p, bundle=False)
    p.add_argument("--operator", required=True)
    p.add_argument("--kind", choices=("weight", "image", "kernel"), default="weight")
    p.set_defaults(func=cmd_weight_filtration)

    p = sub.add_parser("blowup-ch", help="pushed-forward Chern character of a structure on the blow-up")
    common(p)
    p.set_defaults(func=cmd_blowup_ch)

    p = sub.add_parser("validate", help="check every invariant of a scene")
    common(p, bundle=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, RingMismatchError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except UnknownNameError as exc:
        print(f"unknown name: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
