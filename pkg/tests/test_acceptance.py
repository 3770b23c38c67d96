"""Acceptance criteria, one test per criterion.

Each ``test_criterion_NN_*`` test reports a PASS/FAIL line in the terminal
summary (see conftest.py).  Run directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import subprocess
import sys
from fractions import Fraction
from itertools import product

import pytest
import sympy

from helpers import (
    SCENES,
    elementary_symmetric,
    exp_sum,
    inductive_weight_filtration,
    jordan_matrix,
    jordan_weights,
    p2_two_lines,
    random_class,
    random_nilpotent_class,
    random_split,
    random_unimodular,
    ring_zoo,
    three_divisor_surface,
)
from parchern import chernformulas as cf
from parchern.blowup import blowup_surface, exceptionally_constant_ch, pullback_class, pushforward_class
from parchern.chowring import eval_series, exp, parse_class, projective_space_ring, surface_ring
from parchern.cli import main
from parchern.parabolic import (
    ComponentTable,
    SplitBundle,
    component_ch,
    direct_sum,
    refine_denominator,
    split_to_filtration,
    split_to_table,
    table_to_filtration,
    tensor_line_table,
    window,
)
from parchern.residues import monodromy_weight_filtration, weight_filtration_defects, weightone_ch

HALF = Fraction(1, 2)


def _avg(bundle, ring, n):
    return cf.weighted_average_ch(split_to_table(bundle, ring, n))


def test_criterion_01_counterexample_c_d():
    R = p2_two_lines()
    case_c = SplitBundle([(1, [0, 0]), (1, [HALF, HALF])])
    case_d = SplitBundle([(1, [HALF, 0]), (1, [0, HALF])])
    assert _avg(case_c, R, 2) == parse_class(R, "deg 0: 2; deg 1: 1*H; deg 2: 1/2*H^2")
    assert _avg(case_d, R, 2) == parse_class(R, "deg 0: 2; deg 1: 1*H; deg 2: 1/4*H^2")


def test_criterion_02_second_counterexample():
    R = p2_two_lines()
    first = SplitBundle([(1, [HALF, HALF]), (1, [1, 0])])
    second = SplitBundle([(1, [1, HALF]), (1, [HALF, 0])])
    assert _avg(first, R, 2) == parse_class(R, "deg 0: 2; deg 1: 2*H; deg 2: 1*H^2")
    assert _avg(second, R, 2) == parse_class(R, "deg 0: 2; deg 1: 2*H; deg 2: 5/4*H^2")


def test_criterion_03_line_bundle_law():
    rings = [projective_space_ring(2, [{"H": 1}]), three_divisor_surface()]
    for R in rings:
        for i in range(R.m):
            for n in range(1, 7):
                for h in range(n):
                    gamma = [0] * R.m
                    gamma[i] = Fraction(h, n)
                    value = _avg(SplitBundle([(1, gamma)]), R, n)
                    assert value == exp(R.divisor(i).scale(Fraction(h, n))), (R.name, i, n, h)
    # several divisors at once: the product of the exponentials
    S = three_divisor_surface()
    rng = random.Random(3)
    for n in range(1, 7):
        hs = list(product(range(n), repeat=3)) if n <= 3 else [
            tuple(rng.randrange(n) for _ in range(3)) for _ in range(12)
        ]
        for h in hs:
            expected = S.one()
            for i, hi in enumerate(h):
                expected = expected * exp(S.divisor(i).scale(Fraction(hi, n)))
            assert _avg(SplitBundle([(1, [Fraction(hi, n) for hi in h])]), S, n) == expected


def test_criterion_04_formula_cross_agreement():
    rng = random.Random(2024)
    rings = ring_zoo()
    checked = 0
    for _ in range(200):
        R = rng.choice(rings)
        n = rng.randint(1, 6)
        b = random_split(rng, R.m, n)
        oracle = exp_sum(R, b.pieces)
        t = split_to_table(b, R, n)
        f = split_to_filtration(b, R, n)
        assert cf.weighted_average_ch(t) == oracle
        for _ in range(5):
            shift = [rng.randint(-3 * n, 3 * n) for _ in range(R.m)]
            assert cf.shifted_window_ch(t, shift) == oracle
        assert cf.gysin_ch(f) == oracle
        assert cf.graded_gysin_ch(f) == oracle
        assert cf.integral_ch(cf.table_to_jumps(t)) == oracle
        checked += 1
    assert checked == 200


def test_criterion_05_invariance_suite():
    rng = random.Random(55)
    rings = ring_zoo()
    for _ in range(40):
        R = rng.choice(rings)
        n = rng.randint(1, 5)
        s = split_to_table(random_split(rng, R.m, n, max_rank=3), R, n)
        t = split_to_table(random_split(rng, R.m, n, max_rank=3), R, n)
        avg_s, avg_t = cf.weighted_average_ch(s), cf.weighted_average_ch(t)
        # additivity
        assert cf.weighted_average_ch(direct_sum([s, t])) == avg_s + avg_t
        # twisting by a parabolic line bundle
        b = [rng.randint(-2 * n, 2 * n) for _ in range(R.m)]
        twist = exp(R.linear_combination([Fraction(bi, n) for bi in b]))
        assert cf.weighted_average_ch(tensor_line_table(s, b)) == twist * avg_s
        # denominator refinement
        p = rng.randint(1, 3)
        if (n * p) ** R.m <= 4096:
            assert cf.weighted_average_ch(refine_denominator(s, p)) == avg_s
        # periodicity of the weighted cells
        for _ in range(4):
            a = [rng.randint(-2 * n, 2 * n) for _ in range(R.m)]
            i = rng.randrange(R.m)
            a2 = list(a)
            a2[i] += n
            lhs = exp(R.linear_combination([Fraction(-x, n) for x in a])) * component_ch(s, a)
            rhs = exp(R.linear_combination([Fraction(-x, n) for x in a2])) * component_ch(s, a2)
            assert lhs == rhs


def test_criterion_06_single_divisor_closed_form():
    rings = [projective_space_ring(4, [{"H": 1}]), surface_ring(1, [[3]])]
    for R in rings:
        D = R.divisor(0)
        bundles = []
        for n in range(1, 7):
            levels = [Fraction(h, n) for h in range(n)]
            for g in levels:
                for shift in (-1, 0, 1):
                    bundles.append((n, SplitBundle([(1, [g + shift])])))
            for g1 in levels:
                for g2 in levels:
                    bundles.append((n, SplitBundle([(1, [g1]), (2, [g2 - 1])])))
        rng = random.Random(6)
        for _ in range(40):
            n = rng.randint(1, 6)
            bundles.append((n, random_split(rng, 1, n)))
        for n, b in bundles:
            f = split_to_filtration(b, R, n)
            closed = cf.single_divisor_closed_form(f.chE, cf.filtration_gr_pieces(f), D)
            assert closed == _avg(b, R, n)
        # alpha = 0: the bracket series is exactly the exponential series
        assert cf.bracket_series(0, R.dim) == cf.exp_series(1, R.dim)
        assert eval_series(cf.bracket_series(0, R.dim), D) == exp(D)


def test_criterion_07_weightone_value():
    rng = random.Random(7)
    rings = [surface_ring(1, [[1]]), projective_space_ring(3, [{"H": 2}])]
    for k in range(60):
        R = rings[k % 2]
        D = R.divisor(0)
        g0, g1 = rng.randint(0, 4), rng.randint(0, 4)
        g = (g0, g1, g0)
        den = rng.randint(3, 12)
        nums = sorted(rng.sample(range(-den + 1, 1), 3))
        alpha = [Fraction(x, den) for x in nums]
        direct = sum((exp(D.scale(-a)).scale(gi) for gi, a in zip(g, alpha)), R.zero())
        pieces = [(a, (1 - exp(-D)).scale(gi)) for gi, a in zip(g, alpha)]
        proof_path = cf.single_divisor_closed_form(R.scalar(sum(g)), pieces, D)
        assert proof_path == direct
        assert weightone_ch(g, alpha, D) == direct
    S = surface_ring(1, [[1]])
    D = S.divisor(0)
    alpha = [Fraction(-2, 3), Fraction(-1, 3), 0]
    value = weightone_ch((1, 2, 1), alpha, D)
    terms = [exp(D.scale(Fraction(2, 3))), exp(D.scale(Fraction(1, 3))).scale(2), S.one()]
    assert value == terms[0] + terms[1] + terms[2]
    assert value == parse_class(S, "deg 0: 4; deg 1: 4/3*D1; deg 2: 1/3*pt")


def _same_span(sub, matrix):
    r = sub.ambient
    ours = sympy.Matrix([list(v) for v in sub.basis]).T if sub.basis else sympy.zeros(r, 0)
    joint = sympy.Matrix.hstack(ours, matrix) if matrix.cols or ours.cols else sympy.zeros(r, 0)
    return ours.rank() == matrix.rank() == joint.rank()


def test_criterion_08_monodromy_weight_filtration():
    rng = random.Random(8)
    cases = 0
    while cases < 40:
        blocks = [rng.randint(1, 4) for _ in range(rng.randint(1, 4))]
        if sum(blocks) > 8:
            continue
        cases += 1
        J = jordan_matrix(blocks)
        weights = jordan_weights(blocks)
        l = max(blocks) - 1
        expected_dims = [sum(1 for w in weights if w <= k) for k in range(2 * l + 1)]
        P = random_unimodular(rng, sum(blocks))
        eta = [[Fraction(str(x)) for x in row] for row in (P * sympy.Matrix(J) * P.inv()).tolist()]
        W = monodromy_weight_filtration(eta)
        assert weight_filtration_defects(eta, W) == []
        assert W.dims == expected_dims
        brute = inductive_weight_filtration(eta)
        assert len(brute) == len(W.steps)
        for ours, theirs in zip(W.steps, brute):
            assert _same_span(ours, theirs)


def test_criterion_09_blowup():
    P2 = p2_two_lines()
    bl = blowup_surface(P2, [[0, 1]])
    Y = bl.ring
    rng = random.Random(9)
    for _ in range(30):
        x = random_class(rng, P2)
        y = random_class(rng, Y)
        assert pushforward_class(bl, pullback_class(bl, x) * y) == x * pushforward_class(bl, y)
    E = bl.exceptional(0)
    assert pushforward_class(bl, exp(E.scale(HALF))) == parse_class(P2, "deg 0: 1; deg 2: -1/8*H^2")

    # structures away from the centres: three lines, centre on D2 and D3, jumps on D1 only
    P = projective_space_ring(2, [{"H": 1}, {"H": 1}, {"H": 1}], name="P2-3")
    bl3 = blowup_surface(P, [[1, 2]])
    for _ in range(10):
        n = rng.randint(1, 4)
        pieces = [(rng.randint(1, 2), [Fraction(rng.randint(-n, 2 * n), n), 0, 0]) for _ in range(2)]
        base = split_to_filtration(SplitBundle(pieces), P, n)
        up = split_to_filtration(SplitBundle([(r, g + [0]) for r, g in pieces]), bl3.ring, n)
        assert exceptionally_constant_ch(bl3, base.chE, up) == cf.gysin_ch(base)
    # a non-split table varying along D1 only, on the base and pulled back upstairs
    for _ in range(10):
        n = rng.randint(1, 3)
        rank = rng.randint(1, 3)
        T = [random_nilpotent_class(rng, P) + P.scalar(rank) for _ in range(n)]
        base_t = ComponentTable(P, n, {a: T[a[0]] for a in window(n, 3)})
        up_t = ComponentTable(bl3.ring, n, {a: pullback_class(bl3, T[a[0]]) for a in window(n, 4)})
        expected = cf.weighted_average_ch(base_t)
        assert cf.gysin_ch(table_to_filtration(base_t)) == expected
        assert exceptionally_constant_ch(bl3, T[0], table_to_filtration(up_t)) == expected


def test_criterion_10_newton_identities():
    rng = random.Random(10)
    for R in ring_zoo():
        for _ in range(8):
            k = rng.randint(1, 4)
            xs = [R.linear_combination([Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(R.m)])
                  for _ in range(k)]
            ch = sum((exp(x) for x in xs), R.zero())
            classes = cf.chern_classes(ch)
            for j, c in enumerate(classes, start=1):
                assert c == elementary_symmetric(xs, j, R)
        # also on arbitrary degree-1 classes, not just divisor combinations
        xs = [random_nilpotent_class(rng, R).homogeneous(1) for _ in range(3)]
        classes = cf.chern_classes(sum((exp(x) for x in xs), R.zero()))
        assert all(c == elementary_symmetric(xs, j, R) for j, c in enumerate(classes, start=1))
    R = p2_two_lines()
    H, H2 = R.basis_element("H"), R.basis_element("H^2")
    case_c = _avg(SplitBundle([(1, [0, 0]), (1, [HALF, HALF])]), R, 2)
    case_d = _avg(SplitBundle([(1, [HALF, 0]), (1, [0, HALF])]), R, 2)
    assert cf.chern_classes(case_c) == [H, R.zero()]
    assert cf.chern_classes(case_d) == [H, H2.scale(Fraction(1, 4))]


_AGREEMENT_SCENES = {
    "counterexamples_p2.json": ["caseC", "caseD", "pairA", "pairB", "caseD_table"],
    "cross_agreement_surface.json": ["mixed", "line"],
    "cross_agreement_p3.json": ["rank3"],
    "cross_agreement_product.json": ["triple"],
    "cross_agreement_curve_divisor.json": ["graded"],
}
_CORRUPTED = {
    "asymmetric_ring.json": (["compare", "--bundle", "trivial", "--methods", "average,gysin"], 3),
    "nonassociative_ring.json": (["compare", "--bundle", "trivial", "--methods", "average,gysin"], 3),
    "rank_mismatch_table.json": (["compare", "--bundle", "bad", "--methods", "average,window"], 3),
    "inconsistent_gradeds.json": (["compare", "--bundle", "bad", "--methods", "average,graded"], 3),
    "closed_form_two_divisors.json": (["compare", "--bundle", "caseD", "--methods", "average,closed"], 5),
    "not_nilpotent.json": (["weight-filtration", "--operator", "eta"], 5),
    "singleton_center.json": (["validate"], 5),
}


def test_criterion_11_cli(capsys):
    for scene, bundles in _AGREEMENT_SCENES.items():
        path = str(SCENES / scene)
        methods = ["window", "gysin", "graded", "integral", "deligne"]
        for bundle in bundles:
            ms = methods + (["direct"] if bundle != "caseD_table" else [])
            ms += ["closed"] if scene == "cross_agreement_curve_divisor.json" else []
            for m in ms:
                code = main(["compare", "--scene", path, "--bundle", bundle, "--methods", f"average,{m}"])
                assert code == 0, (scene, bundle, m)
    capsys.readouterr()
    for scene, (args, expected) in _CORRUPTED.items():
        path = str(SCENES / "corrupted" / scene)
        code = main([args[0], "--scene", path, *args[1:]])
        assert code == expected, scene
    capsys.readouterr()
    # byte stability across two separate processes
    commands = [
        ["compare", "--scene", str(SCENES / "counterexamples_p2.json"), "--bundle", "caseD",
         "--methods", "average,gysin"],
        ["weight-filtration", "--scene", str(SCENES / "operators.json"), "--operator", "J3", "--output", "json"],
        ["classes", "--scene", str(SCENES / "counterexamples_p2.json"), "--bundle", "caseC"],
    ]
    for cmd in commands:
        runs = [
            subprocess.run([sys.executable, "-m", "parchern.cli", *cmd], capture_output=True, check=False)
            for _ in range(2)
        ]
        assert runs[0].returncode == runs[1].returncode == 0
        assert runs[0].stdout == runs[1].stdout and runs[0].stdout


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
