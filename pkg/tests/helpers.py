"""Shared fixtures-in-code for the test suites: rings, random bundles, oracles."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from parchern.chowring import (
    exp,
    product_projective_ring,
    projective_space_ring,
    surface_ring,
)
from parchern.parabolic import SplitBundle

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def p2_two_lines():
    """P^2 with D1 = D2 = H."""
    return projective_space_ring(2, [{"H": 1}, {"H": 1}], name="P2")


def three_divisor_surface():
    return surface_ring(3, [[1, 1, 0], [1, -1, 2], [0, 2, 3]], name="S3")


def ring_zoo():
    """Rings with m <= 3 divisors and d <= 4 used by the randomized suites."""
    return [
        p2_two_lines(),
        projective_space_ring(4, [{"H": 1}, {"H": 2}, {"H": -1}], name="P4"),
        projective_space_ring(3, [{"H": 1}], name="P3"),
        product_projective_ring([1, 1, 1]),
        product_projective_ring([2, 2]),
        three_divisor_surface(),
    ]


def random_weights(rng: random.Random, m: int, n: int, spread: int = 2):
    return [Fraction(rng.randint(-spread * n, spread * n), n) for _ in range(m)]


def random_split(rng: random.Random, m: int, n: int, max_rank: int = 4) -> SplitBundle:
    pieces = []
    total = 0
    while total < max_rank and (not pieces or rng.random() < 0.6):
        r = rng.randint(1, max_rank - total)
        total += r
        pieces.append((r, random_weights(rng, m, n)))
    return SplitBundle(pieces)


def random_class(rng: random.Random, ring, lo: int = -3, hi: int = 3, den: int = 4):
    return ring.element(
        {lab: Fraction(rng.randint(lo, hi), rng.randint(1, den)) for lab in ring.labels}
    )


def random_nilpotent_class(rng, ring, **kw):
    x = random_class(rng, ring, **kw)
    return x - ring.scalar(x.rank)


def elementary_symmetric(xs, k, ring):
    """e_k(xs) in the ring, by brute force over k-subsets."""
    total = ring.zero()
    for combo in combinations(xs, k):
        term = ring.one()
        for x in combo:
            term = term * x
        total = total + term
    return total


def exp_sum(ring, pieces):
    """sum r exp(sum gamma_i D_i): the split-bundle oracle, independent of SplitBundle."""
    total = ring.zero()
    for r, gamma in pieces:
        total = total + exp(ring.linear_combination(gamma)).scale(r)
    return total


# -- residue oracles (sympy, independent of parchern.residues) ------------------


def sympy_colspace(vectors, r):
    import sympy

    if not vectors:
        return sympy.zeros(r, 0)
    m = sympy.Matrix.hstack(*vectors)
    cols = m.columnspace()
    return sympy.Matrix.hstack(*cols) if cols else sympy.zeros(r, 0)


def inductive_weight_filtration(rows):
    """Weight filtration dims by working literally in the quotients W_{2l-k} / W_{k-1}.

    W_0 = im eta^l, W_{2l-1} = ker eta^l, then for each k the image of eta^{l-k}
    on the quotient gives W_k / W_{k-1}, and its kernel gives W_{2l-k-1} / W_{k-1}.
    Returns the list of column-space matrices W_0..W_{2l}.
    """
    import sympy

    eta = sympy.Matrix(rows)
    r = eta.rows
    l = 0
    while not (eta ** (l + 1)).is_zero_matrix:
        l += 1
    whole = sympy.eye(r)
    W = {-1: sympy.zeros(r, 0), 2 * l: whole}
    for k in range(l):
        A = W[k - 1]
        B = W[2 * l - k]
        # basis of B extending A: [A | C]
        basis = [A[:, j] for j in range(A.cols)]
        C = []
        for j in range(B.cols):
            v = B[:, j]
            trial = sympy.Matrix.hstack(*(basis + C + [v]))
            if trial.rank() > len(basis) + len(C):
                C.append(v)
        AC = sympy.Matrix.hstack(*(basis + C)) if basis + C else sympy.zeros(r, 0)
        power = eta ** (l - k)
        # C-coordinates of eta^{l-k} c for each c in C, via least-squares-free exact solve
        coords = []
        for c in C:
            sol = AC.solve(power * c) if AC.cols else sympy.zeros(0, 1)
            coords.append(sol[len(basis):, 0])
        M = sympy.Matrix.hstack(*coords) if coords else sympy.zeros(0, 0)
        Cm = sympy.Matrix.hstack(*C) if C else sympy.zeros(r, 0)
        img = [Cm * v for v in M.columnspace()] if C else []
        ker = [Cm * v for v in M.nullspace()] if C else []
        W[k] = sympy_colspace(basis + img, r)
        W[2 * l - k - 1] = sympy_colspace(basis + ker, r)
    return [W[k] for k in range(2 * l + 1)]


def jordan_weights(block_sizes):
    """Weight of each standard basis vector of a Jordan matrix (e_j -> e_{j-1} in a block)."""
    l = max(block_sizes) - 1
    out = []
    for s in block_sizes:
        out.extend(l - (s - 1) + 2 * j for j in range(s))
    return out


def jordan_matrix(block_sizes):
    r = sum(block_sizes)
    rows = [[0] * r for _ in range(r)]
    pos = 0
    for s in block_sizes:
        for j in range(1, s):
            rows[pos + j - 1][pos + j] = 1
        pos += s
    return rows


def random_unimodular(rng, r):
    """A random invertible integer matrix built from elementary operations."""
    import sympy

    m = sympy.eye(r)
    for _ in range(3 * r):
        i, j = rng.sample(range(r), 2) if r > 1 else (0, 0)
        if i != j:
            m[i, :] = m[i, :] + rng.randint(-2, 2) * m[j, :]
    perm = list(range(r))
    rng.shuffle(perm)
    return m.extract(perm, list(range(r)))
