"""Desk-scale fixture generators used by the test suite and the scripts.

Everything here is deterministic given a seed.  The random filtered
complexes sample differentials inside nested kernels so d*d = 0 and
level preservation hold by construction rather than by rejection.
"""

from __future__ import annotations

import numpy as np

from .complexes import DGAlgebra, GradedComplex
from .filtration import FilteredDGA
from .linalg import FpMatrix, Subspace, kernel, rank
from .spectral import AbstractChart, ChartClass, ChartDifferential

__all__ = [
    "massey_triple_dga",
    "two_cell_filtered",
    "f3_multiplicative_filtered",
    "random_filtered_complex",
    "random_chart",
    "level_preserving_fixture",
]


def massey_triple_dga(p: int = 2) -> DGAlgebra:
    """Nine-element DGA over F_p with one defined nonzero triple product.

    Generators a, b, c sit in degree -1 with witnesses e, f (d e = ab,
    d f = bc); degree -2 carries ab, bc and a value slot w with a*f = w.
    The bracket <[a],[b],[c]> is the singleton {[w]}.
    """
    elements = [
        ("u", 0),
        ("a", -1),
        ("b", -1),
        ("c", -1),
        ("e", -1),
        ("f", -1),
        ("ab", -2),
        ("bc", -2),
        ("w", -2),
    ]
    d_into_m2 = np.zeros((3, 5), dtype=int)
    d_into_m2[0, 3] = 1  # d(e) = ab
    d_into_m2[1, 4] = 1  # d(f) = bc
    cx = GradedComplex(p, elements, {-1: FpMatrix(p, d_into_m2)})
    product = {
        ("a", "b"): {"ab": 1},
        ("b", "c"): {"bc": 1},
        ("a", "f"): {"w": 1},
    }
    return DGAlgebra(cx, "u", product)


def two_cell_filtered(p: int = 2) -> FilteredDGA:
    """Basis a at (n=0, t=1) and b at (n=2, t=0) with d(a) = b: a single d_2."""
    cx = GradedComplex(p, [("b", 0), ("a", 1)], {1: FpMatrix(p, [[1]])})
    return FilteredDGA(cx, {"a": 0, "b": 2})


def level_preserving_fixture(p: int = 2) -> FilteredDGA:
    """d stays inside each level, so every page equals E_1."""
    elements = [("x0", 1), ("y0", 0), ("x1", 1), ("y1", 0), ("z1", 0)]
    d = FpMatrix(p, [[1, 0], [0, 1], [0, 0]])  # d(x0)=y0, d(x1)=y1
    cx = GradedComplex(p, elements, {1: d})
    return FilteredDGA(cx, {"x0": 0, "y0": 0, "x1": 1, "y1": 1, "z1": 1})


def f3_multiplicative_filtered() -> FilteredDGA:
    """Tensor square of the two-cell fixture over F_3, with products.

    Two d_2 sources a, b hit al, be; the product ab supports
    d_2(ab) = al*b - a*be, which exercises the signed Leibniz rule on
    the page.  Everything dies by E_3 except the unit.
    """
    p = 3
    elements = [
        ("u", 0),
        ("a", 1),
        ("b", 1),
        ("al", 0),
        ("be", 0),
        ("ab", 2),
        ("alb", 1),
        ("abe", 1),
        ("albe", 0),
    ]
    # degree 1 -> 0 : columns a, b, alb, abe ; rows al, be, albe (u excluded? no:
    # rows are all degree-0 elements in order u, al, be, albe)
    d1 = np.zeros((4, 4), dtype=int)
    d1[1, 0] = 1  # d(a) = al
    d1[2, 1] = 1  # d(b) = be
    d1[3, 2] = 1  # d(alb) = albe
    d1[3, 3] = 1  # d(abe) = albe
    # degree 2 -> 1 : column ab ; rows a, b, alb, abe
    d2 = np.zeros((4, 1), dtype=int)
    d2[2, 0] = 1  # alb coefficient
    d2[3, 0] = -1 % p  # -abe
    cx = GradedComplex(p, elements, {1: FpMatrix(p, d1), 2: FpMatrix(p, d2)})
    product = {
        ("a", "b"): {"ab": 1},
        ("al", "b"): {"alb": 1},
        ("a", "be"): {"abe": 1},
        ("al", "be"): {"albe": 1},
    }
    alg = DGAlgebra(cx, "u", product)
    levels = {
        "u": 0,
        "a": 0,
        "b": 0,
        "al": 2,
        "be": 2,
        "ab": 0,
        "alb": 2,
        "abe": 2,
        "albe": 4,
    }
    return FilteredDGA(cx, levels, algebra=alg)


def random_filtered_complex(
    p: int, size: int = 12, seed: int = 0, max_degree: int = 3, max_level: int = 3
) -> FilteredDGA:
    """A random filtered complex: d*d = 0 and level preservation by construction.

    Differential columns are sampled inside ker(d) intersected with the
    level-allowed coordinate subspace of each source element.
    """
    rng = np.random.default_rng(seed)
    degrees = rng.integers(0, max_degree + 1, size=size)
    levels = rng.integers(0, max_level + 1, size=size)
    elements = []
    for i in range(size):
        elements.append((f"g{i}", int(degrees[i])))
    names = [e[0] for e in elements]
    level_map = {names[i]: int(levels[i]) for i in range(size)}
    by_deg: dict[int, list[int]] = {}
    for i, t in enumerate(degrees):
        by_deg.setdefault(int(t), []).append(i)
    diff: dict[int, FpMatrix] = {}
    prev_kernel: Subspace | None = None
    for t in sorted(by_deg):
        lower = by_deg.get(t - 1, [])
        here = by_deg.get(t, [])
        if not lower or not here:
            if here:
                prev_kernel = Subspace.full(p, len(here))
            continue
        cols = []
        for src in here:
            allowed_rows = [
                r for r, gi in enumerate(lower) if levels[gi] >= levels[src]
            ]
            pattern = Subspace.from_rows(
                p,
                len(lower),
                np.eye(len(lower), dtype=np.int64)[allowed_rows]
                if allowed_rows
                else np.zeros((0, len(lower))),
            )
            space = pattern if prev_kernel is None else prev_kernel.intersect(pattern)
            if space.dim == 0:
                cols.append(np.zeros(len(lower), dtype=np.int64))
                continue
            coeffs = rng.integers(0, p, size=space.dim)
            cols.append((coeffs @ space.basis.data) % p)
        diff[t] = FpMatrix.from_columns(p, cols, len(lower))
        prev_kernel = kernel(diff[t])
    cx = GradedComplex(p, elements, diff)
    return FilteredDGA(cx, level_map)


def random_chart(
    p: int, seed: int = 0, max_classes: int = 20, max_page: int = 4
) -> AbstractChart:
    """A random additive chart: permanent classes plus invertible d_r blocks."""
    rng = np.random.default_rng(seed)
    classes: list[ChartClass] = []
    diffs: list[ChartDifferential] = []
    counter = 0

    def fresh(n, t):
        nonlocal counter
        c = ChartClass(f"c{counter}", int(n), int(t))
        counter += 1
        classes.append(c)
        return c

    n_perm = int(rng.integers(1, 5))
    for _ in range(n_perm):
        fresh(rng.integers(0, 5), rng.integers(0, 6))
    while len(classes) + 2 <= max_classes:
        r = int(rng.integers(1, max_page + 1))
        n = int(rng.integers(0, 4))
        t = int(rng.integers(1, 6))
        if rng.random() < 0.25 and len(classes) + 4 <= max_classes:
            # a 2x2 invertible block on this page
            s1, s2 = fresh(n, t), fresh(n, t)
            t1, t2 = fresh(n + r, t - 1), fresh(n + r, t - 1)
            while True:
                mat = rng.integers(0, p, size=(2, 2))
                if rank(FpMatrix(p, mat)) == 2:
                    break
            for i, tgt in enumerate((t1, t2)):
                for j, src in enumerate((s1, s2)):
                    if mat[i, j] % p:
                        diffs.append(
                            ChartDifferential(r, src.name, tgt.name, int(mat[i, j]))
                        )
        else:
            src = fresh(n, t)
            tgt = fresh(n + r, t - 1)
            coeff = int(rng.integers(1, p))
            diffs.append(ChartDifferential(r, src.name, tgt.name, coeff))
        if rng.random() < 0.3:
            break
    return AbstractChart(p, classes, diffs)
