"""Shared desk-scale fixtures."""

import numpy as np
import pytest

from sseqkit.complexes import GradedComplex
from sseqkit.fixtures import massey_triple_dga, two_cell_filtered
from sseqkit.linalg import FpMatrix


def two_term_complex(p=2, iso=True):
    """0 -> F_p -> F_p -> 0 in degrees 1, 0; the map is id or 0."""
    d = FpMatrix(p, [[1 if iso else 0]])
    return GradedComplex(p, [("y", 0), ("x", 1)], {1: d})


def random_bounded_complex(p, dims, seed):
    """A complex with the given degree dims and a random valid differential.

    Differentials are built inside successive kernels, so d*d = 0 by
    construction.
    """
    from sseqkit.linalg import kernel

    rng = np.random.default_rng(seed)
    degrees = sorted(dims)
    elements = []
    for t in degrees:
        for i in range(dims[t]):
            elements.append((f"e{t}_{i}", t))
    diff = {}
    prev_kernel = None
    for t in degrees:
        lower = dims.get(t - 1, 0)
        here = dims[t]
        if lower == 0 or here == 0:
            prev_kernel = None
            continue
        raw = FpMatrix(p, rng.integers(0, p, size=(lower, here)))
        if prev_kernel is None:
            diff[t] = raw
        else:
            kb = prev_kernel.basis  # rows span ker(d) in degree t-1
            coeff = FpMatrix(p, rng.integers(0, p, size=(kb.rows, here)))
            diff[t] = kb.transpose() @ coeff
        prev_kernel = kernel(diff[t])
    return GradedComplex(p, elements, diff)


@pytest.fixture
def triple_dga():
    return massey_triple_dga(2)


@pytest.fixture
def d2_fixture():
    return two_cell_filtered(2)
