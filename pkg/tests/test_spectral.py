"""Pages, differentials, oracle cross-validation, survivors, charts."""

import numpy as np
import pytest

from sseqkit.complexes import ChainMap, ComplexError, GradedComplex
from sseqkit.filtration import FilteredChainMap, FilteredDGA
from sseqkit.fixtures import (
    f3_multiplicative_filtered,
    level_preserving_fixture,
    random_chart,
    random_filtered_complex,
    two_cell_filtered,
)
from sseqkit.linalg import FpMatrix, rank
from sseqkit.spectral import (
    AbstractChart,
    CESystem,
    ChartClass,
    ChartDifferential,
    ChartError,
    chart_alive_dims,
    chart_rank,
    crossing_differentials_ok,
    page,
    page_differential,
    page_product,
    permanent_subspace,
    realize_ss,
    stabilization_page,
    survivors,
    survivors_tracked,
    zb_oracle_page,
)


class TestPages:
    def test_level_preserving_all_pages_equal_e1(self):
        x = level_preserving_fixture()
        e1 = page(x, 1)
        for r in range(1, stabilization_page(x) + 1):
            pg = page(x, r)
            assert pg.dims() == e1.dims()
            for key in pg.cells:
                assert pg.differential(*key).is_zero()

    def test_two_cell_d2(self):
        x = two_cell_filtered(2)
        e1 = page(x, 1)
        assert e1.dims() == {(0, 1): 1, (2, 0): 1}
        e2 = page(x, 2)
        assert e2.dims() == {(0, 1): 1, (2, 0): 1}
        d2 = e2.differential(0, 1)
        assert rank(d2) == 1
        e3 = page(x, 3)
        assert e3.dims() == {}

    def test_e1_is_associated_graded_homology(self):
        for seed in (0, 4, 7):
            x = random_filtered_complex(2, size=12, seed=seed)
            e1 = page(x, 1)
            for n, piece in x.associated_graded().items():
                for t in x.complex.support:
                    assert e1.dim(n, t) == piece.complex.homology_dim(t)

    def test_differential_squares_to_zero(self):
        for seed in (2, 6):
            x = random_filtered_complex(2, size=12, seed=seed)
            for r in range(1, stabilization_page(x)):
                pg = page(x, r)
                for (n, t), cell in pg.cells.items():
                    first = pg.differential(n, t)
                    second = pg.differential(n + r, t - 1)
                    if first.rows and second.rows:
                        assert (second @ first).is_zero()

    def test_page_recurrence(self):
        # E_(r+1) dims equal homology of (E_r, d_r) dims
        for seed in (1, 8):
            x = random_filtered_complex(2, size=12, seed=seed)
            for r in range(1, stabilization_page(x)):
                pg = page(x, r)
                nxt = page(x, r + 1)
                for (n, t), cell in pg.cells.items():
                    out_rank = rank(pg.differential(n, t))
                    into = pg.cell(n - r, t + 1)
                    in_rank = rank(pg.differential(n - r, t + 1)) if into else 0
                    assert nxt.dim(n, t) == cell.dim - out_rank - in_rank

    def test_wide_page_differential_zero(self):
        x = two_cell_filtered(2)
        d = page_differential(x, 5, 0, 1)
        assert d.is_zero()

    def test_oracle_agreement_fixtures(self):
        for x in (two_cell_filtered(2), level_preserving_fixture(), f3_multiplicative_filtered()):
            for r in range(1, stabilization_page(x) + 1):
                assert page(x, r).dims() == zb_oracle_page(x, r)

    def test_oracle_agreement_randomized(self):
        for seed in range(6):
            x = random_filtered_complex(2, size=12, seed=seed)
            for r in range(1, stabilization_page(x) + 1):
                assert page(x, r).dims() == zb_oracle_page(x, r), (seed, r)
        for seed in range(3):
            x = random_filtered_complex(3, size=12, seed=100 + seed)
            for r in range(1, stabilization_page(x) + 1):
                assert page(x, r).dims() == zb_oracle_page(x, r), (seed, r)


class TestCESystem:
    def test_eta_functorial(self):
        x = random_filtered_complex(2, size=12, seed=11)
        ce = CESystem(x)
        windows = [(2, 5), (1, 4), (0, 3)]
        for t in x.complex.support:
            ab = ce.eta(*windows[0], *windows[1], t)
            bc = ce.eta(*windows[1], *windows[2], t)
            ac = ce.eta(*windows[0], *windows[2], t)
            assert (bc @ ab) == ac

    def test_delta_matches_page_differential(self):
        x = two_cell_filtered(2)
        ce = CESystem(x)
        # d_2 at (0, 1) is delta of the triple (-1, 1, 3) on the cell classes
        delta = ce.delta(-1, 1, 3, 1)
        assert rank(delta) == 1


class TestPageProducts:
    def test_unit_acts_as_identity(self):
        x = f3_multiplicative_filtered()
        pg = page(x, 2)
        unit = (0, 0, np.array([1]))
        for (n, t), cell in pg.cells.items():
            for k in range(cell.dim):
                coords = np.eye(cell.dim, dtype=np.int64)[k]
                n2, t2, out = page_product(x, pg, unit, (n, t, coords))
                assert (n2, t2) == (n, t)
                assert np.array_equal(out, coords)

    def test_degree_additivity(self):
        x = f3_multiplicative_filtered()
        pg = page(x, 2)
        a = (0, 1, np.array([1, 0]))
        b = (0, 1, np.array([0, 1]))
        n, t, _ = page_product(x, pg, a, b)
        assert (n, t) == (0, 2)

    def test_page_leibniz_with_signs(self):
        x = f3_multiplicative_filtered()
        pg = page(x, 2)
        r = 2
        for (n1, t1), c1 in sorted(pg.cells.items()):
            for (n2, t2), c2 in sorted(pg.cells.items()):
                for i in range(c1.dim):
                    for j in range(c2.dim):
                        a = (n1, t1, np.eye(c1.dim, dtype=np.int64)[i])
                        b = (n2, t2, np.eye(c2.dim, dtype=np.int64)[j])
                        assert _leibniz_holds(x, pg, r, a, b)

    def test_capability_error_without_product(self):
        x = two_cell_filtered(2)
        pg = page(x, 2)
        with pytest.raises(ComplexError):
            page_product(x, pg, (0, 1, np.array([1])), (0, 1, np.array([1])))


def _leibniz_holds(x, pg, r, a, b):
    """d_r(ab) = d_r(a) b + (-1)^t(a) a d_r(b) compared in the target cell."""
    p = x.p
    (n1, t1, c1), (n2, t2, c2) = a, b
    nab, tab, cab = page_product(x, pg, a, b)
    d_ab = pg.differential(nab, tab) @ cab if cab.size else np.zeros(0, np.int64)
    da = pg.differential(n1, t1) @ c1
    db = pg.differential(n2, t2) @ c2
    # d_r(a) * b
    term1 = np.zeros(0, np.int64)
    if da.size and pg.cell(n1 + r, t1 - 1):
        _, _, term1 = page_product(x, pg, (n1 + r, t1 - 1, da), b)
    term2 = np.zeros(0, np.int64)
    if db.size and pg.cell(n2 + r, t2 - 1):
        _, _, term2 = page_product(x, pg, a, (n2 + r, t2 - 1, db))
    tgt = pg.cell(nab + r, tab - 1)
    dim = tgt.dim if tgt else 0
    lhs = d_ab if d_ab.size else np.zeros(dim, np.int64)
    rhs = np.zeros(dim, np.int64)
    if term1.size:
        rhs = (rhs + term1) % p
    if term2.size:
        rhs = (rhs + (-1) ** t1 * term2) % p
    return np.array_equal(lhs % p, rhs % p)


class TestSurvivors:
    def test_no_differentials_constant_chains(self):
        x = level_preserving_fixture()
        tab = survivors(x, 4)
        for (n, t), seq in tab.chains.items():
            dims = [s.dim for s in seq]
            assert dims == [dims[0]] * len(dims)

    def test_d2_fixture_chain_drops(self):
        x = two_cell_filtered(2)
        tab = survivors(x, 3)
        assert [s.dim for s in tab.chains[(0, 1)]] == [1, 0]
        assert [s.dim for s in tab.chains[(2, 0)]] == [1, 1]
        assert tab.permanent_at(0, 1).dim == 0
        assert tab.permanent_at(2, 0).dim == 1

    def test_permanent_inside_every_stage(self):
        for seed in (3, 9, 14):
            x = random_filtered_complex(2, size=12, seed=seed)
            r_max = stabilization_page(x)
            tab = survivors(x, r_max)
            for key, seq in tab.chains.items():
                perm = tab.permanent.get(key)
                for sub in seq:
                    assert perm.le(sub)

    def test_image_formula_matches_page_descent(self):
        for seed in (0, 5, 12, 17):
            x = random_filtered_complex(2, size=12, seed=seed)
            r_max = stabilization_page(x)
            tab = survivors(x, r_max)
            tracked = survivors_tracked(x, r_max)
            for key, seq in tab.chains.items():
                for idx, sub in enumerate(seq):
                    assert sub.equals(tracked[key][idx]), (seed, key, idx)


class TestCrossing:
    def test_degenerate_true(self):
        x = level_preserving_fixture()
        ok, wit = crossing_differentials_ok(x, 2, 3, 1)
        assert ok and not wit

    def test_late_differential_violation(self):
        chart = AbstractChart(
            2,
            [
                ChartClass("src", 0, 2),
                ChartClass("tgt", 4, 1),
                ChartClass("spectator", 3, 1),
            ],
            [ChartDifferential(4, "src", "tgt")],
        )
        x = realize_ss(chart)
        ok, wit = crossing_differentials_ok(x, 2, 3, 1)
        assert not ok
        assert len(wit) == 1
        page_idx, n, t, coords = wit[0]
        assert (page_idx, n, t) == (4, 0, 2)

    def test_adams_style_cell_is_clean(self):
        # permanent cells everywhere -> hypothesis holds at any (k, n, t)
        x = two_cell_filtered(2)
        ok, wit = crossing_differentials_ok(x, 2, 4, 0)
        assert ok


class TestRealize:
    def test_single_permanent_class(self):
        chart = AbstractChart(2, [ChartClass("x", 1, 3)], [])
        x = realize_ss(chart)
        assert x.complex.dim(3) == 1
        e1 = page(x, 1)
        assert e1.dims() == {(1, 3): 1}

    def test_single_d2_roundtrip(self):
        chart = AbstractChart(
            2,
            [ChartClass("s", 0, 1), ChartClass("t", 2, 0)],
            [ChartDifferential(2, "s", "t")],
        )
        x = realize_ss(chart)
        for r in range(1, stabilization_page(x) + 1):
            pg = page(x, r)
            assert pg.dims() == {
                k: v for k, v in chart_alive_dims(chart, r).items() if v
            }
        assert rank(page(x, 2).differential(0, 1)) == 1

    def test_leibniz_closure_rejected(self):
        chart = AbstractChart(
            2,
            [
                ChartClass("one", 0, 0),
                ChartClass("h", 0, 1),
                ChartClass("w", 0, 2),
                ChartClass("v", 2, 1),
            ],
            [ChartDifferential(2, "w", "v")],
            products={("h", "h"): {"w": 1}},
            unit="one",
        )
        with pytest.raises(ChartError):
            realize_ss(chart)

    def test_multiplicative_chart_runs(self):
        chart = AbstractChart(
            2,
            [
                ChartClass("one", 0, 0),
                ChartClass("h", 0, 2),
                ChartClass("hh", 0, 4),
                ChartClass("x", 1, 1),
                ChartClass("y", 3, 0),
            ],
            [ChartDifferential(2, "x", "y")],
            products={("h", "h"): {"hh": 1}},
            unit="one",
        )
        x = realize_ss(chart)
        pg = page(x, 2)
        n, t, coords = page_product(
            x, pg, (0, 2, np.array([1])), (0, 2, np.array([1]))
        )
        assert (n, t) == (0, 4) and coords.tolist() == [1]

    def test_non_bijective_rejected(self):
        chart = AbstractChart(
            2,
            [ChartClass("s", 0, 1), ChartClass("s2", 0, 1), ChartClass("t", 2, 0)],
            [
                ChartDifferential(2, "s", "t"),
                ChartDifferential(2, "s2", "t"),
            ],
        )
        with pytest.raises(ChartError):
            realize_ss(chart)

    def test_roundtrip_random_charts(self):
        for seed in range(10):
            chart = random_chart(2, seed=seed)
            x = realize_ss(chart)
            stab = stabilization_page(x)
            for r in range(1, stab + 1):
                pg = page(x, r)
                expected = {
                    k: v for k, v in chart_alive_dims(chart, r).items() if v
                }
                assert pg.dims() == expected, (seed, r)
                for (n, t) in pg.cells:
                    assert rank(pg.differential(n, t)) == chart_rank(
                        chart, r, n, t
                    ), (seed, r, n, t)


class TestKExactTransfer:
    def test_pages_agree_after_k(self):
        k = 2
        x = two_cell_filtered(2)
        elements = [("b", 0), ("a", 1), ("q", 0), ("pq", 1)]
        d = FpMatrix(2, [[1, 0], [0, 1]])
        cx = GradedComplex(2, elements, {1: d})
        y = FilteredDGA(cx, {"a": 0, "b": 2, "pq": 0, "q": k})
        blocks = {0: FpMatrix(2, [[1], [0]]), 1: FpMatrix(2, [[1], [0]])}
        f = FilteredChainMap(x, y, ChainMap(x.complex, cx, blocks))
        assert f.is_k_exact(k)
        assert page(x, k + 1).dims() == page(y, k + 1).dims()
        # sharpness: earlier pages differ
        assert page(x, 1).dims() != page(y, 1).dims()
