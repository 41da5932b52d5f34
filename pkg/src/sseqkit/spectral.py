"""The spectral-sequence engine for filtered DG algebras.

Pages are computed by the image formula

    E_r(n, t) = im( H_t(F_n / F_(n+r)) -> H_t(F_(n-r+1) / F_(n+1)) ),

with the page differential induced by the connecting map of the triple
(n-r+1, n+1, n+r+1); an independent classical Z/B computation is kept
alongside as an oracle.  Cell representatives are chains z in F_n with
dz in F_(n+r), chosen deterministically from RREF pivots, so products,
survivor tables, and defining systems downstream are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexes import Chain, ComplexError, HomologyData
from .filtration import FilteredDGA, FiltrationQuotient
from .linalg import FpMatrix, Subspace, image, kernel, solve

__all__ = [
    "CESystem",
    "Page",
    "PageCell",
    "SurvivorTable",
    "page",
    "page_differential",
    "zb_oracle_page",
    "page_product",
    "survivors",
    "survivors_tracked",
    "permanent_subspace",
    "crossing_differentials_ok",
    "stabilization_page",
    "ChartClass",
    "ChartDifferential",
    "AbstractChart",
    "ChartError",
    "realize_ss",
    "chart_alive_dims",
    "chart_rank",
]


class CESystem:
    """Memoized homology of the filtration subquotients with eta and delta maps.

    H(i, j, t) is H_t(F_i/F_j); eta is induced by shrinking the window,
    delta by the boundary of the triple i <= j <= k.
    """

    def __init__(self, x: FilteredDGA):
        self.x = x

    def quotient(self, i: int, j: int) -> FiltrationQuotient:
        return self.x.quotient(i, j)

    def homology(self, i: int, j: int, t: int) -> HomologyData:
        return self.quotient(i, j).homology(t)

    def eta(self, i: int, j: int, ip: int, jp: int, t: int) -> FpMatrix:
        """H_t(F_i/F_j) -> H_t(F_ip/F_jp) for ip <= i, jp <= j."""
        src = self.quotient(i, j)
        dst = self.quotient(ip, jp)
        hs = src.homology(t)
        hd = dst.homology(t)
        cols = []
        for k in range(hs.dim):
            z = src.lift_chain(hs.rep_chain(k))
            cols.append(hd.class_of(dst.project_chain(z)))
        return FpMatrix.from_columns(self.x.p, cols, hd.dim)

    def delta(self, i: int, j: int, k: int, t: int) -> FpMatrix:
        """Connecting map H_t(F_i/F_j) -> H_(t-1)(F_j/F_k) of a triple."""
        src = self.quotient(i, j)
        dst = self.quotient(j, k)
        hs = src.homology(t)
        hd = dst.homology(t - 1)
        cols = []
        for m in range(hs.dim):
            z = src.lift_chain(hs.rep_chain(m))
            dz = self.x.complex.d(z)
            cols.append(hd.class_of(dst.project_chain(dz)))
        return FpMatrix.from_columns(self.x.p, cols, hd.dim)


# ----------------------------------------------------------------------
# Pages
# ----------------------------------------------------------------------

@dataclass
class PageCell:
    """One (n, t) cell: a subspace of the host homology H_t(F_(n-r+1)/F_(n+1))
    together with chain representatives z in F_n satisfying dz in F_(n+r)."""

    n: int
    t: int
    r: int
    host: HomologyData
    host_window: tuple[int, int]
    basis_in_host: FpMatrix  # rows in RREF
    reps: list[Chain]  # parent-complex chains

    @property
    def dim(self) -> int:
        return self.basis_in_host.rows

    def subspace(self) -> Subspace:
        return Subspace.from_rows(
            self.host.complex.p, self.host.dim, self.basis_in_host.data
        )

    def coords_of_host_class(self, host_coords: np.ndarray) -> np.ndarray:
        coords = self.subspace().coords(host_coords)
        if coords is None:
            raise ComplexError("class does not lie in the page cell")
        return coords

    def rep_of(self, coords: np.ndarray) -> Chain:
        if not self.reps:
            raise ComplexError("empty cell has no representatives")
        vec = np.zeros_like(self.reps[0].vec)
        for c, ch in zip(coords, self.reps):
            vec = (vec + int(c) * ch.vec) % self.host.complex.p
        return Chain(self.t, vec)


@dataclass
class Page:
    x: FilteredDGA
    r: int
    cells: dict[tuple[int, int], PageCell] = field(default_factory=dict)
    diffs: dict[tuple[int, int], FpMatrix] = field(default_factory=dict)

    def cell(self, n: int, t: int) -> PageCell | None:
        return self.cells.get((n, t))

    def dim(self, n: int, t: int) -> int:
        c = self.cells.get((n, t))
        return c.dim if c else 0

    def dims(self) -> dict[tuple[int, int], int]:
        return {key: c.dim for key, c in sorted(self.cells.items()) if c.dim}

    def differential(self, n: int, t: int) -> FpMatrix:
        d = self.diffs.get((n, t))
        if d is None:
            return FpMatrix.zeros(self.x.p, self.dim(n + self.r, t - 1), self.dim(n, t))
        return d

    def host_class(self, cell: PageCell, chain: Chain) -> np.ndarray:
        """Host-homology coordinates of a parent chain (must be a host cycle)."""
        quot = self.x.quotient(*cell.host_window)
        return cell.host.class_of(quot.project_chain(chain))

    def cell_coords(self, n: int, t: int, chain: Chain) -> np.ndarray:
        cell = self.cell(n, t)
        if cell is None:
            raise ComplexError(f"no cell at ({n},{t}) on page {self.r}")
        return cell.coords_of_host_class(self.host_class(cell, chain))


def _image_with_preimages(
    p: int, cols: list[np.ndarray], payloads: list[Chain], host_dim: int, t: int, veclen: int
) -> tuple[FpMatrix, list[Chain]]:
    """RREF basis of span(cols) plus the matching combinations of payloads."""
    mat = FpMatrix.from_columns(p, cols, host_dim)
    img = image(mat)
    reps = []
    for row in img.basis.data:
        pre = solve(mat, row)
        if pre is None:
            raise ComplexError("image basis vector without preimage (internal)")
        vec = np.zeros(veclen, dtype=np.int64)
        for c, ch in zip(pre, payloads):
            vec = (vec + int(c) * ch.vec) % p
        reps.append(Chain(t, vec))
    return img.basis, reps


def page(x: FilteredDGA, r: int) -> Page:
    """Page r with all nonzero cells and their differentials."""
    if r < 1:
        raise ComplexError("pages are indexed from r = 1")
    pg = Page(x, r)
    cx = x.complex
    for t in cx.support:
        for n in range(x.n_min, x.n_max + 1):
            cell = _page_cell(x, r, n, t)
            if cell.dim:
                pg.cells[(n, t)] = cell
    for (n, t), cell in sorted(pg.cells.items()):
        pg.diffs[(n, t)] = _cell_differential(x, pg, cell)
    return pg


def _page_cell(x: FilteredDGA, r: int, n: int, t: int) -> PageCell:
    window = (n - r + 1, n + 1)
    source = x.quotient(n, n + r)
    host = x.quotient(*window)
    hs = source.homology(t)
    hh = host.homology(t)
    if hh.dim == 0 or hs.dim == 0:
        return PageCell(n, t, r, hh, window, FpMatrix.zeros(x.p, 0, hh.dim), [])
    cols = []
    chains = []
    for k in range(hs.dim):
        z = source.lift_chain(hs.rep_chain(k))
        cols.append(hh.class_of(host.project_chain(z)))
        chains.append(z)
    veclen = x.complex.dim(t)
    basis, reps = _image_with_preimages(x.p, cols, chains, hh.dim, t, veclen)
    return PageCell(n, t, r, hh, window, basis, reps)


def _cell_differential(x: FilteredDGA, pg: Page, cell: PageCell) -> FpMatrix:
    r = pg.r
    n, t = cell.n, cell.t
    target = pg.cell(n + r, t - 1)
    tdim = target.dim if target else 0
    cols = []
    for z in cell.reps:
        dz = x.complex.d(z)
        if tdim == 0:
            if _host_class_nonzero(x, dz, n + 1, n + r + 1):
                raise ComplexError("nonzero differential into an unrecorded cell")
            cols.append(np.zeros(0, dtype=np.int64))
            continue
        coords = target.coords_of_host_class(pg.host_class(target, dz))
        cols.append(coords)
    return FpMatrix.from_columns(x.p, cols, tdim)


def _host_class_nonzero(x: FilteredDGA, chain: Chain, lo: int, hi: int) -> bool:
    q = x.quotient(lo, hi)
    w = q.project_chain(chain)
    if not w.vec.any():
        return False
    h = q.homology(chain.degree)
    if h.dim == 0:
        return False
    return bool(h.class_of(w).any())


def page_differential(x: FilteredDGA, r: int, n: int, t: int) -> FpMatrix:
    pg = page(x, r)
    cell = pg.cell(n, t)
    if cell is None:
        return FpMatrix.zeros(x.p, pg.dim(n + r, t - 1), 0)
    return pg.differential(n, t)


def stabilization_page(x: FilteredDGA) -> int:
    """All d_r with r >= this index vanish, so E_stab = E_infinity."""
    return max(x.n_max - x.n_min + 1, 1) + 1


# ----------------------------------------------------------------------
# Classical Z/B oracle
# ----------------------------------------------------------------------

def _z_subspace(x: FilteredDGA, n: int, r: int, t: int) -> Subspace:
    """Z_r(n, t) = {z in F_n of degree t : dz in F_(n+r)} in parent coordinates."""
    cx = x.complex
    idx_t = cx.by_degree.get(t, [])
    cols = [li for li, gi in enumerate(idx_t) if x.level_of[gi] >= n]
    if not cols:
        return Subspace.zero(x.p, len(idx_t))
    idx_prev = cx.by_degree.get(t - 1, [])
    rows = [li for li, gi in enumerate(idx_prev) if x.level_of[gi] < n + r]
    dmat = cx.d_matrix(t)
    if rows:
        block = dmat.data[np.ix_(rows, cols)]
    else:
        block = np.zeros((0, len(cols)), dtype=np.int64)
    ker = kernel(FpMatrix(x.p, block))
    out = np.zeros((ker.dim, len(idx_t)), dtype=np.int64)
    for i, v in enumerate(ker.basis.data):
        out[i, cols] = v
    return Subspace.from_rows(x.p, len(idx_t), out)


def zb_oracle_page(x: FilteredDGA, r: int) -> dict[tuple[int, int], int]:
    """Page dims from the classical Z_r/(Z_(r-1) + d Z_(r-1)) formula."""
    if r < 1:
        raise ComplexError("pages are indexed from r = 1")
    cx = x.complex
    dims: dict[tuple[int, int], int] = {}
    for t in cx.support:
        for n in range(x.n_min, x.n_max + 1):
            z_r = _z_subspace(x, n, r, t)
            if z_r.dim == 0:
                continue
            denom = _z_subspace(x, n + 1, r - 1, t)
            upper = _z_subspace(x, n - r + 1, r - 1, t + 1)
            dmat = cx.d_matrix(t + 1)
            if upper.dim:
                rows = np.array([(dmat @ v) for v in upper.basis.data])
                denom = denom.add(Subspace.from_rows(x.p, z_r.ambient_dim, rows))
            if not denom.le(z_r):
                raise ComplexError("oracle denominator escapes Z_r (internal)")
            d = z_r.dim - denom.dim
            if d:
                dims[(n, t)] = d
    return dims


# ----------------------------------------------------------------------
# Multiplicative structure
# ----------------------------------------------------------------------

def page_product(
    x: FilteredDGA,
    pg: Page,
    a: tuple[int, int, np.ndarray],
    b: tuple[int, int, np.ndarray],
) -> tuple[int, int, np.ndarray]:
    """Multiply two page classes given as (n, t, cell coordinates)."""
    if x.algebra is None:
        raise ComplexError("page products need a multiplicative filtered object")
    (n1, t1, c1), (n2, t2, c2) = a, b
    cell1, cell2 = pg.cell(n1, t1), pg.cell(n2, t2)
    if cell1 is None or cell2 is None:
        raise ComplexError("page product with an empty cell factor")
    z1 = cell1.rep_of(np.asarray(c1, dtype=np.int64))
    z2 = cell2.rep_of(np.asarray(c2, dtype=np.int64))
    w = x.multiply(z1, z2)
    n, t = n1 + n2, t1 + t2
    target = pg.cell(n, t)
    if target is None or target.dim == 0:
        if _host_class_nonzero(x, w, n - pg.r + 1, n + 1):
            raise ComplexError("product lands outside the recorded page cells")
        return (n, t, np.zeros(0, dtype=np.int64))
    return (n, t, pg.cell_coords(n, t, w))


# ----------------------------------------------------------------------
# Survivors and permanent cycles
# ----------------------------------------------------------------------

@dataclass
class SurvivorTable:
    """Per E_2 cell: the decreasing chain E_(2,2) >= ... >= E_(2,r_max) and
    the permanent-cycle subspace, all in E_2 cell coordinates."""

    x: FilteredDGA
    r_max: int
    e2: Page
    chains: dict[tuple[int, int], list[Subspace]]  # list index 0 is page 2
    permanent: dict[tuple[int, int], Subspace]
    reps: dict[tuple[int, int], list[list[Chain]]]

    def subspace(self, n: int, t: int, r: int) -> Subspace:
        cell = self.e2.cell(n, t)
        dim = cell.dim if cell else 0
        seq = self.chains.get((n, t))
        if seq is None:
            return Subspace.zero(self.x.p, dim)
        return seq[min(r, self.r_max) - 2]

    def rep_chains(self, n: int, t: int, r: int) -> list[Chain]:
        seq = self.reps.get((n, t))
        if seq is None:
            return []
        return seq[min(r, self.r_max) - 2]

    def permanent_at(self, n: int, t: int) -> Subspace:
        cell = self.e2.cell(n, t)
        dim = cell.dim if cell else 0
        return self.permanent.get((n, t), Subspace.zero(self.x.p, dim))


def _image_in_cell(
    x: FilteredDGA, pg: Page, cell: PageCell, source: FiltrationQuotient
) -> tuple[Subspace, list[Chain]]:
    """Image of H_t(source) inside a page cell, in cell coordinates."""
    hs = source.homology(cell.t)
    sub = cell.subspace()
    cols = []
    chains = []
    for k in range(hs.dim):
        z = source.lift_chain(hs.rep_chain(k))
        host_class = pg.host_class(cell, z)
        coords = sub.coords(host_class)
        if coords is None:
            raise ComplexError("survivor image escapes the page cell (internal)")
        cols.append(coords)
        chains.append(z)
    if not cols:
        return Subspace.zero(x.p, cell.dim), []
    veclen = x.complex.dim(cell.t)
    basis, reps = _image_with_preimages(x.p, cols, chains, cell.dim, cell.t, veclen)
    return Subspace.from_rows(x.p, cell.dim, basis.data), reps


def survivors(x: FilteredDGA, r_max: int) -> SurvivorTable:
    """Survivor chains by the image formula: E_(2,r) is the image of
    H_t(F_n/F_(n+r)) in the E_2 cell; permanent cycles come from H_t(F_n)."""
    if r_max < 2:
        raise ComplexError("survivor tables start at page 2")
    e2 = page(x, 2)
    chains: dict[tuple[int, int], list[Subspace]] = {}
    permanent: dict[tuple[int, int], Subspace] = {}
    reps: dict[tuple[int, int], list[list[Chain]]] = {}
    for (n, t), cell in sorted(e2.cells.items()):
        seq = []
        rep_seq = []
        for r in range(2, r_max + 1):
            sub, rp = _image_in_cell(x, e2, cell, x.quotient(n, n + r))
            seq.append(sub)
            rep_seq.append(rp)
        chains[(n, t)] = seq
        reps[(n, t)] = rep_seq
        perm, _ = _image_in_cell(x, e2, cell, x.sub(n))
        permanent[(n, t)] = perm
    return SurvivorTable(x, r_max, e2, chains, permanent, reps)


def survivors_tracked(x: FilteredDGA, r_max: int) -> dict[tuple[int, int], list[Subspace]]:
    """Independent survivor computation: descend page by page through the
    kernels of d_r, correcting representatives so dz climbs one level of
    the filtration at each surviving stage."""
    e2 = page(x, 2)
    out: dict[tuple[int, int], list[Subspace]] = {}
    for (n, t), cell in sorted(e2.cells.items()):
        coords = [np.eye(cell.dim, dtype=np.int64)[k] for k in range(cell.dim)]
        zs = [cell.reps[k].copy() for k in range(cell.dim)]  # dz in F_(n+2)
        seq = [Subspace.full(x.p, cell.dim)]
        for r in range(2, r_max):
            # classes of dz in H_(t-1)(F_(n+1)/F_(n+r+1)) cut the kernel
            target_q = x.quotient(n + 1, n + r + 1)
            ht = target_q.homology(t - 1)
            cols = []
            for z in zs:
                dz = x.complex.d(z)
                cols.append(ht.class_of(target_q.project_chain(dz)))
            mat = FpMatrix.from_columns(x.p, cols, ht.dim)
            ker = kernel(mat)
            new_coords = []
            new_zs = []
            for v in ker.basis.data:
                cvec = np.zeros(cell.dim, dtype=np.int64)
                zvec = np.zeros_like(zs[0].vec) if zs else np.zeros(0, np.int64)
                for c, old_c, old_z in zip(v, coords, zs):
                    cvec = (cvec + int(c) * old_c) % x.p
                    zvec = (zvec + int(c) * old_z.vec) % x.p
                z = Chain(t, zvec)
                z = _push_rep(x, z, n, r)
                new_coords.append(cvec)
                new_zs.append(z)
            coords, zs = new_coords, new_zs
            seq.append(Subspace.from_rows(x.p, cell.dim, np.array(coords).reshape(len(coords), cell.dim)))
        out[(n, t)] = seq
    return out


def _push_rep(x: FilteredDGA, z: Chain, n: int, r: int) -> Chain:
    """Given z in F_n with [dz] = 0 in H(F_(n+1)/F_(n+r+1)), correct z by a
    chain in F_(n+1) so that dz lands in F_(n+r+1)."""
    cx = x.complex
    t = z.degree
    dz = cx.d(z)
    rows_all = cx.by_degree.get(t - 1, [])
    rows = [li for li, gi in enumerate(rows_all) if x.level_of[gi] < n + r + 1]
    if not rows:
        return z
    cols_all = cx.by_degree.get(t, [])
    cols = [li for li, gi in enumerate(cols_all) if x.level_of[gi] >= n + 1]
    dmat = cx.d_matrix(t)
    block = dmat.data[np.ix_(rows, cols)] if cols else np.zeros((len(rows), 0), dtype=np.int64)
    rhs = dz.vec[rows]
    sol = solve(FpMatrix(x.p, block), rhs)
    if sol is None:
        raise ComplexError("survivor correction unsolvable (internal)")
    u = np.zeros(len(cols_all), dtype=np.int64)
    u[cols] = sol
    return Chain(t, (z.vec - u) % x.p)


def permanent_subspace(x: FilteredDGA, pg: Page, n: int, t: int) -> Subspace:
    """Permanent-cycle subspace of the (n, t) cell: classes with a
    representative cycle in F_n (the image of H_t(F_n))."""
    cell = pg.cell(n, t)
    if cell is None:
        return Subspace.zero(x.p, 0)
    sub, _ = _image_in_cell(x, pg, cell, x.sub(n))
    return sub


def crossing_differentials_ok(
    x: FilteredDGA, k: int, n: int, t: int
) -> tuple[bool, list[tuple[int, int, int, np.ndarray]]]:
    """Check that for every l > 0 all classes of E_(k+l+1) at
    (n - k - l, t + 1) are permanent cycles; witnesses are offenders as
    (page, n', t', cell coordinates)."""
    witnesses: list[tuple[int, int, int, np.ndarray]] = []
    stab = stabilization_page(x)
    pages: dict[int, Page] = {}
    for ell in range(1, max(n - k - x.n_min, 0) + 1):
        j = k + ell + 1
        if j >= stab:
            break
        np_ = n - k - ell
        if np_ < x.n_min:
            break
        pg = pages.get(j)
        if pg is None:
            pg = page(x, j)
            pages[j] = pg
        cell = pg.cell(np_, t + 1)
        if cell is None or cell.dim == 0:
            continue
        perm = permanent_subspace(x, pg, np_, t + 1)
        for row in np.eye(cell.dim, dtype=np.int64):
            if not perm.contains(row):
                witnesses.append((j, np_, t + 1, row))
    return (not witnesses, witnesses)


# ----------------------------------------------------------------------
# Abstract charts and their realization as filtered DGAs
# ----------------------------------------------------------------------

class ChartError(ValueError):
    """Invalid abstract chart: bad bidegrees, non-bijective differentials,
    or a Leibniz-inconsistent product table."""


@dataclass(frozen=True)
class ChartClass:
    name: str
    n: int  # filtration degree; s = -n in cohomological display
    t: int


@dataclass(frozen=True)
class ChartDifferential:
    r: int
    source: str
    target: str
    coeff: int = 1


@dataclass
class AbstractChart:
    """A finite multiplicative chart: classes, page differentials forming
    bijections between sources and targets, and an optional product table."""

    p: int
    classes: list[ChartClass]
    differentials: list[ChartDifferential]
    products: dict[tuple[str, str], dict[str, int]] | None = None
    unit: str | None = None

    def class_by_name(self) -> dict[str, ChartClass]:
        return {c.name: c for c in self.classes}


def _chart_pages(chart: AbstractChart) -> dict[int, list[ChartDifferential]]:
    pages: dict[int, list[ChartDifferential]] = {}
    for d in chart.differentials:
        pages.setdefault(d.r, []).append(d)
    return pages


def _validate_chart(chart: AbstractChart) -> None:
    by_name = chart.class_by_name()
    if len(by_name) != len(chart.classes):
        raise ChartError("duplicate class names")
    sources: dict[str, int] = {}
    targets: dict[str, int] = {}
    for d in chart.differentials:
        if d.source not in by_name or d.target not in by_name:
            raise ChartError(f"differential references unknown class {d.source}->{d.target}")
        if d.r < 1:
            raise ChartError("differentials start on page 1")
        src, tgt = by_name[d.source], by_name[d.target]
        if (tgt.n, tgt.t) != (src.n + d.r, src.t - 1):
            raise ChartError(
                f"d_{d.r}({d.source}) hits ({tgt.n},{tgt.t}), expected "
                f"({src.n + d.r},{src.t - 1})"
            )
        if d.source in sources and sources[d.source] != d.r:
            raise ChartError(f"{d.source} is a source on two pages")
        if d.target in targets and targets[d.target] != d.r:
            raise ChartError(f"{d.target} is a target on two pages")
        sources[d.source] = d.r
        targets[d.target] = d.r
    overlap = set(sources) & set(targets)
    if overlap:
        raise ChartError(f"classes both source and target: {sorted(overlap)}")
    # each page's matrix must be a bijection S_r -> T_r
    for r, ds in _chart_pages(chart).items():
        src_names = sorted({d.source for d in ds})
        tgt_names = sorted({d.target for d in ds})
        if len(src_names) != len(tgt_names):
            raise ChartError(f"page {r}: {len(src_names)} sources vs {len(tgt_names)} targets")
        mat = np.zeros((len(tgt_names), len(src_names)), dtype=np.int64)
        for d in ds:
            mat[tgt_names.index(d.target), src_names.index(d.source)] = d.coeff % chart.p
        from .linalg import rank as _rank

        if _rank(FpMatrix(chart.p, mat)) != len(src_names):
            raise ChartError(f"page {r}: differential matrix is not invertible")


def realize_ss(chart: AbstractChart) -> FilteredDGA:
    """Realize an abstract chart as a filtered DG module (or algebra, when a
    product table is supplied), whose pages reproduce the chart from E_1 on."""
    from .complexes import DGAlgebra, GradedComplex

    _validate_chart(chart)
    by_name = chart.class_by_name()
    elements = [(c.name, c.t) for c in chart.classes]
    # assemble the differential per degree
    p = chart.p
    cx_elements_order = [c.name for c in chart.classes]
    by_degree: dict[int, list[str]] = {}
    for c in chart.classes:
        by_degree.setdefault(c.t, []).append(c.name)
    diff: dict[int, FpMatrix] = {}
    for t, names in sorted(by_degree.items()):
        prev = by_degree.get(t - 1, [])
        mat = np.zeros((len(prev), len(names)), dtype=np.int64)
        for d in chart.differentials:
            src = by_name[d.source]
            if src.t != t:
                continue
            mat[prev.index(d.target), names.index(d.source)] = d.coeff % p
        diff[t] = FpMatrix(p, mat)
    cx = GradedComplex(p, elements, diff)
    del cx_elements_order
    algebra = None
    if chart.products is not None:
        if chart.unit is None:
            raise ChartError("a product table needs a designated unit class")
        unit_cls = by_name.get(chart.unit)
        if unit_cls is None or (unit_cls.n, unit_cls.t) != (0, 0):
            raise ChartError("unit class must sit at (n, t) = (0, 0)")
        try:
            algebra = DGAlgebra(cx, chart.unit, chart.products)
        except ComplexError as exc:
            raise ChartError(f"product table rejected: {exc}") from exc
    levels = {c.name: c.n for c in chart.classes}
    try:
        return FilteredDGA(cx, levels, algebra=algebra)
    except ComplexError as exc:
        raise ChartError(f"chart does not realize: {exc}") from exc


def chart_alive_dims(chart: AbstractChart, r: int) -> dict[tuple[int, int], int]:
    """Expected page-r cell dims: classes alive on page r, counted by (n, t).

    A source or target of a d_j is alive on pages <= j and dead after.
    """
    by_name = chart.class_by_name()
    role: dict[str, int] = {}
    for d in chart.differentials:
        role[d.source] = d.r
        role[d.target] = d.r
    dims: dict[tuple[int, int], int] = {}
    for c in chart.classes:
        j = role.get(c.name)
        if j is not None and r > j:
            continue
        key = (c.n, c.t)
        dims[key] = dims.get(key, 0) + 1
    return dims


def chart_rank(chart: AbstractChart, r: int, n: int, t: int) -> int:
    """Expected rank of d_r out of (n, t): sources of page-r differentials there."""
    by_name = chart.class_by_name()
    srcs = {
        d.source
        for d in chart.differentials
        if d.r == r and by_name[d.source].n == n and by_name[d.source].t == t
    }
    return len(srcs)
