"""Filtered DG algebras with adapted bases.

A filtration here is a level function on the basis: F_n is the span of
the elements with level >= n, a decreasing exhaustive filtration that
vanishes above n_max.  The differential must preserve levels and the
product must add them.  Every quotient F_n/F_m is then a plain index
selection, which keeps the Cartan-Eilenberg bookkeeping exact and
cheap.

The inclusion F_n into F_(n-1) plays the role of the degree-shifting
map tau: sustained homotopy groups are images of homology along it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

import numpy as np

from .complexes import Chain, ComplexError, DGAlgebra, GradedComplex, HomologyData
from .linalg import FpMatrix, Subspace, image, kernel

__all__ = [
    "FilteredDGA",
    "FiltrationQuotient",
    "SustainedGroup",
    "inverse_filtration_complex",
    "inverse_filtration_filtered",
    "DoubleFiltration",
]


class FilteredDGA:
    """A filtered complex, optionally with a filtration-multiplicative product.

    ``levels`` maps each basis name to its filtration level.  F_n is
    spanned by elements of level >= n.  Multiplicative structure is
    carried by an ordinary DGAlgebra on the same complex.
    """

    def __init__(
        self,
        complex: GradedComplex,
        levels: dict[str, int],
        algebra: DGAlgebra | None = None,
        check: bool = True,
    ):
        self.complex = complex
        self.p = complex.p
        self.algebra = algebra
        if set(levels) != set(complex.names):
            raise ComplexError("levels must cover exactly the basis")
        self.level_of = [levels[n] for n in complex.names]
        self.n_min = min(self.level_of) if self.level_of else 0
        self.n_max = max(self.level_of) if self.level_of else 0
        self._quotients: dict[tuple[int, int], FiltrationQuotient] = {}
        if check:
            self._check_filtration()
            if algebra is not None:
                self._check_multiplicative()

    # -- validation -------------------------------------------------------
    def _check_filtration(self) -> None:
        cx = self.complex
        for t in cx.support:
            mat = cx.d_matrix(t)
            src = cx.by_degree.get(t, [])
            dst = cx.by_degree.get(t - 1, [])
            rr, cc = np.nonzero(mat.data)
            for r, c in zip(rr, cc):
                if self.level_of[dst[r]] < self.level_of[src[c]]:
                    raise ComplexError(
                        f"differential drops filtration: {cx.names[src[c]]} -> {cx.names[dst[r]]}"
                    )

    def _check_multiplicative(self) -> None:
        alg = self.algebra
        cx = self.complex
        if self.level_of[alg.unit_index] != 0:
            raise ComplexError("unit must have filtration level 0")
        for gi, ni in enumerate(self.level_of):
            for gj, nj in enumerate(self.level_of):
                for gk in alg.product_basis(gi, gj):
                    if self.level_of[gk] < ni + nj:
                        raise ComplexError(
                            f"product drops filtration: {cx.names[gi]} * {cx.names[gj]}"
                        )

    # -- filtration pieces ---------------------------------------------------
    def indices_in_levels(self, lo: int, hi: int | None) -> list[int]:
        """Global indices with lo <= level (< hi when hi is given)."""
        return [
            gi
            for gi in range(len(self.complex.names))
            if self.level_of[gi] >= lo and (hi is None or self.level_of[gi] < hi)
        ]

    def quotient(self, n: int, m: int | None = None) -> "FiltrationQuotient":
        """The subquotient F_n/F_m (m = None means the subcomplex F_n)."""
        if m is not None and n >= m:
            raise ComplexError(f"quotient needs n < m, got {n} >= {m}")
        key = (n, m if m is not None else self.n_max + 1)
        cached = self._quotients.get(key)
        if cached is None:
            cached = FiltrationQuotient(self, n, key[1])
            self._quotients[key] = cached
        return cached

    def sub(self, n: int) -> "FiltrationQuotient":
        return self.quotient(n, None)

    def associated_graded(self) -> dict[int, "FiltrationQuotient"]:
        return {
            n: self.quotient(n, n + 1) for n in range(self.n_min, self.n_max + 1)
        }

    def chain_level(self, chain: Chain) -> int | None:
        """max n with chain in F_n; None for the zero chain."""
        idx = self.complex.by_degree.get(chain.degree, [])
        lv = [self.level_of[idx[li]] for li in np.nonzero(chain.vec)[0]]
        return min(lv) if lv else None

    def multiply(self, a: Chain, b: Chain) -> Chain:
        if self.algebra is None:
            raise ComplexError("filtered object carries no product")
        return self.algebra.multiply(a, b)

    def sustained_homotopy(self, k: int, n: int, t: int) -> "SustainedGroup":
        """Image of H_t(F_n) -> H_t(F_(n-k)) along tau^k, with representatives."""
        if k < 0:
            raise ComplexError("sustained homotopy needs k >= 0")
        return SustainedGroup.build(self, k, n, t)


class FiltrationQuotient:
    """F_n/F_m presented on the adapted basis (levels in [n, m))."""

    def __init__(self, parent: FilteredDGA, n: int, m: int):
        self.parent = parent
        self.n = n
        self.m = m
        self.indices = parent.indices_in_levels(n, m)
        keep = set(self.indices)
        cx = parent.complex
        elements = [
            (cx.names[gi], cx.degrees[gi], cx.aux[gi]) for gi in self.indices
        ]
        by_deg_local: dict[int, list[int]] = {}
        for gi in self.indices:
            by_deg_local.setdefault(cx.degrees[gi], []).append(gi)
        diff: dict[int, FpMatrix] = {}
        for t in sorted(by_deg_local):
            src = by_deg_local.get(t, [])
            dst = by_deg_local.get(t - 1, [])
            full = cx.d_matrix(t)
            rows_full = cx.by_degree.get(t - 1, [])
            cols_full = cx.by_degree.get(t, [])
            rsel = [rows_full.index(g) for g in dst]
            csel = [cols_full.index(g) for g in src]
            block = full.data[np.ix_(rsel, csel)] if src and dst else np.zeros(
                (len(dst), len(src)), dtype=np.int64
            )
            diff[t] = FpMatrix(parent.p, block)
        self.complex = GradedComplex(parent.p, elements, diff, check=False)
        assert keep == set(self.indices)

    def dim(self, t: int) -> int:
        return self.complex.dim(t)

    def homology(self, t: int, aux: Hashable = None) -> HomologyData:
        return self.complex.homology(t, aux)

    # -- chain plumbing between parent and quotient coordinates ---------------
    def project_chain(self, chain: Chain) -> Chain:
        """Restrict a parent chain to the [n, m) levels."""
        cx = self.parent.complex
        par_idx = cx.by_degree.get(chain.degree, [])
        loc_idx = self.complex.by_degree.get(chain.degree, [])
        pos = {gi: li for li, gi in enumerate(par_idx)}
        vec = np.zeros(len(loc_idx), dtype=np.int64)
        for li, gi in enumerate(loc_idx):
            vec[li] = chain.vec[pos[self.indices[gi]]]
        return Chain(chain.degree, vec)

    def lift_chain(self, chain: Chain) -> Chain:
        """Embed a quotient chain into parent coordinates."""
        cx = self.parent.complex
        par_idx = cx.by_degree.get(chain.degree, [])
        loc_idx = self.complex.by_degree.get(chain.degree, [])
        pos = {gi: li for li, gi in enumerate(par_idx)}
        vec = np.zeros(len(par_idx), dtype=np.int64)
        for li, gi in enumerate(loc_idx):
            vec[pos[self.indices[gi]]] = chain.vec[li]
        return Chain(chain.degree, vec)

    def eta_to(self, other: "FiltrationQuotient", t: int) -> FpMatrix:
        """The induced map F_n/F_m -> F_n'/F_m' for n' <= n, m' <= m."""
        if not (other.n <= self.n and other.m <= self.m):
            raise ComplexError(
                f"no natural map ({self.n},{self.m}) -> ({other.n},{other.m})"
            )
        cols = []
        dim_t = other.complex.dim(t)
        for li in range(self.complex.dim(t)):
            e = self.complex.zero_chain(t)
            e.vec[li] = 1
            cols.append(other.project_chain(self.lift_chain(e)).vec)
        return FpMatrix.from_columns(self.parent.p, cols, dim_t)


@dataclass
class SustainedGroup:
    """im(H_t(F_n) -> H_t(F_(n-k))) with chain representatives from F_n."""

    parent: FilteredDGA
    k: int
    n: int
    t: int
    dim: int
    subspace: Subspace  # inside H_t(F_(n-k)) coordinates
    reps: list[Chain]  # cycles in F_n (quotient sub-coordinates of F_(n-k))
    host: HomologyData

    @classmethod
    def build(cls, x: FilteredDGA, k: int, n: int, t: int) -> "SustainedGroup":
        upper = x.sub(n)
        lower = x.sub(n - k)
        h_up = upper.homology(t)
        h_lo = lower.homology(t)
        cols = []
        chains = []
        for r in range(h_up.dim):
            z = upper.lift_chain(h_up.rep_chain(r))
            z_lo = lower.project_chain(z)
            cols.append(h_lo.class_of(z_lo))
            chains.append(z_lo)
        mat = FpMatrix.from_columns(x.p, cols, h_lo.dim)
        img = image(mat)
        reps = []
        for row in img.basis.data:
            # pick a preimage of each image basis vector deterministically
            pre = _solve_combination(mat, row)
            vec = np.zeros_like(chains[0].vec) if chains else np.zeros(0, np.int64)
            for c, ch in zip(pre, chains):
                vec = (vec + int(c) * ch.vec) % x.p
            reps.append(Chain(t, vec))
        return cls(x, k, n, t, img.dim, img, reps, h_lo)

    def coker_dim(self) -> int:
        """dim of coker(H_(t+1)(F_(n-k)/F_n) -> H_t(F_n)) for cross-checking."""
        x = self.parent
        if self.k == 0:
            return x.sub(self.n).homology(self.t).dim
        mid = x.quotient(self.n - self.k, self.n)
        h_mid = mid.homology(self.t + 1)
        h_up = x.sub(self.n).homology(self.t)
        cols = []
        for r in range(h_mid.dim):
            z = mid.lift_chain(h_mid.rep_chain(r))
            dz = x.complex.d(z)
            dz_up = x.sub(self.n).project_chain(dz)
            cols.append(h_up.class_of(dz_up))
        mat = FpMatrix.from_columns(x.p, cols, h_up.dim)
        return h_up.dim - image(mat).dim


def _solve_combination(mat: FpMatrix, target: np.ndarray) -> np.ndarray:
    from .linalg import solve

    sol = solve(mat, target)
    if sol is None:
        raise ComplexError("image basis vector without preimage (internal)")
    return sol


class FilteredChainMap:
    """A chain map between filtered objects that never drops levels."""

    def __init__(self, source: FilteredDGA, target: FilteredDGA, chain_map: "ChainMap"):
        from .complexes import ChainMap

        if not isinstance(chain_map, ChainMap):
            raise ComplexError("FilteredChainMap wraps a ChainMap")
        if chain_map.source is not source.complex or chain_map.target is not target.complex:
            raise ComplexError("chain map endpoints do not match the filtered objects")
        self.source = source
        self.target = target
        self.map = chain_map
        self._check_levels()

    def _check_levels(self) -> None:
        for t in self.source.complex.support:
            block = self.map.block(t)
            src = self.source.complex.by_degree.get(t, [])
            dst = self.target.complex.by_degree.get(t, [])
            rr, cc = np.nonzero(block.data)
            for r, c in zip(rr, cc):
                if self.target.level_of[dst[r]] < self.source.level_of[src[c]]:
                    raise ComplexError("filtered map drops the filtration level")

    def induced_sustained(self, k: int, n: int, t: int) -> FpMatrix:
        """Matrix of pi^k_(n,t)(source) -> pi^k_(n,t)(target) on image bases."""
        sg_src = self.source.sustained_homotopy(k, n, t)
        sg_dst = self.target.sustained_homotopy(k, n, t)
        cols = []
        dst_sub = self.target.sub(n - k)
        for z in sg_src.reps:
            w = self.map.apply(sg_dst_lift(self.source, n - k, z))
            w_local = dst_sub.project_chain(w)
            host_coords = sg_dst.host.class_of(w_local)
            coords = sg_dst.subspace.coords(host_coords)
            if coords is None:
                raise ComplexError("induced map escapes the sustained image")
            cols.append(coords)
        return FpMatrix.from_columns(self.source.p, cols, sg_dst.dim)

    def is_k_exact(self, k: int) -> bool:
        """True when the induced map on every pi^k_(n,t) is an isomorphism."""
        from .linalg import rank

        degrees = set(self.source.complex.support) | set(self.target.complex.support)
        n_lo = min(self.source.n_min, self.target.n_min)
        n_hi = max(self.source.n_max, self.target.n_max)
        for t in sorted(degrees):
            for n in range(n_lo, n_hi + 1):
                a = self.source.sustained_homotopy(k, n, t)
                b = self.target.sustained_homotopy(k, n, t)
                if a.dim != b.dim:
                    return False
                if a.dim and rank(self.induced_sustained(k, n, t)) != a.dim:
                    return False
        return True


def sg_dst_lift(x: FilteredDGA, n: int, z: Chain) -> Chain:
    """Sustained reps live in sub(n) coordinates; lift to the parent."""
    return x.sub(n).lift_chain(z)


def inverse_filtration_complex(cx: GradedComplex, algebra: DGAlgebra | None = None) -> FilteredDGA:
    """Filtration by truncation: level of a degree-i element is -i.

    F_n keeps the degrees <= -n, so the filtration-preserving part of
    the differential vanishes and the associated graded is the
    underlying graded object with zero differential.
    """
    levels = {n: -cx.degrees[gi] for gi, n in enumerate(cx.names)}
    return FilteredDGA(cx, levels, algebra=algebra)


@dataclass
class DoubleFiltration:
    """The second filtration of a filtered object by its own levels.

    Stage n is the subobject F_n with its inherited filtration; the
    graded piece at n is the single-level object on the level-n basis.
    """

    source: FilteredDGA
    stages: dict[int, FilteredDGA]
    pieces: dict[int, FilteredDGA]

    def stage(self, n: int) -> FilteredDGA:
        return self.stages[n]

    def piece(self, n: int) -> FilteredDGA:
        return self.pieces[n]


def inverse_filtration_filtered(u: FilteredDGA) -> DoubleFiltration:
    """Re-filter a filtered object by original level: stage n = F_n(u)."""
    stages: dict[int, FilteredDGA] = {}
    pieces: dict[int, FilteredDGA] = {}
    for n in range(u.n_min, u.n_max + 1):
        sub = u.sub(n)
        levels = {
            u.complex.names[gi]: u.level_of[gi] for gi in sub.indices
        }
        stages[n] = FilteredDGA(sub.complex, levels, algebra=None, check=False)
        gr = u.quotient(n, n + 1)
        levels_gr = {u.complex.names[gi]: n for gi in gr.indices}
        pieces[n] = FilteredDGA(gr.complex, levels_gr, algebra=None, check=False)
    return DoubleFiltration(u, stages, pieces)
