"""Graded chain complexes and differential graded algebras over F_p.

Homological conventions, fixed once here and used everywhere:

* the differential lowers the (internal) degree t by one;
* the shifted complex X[i] carries differential (-1)^i d;
* the mapping cone of f: X -> Y is X[1] (+) Y with differential
  -d_X + d_Y + f;
* the bar involution is x|-> (-1)^(1+deg x) x.

Complexes are finite: a basis per degree, one matrix per degree.  A
basis element may carry an auxiliary label (a second grading preserved
by the differential); homology splits into blocks along it, which keeps
the large bigraded fixtures fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

import numpy as np

from .linalg import (
    FpMatrix,
    LinearError,
    Subspace,
    image,
    kernel,
    quotient_basis,
    solve,
)

__all__ = [
    "ComplexError",
    "Chain",
    "GradedComplex",
    "HomologyData",
    "ChainMap",
    "DGAlgebra",
    "bar_sign",
    "shift",
    "mapping_cone",
    "direct_sum",
]


class ComplexError(ValueError):
    """Construction-time violation: shapes, d*d != 0, algebra axioms."""


@dataclass
class Chain:
    """A homogeneous chain: its degree plus coordinates in that degree's basis."""

    degree: int
    vec: np.ndarray

    def is_zero(self) -> bool:
        return not self.vec.any()

    def copy(self) -> "Chain":
        return Chain(self.degree, self.vec.copy())


class GradedComplex:
    """A bounded complex of finite-dimensional F_p vector spaces.

    ``elements`` fixes a global basis order; each element has a name, a
    degree, and an optional aux label.  ``diff[t]`` maps degree-t
    coordinates to degree-(t-1) coordinates.
    """

    def __init__(
        self,
        p: int,
        elements: Iterable[tuple[str, int] | tuple[str, int, Hashable]],
        diff: dict[int, FpMatrix],
        check: bool = True,
    ):
        self.p = p
        self.names: list[str] = []
        self.degrees: list[int] = []
        self.aux: list[Hashable] = []
        for el in elements:
            if len(el) == 2:
                name, deg = el
                label = None
            else:
                name, deg, label = el
            self.names.append(name)
            self.degrees.append(deg)
            self.aux.append(label)
        if len(set(self.names)) != len(self.names):
            raise ComplexError("duplicate basis element names")
        self.index_of = {n: i for i, n in enumerate(self.names)}
        self.by_degree: dict[int, list[int]] = {}
        for i, t in enumerate(self.degrees):
            self.by_degree.setdefault(t, []).append(i)
        self.diff: dict[int, FpMatrix] = {}
        for t, mat in diff.items():
            want = (self.dim(t - 1), self.dim(t))
            if mat.shape != want:
                raise ComplexError(f"differential at degree {t}: shape {mat.shape}, expected {want}")
            if mat.p != p:
                raise ComplexError("differential prime mismatch")
            self.diff[t] = mat
        self._hcache: dict[tuple[int, Hashable], HomologyData] = {}
        if check:
            self._check_d_squared()
            self._check_aux()

    # -- structure ------------------------------------------------------
    def dim(self, t: int) -> int:
        return len(self.by_degree.get(t, []))

    @property
    def support(self) -> list[int]:
        return sorted(t for t, idx in self.by_degree.items() if idx)

    def degree_bounds(self) -> tuple[int, int]:
        sup = self.support
        if not sup:
            return (0, 0)
        return (sup[0], sup[-1])

    def d_matrix(self, t: int) -> FpMatrix:
        mat = self.diff.get(t)
        if mat is None:
            return FpMatrix.zeros(self.p, self.dim(t - 1), self.dim(t))
        return mat

    def local_index(self, name: str) -> tuple[int, int]:
        gi = self.index_of[name]
        t = self.degrees[gi]
        return t, self.by_degree[t].index(gi)

    def basis_chain(self, name: str) -> Chain:
        t, li = self.local_index(name)
        vec = np.zeros(self.dim(t), dtype=np.int64)
        vec[li] = 1
        return Chain(t, vec)

    def zero_chain(self, t: int) -> Chain:
        return Chain(t, np.zeros(self.dim(t), dtype=np.int64))

    def chain_from(self, terms: dict[str, int], degree: int | None = None) -> Chain:
        """Assemble a homogeneous chain from name -> coefficient."""
        degs = {self.degrees[self.index_of[n]] for n in terms}
        if len(degs) > 1:
            raise ComplexError(f"inhomogeneous chain across degrees {sorted(degs)}")
        t = degs.pop() if degs else degree
        if t is None:
            raise ComplexError("empty chain needs an explicit degree")
        out = self.zero_chain(t)
        for n, c in terms.items():
            _, li = self.local_index(n)
            out.vec[li] = (out.vec[li] + c) % self.p
        return out

    def names_in_degree(self, t: int) -> list[str]:
        return [self.names[i] for i in self.by_degree.get(t, [])]

    def d(self, chain: Chain) -> Chain:
        return Chain(chain.degree - 1, self.d_matrix(chain.degree) @ chain.vec)

    def is_cycle(self, chain: Chain) -> bool:
        return not self.d(chain).vec.any()

    def describe(self, chain: Chain) -> str:
        names = self.names_in_degree(chain.degree)
        parts = [
            (f"{c}*" if c != 1 else "") + names[i]
            for i, c in enumerate(chain.vec)
            if c
        ]
        return " + ".join(parts) if parts else "0"

    # -- validation -------------------------------------------------------
    def _check_d_squared(self) -> None:
        for t in self.support:
            if self.dim(t - 2) == 0 or self.dim(t) == 0:
                continue
            comp = self.d_matrix(t - 1) @ self.d_matrix(t)
            if not comp.is_zero():
                raise ComplexError(f"d*d != 0 from degree {t}")

    def _check_aux(self) -> None:
        if all(a is None for a in self.aux):
            return
        for t in self.support:
            mat = self.d_matrix(t)
            src = self.by_degree.get(t, [])
            dst = self.by_degree.get(t - 1, [])
            rr, cc = np.nonzero(mat.data)
            for r, c in zip(rr, cc):
                if self.aux[dst[r]] != self.aux[src[c]]:
                    raise ComplexError(
                        f"differential does not preserve aux grading at degree {t}"
                    )

    # -- homology ---------------------------------------------------------
    def _aux_block(self, t: int, label: Hashable) -> list[int]:
        return [
            li
            for li, gi in enumerate(self.by_degree.get(t, []))
            if self.aux[gi] == label
        ]

    def homology(self, t: int, aux: Hashable = None) -> "HomologyData":
        """Cycles mod boundaries in degree t (one aux block if requested)."""
        key = (t, aux)
        cached = self._hcache.get(key)
        if cached is not None:
            return cached
        n = self.dim(t)
        if aux is None or all(a is None for a in self.aux):
            d_out = self.d_matrix(t)
            d_in = self.d_matrix(t + 1)
            cycles = kernel(d_out)
            bounds = image(d_in)
            data = HomologyData.build(self, t, n, cycles, bounds, embed=None)
        else:
            cols = self._aux_block(t, aux)
            rows_out = self._aux_block(t - 1, aux)
            cols_in = self._aux_block(t + 1, aux)
            d_out = FpMatrix(
                self.p, self.d_matrix(t).data[np.ix_(rows_out, cols)]
            ) if cols else FpMatrix.zeros(self.p, len(rows_out), 0)
            d_in = FpMatrix(
                self.p, self.d_matrix(t + 1).data[np.ix_(cols, cols_in)]
            ) if cols else FpMatrix.zeros(self.p, 0, len(cols_in))
            cycles = kernel(d_out)
            bounds = image(d_in)
            data = HomologyData.build(self, t, n, cycles, bounds, embed=cols)
        self._hcache[key] = data
        return data

    def homology_dim(self, t: int, aux: Hashable = None) -> int:
        return self.homology(t, aux).dim


@dataclass
class HomologyData:
    """H_t of a complex with chosen cycle representatives.

    Representatives are full degree-t coordinate vectors; ``class_of``
    expresses any cycle in the representative basis.
    """

    complex: GradedComplex
    degree: int
    dim: int
    reps: FpMatrix  # rows = representative cycles, ambient = full degree dims
    cycles: Subspace
    boundaries: Subspace
    _embed: list[int] | None = None
    _coord_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, cx, t, ambient, cycles, bounds, embed):
        reps_local = quotient_basis(cycles, bounds)
        if embed is None:
            reps = reps_local
        else:
            full = np.zeros((reps_local.rows, ambient), dtype=np.int64)
            if embed:
                full[:, embed] = reps_local.data
            reps = FpMatrix(cx.p, full, copy=False)
        return cls(cx, t, reps.rows, reps, cycles, bounds, embed)

    def rep_chain(self, k: int) -> Chain:
        return Chain(self.degree, self.reps.data[k].copy())

    def _local(self, vec: np.ndarray) -> np.ndarray:
        if self._embed is None:
            return vec
        return vec[self._embed]

    def class_of(self, chain: Chain) -> np.ndarray:
        """Coordinates of a cycle's class on the representative basis."""
        if chain.degree != self.degree:
            raise ComplexError("class_of: wrong degree")
        v = self._local(np.asarray(chain.vec, dtype=np.int64) % self.complex.p)
        if not self.cycles.contains(v):
            raise ComplexError("class_of: chain is not a cycle")
        if self.dim == 0:
            return np.zeros(0, dtype=np.int64)
        solver = self._coord_cache.get("solver")
        if solver is None:
            reps_local = (
                self.reps.data if self._embed is None else self.reps.data[:, self._embed]
            )
            basis = np.vstack([reps_local, self.boundaries.basis.data])
            solver = FpMatrix(self.complex.p, basis.T)
            self._coord_cache["solver"] = solver
        sol = solve(solver, v)
        if sol is None:
            raise ComplexError("class_of: cycle outside cycles-mod-boundaries basis")
        return sol[: self.dim] % self.complex.p

    def class_chain(self, coords: np.ndarray) -> Chain:
        vec = (np.asarray(coords, dtype=np.int64) @ self.reps.data) % self.complex.p
        return Chain(self.degree, vec)


def bar_sign(degree: int, p: int) -> int:
    """The involution sign (-1)^(1+degree) as an element of F_p."""
    return (-1) ** (1 + degree) % p


class ChainMap:
    """A degree-preserving chain map between complexes over the same prime."""

    def __init__(
        self,
        source: GradedComplex,
        target: GradedComplex,
        blocks: dict[int, FpMatrix],
        check: bool = True,
    ):
        self.source = source
        self.target = target
        self.blocks = {}
        for t, mat in blocks.items():
            want = (target.dim(t), source.dim(t))
            if mat.shape != want:
                raise ComplexError(f"chain map block at {t}: shape {mat.shape} != {want}")
            self.blocks[t] = mat
        if check:
            self._check_commutes()

    def block(self, t: int) -> FpMatrix:
        mat = self.blocks.get(t)
        if mat is None:
            return FpMatrix.zeros(self.source.p, self.target.dim(t), self.source.dim(t))
        return mat

    def apply(self, chain: Chain) -> Chain:
        return Chain(chain.degree, self.block(chain.degree) @ chain.vec)

    def _check_commutes(self) -> None:
        degs = set(self.source.support) | set(self.blocks)
        for t in degs:
            lhs = self.target.d_matrix(t) @ self.block(t)
            rhs = self.block(t - 1) @ self.source.d_matrix(t)
            if not (lhs - rhs).is_zero():
                raise ComplexError(f"not a chain map at degree {t}")

    def induced_on_homology(self, t: int) -> FpMatrix:
        hs = self.source.homology(t)
        ht = self.target.homology(t)
        cols = [
            ht.class_of(self.apply(hs.rep_chain(k))) for k in range(hs.dim)
        ]
        return FpMatrix.from_columns(self.source.p, cols, ht.dim)


def shift(cx: GradedComplex, i: int) -> GradedComplex:
    """X[i]: degree t of the output is degree t-i of the input, d scales by (-1)^i."""
    sign = (-1) ** i % cx.p
    elements = [
        (name, cx.degrees[gi] + i, cx.aux[gi])
        for gi, name in enumerate(cx.names)
    ]
    diff = {t + i: mat.scale(sign) for t, mat in cx.diff.items()}
    return GradedComplex(cx.p, elements, diff, check=False)


def mapping_cone(f: ChainMap, rename: str = "@X") -> GradedComplex:
    """Cone(f) = X[1] (+) Y with differential -d_X + d_Y + f."""
    x, y = f.source, f.target
    elements = [
        (name + rename, x.degrees[gi] + 1, x.aux[gi])
        for gi, name in enumerate(x.names)
    ]
    elements += [
        (name, y.degrees[gi], y.aux[gi]) for gi, name in enumerate(y.names)
    ]
    degs = sorted(
        set(t + 1 for t in x.by_degree) | set(y.by_degree)
    )
    diff: dict[int, FpMatrix] = {}
    p = x.p
    for t in degs:
        nx, ny = x.dim(t - 1), y.dim(t)
        mx, my = x.dim(t - 2), y.dim(t - 1)
        block = np.zeros((mx + my, nx + ny), dtype=np.int64)
        block[:mx, :nx] = (-x.d_matrix(t - 1).data) % p
        block[mx:, :nx] = f.block(t - 1).data
        block[mx:, nx:] = y.d_matrix(t).data
        diff[t] = FpMatrix(p, block, copy=False)
    return GradedComplex(p, elements, diff, check=False)


def direct_sum(a: GradedComplex, b: GradedComplex, rename: str = "@B") -> GradedComplex:
    elements = [(n, a.degrees[i], a.aux[i]) for i, n in enumerate(a.names)]
    elements += [(n + rename, b.degrees[i], b.aux[i]) for i, n in enumerate(b.names)]
    degs = sorted(set(a.by_degree) | set(b.by_degree))
    diff = {}
    for t in degs:
        na, nb = a.dim(t), b.dim(t)
        ma, mb = a.dim(t - 1), b.dim(t - 1)
        block = np.zeros((ma + mb, na + nb), dtype=np.int64)
        block[:ma, :na] = a.d_matrix(t).data
        block[ma:, na:] = b.d_matrix(t).data
        diff[t] = FpMatrix(a.p, block, copy=False)
    return GradedComplex(a.p, elements, diff, check=False)


ProductFn = Callable[[int, int], dict[int, int]]

VALIDATION_PAIR_CAP = 80_000


class DGAlgebra:
    """An augmented DG algebra: a complex plus a basis-pair product table.

    The product may come as an explicit table (document fixtures) or as
    a callable on global basis indices (the cobar construction, where a
    full table would be enormous).  Degree bounds, when set, truncate:
    products landing outside the window are zero.  For negatively (or
    positively) supported algebras this truncation is exact for every
    identity whose total degree stays inside the window.
    """

    def __init__(
        self,
        complex: GradedComplex,
        unit: str,
        product: dict[tuple[str, str], dict[str, int]] | ProductFn,
        bounds: tuple[int, int] | None = None,
        augmentation: dict[str, int] | None = None,
        check: bool = True,
    ):
        self.complex = complex
        self.p = complex.p
        self.unit_name = unit
        self.unit_index = complex.index_of[unit]
        if complex.degrees[self.unit_index] != 0:
            raise ComplexError("unit must sit in degree 0")
        self.bounds = bounds if bounds is not None else complex.degree_bounds()
        if callable(product):
            self._product_fn: ProductFn | None = product
            self._table = None
        else:
            self._product_fn = None
            table: dict[tuple[int, int], dict[int, int]] = {}
            for (a, b), terms in product.items():
                ia, ib = complex.index_of[a], complex.index_of[b]
                table[(ia, ib)] = {
                    complex.index_of[n]: c % self.p for n, c in terms.items() if c % self.p
                }
            self._table = table
        if augmentation is None:
            self.augmentation = {self.unit_index: 1}
        else:
            self.augmentation = {
                complex.index_of[n]: c % self.p for n, c in augmentation.items()
            }
        if check:
            self.validate()

    # -- products ---------------------------------------------------------
    def product_basis(self, gi: int, gj: int) -> dict[int, int]:
        ti = self.complex.degrees[gi]
        tj = self.complex.degrees[gj]
        if not (self.bounds[0] <= ti + tj <= self.bounds[1]):
            return {}
        if gi == self.unit_index:
            return {gj: 1}
        if gj == self.unit_index:
            return {gi: 1}
        if self._table is not None:
            return self._table.get((gi, gj), {})
        return self._product_fn(gi, gj)

    def multiply(self, a: Chain, b: Chain) -> Chain:
        cx = self.complex
        t = a.degree + b.degree
        out = np.zeros(cx.dim(t), dtype=np.int64)
        if not (self.bounds[0] <= t <= self.bounds[1]):
            return Chain(t, out)
        rows_a = cx.by_degree.get(a.degree, [])
        rows_b = cx.by_degree.get(b.degree, [])
        pos = {gi: li for li, gi in enumerate(cx.by_degree.get(t, []))}
        for la in np.nonzero(a.vec)[0]:
            ca = int(a.vec[la])
            gi = rows_a[la]
            for lb in np.nonzero(b.vec)[0]:
                cb = int(b.vec[lb])
                gj = rows_b[lb]
                for gk, ck in self.product_basis(gi, gj).items():
                    out[pos[gk]] = (out[pos[gk]] + ca * cb * ck) % self.p
        return Chain(t, out)

    def unit_chain(self) -> Chain:
        return self.complex.basis_chain(self.unit_name)

    def augment(self, chain: Chain) -> int:
        if chain.degree != 0:
            return 0
        total = 0
        deg0 = self.complex.by_degree.get(0, [])
        for li in np.nonzero(chain.vec)[0]:
            total += int(chain.vec[li]) * self.augmentation.get(deg0[li], 0)
        return total % self.p

    def augmentation_ideal_names(self) -> list[str]:
        """Nonzero-degree elements plus the degree-0 kernel of the augmentation."""
        cx = self.complex
        out = [n for i, n in enumerate(cx.names) if cx.degrees[i] != 0]
        return out

    # -- validation ---------------------------------------------------------
    def _in_bounds(self, t: int) -> bool:
        return self.bounds[0] <= t <= self.bounds[1]

    def validate(self, pair_cap: int = VALIDATION_PAIR_CAP) -> None:
        cx = self.complex
        n = len(cx.names)
        if n * n > pair_cap:
            raise ComplexError(
                f"algebra too large for exhaustive validation ({n} basis elements); "
                "construct with check=False and validate structurally"
            )
        chains = [cx.basis_chain(name) for name in cx.names]
        one = self.unit_chain()
        for i, xi in enumerate(chains):
            if not np.array_equal(self.multiply(one, xi).vec, xi.vec) or not np.array_equal(
                self.multiply(xi, one).vec, xi.vec
            ):
                raise ComplexError(f"unit law fails on {cx.names[i]}")
        # Leibniz: d(xy) = dx*y + (-1)^deg(x) x*dy
        for i, xi in enumerate(chains):
            for j, xj in enumerate(chains):
                t = xi.degree + xj.degree
                if not self._in_bounds(t) or not self._in_bounds(t - 1):
                    continue
                lhs = cx.d(self.multiply(xi, xj))
                rhs1 = self.multiply(cx.d(xi), xj)
                rhs2 = self.multiply(xi, cx.d(xj))
                sign = (-1) ** xi.degree % self.p
                rhs = (rhs1.vec + sign * rhs2.vec) % self.p
                if not np.array_equal(lhs.vec, rhs):
                    raise ComplexError(
                        f"Leibniz fails on ({cx.names[i]}, {cx.names[j]})"
                    )
        # associativity on triples whose total degree stays in the window
        for i, xi in enumerate(chains):
            for j, xj in enumerate(chains):
                tij = xi.degree + xj.degree
                for k, xk in enumerate(chains):
                    t = tij + xk.degree
                    if not self._in_bounds(t):
                        continue
                    lhs = self.multiply(self.multiply(xi, xj), xk)
                    rhs = self.multiply(xi, self.multiply(xj, xk))
                    if not np.array_equal(lhs.vec, rhs.vec):
                        raise ComplexError(
                            "associativity fails on "
                            f"({cx.names[i]}, {cx.names[j]}, {cx.names[k]})"
                        )
        # augmentation: algebra map on degree 0, kills products with IU
        deg0 = cx.by_degree.get(0, [])
        for gi in deg0:
            for gj in deg0:
                xi, xj = chains[gi], chains[gj]
                lhs = self.augment(self.multiply(xi, xj))
                rhs = self.augment(xi) * self.augment(xj) % self.p
                if lhs != rhs:
                    raise ComplexError(
                        f"augmentation not multiplicative on ({cx.names[gi]}, {cx.names[gj]})"
                    )
        if self.augment(one) != 1:
            raise ComplexError("augmentation does not send the unit to 1")
