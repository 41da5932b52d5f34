"""Matric Massey products, iterated (co)fiber complexes, smash Toda brackets.

Defining systems follow May's recursion: A(i-1, i) is the given matrix
V_i and each longer window solves d A(i,j) = sum of bar(A(i,k)) A(k,j),
with bar the sign involution (-1)^(1+deg).  Triple products are exact
(the value is affine in the two free choices); longer brackets
enumerate the finite solution spaces under a budget and report whether
the search was exhaustive.

Smash Toda brackets run along an independent route: the matrices become
a tower of free modules, every extension of the tower to its iterated
fiber is enumerated, and values are read off the composite through the
fiber/cofiber comparison isomorphism.  Over a field the two routes must
give equal value sets, which the suite checks fixture by fixture.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .complexes import Chain, ComplexError, DGAlgebra, GradedComplex, shift
from .linalg import FpMatrix, Subspace, kernel, solve

__all__ = [
    "BracketError",
    "ClassMatrix",
    "DefiningSystem",
    "BracketResult",
    "matric_massey",
    "MapSystem",
    "SystemError",
    "z_complex",
    "iterated_cofiber",
    "fiber_cofiber_witness",
    "smash_toda",
    "suspension_classical",
    "massey_decomposables",
    "DecomposablesReport",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 2**20


class BracketError(ValueError):
    """Bad bracket input: non-cycles, shape mismatch, inconsistent degrees."""


@dataclass
class ClassMatrix:
    """A matrix of homogeneous chains; every entry must be a cycle.

    Zero entries carry an explicit degree so shapes and degree labels
    stay checkable.  In a bigraded algebra, `aux` optionally records the
    second-grading label of each entry (needed for zero entries, whose
    support cannot speak for itself).
    """

    entries: list[list[Chain]]
    aux: list[list[object]] | None = None

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @classmethod
    def row(cls, chains: list[Chain]) -> "ClassMatrix":
        return cls([list(chains)])

    @classmethod
    def column(cls, chains: list[Chain]) -> "ClassMatrix":
        return cls([[c] for c in chains])

    @classmethod
    def single(cls, chain: Chain, aux=None) -> "ClassMatrix":
        return cls([[chain]], None if aux is None else [[aux]])

    def degree(self, i: int, j: int) -> int:
        return self.entries[i][j].degree

    def aux_of(self, cx: GradedComplex, i: int, j: int):
        declared = self.aux[i][j] if self.aux is not None else None
        observed = chain_aux(cx, self.entries[i][j])
        if observed is not None and declared is not None and observed != declared:
            raise BracketError(f"entry ({i},{j}): declared aux {declared} != {observed}")
        return observed if observed is not None else declared

    def copy(self) -> "ClassMatrix":
        return ClassMatrix(
            [[c.copy() for c in row] for row in self.entries],
            None if self.aux is None else [list(r) for r in self.aux],
        )


def _bar(u: DGAlgebra, c: Chain) -> Chain:
    sign = (-1) ** (1 + c.degree) % u.p
    return Chain(c.degree, (c.vec * sign) % u.p)


def _mat_mul(u: DGAlgebra, a: ClassMatrix, b: ClassMatrix, bar_left: bool = True) -> ClassMatrix:
    if a.cols != b.rows:
        raise BracketError(f"shape mismatch {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    out: list[list[Chain]] = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            acc: Chain | None = None
            for k in range(a.cols):
                left = _bar(u, a.entries[i][k]) if bar_left else a.entries[i][k]
                term = u.multiply(left, b.entries[k][j])
                if acc is None:
                    acc = term
                elif acc.degree != term.degree:
                    raise BracketError(
                        f"inhomogeneous product entry ({i},{j}): degrees "
                        f"{acc.degree} vs {term.degree}"
                    )
                else:
                    acc = Chain(acc.degree, (acc.vec + term.vec) % u.p)
            row.append(acc)
        out.append(row)
    return ClassMatrix(out)


def _mat_add(u: DGAlgebra, a: ClassMatrix, b: ClassMatrix) -> ClassMatrix:
    out = []
    for i in range(a.rows):
        row = []
        for j in range(a.cols):
            x, y = a.entries[i][j], b.entries[i][j]
            if x.degree != y.degree:
                raise BracketError("degree mismatch in matrix sum")
            row.append(Chain(x.degree, (x.vec + y.vec) % u.p))
        out.append(row)
    return ClassMatrix(out)


def _mat_d(u: DGAlgebra, a: ClassMatrix) -> ClassMatrix:
    return ClassMatrix([[u.complex.d(c) for c in row] for row in a.entries])


def _is_zero_matrix(a: ClassMatrix) -> bool:
    return all(c.is_zero() for row in a.entries for c in row)


def chain_aux(cx: GradedComplex, chain: Chain):
    """The aux label shared by the chain's support (None when unlabelled)."""
    idx = cx.by_degree.get(chain.degree, [])
    labels = {cx.aux[idx[li]] for li in np.nonzero(chain.vec)[0]}
    if len(labels) > 1:
        raise ComplexError("chain mixes aux blocks")
    return labels.pop() if labels else None


def solve_d(
    cx: GradedComplex, target: Chain, aux=None
) -> tuple[Chain | None, list[Chain]]:
    """Solve d x = target; also return a basis of cycles in the unknown's
    degree (the full solution space is affine over them).  Restricts to a
    single aux block when the target or the caller supplies one."""
    t = target.degree + 1
    if aux is None:
        aux = chain_aux(cx, target)
    if aux is not None:
        cols = [li for li, gi in enumerate(cx.by_degree.get(t, [])) if cx.aux[gi] == aux]
        rows = [li for li, gi in enumerate(cx.by_degree.get(t - 1, [])) if cx.aux[gi] == aux]
        if cols:
            block = cx.d_matrix(t).data[np.ix_(rows, cols)]
        else:
            block = np.zeros((len(rows), 0), dtype=np.int64)
        mat = FpMatrix(cx.p, block)
        sol = solve(mat, target.vec[rows])
        if sol is None:
            return None, []
        full = np.zeros(cx.dim(t), dtype=np.int64)
        full[cols] = sol
        gens = []
        for v in kernel(mat).basis.data:
            g = np.zeros(cx.dim(t), dtype=np.int64)
            g[cols] = v
            gens.append(Chain(t, g))
        return Chain(t, full), gens
    mat = cx.d_matrix(t)
    sol = solve(mat, target.vec)
    if sol is None:
        return None, []
    gens = [Chain(t, v.copy()) for v in kernel(mat).basis.data]
    return Chain(t, sol), gens


@dataclass
class DefiningSystem:
    """May's matrices A(i, j) for 0 <= i < j <= l+1, excluding (0, l+1)."""

    matrices: dict[tuple[int, int], ClassMatrix]

    def a(self, i: int, j: int) -> ClassMatrix:
        return self.matrices[(i, j)]


@dataclass
class BracketResult:
    """The value set of a bracket plus the bookkeeping of its search."""

    defined: bool
    degree: int | None
    aux: object
    values: list[tuple[int, ...]]  # homology coordinates, sorted unique
    value_chains: list[Chain]
    indeterminacy_dim: int | None
    exhaustive: bool
    systems_seen: int
    budget: int
    witness: DefiningSystem | None = None
    note: str = ""

    def value_set(self) -> frozenset:
        return frozenset(self.values)

    def contains(self, coords) -> bool:
        return tuple(int(c) for c in coords) in self.value_set()

    def contains_zero(self) -> bool:
        return any(not any(v) for v in self.values)


def _tilde(u: DGAlgebra, system: dict[tuple[int, int], ClassMatrix], i: int, j: int) -> ClassMatrix:
    """sum over i < k < j of bar(A(i,k)) A(k,j)."""
    acc: ClassMatrix | None = None
    for k in range(i + 1, j):
        term = _mat_mul(u, system[(i, k)], system[(k, j)])
        acc = term if acc is None else _mat_add(u, acc, term)
    if acc is None:
        raise BracketError("tilde of an adjacent window")
    return acc


def _interface_aux(u: DGAlgebra, mats: list[ClassMatrix]) -> list[list] | None:
    """Second-grading labels for the bracket interfaces, or None when the
    algebra is singly graded.  Interface 0 is the outer row; labels add
    along matrix entries, pinning the aux block of every defining-system
    matrix even where targets vanish."""
    cx = u.complex
    if all(a is None for a in cx.aux):
        return None
    labels: list[list] = [[0]]
    for idx, v in enumerate(mats):
        prev = labels[-1]
        cur: list = [None] * v.cols
        for c in range(v.cols):
            vals = set()
            for r in range(v.rows):
                a = v.aux_of(cx, r, c)
                if a is not None:
                    vals.add(prev[r] + a)
            if not vals:
                raise BracketError(
                    f"matrix {idx}: column {c} is all zero entries; declare aux labels"
                )
            if len(vals) > 1:
                raise BracketError(f"matrix {idx}: inconsistent aux labels in column {c}")
            cur[c] = vals.pop()
        labels.append(cur)
    return labels


def _validate_inputs(u: DGAlgebra, mats: list[ClassMatrix]) -> None:
    if len(mats) < 3:
        raise BracketError("brackets need at least three matrices")
    if mats[0].rows != 1 or mats[-1].cols != 1:
        raise BracketError("outer matrices must be a row and a column")
    for a, b in zip(mats, mats[1:]):
        if a.cols != b.rows:
            raise BracketError("adjacent matrices are not multipliable")
    for m in mats:
        for row in m.entries:
            for c in row:
                if not u.complex.is_cycle(c):
                    raise BracketError("bracket entries must be cycles")


def matric_massey(
    u: DGAlgebra,
    mats: list[ClassMatrix],
    budget: int = DEFAULT_BUDGET,
) -> BracketResult:
    """The matric Massey product of the given multipliable matrices.

    Triple products are exact; longer brackets enumerate every defining
    system up to `budget` leaves and flag whether the enumeration was
    exhaustive.
    """
    _validate_inputs(u, mats)
    ell = len(mats) - 1
    labels = _interface_aux(u, mats)
    system: dict[tuple[int, int], ClassMatrix] = {}
    for idx, m in enumerate(mats):
        system[(idx, idx + 1)] = m
    if ell == 2:
        return _triple_product(u, system, budget, labels)
    return _long_bracket(u, system, ell, budget, labels)


def _window_aux_grid(labels, i: int, j: int) -> list[list] | None:
    """Expected aux of each entry of A(i, j): labels[j][c] - labels[i][r]."""
    if labels is None:
        return None
    return [[labels[j][c] - labels[i][r] for c in range(len(labels[j]))] for r in range(len(labels[i]))]


def _solve_matrix(
    u: DGAlgebra, target: ClassMatrix, aux_grid: list[list] | None = None
) -> tuple[ClassMatrix | None, list[tuple[int, int, Chain]]]:
    """Entrywise particular solution of d A = target plus kernel generators
    tagged by entry position."""
    part_rows: list[list[Chain]] = []
    gens: list[tuple[int, int, Chain]] = []
    for i, row in enumerate(target.entries):
        prow = []
        for j, tgt in enumerate(row):
            aux = aux_grid[i][j] if aux_grid is not None else None
            sol, ker_gens = solve_d(u.complex, tgt, aux=aux)
            if sol is None:
                return None, []
            prow.append(sol)
            for g in ker_gens:
                gens.append((i, j, g))
        part_rows.append(prow)
    return ClassMatrix(part_rows), gens


def _value_class(
    u: DGAlgebra, value: Chain, expected_aux=None
) -> tuple[tuple[int, ...], object]:
    aux = chain_aux(u.complex, value)
    if aux is None:
        aux = expected_aux
    elif expected_aux is not None and aux != expected_aux:
        raise BracketError(f"value lies in aux block {aux}, expected {expected_aux}")
    h = u.complex.homology(value.degree, aux)
    return tuple(int(c) for c in h.class_of(value)), aux


def _bracket_value(u: DGAlgebra, system: dict, ell: int) -> Chain:
    val = _tilde(u, system, 0, ell + 1).entries[0][0]
    if not u.complex.is_cycle(val):
        raise BracketError("bracket value is not a cycle (sign bug)")
    return val


def _perturbed(part: ClassMatrix, pos: tuple[int, int], g: Chain, p: int) -> ClassMatrix:
    out = part.copy()
    i, j = pos
    e = out.entries[i][j]
    out.entries[i][j] = Chain(e.degree, (e.vec + g.vec) % p)
    return out


def _triple_product(u: DGAlgebra, system: dict, budget: int) -> BracketResult:
    p = u.p
    t02 = _tilde(u, system, 0, 2)
    t13 = _tilde(u, system, 1, 3)
    if not _is_zero_matrix(_mat_d(u, t02)) or not _is_zero_matrix(_mat_d(u, t13)):
        raise BracketError("products of consecutive matrices are not cycles")
    a02, gens02 = _solve_matrix(u, t02)
    a13, gens13 = _solve_matrix(u, t13)
    if a02 is None or a13 is None:
        return BracketResult(
            defined=False, degree=None, aux=None, values=[], value_chains=[],
            indeterminacy_dim=None, exhaustive=True, systems_seen=0,
            budget=budget, note="no defining system exists",
        )
    full = dict(system)
    full[(0, 2)] = a02
    full[(1, 3)] = a13
    value0 = _bracket_value(u, full, 2)
    coords0, aux = _value_class(u, value0)
    h = u.complex.homology(value0.degree, aux)
    deltas: list[np.ndarray] = []
    for (i, j, g) in gens13:
        zero13 = ClassMatrix(
            [
                [Chain(a13.degree(r, c), np.zeros_like(a13.entries[r][c].vec)) for c in range(a13.cols)]
                for r in range(a13.rows)
            ]
        )
        dv = _mat_mul(u, full[(0, 1)], _perturbed(zero13, (i, j), g, p)).entries[0][0]
        deltas.append(np.asarray(h.class_of(dv), dtype=np.int64))
    for (i, j, g) in gens02:
        zero02 = ClassMatrix(
            [
                [Chain(a02.degree(r, c), np.zeros_like(a02.entries[r][c].vec)) for c in range(a02.cols)]
                for r in range(a02.rows)
            ]
        )
        dv = _mat_mul(u, _perturbed(zero02, (i, j), g, p), full[(2, 3)]).entries[0][0]
        deltas.append(np.asarray(h.class_of(dv), dtype=np.int64))
    if deltas:
        indet = Subspace.from_rows(p, h.dim, np.array(deltas))
    else:
        indet = Subspace.zero(p, h.dim)
    values = _coset_points(p, np.asarray(coords0, dtype=np.int64), indet)
    return BracketResult(
        defined=True,
        degree=value0.degree,
        aux=aux,
        values=values,
        value_chains=[value0],
        indeterminacy_dim=indet.dim,
        exhaustive=True,
        systems_seen=1,
        budget=budget,
        witness=DefiningSystem(full),
    )


def _coset_points(p: int, base: np.ndarray, sub: Subspace, cap: int = 4096) -> list[tuple[int, ...]]:
    if sub.dim == 0 or base.size == 0:
        return [tuple(int(c) for c in base)]
    if p**sub.dim > cap:
        raise BracketError("indeterminacy coset too large to enumerate")
    pts = set()
    for coeffs in itertools.product(range(p), repeat=sub.dim):
        v = base.copy()
        for c, row in zip(coeffs, sub.basis.data):
            v = (v + c * row) % p
        pts.add(tuple(int(x) for x in v))
    return sorted(pts)


def _long_bracket(u: DGAlgebra, system: dict, ell: int, budget: int) -> BracketResult:
    windows = [
        (i, i + w)
        for w in range(2, ell + 1)
        for i in range(0, ell + 2 - w)
        if not (i == 0 and i + w == ell + 1)
    ]
    values: set[tuple[int, ...]] = set()
    chains: list[Chain] = []
    meta = {"seen": 0, "exhausted": True, "defined": False, "witness": None}
    out_degree: list = [None, None]

    def descend(idx: int, current: dict) -> None:
        if meta["seen"] >= budget:
            meta["exhausted"] = False
            return
        if idx == len(windows):
            meta["seen"] += 1
            meta["defined"] = True
            if meta["witness"] is None:
                meta["witness"] = DefiningSystem({k: v.copy() for k, v in current.items()})
            val = _bracket_value(u, current, ell)
            coords, aux = _value_class(u, val)
            out_degree[0], out_degree[1] = val.degree, aux
            if coords not in values:
                values.add(coords)
                chains.append(val)
            return
        i, j = windows[idx]
        tilde = _tilde(u, current, i, j)
        if not _is_zero_matrix(_mat_d(u, tilde)):
            raise BracketError("defining-system target is not a cycle (sign bug)")
        part, gens = _solve_matrix(u, tilde)
        if part is None:
            return
        if not gens:
            current[(i, j)] = part
            descend(idx + 1, current)
            current.pop((i, j))
            return
        for coeffs in itertools.product(range(u.p), repeat=len(gens)):
            if meta["seen"] >= budget:
                meta["exhausted"] = False
                return
            cand = part.copy()
            for c, (gi, gj, g) in zip(coeffs, gens):
                if c:
                    e = cand.entries[gi][gj]
                    cand.entries[gi][gj] = Chain(e.degree, (e.vec + c * g.vec) % u.p)
            current[(i, j)] = cand
            descend(idx + 1, current)
            current.pop((i, j))

    descend(0, dict(system))
    return BracketResult(
        defined=meta["defined"],
        degree=out_degree[0],
        aux=out_degree[1],
        values=sorted(values),
        value_chains=chains,
        indeterminacy_dim=None,
        exhaustive=meta["exhausted"],
        systems_seen=meta["seen"],
        budget=budget,
        witness=meta["witness"],
        note="" if meta["exhausted"] else "budget exhausted; value set may be partial",
    )


# ----------------------------------------------------------------------
# Towers, iterated fibers, and iterated cofibers
# ----------------------------------------------------------------------

class SystemError(ValueError):
    """The f-maps of a tower violate their coherence relations."""


@dataclass
class MapSystem:
    """Complexes X_0 .. X_n with maps f(a,b): X_b -> X_a raising internal
    degree by b - a - 1.  f(a, a+1) are the tower's chain-level maps; the
    longer windows are homotopy data."""

    complexes: list[GradedComplex]
    maps: dict[tuple[int, int], dict[int, FpMatrix]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.complexes) - 1

    def block(self, a: int, b: int, m: int) -> FpMatrix:
        """The component (X_b)_m -> (X_a)_(m + b - a - 1)."""
        xb, xa = self.complexes[b], self.complexes[a]
        want_rows = xa.dim(m + b - a - 1)
        blocks = self.maps.get((a, b))
        if blocks is None or m not in blocks:
            return FpMatrix.zeros(xb.p, want_rows, xb.dim(m))
        mat = blocks[m]
        if mat.shape != (want_rows, xb.dim(m)):
            raise SystemError(f"f({a},{b}) block at degree {m} has shape {mat.shape}")
        return mat

    def residual(self, a: int, b: int, m: int) -> FpMatrix:
        """sum over a <= c <= b of (-1)^(c+b) f(a,c) f(c,b) at degree m, with
        f(c,c) the differential; vanishing for all degrees makes the fiber
        and cofiber complexes square to zero."""
        p = self.complexes[0].p
        xa, xb = self.complexes[a], self.complexes[b]
        out = FpMatrix.zeros(p, xa.dim(m + b - a - 2), xb.dim(m))
        sign_a = (-1) ** (a + b) % p
        out = out + (xa.d_matrix(m + b - a - 1) @ self.block(a, b, m)).scale(sign_a)
        out = out + (self.block(a, b, m - 1) @ xb.d_matrix(m))
        for c in range(a + 1, b):
            sign = (-1) ** (c + b) % p
            out = out + (self.block(a, c, m + b - c - 1) @ self.block(c, b, m)).scale(sign)
        return out

    def degrees(self) -> list[int]:
        degs = set()
        for cx in self.complexes:
            degs.update(cx.support)
            degs.update(t + 1 for t in cx.support)
        return sorted(degs)


def validate_system(sys: MapSystem, on_cycles: bool = True) -> None:
    """Check the coherence relations, raising SystemError at the first
    failing (a, b, degree).  With on_cycles=True the f d term is only
    probed against cycles; the d*d check of the built complexes catches
    the rest."""
    for b in range(len(sys.complexes)):
        for a in range(max(b - 1, 0)):
            xb = sys.complexes[b]
            for m in sys.degrees():
                res = sys.residual(a, b, m)
                if res.is_zero():
                    continue
                if on_cycles:
                    cyc = kernel(xb.d_matrix(m))
                    if cyc.dim == 0:
                        continue
                    probe = res @ FpMatrix(xb.p, cyc.basis.data.T)
                    if probe.is_zero():
                        continue
                raise SystemError(f"relation fails for f({a},{b}) at degree {m}")


def _assemble(
    sys: MapSystem,
    slot_degree,  # slot m at complex degree k holds (X_m) at slot_degree(m, k)
    sign,  # sign(a, b) multiplying the block f(a,b) (or d when a=b)
    suffix: str,
) -> GradedComplex:
    n = sys.n
    p = sys.complexes[0].p
    elements = []
    for m, cx in enumerate(sys.complexes):
        for gi, name in enumerate(cx.names):
            k = cx.degrees[gi] - slot_degree(m, 0)
            elements.append((f"{name}{suffix}{m}", k, cx.aux[gi]))
    ks = sorted({e[1] for e in elements})
    diff: dict[int, FpMatrix] = {}
    for k in ks:
        src = [(m, sys.complexes[m].dim(slot_degree(m, k))) for m in range(n + 1)]
        dst = [(m, sys.complexes[m].dim(slot_degree(m, k - 1))) for m in range(n + 1)]
        total_src = sum(d for _, d in src)
        total_dst = sum(d for _, d in dst)
        if total_src == 0:
            continue
        block = np.zeros((total_dst, total_src), dtype=np.int64)
        col_off, c = {}, 0
        for m, d in src:
            col_off[m] = c
            c += d
        row_off, r = {}, 0
        for m, d in dst:
            row_off[m] = r
            r += d
        for b in range(n + 1):
            tb = slot_degree(b, k)
            if sys.complexes[b].dim(tb) == 0:
                continue
            for a in range(b + 1):
                mat = sys.complexes[a].d_matrix(tb) if a == b else sys.block(a, b, tb)
                if mat.rows == 0 or mat.cols == 0:
                    continue
                block[
                    row_off[a] : row_off[a] + mat.rows,
                    col_off[b] : col_off[b] + mat.cols,
                ] += sign(a, b) * mat.data
        diff[k] = FpMatrix(p, block % p)
    out = GradedComplex(p, elements, diff, check=False)
    _assert_d_squared(out, suffix)
    return out


def z_complex(sys: MapSystem, check: bool = True) -> GradedComplex:
    """The iterated-fiber complex Z: slot m at total degree k holds (X_m) in
    degree k + n - m, with differential (-1)^n sum of (-1)^b f(a,b)."""
    if check:
        validate_system(sys, on_cycles=True)
    n = sys.n

    def slot_degree(m, k):
        return k + n - m

    def sign(a, b):
        return (-1) ** (n + b)

    return _assemble(sys, slot_degree, sign, "@")


def iterated_cofiber(sys: MapSystem, check: bool = True) -> GradedComplex:
    """The iterated-cofiber complex C: slot m at total degree k holds (X_m)
    in degree k - m, with differential (-1)^a sum of f(a,b)."""
    if check:
        validate_system(sys, on_cycles=True)

    def slot_degree(m, k):
        return k - m

    def sign(a, b):
        return (-1) ** a

    return _assemble(sys, slot_degree, sign, "#")


def _assert_d_squared(cx: GradedComplex, label: str) -> None:
    for t in cx.support:
        comp = cx.d_matrix(t - 1) @ cx.d_matrix(t)
        if not comp.is_zero():
            raise SystemError(f"assembled complex '{label}': d*d != 0 at degree {t}")


def _slot_layout(sys: MapSystem, slot_degree, k: int) -> list[tuple[int, int, int]]:
    """(slot, offset, dim) triples for the assembled complex at degree k."""
    out = []
    off = 0
    for m in range(sys.n + 1):
        d = sys.complexes[m].dim(slot_degree(m, k))
        out.append((m, off, d))
        off += d
    return out


def fiber_cofiber_witness(sys: MapSystem) -> dict:
    """Build C and Sigma^n Z and exhibit the degreewise isomorphism between
    them (diagonal with sign (-1)^slot), verified as a chain map."""
    from .complexes import ChainMap

    n = sys.n
    z = z_complex(sys)
    c = iterated_cofiber(sys)
    sz = shift(z, n)
    p = z.p
    blocks: dict[int, FpMatrix] = {}
    for k in sorted(set(c.support) | set(sz.support)):
        dim = c.dim(k)
        if dim != sz.dim(k):
            raise SystemError("fiber/cofiber dimensions differ (internal)")
        diag = np.zeros((dim, dim), dtype=np.int64)
        for m, off, d in _slot_layout(sys, lambda mm, kk: kk - mm, k):
            sgn = (-1) ** m % p
            for i in range(d):
                diag[off + i, off + i] = sgn
        blocks[k] = FpMatrix(p, diag)
    iso = ChainMap(c, sz, blocks)  # constructor raises if not a chain map
    hom = {}
    for t in sorted(set(c.support) | set(sz.support)):
        hom[t] = (c.homology_dim(t), sz.homology_dim(t))
    return {"fiber": z, "cofiber": c, "shifted_fiber": sz, "iso": iso, "homology": hom}


# ----------------------------------------------------------------------
# Smash Toda brackets at chain level
# ----------------------------------------------------------------------

class _FreeModule:
    """(+)_a u<s_a> materialized as one complex, with slot bookkeeping."""

    def __init__(self, u: DGAlgebra, shifts: list[int], tag: str):
        self.u = u
        self.shifts = shifts
        p = u.p
        elements = []
        for a, s in enumerate(shifts):
            for gi, name in enumerate(u.complex.names):
                elements.append((f"{name}|{tag}.{a}", u.complex.degrees[gi] + s, u.complex.aux[gi]))
        degs = sorted({t + s for t in u.complex.support for s in shifts})
        diff = {}
        for t in degs:
            dims_src = [u.complex.dim(t - s) for s in shifts]
            dims_dst = [u.complex.dim(t - 1 - s) for s in shifts]
            block = np.zeros((sum(dims_dst), sum(dims_src)), dtype=np.int64)
            ro = co = 0
            for s, ds, dd in zip(shifts, dims_src, dims_dst):
                sgn = (-1) ** s % p
                block[ro : ro + dd, co : co + ds] = (sgn * u.complex.d_matrix(t - s).data) % p
                ro += dd
                co += ds
            diff[t] = FpMatrix(p, block)
        # element insertion groups by slot, but degrees interleave; rebuild order
        self.complex = GradedComplex(p, elements, diff, check=False)

    def offset(self, a: int, total_degree: int) -> int:
        return sum(
            self.u.complex.dim(total_degree - self.shifts[b]) for b in range(a)
        )

    def embed(self, a: int, chain: Chain) -> Chain:
        """u-chain -> total complex chain in slot a."""
        total_degree = chain.degree + self.shifts[a]
        out = np.zeros(self.complex.dim(total_degree), dtype=np.int64)
        off = self.offset(a, total_degree)
        out[off : off + chain.vec.shape[0]] = chain.vec
        return Chain(total_degree, out)

    def component(self, chain: Chain, a: int) -> Chain:
        u_degree = chain.degree - self.shifts[a]
        off = self.offset(a, chain.degree)
        dim = self.u.complex.dim(u_degree)
        return Chain(u_degree, chain.vec[off : off + dim].copy())


def _right_mult_map(
    src: _FreeModule, dst: _FreeModule, entries: list[list[Chain]], raise_by: int
) -> dict[int, FpMatrix]:
    """Blocks of the twisted right-multiplication map

        x |-> ( sum_a (-1)^(|c| * tot(x)) x[a] * entries[a][b] )_b

    raising total degree by raise_by.  The Koszul twist makes
    right-multiplication by a cycle a genuine chain map between the
    shifted summands; it is the chain-level source of the bar signs.
    entries has shape (src slots) x (dst slots)."""
    u = src.u
    p = u.p
    blocks: dict[int, FpMatrix] = {}
    for tot in src.complex.support:
        cols = []
        for a, s in enumerate(src.shifts):
            udeg = tot - s
            for li in range(u.complex.dim(udeg)):
                e = np.zeros(u.complex.dim(udeg), dtype=np.int64)
                e[li] = 1
                x = Chain(udeg, e)
                img = np.zeros(dst.complex.dim(tot + raise_by), dtype=np.int64)
                for b in range(len(dst.shifts)):
                    c = entries[a][b]
                    if c.is_zero():
                        continue
                    twist = (-1) ** (c.degree * tot) % p
                    prod = u.multiply(x, c)
                    emb = dst.embed(b, prod)
                    if emb.degree != tot + raise_by:
                        raise BracketError("right-mult map degree bookkeeping broke")
                    img = (img + twist * emb.vec) % p
                cols.append(img % p)
        blocks[tot] = FpMatrix.from_columns(p, cols, dst.complex.dim(tot + raise_by))
    return blocks


def _toda_shifts(mats: list[ClassMatrix]) -> list[list[int]]:
    """Slot shifts per tower stage; stage m carries the interface of
    V_(l+1-m), anchored so the pinned fiber cycle sits in degree zero."""
    ell = len(mats) - 1
    shifts: list[list[int]] = [[]] * ell
    top = [-mats[0].degree(0, a) for a in range(mats[0].cols)]
    shifts[ell - 1] = top
    for m in range(ell - 1, 0, -1):
        v = mats[ell - m]  # map X_m -> X_(m-1): right-mult by V_(l+1-m)
        cur = shifts[m]
        nxt = [None] * v.cols
        for b in range(v.cols):
            vals = {cur[a] - v.degree(a, b) for a in range(v.rows)}
            if len(vals) != 1:
                raise BracketError("matrices are not multipliable (degree labels)")
            nxt[b] = vals.pop()
        shifts[m - 1] = list(nxt)
    return shifts


def _zero_entries(u: DGAlgebra, shape: tuple[int, int], degrees) -> list[list[Chain]]:
    return [
        [Chain(degrees(a, b), np.zeros(u.complex.dim(degrees(a, b)), dtype=np.int64)) for b in range(shape[1])]
        for a in range(shape[0])
    ]


def smash_toda(
    u: DGAlgebra,
    mats: list[ClassMatrix],
    budget: int = DEFAULT_BUDGET,
) -> BracketResult:
    """The smash Toda bracket of the matrices, computed through the tower
    of free modules and its iterated fiber/cofiber comparison.

    Only the algebra acting on itself is supported as the module pair.
    The value set must agree with matric_massey over a field.
    """
    _validate_inputs(u, mats)
    p = u.p
    ell = len(mats) - 1
    shifts = _toda_shifts(mats)
    stages = [
        _FreeModule(u, shifts[m], f"X{m}") for m in range(ell)
    ]
    sys = MapSystem([st.complex for st in stages])
    for m in range(1, ell):
        v = mats[ell - m]
        entries = [[v.entries[a][b] for b in range(v.cols)] for a in range(v.rows)]
        # stage m has v.rows slots?  stage m carries interface of V_(l+1-m):
        # X_m slots = rows of V_(l+1-m) = cols of V_(l-m).  The map
        # X_m -> X_(m-1) right-multiplies by V_(l+1-m): x[a] * V[a][b].
        sys.maps[(m - 1, m)] = _right_mult_map(stages[m], stages[m - 1], entries, 0)
    counts = {"seen": 0, "exhausted": True}
    values: set[tuple[int, ...]] = set()
    chains: list[Chain] = []
    degree_aux: list = [None, None]
    windows = [
        (a, a + w) for w in range(2, ell) for a in range(0, ell - w)
    ]

    def leaf() -> None:
        zc = z_complex(sys, check=False)
        _assert_d_squared(zc, "toda fiber")
        cc = iterated_cofiber(sys, check=False)
        zs = _z_cycles_with_pin(u, sys, stages, mats, zc)
        if zs is None:
            return
        gs = _cofiber_maps_with_pin(u, sys, stages, mats, cc)
        if gs is None:
            return
        for z in zs:
            for g_blocks, w_shift in gs:
                if counts["seen"] >= budget:
                    counts["exhausted"] = False
                    return
                counts["seen"] += 1
                val = _toda_value(u, sys, stages, zc, cc, z, g_blocks, w_shift)
                coords, aux = _value_class(u, val)
                degree_aux[0], degree_aux[1] = val.degree, aux
                if coords not in values:
                    values.add(coords)
                    chains.append(val)

    def descend(idx: int) -> None:
        if counts["seen"] >= budget:
            counts["exhausted"] = False
            return
        if idx == len(windows):
            leaf()
            return
        a, b = windows[idx]
        sols = _solve_window(u, sys, stages, a, b)
        if sols is None:
            return
        for blocks in sols:
            sys.maps[(a, b)] = blocks
            descend(idx + 1)
            sys.maps.pop((a, b), None)
            if counts["seen"] >= budget:
                counts["exhausted"] = False
                return

    descend(0)
    defined = bool(values)
    return BracketResult(
        defined=defined,
        degree=degree_aux[0],
        aux=degree_aux[1],
        values=sorted(values),
        value_chains=chains,
        indeterminacy_dim=None,
        exhaustive=counts["exhausted"],
        systems_seen=counts["seen"],
        budget=budget,
        note="" if counts["exhausted"] else "budget exhausted; value set may be partial",
    )


def _solve_window(u, sys, stages, a, b) -> list[dict[int, FpMatrix]] | None:
    """All right-multiplication maps f(a,b) solving the coherence relation
    given the shorter windows."""
    p = u.p
    src, dst = stages[b], stages[a]
    raise_by = b - a - 1
    # x[i] has u-degree tot - src.shifts[i]; x[i]*c lands slot j needing
    # u-degree tot + raise_by - dst.shifts[j]; so deg c = raise_by +
    # src.shifts[i] - dst.shifts[j].
    unknowns: list[tuple[int, int, Chain]] = []
    for i in range(len(src.shifts)):
        for j in range(len(dst.shifts)):
            gamma = raise_by + src.shifts[i] - dst.shifts[j]
            for li in range(u.complex.dim(gamma)):
                e = np.zeros(u.complex.dim(gamma), dtype=np.int64)
                e[li] = 1
                unknowns.append((i, j, Chain(gamma, e)))

    def build(coeffs) -> dict[int, FpMatrix]:
        entries = _zero_entries(
            u,
            (len(src.shifts), len(dst.shifts)),
            lambda i, j: raise_by + src.shifts[i] - dst.shifts[j],
        )
        for cval, (i, j, base) in zip(coeffs, unknowns):
            if cval:
                e = entries[i][j]
                entries[i][j] = Chain(e.degree, (e.vec + int(cval) * base.vec) % p)
        return _right_mult_map(src, dst, entries, raise_by)

    def residuals(blocks) -> np.ndarray:
        sys.maps[(a, b)] = blocks
        pieces = []
        for m in sys.degrees():
            res = sys.residual(a, b, m)
            pieces.append(res.data.reshape(-1))
        sys.maps.pop((a, b), None)
        return np.concatenate(pieces) % p if pieces else np.zeros(0, dtype=np.int64)

    base_res = residuals(build([0] * len(unknowns)))
    cols = []
    for k in range(len(unknowns)):
        e = [0] * len(unknowns)
        e[k] = 1
        cols.append((residuals(build(e)) - base_res) % p)
    mat = FpMatrix.from_columns(p, cols, base_res.shape[0]) if cols else FpMatrix.zeros(p, base_res.shape[0], 0)
    rhs = (-base_res) % p
    part = solve(mat, rhs)
    if part is None:
        return None
    ker = kernel(mat)
    sols = []
    for coeffs in itertools.product(range(p), repeat=ker.dim):
        v = part.copy()
        for cval, row in zip(coeffs, ker.basis.data):
            v = (v + cval * row) % p
        sols.append(build(v))
    return sols


def _z_cycles_with_pin(u, sys, stages, mats, zc) -> list[Chain] | None:
    """All cycles of the fiber complex in degree 0 whose top-slot component
    is the first matrix's row of entries."""
    p = u.p
    n = sys.n
    k = 0
    layout = _slot_layout(sys, lambda m, kk: kk + n - m, k)
    dim = zc.dim(k)
    pin = np.zeros(dim, dtype=np.int64)
    free_cols: list[int] = []
    top = stages[n]
    v1 = mats[0]
    for m, off, d in layout:
        if m == n:
            for a in range(len(top.shifts)):
                emb = top.embed(a, v1.entries[0][a])
                pin[off : off + d] = (pin[off : off + d] + emb.vec) % p
        else:
            free_cols.extend(range(off, off + d))
    dmat = zc.d_matrix(k)
    rhs = (-(dmat @ pin)) % p
    sub = FpMatrix(p, dmat.data[:, free_cols]) if free_cols else FpMatrix.zeros(p, dmat.rows, 0)
    part = solve(sub, rhs)
    if part is None:
        return None
    ker = kernel(sub)
    out = []
    for coeffs in itertools.product(range(p), repeat=ker.dim):
        v = part.copy()
        for cval, row in zip(coeffs, ker.basis.data):
            v = (v + cval * row) % p
        full = pin.copy()
        for ci, col in enumerate(free_cols):
            full[col] = (full[col] + v[ci]) % p
        out.append(Chain(k, full))
    return out


def _cofiber_maps_with_pin(u, sys, stages, mats, cc):
    """All chain maps from the cofiber complex to a shifted copy of u whose
    bottom-slot component right-multiplies by the last matrix's column.

    Returns (blocks, target_shift) pairs, where blocks[k] maps cc degree-k
    coordinates to u-coordinates in degree k - target_shift."""
    p = u.p
    n = sys.n
    vlast = mats[-1]
    bottom = stages[0]
    sigmas = {bottom.shifts[a] - vlast.degree(a, 0) for a in range(len(bottom.shifts))}
    if len(sigmas) != 1:
        raise BracketError("last matrix breaks the degree labels")
    sigma = sigmas.pop()
    # unknown entries G_m[a] for slots of stages m >= 1, of degree
    # m + stage_shift[a] - sigma; stage 0 entries pinned to vlast.
    unknowns: list[tuple[int, int, Chain]] = []
    for m in range(1, n + 1):
        for a, s in enumerate(stages[m].shifts):
            gamma = m + s - sigma
            for li in range(u.complex.dim(gamma)):
                e = np.zeros(u.complex.dim(gamma), dtype=np.int64)
                e[li] = 1
                unknowns.append((m, a, Chain(gamma, e)))

    def build(coeffs) -> dict[int, FpMatrix]:
        entry: dict[tuple[int, int], Chain] = {}
        for m in range(n + 1):
            for a, s in enumerate(stages[m].shifts):
                gamma = m + s - sigma
                entry[(m, a)] = Chain(gamma, np.zeros(u.complex.dim(gamma), dtype=np.int64))
        for a in range(len(bottom.shifts)):
            entry[(0, a)] = vlast.entries[a][0]
        for cval, (m, a, base) in zip(coeffs, unknowns):
            if cval:
                e = entry[(m, a)]
                entry[(m, a)] = Chain(e.degree, (e.vec + int(cval) * base.vec) % p)
        blocks = {}
        for k in cc.support:
            layout = _slot_layout(sys, lambda mm, kk: kk - mm, k)
            cols = []
            for m, off, d in layout:
                stage = stages[m]
                for a in range(len(stage.shifts)):
                    udeg = (k - m) - stage.shifts[a]
                    for li in range(u.complex.dim(udeg)):
                        e = np.zeros(u.complex.dim(udeg), dtype=np.int64)
                        e[li] = 1
                        c = entry[(m, a)]
                        twist = (-1) ** (c.degree * (k - m)) % p
                        prod = u.multiply(Chain(udeg, e), c)
                        if prod.degree != k - sigma:
                            raise BracketError("cofiber map degree bookkeeping broke")
                        cols.append((twist * prod.vec) % p)
            blocks[k] = FpMatrix.from_columns(p, cols, u.complex.dim(k - sigma))
        return blocks

    target = shift(u.complex, sigma)

    def residuals(blocks) -> np.ndarray:
        pieces = []
        for k in cc.support:
            g_here = blocks.get(k)
            g_prev = blocks.get(k - 1, FpMatrix.zeros(p, u.complex.dim(k - 1 - sigma), cc.dim(k - 1)))
            lhs = target.d_matrix(k) @ g_here
            rhs = g_prev @ cc.d_matrix(k)
            pieces.append((lhs - rhs).data.reshape(-1))
        return np.concatenate(pieces) % p if pieces else np.zeros(0, dtype=np.int64)

    base_blocks = build([0] * len(unknowns))
    base_res = residuals(base_blocks)
    cols = []
    for kk in range(len(unknowns)):
        e = [0] * len(unknowns)
        e[kk] = 1
        cols.append((residuals(build(e)) - base_res) % p)
    mat = FpMatrix.from_columns(p, cols, base_res.shape[0]) if cols else FpMatrix.zeros(p, base_res.shape[0], 0)
    rhs = (-base_res) % p
    part = solve(mat, rhs)
    if part is None:
        return None
    ker = kernel(mat)
    out = []
    for coeffs in itertools.product(range(p), repeat=ker.dim):
        v = part.copy()
        for cval, row in zip(coeffs, ker.basis.data):
            v = (v + cval * row) % p
        out.append((build(v), sigma))
    return out


def _toda_value(u, sys, stages, zc, cc, z: Chain, g_blocks, sigma: int) -> Chain:
    """Apply the comparison iso to the fiber cycle and evaluate the map."""
    p = u.p
    n = sys.n
    k_c = z.degree + n
    z_layout = _slot_layout(sys, lambda m, kk: kk + n - m, z.degree)
    c_layout = _slot_layout(sys, lambda m, kk: kk - m, k_c)
    cvec = np.zeros(cc.dim(k_c), dtype=np.int64)
    for (m, off_z, d), (_, off_c, d2) in zip(z_layout, c_layout):
        if d != d2:
            raise BracketError("fiber/cofiber layout mismatch (internal)")
        sgn = (-1) ** m % p
        cvec[off_c : off_c + d] = (sgn * z.vec[off_z : off_z + d]) % p
    g = g_blocks.get(k_c)
    if g is None:
        raise BracketError("cofiber map missing the value degree")
    val = (g @ cvec) % p
    out = Chain(k_c - sigma, val)
    if not u.complex.is_cycle(out):
        raise BracketError("toda value is not a cycle (sign bug)")
    return out


# ----------------------------------------------------------------------
# Suspension and decomposability by brackets
# ----------------------------------------------------------------------

def suspension_classical(u: DGAlgebra, element: Chain, resolution=None):
    """The class of a lift through a minimal free resolution: coordinates in
    Tor_1 of an augmentation-ideal element; kernel = decomposables.

    Only graded algebras (zero differential) are supported.
    """
    from .koszul import minimal_resolution

    if any(not u.complex.d_matrix(t).is_zero() for t in u.complex.support):
        raise BracketError("classical suspension needs a zero differential")
    if element.degree == 0:
        raise BracketError("suspension is defined on the augmentation ideal")
    res = resolution if resolution is not None else minimal_resolution(u, stages=2)
    return res.suspension(element)


@dataclass
class CertifiedClass:
    degree: int
    aux: object
    coords: tuple[int, ...]
    expression: str
    chain: Chain
    from_generators: bool


@dataclass
class DecomposablesReport:
    """Which homology classes in the window are spanned by products and
    brackets of shallower classes, with checked certificates."""

    targets: list[tuple[int, object]]
    certified: dict[tuple[int, object], Subspace]
    certificates: list[CertifiedClass]
    uncovered: dict[tuple[int, object], list[tuple[int, ...]]]
    exhaustive: bool
    brackets_run: int

    def fully_certified(self) -> bool:
        return all(not v for v in self.uncovered.values())


def massey_decomposables(
    u: DGAlgebra,
    targets: list[tuple[int, object]],
    entry_cells: list[tuple[int, object]] | None = None,
    budget: int = DEFAULT_BUDGET,
    max_length: int = 3,
    generator_degree: int = -1,
) -> DecomposablesReport:
    """Span every target homology cell by products and matric Massey
    brackets of classes from shallower cells.

    `targets` lists (degree, aux) cells to certify; entries are drawn
    from `entry_cells` (default: every nonzero homology cell strictly
    between the generator line and 0).  Certificates re-evaluate: each
    certified class stores the chain that was projected.
    """
    cx = u.complex
    p = u.p
    if entry_cells is None:
        entry_cells = _default_entry_cells(u, targets, generator_degree)
    pool: list[tuple[int, object, int, Chain]] = []  # degree, aux, index, rep
    for (deg, aux) in entry_cells:
        h = cx.homology(deg, aux)
        for k in range(h.dim):
            pool.append((deg, aux, k, h.rep_chain(k)))
    certified: dict[tuple[int, object], Subspace] = {}
    certificates: list[CertifiedClass] = []
    uncovered: dict[tuple[int, object], list[tuple[int, ...]]] = {}
    brackets_run = 0
    exhaustive = True
    gen_keys = {(deg, aux) for (deg, aux, _, _) in pool if deg == generator_degree}

    def add_class(key, chain, expression, from_gens):
        h = cx.homology(*key)
        coords = np.asarray(h.class_of(chain), dtype=np.int64)
        if not coords.any():
            return
        cur = certified.get(key, Subspace.zero(p, h.dim))
        if cur.contains(coords):
            return
        certified[key] = cur.add(Subspace.from_rows(p, h.dim, [coords]))
        certificates.append(
            CertifiedClass(key[0], key[1], tuple(int(c) for c in coords), expression, chain, from_gens)
        )

    # products of pool classes
    for (d1, a1, k1, c1) in pool:
        for (d2, a2, k2, c2) in pool:
            deg = d1 + d2
            aux = _aux_sum(a1, a2)
            if (deg, aux) not in set(targets):
                continue
            prod = u.multiply(c1, c2)
            if prod.is_zero():
                continue
            add_class(
                (deg, aux),
                prod,
                f"[{d1},{a1}]#{k1} * [{d2},{a2}]#{k2}",
                (d1, a1) in gen_keys and (d2, a2) in gen_keys,
            )
    # brackets, shortest first
    target_set = set(targets)
    for length in range(3, max_length + 1):
        for combo in itertools.product(range(len(pool)), repeat=length):
            degs = [pool[i][0] for i in combo]
            auxs = [pool[i][1] for i in combo]
            deg = sum(degs) + (length - 2)
            aux = _aux_sum(*auxs)
            if (deg, aux) not in target_set:
                continue
            key = (deg, aux)
            h = cx.homology(*key)
            cur = certified.get(key, Subspace.zero(p, h.dim))
            if cur.dim == h.dim:
                continue
            if brackets_run >= budget:
                exhaustive = False
                break
            mats = [ClassMatrix.single(pool[i][3]) for i in combo]
            try:
                res = matric_massey(u, mats, budget=max(budget - brackets_run, 1))
            except BracketError:
                continue
            brackets_run += res.systems_seen if res.systems_seen else 1
            if not res.exhaustive:
                exhaustive = False
            if not res.defined:
                continue
            expr = "<" + "; ".join(f"[{pool[i][0]},{pool[i][1]}]#{pool[i][2]}" for i in combo) + ">"
            for chain in res.value_chains:
                add_class(key, chain, expr, all(pool[i][0] == generator_degree for i in combo))
        else:
            continue
        break
    for key in targets:
        h = cx.homology(*key)
        cur = certified.get(key, Subspace.zero(p, h.dim))
        missing = []
        if cur.dim < h.dim:
            for k in range(h.dim):
                e = np.eye(h.dim, dtype=np.int64)[k]
                if not cur.contains(e):
                    missing.append(tuple(int(c) for c in e))
        uncovered[key] = missing
    return DecomposablesReport(
        targets=list(targets),
        certified=certified,
        certificates=certificates,
        uncovered=uncovered,
        exhaustive=exhaustive,
        brackets_run=brackets_run,
    )


def _aux_sum(*labels):
    if all(l is None for l in labels):
        return None
    if any(l is None for l in labels):
        raise BracketError("cannot mix labelled and unlabelled classes")
    return sum(labels)


def _default_entry_cells(u: DGAlgebra, targets, generator_degree: int):
    cx = u.complex
    cells = set()
    deepest = min(deg for deg, _ in targets)
    for t in cx.support:
        if generator_degree >= t > deepest:
            if any(a is not None for a in cx.aux):
                for aux in sorted({cx.aux[gi] for gi in cx.by_degree.get(t, [])}):
                    if cx.homology_dim(t, aux):
                        cells.add((t, aux))
            else:
                if cx.homology_dim(t):
                    cells.add((t, None))
    return sorted(cells, key=lambda c: (-c[0], str(c[1])))
