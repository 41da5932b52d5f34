"""Exact dense linear algebra over the prime fields F_p.

Everything downstream (homology, spectral sequence pages, defining
systems) reduces to the five primitives here: row reduction, kernels,
images, solving, and quotient bases.  Matrices are dense ``int64``
numpy arrays with entries reduced mod p; the p = 2 elimination kernel
runs on bit-packed rows (one byte per 8 columns, XOR row updates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FpMatrix",
    "Subspace",
    "rref",
    "rank",
    "kernel",
    "image",
    "row_space",
    "solve",
    "quotient_basis",
    "LinearError",
]


class LinearError(ValueError):
    """Raised for shape/containment violations in exact linear algebra."""


_SMALL_PRIME_LIMIT = 2**20


def _check_prime(p: int) -> None:
    if p < 2 or p > _SMALL_PRIME_LIMIT:
        raise LinearError(f"prime {p} outside supported machine-word range")
    if any(p % q == 0 for q in range(2, min(p, 1 + int(p**0.5) + 1)) if q < p):
        raise LinearError(f"{p} is not prime")


class FpMatrix:
    """A rows x cols matrix over F_p.  Entries always lie in [0, p)."""

    __slots__ = ("p", "data")

    def __init__(self, p: int, data, copy: bool = True):
        _check_prime(p)
        arr = np.array(data, dtype=np.int64, copy=copy)
        if arr.ndim != 2:
            raise LinearError(f"expected 2-d data, got shape {arr.shape}")
        np.mod(arr, p, out=arr)
        self.p = p
        self.data = arr

    # -- constructors -------------------------------------------------
    @classmethod
    def zeros(cls, p: int, rows: int, cols: int) -> "FpMatrix":
        return cls(p, np.zeros((rows, cols), dtype=np.int64), copy=False)

    @classmethod
    def identity(cls, p: int, n: int) -> "FpMatrix":
        return cls(p, np.eye(n, dtype=np.int64), copy=False)

    @classmethod
    def from_columns(cls, p: int, cols: list[np.ndarray], rows: int) -> "FpMatrix":
        if not cols:
            return cls.zeros(p, rows, 0)
        return cls(p, np.stack(cols, axis=1))

    # -- basic protocol ------------------------------------------------
    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FpMatrix)
            and self.p == other.p
            and self.shape == other.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):  # pragma: no cover - matrices used as values, not keys
        return hash((self.p, self.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"FpMatrix(p={self.p}, {self.rows}x{self.cols})"

    def copy(self) -> "FpMatrix":
        return FpMatrix(self.p, self.data, copy=True)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "FpMatrix") -> "FpMatrix":
        self._compat(other)
        return FpMatrix(self.p, (self.data + other.data) % self.p, copy=False)

    def __sub__(self, other: "FpMatrix") -> "FpMatrix":
        self._compat(other)
        return FpMatrix(self.p, (self.data - other.data) % self.p, copy=False)

    def __neg__(self) -> "FpMatrix":
        return FpMatrix(self.p, (-self.data) % self.p, copy=False)

    def scale(self, c: int) -> "FpMatrix":
        return FpMatrix(self.p, (self.data * (c % self.p)) % self.p, copy=False)

    def __matmul__(self, other) -> "FpMatrix | np.ndarray":
        if isinstance(other, FpMatrix):
            self._compat_mul(other)
            return FpMatrix(self.p, (self.data @ other.data) % self.p, copy=False)
        vec = np.asarray(other, dtype=np.int64)
        if vec.shape != (self.cols,):
            raise LinearError(f"vector length {vec.shape} incompatible with {self.cols} cols")
        return (self.data @ vec) % self.p

    def mul_vec(self, vec: np.ndarray) -> np.ndarray:
        return self @ vec

    def transpose(self) -> "FpMatrix":
        return FpMatrix(self.p, self.data.T, copy=True)

    def hstack(self, other: "FpMatrix") -> "FpMatrix":
        if self.p != other.p or self.rows != other.rows:
            raise LinearError("hstack shape/prime mismatch")
        return FpMatrix(self.p, np.hstack([self.data, other.data]), copy=False)

    def vstack(self, other: "FpMatrix") -> "FpMatrix":
        if self.p != other.p or self.cols != other.cols:
            raise LinearError("vstack shape/prime mismatch")
        return FpMatrix(self.p, np.vstack([self.data, other.data]), copy=False)

    def is_zero(self) -> bool:
        return not self.data.any()

    def _compat(self, other: "FpMatrix") -> None:
        if self.p != other.p:
            raise LinearError(f"prime mismatch {self.p} != {other.p}")
        if self.shape != other.shape:
            raise LinearError(f"shape mismatch {self.shape} != {other.shape}")

    def _compat_mul(self, other: "FpMatrix") -> None:
        if self.p != other.p:
            raise LinearError(f"prime mismatch {self.p} != {other.p}")
        if self.cols != other.rows:
            raise LinearError(f"cannot multiply {self.shape} by {other.shape}")


def _inv_mod(a: int, p: int) -> int:
    return pow(int(a), p - 2, p)


# ----------------------------------------------------------------------
# Elimination kernels.  The general path is vectorized per pivot; the
# p = 2 path packs rows into bytes and eliminates with XOR.
# ----------------------------------------------------------------------

def _rref_general(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    m, n = a.shape
    a = a % p
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.nonzero(a[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            a[[row, piv]] = a[[piv, row]]
        inv = _inv_mod(int(a[row, col]), p)
        a[row] = (a[row] * inv) % p
        hit = np.nonzero(a[:, col])[0]
        hit = hit[hit != row]
        if hit.size:
            a[hit] = (a[hit] - np.outer(a[hit, col], a[row])) % p
        pivots.append(col)
        row += 1
    return a, pivots


def _pack2(a: np.ndarray) -> np.ndarray:
    return np.packbits(a.astype(np.uint8), axis=1)


def _unpack2(packed: np.ndarray, cols: int) -> np.ndarray:
    return np.unpackbits(packed, axis=1, count=cols).astype(np.int64)


def _rref_f2(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Bit-packed Gauss-Jordan over F_2; rows are byte arrays, updates XOR."""
    m, n = a.shape
    if m == 0 or n == 0:
        return a % 2, []
    pk = _pack2(a % 2)
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        byte, bit = col >> 3, 7 - (col & 7)
        colbits = (pk[row:, byte] >> bit) & 1
        nz = np.nonzero(colbits)[0]
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            pk[[row, piv]] = pk[[piv, row]]
        hit = np.nonzero((pk[:, byte] >> bit) & 1)[0]
        hit = hit[hit != row]
        if hit.size:
            pk[hit] ^= pk[row]
        pivots.append(col)
        row += 1
    return _unpack2(pk, n), pivots


def rref(m: FpMatrix) -> tuple[FpMatrix, list[int]]:
    """Reduced row-echelon form and pivot columns.  rank = len(pivots)."""
    if m.p == 2:
        red, pivots = _rref_f2(m.data)
    else:
        red, pivots = _rref_general(m.data.copy(), m.p)
    return FpMatrix(m.p, red, copy=False), pivots


def rank(m: FpMatrix) -> int:
    return len(rref(m)[1])


@dataclass(frozen=True)
class Subspace:
    """A subspace of F_p^ambient_dim, basis rows in RREF with increasing pivots."""

    ambient_dim: int
    basis: FpMatrix  # shape (dim, ambient_dim), nonzero rows in RREF
    pivots: tuple[int, ...]

    @classmethod
    def from_rows(cls, p: int, ambient_dim: int, rows) -> "Subspace":
        arr = np.asarray(rows, dtype=np.int64)
        if arr.size == 0:
            return cls.zero(p, ambient_dim)
        arr = arr.reshape(-1, ambient_dim)
        red, pivots = rref(FpMatrix(p, arr))
        keep = red.data[: len(pivots)]
        return cls(ambient_dim, FpMatrix(p, keep, copy=False), tuple(pivots))

    @classmethod
    def zero(cls, p: int, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, FpMatrix.zeros(p, 0, ambient_dim), ())

    @classmethod
    def full(cls, p: int, ambient_dim: int) -> "Subspace":
        return cls(
            ambient_dim,
            FpMatrix.identity(p, ambient_dim),
            tuple(range(ambient_dim)),
        )

    @property
    def p(self) -> int:
        return self.basis.p

    @property
    def dim(self) -> int:
        return self.basis.rows

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        """Subtract the projection onto this subspace along its pivots."""
        v = np.asarray(vec, dtype=np.int64) % self.p
        if v.shape != (self.ambient_dim,):
            raise LinearError("vector/ambient dimension mismatch")
        v = v.copy()
        for r, c in enumerate(self.pivots):
            if v[c]:
                v = (v - v[c] * self.basis.data[r]) % self.p
        return v

    def contains(self, vec: np.ndarray) -> bool:
        return not self.reduce(vec).any()

    def coords(self, vec: np.ndarray) -> np.ndarray | None:
        """Coefficients of vec on the RREF basis rows, or None if outside."""
        v = np.asarray(vec, dtype=np.int64) % self.p
        coeffs = v[list(self.pivots)].copy() if self.pivots else np.zeros(0, np.int64)
        if self.contains(v):
            return coeffs
        return None

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise LinearError("ambient dimension mismatch in sum")
        stacked = self.basis.vstack(other.basis)
        return Subspace.from_rows(self.p, self.ambient_dim, stacked.data)

    def intersect(self, other: "Subspace") -> "Subspace":
        """Zassenhaus-free intersection: kernel of the stacked coefficient map."""
        if self.ambient_dim != other.ambient_dim:
            raise LinearError("ambient dimension mismatch in intersection")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.p, self.ambient_dim)
        # vectors sum c_i u_i = sum d_j v_j: kernel of [U^T | -V^T]
        stacked = self.basis.transpose().hstack(other.basis.transpose().scale(-1))
        ker = kernel(stacked)
        rows = [
            (self.basis.transpose() @ k[: self.dim]) for k in ker.basis.data
        ]
        if not rows:
            return Subspace.zero(self.p, self.ambient_dim)
        return Subspace.from_rows(self.p, self.ambient_dim, np.array(rows))

    def le(self, other: "Subspace") -> bool:
        return all(other.contains(row) for row in self.basis.data)

    def equals(self, other: "Subspace") -> bool:
        return self.dim == other.dim and self.le(other)


def kernel(m: FpMatrix) -> Subspace:
    """Basis of the right kernel {v : m v = 0} as a Subspace of F_p^cols."""
    red, pivots = rref(m)
    n = m.cols
    free = [c for c in range(n) if c not in set(pivots)]
    if not free:
        return Subspace.zero(m.p, n)
    vecs = np.zeros((len(free), n), dtype=np.int64)
    for i, fc in enumerate(free):
        vecs[i, fc] = 1
        for r, pc in enumerate(pivots):
            vecs[i, pc] = (-red.data[r, fc]) % m.p
    return Subspace.from_rows(m.p, n, vecs)


def image(m: FpMatrix) -> Subspace:
    """Column span of m as a Subspace of F_p^rows."""
    return Subspace.from_rows(m.p, m.rows, m.data.T)


def row_space(m: FpMatrix) -> Subspace:
    return Subspace.from_rows(m.p, m.cols, m.data)


def solve(m: FpMatrix, b: np.ndarray) -> np.ndarray | None:
    """One particular solution of m x = b, or None if no preimage exists.

    The full solution space is x + kernel(m); callers needing it call
    kernel() themselves.
    """
    bvec = np.asarray(b, dtype=np.int64) % m.p
    if bvec.shape != (m.rows,):
        raise LinearError(f"rhs length {bvec.shape} != rows {m.rows}")
    aug = m.hstack(FpMatrix(m.p, bvec.reshape(-1, 1)))
    red, pivots = rref(aug)
    if m.cols in pivots:
        return None
    x = np.zeros(m.cols, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = red.data[r, m.cols]
    return x


def solve_many(m: FpMatrix, bs: FpMatrix) -> FpMatrix | None:
    """Particular solutions for every column of bs at once, or None."""
    aug = m.hstack(bs)
    red, pivots = rref(aug)
    if any(c >= m.cols for c in pivots):
        return None
    x = np.zeros((m.cols, bs.cols), dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = red.data[r, m.cols:]
    return FpMatrix(m.p, x, copy=False)


def quotient_basis(ambient: Subspace, sub: Subspace) -> FpMatrix:
    """Coset representatives spanning ambient/sub, one per quotient dimension.

    Raises LinearError unless sub is contained in ambient.
    """
    if ambient.ambient_dim != sub.ambient_dim:
        raise LinearError("ambient dimension mismatch in quotient")
    if not sub.le(ambient):
        raise LinearError("quotient: sub is not contained in ambient")
    reps = []
    span = sub
    for row in ambient.basis.data:
        if not span.contains(row):
            reps.append(row.copy())
            span = span.add(Subspace.from_rows(ambient.p, ambient.ambient_dim, [row]))
    out = np.array(reps, dtype=np.int64).reshape(len(reps), ambient.ambient_dim)
    return FpMatrix(ambient.p, out, copy=False)
