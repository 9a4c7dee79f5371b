"""Arithmetic over GF(2^m) and small dense matrices over it.

Elements are plain integers in ``[0, 2^m)`` whose bits are polynomial
coefficients.  Multiplication is carry-less shift-and-reduce; there are no
log tables, so every operation also works elementwise on numpy arrays of
symbols, which is how shares and keys are stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

# Lexicographically least irreducible polynomial of each degree (bit i is the
# coefficient of x^i).
IRREDUCIBLE = {
    1: 0x2,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201B,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002B,
}

SYMBOL_DTYPE = np.uint32


class FieldError(ValueError):
    pass


class FieldTooSmallError(FieldError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


def _degree(p: int) -> int:
    return p.bit_length() - 1


def _poly_mod(a: int, b: int) -> int:
    db = _degree(b)
    while a and _degree(a) >= db:
        a ^= b << (_degree(a) - db)
    return a


@lru_cache(maxsize=None)
def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    m = _degree(poly)
    if m < 1:
        return False
    for d in range(1, m // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if _poly_mod(poly, q) == 0:
                return False
    return True


@dataclass(frozen=True)
class FieldParams:
    m: int
    modulus: int = None  # type: ignore[assignment]

    def __post_init__(self):
        if not 1 <= self.m <= 16:
            raise FieldError(f"extension degree must be in 1..16, got {self.m}")
        if self.modulus is None:
            object.__setattr__(self, "modulus", IRREDUCIBLE[self.m])
        if _degree(self.modulus) != self.m or not is_irreducible(self.modulus):
            raise FieldError(
                f"modulus {self.modulus:#x} is not an irreducible polynomial of degree {self.m}"
            )

    @property
    def order(self) -> int:
        return 1 << self.m

    @classmethod
    def smallest_for(cls, n_points: int) -> "FieldParams":
        """Smallest field with at least ``n_points`` elements."""
        m = max(1, (n_points - 1).bit_length())
        if m > 16:
            raise FieldTooSmallError(f"no supported field holds {n_points} points")
        return cls(m)

    # scalar arithmetic on raw integers

    def check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.order:
            raise FieldError(f"{a} is not an element of GF(2^{self.m})")
        return a

    def mul(self, a: int, b: int) -> int:
        a, b = int(a), int(b)
        top = 1 << self.m
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= self.modulus
        return r

    def inv(self, a: int) -> int:
        a = int(a)
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in GF(2^m)")
        # a^(2^m - 2) by square-and-multiply
        result, base, e = 1, a, self.order - 2
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    # elementwise arithmetic on symbol arrays

    def mul_scalar(self, c: int, x: np.ndarray) -> np.ndarray:
        """Multiply every symbol of ``x`` by the field constant ``c``."""
        c = int(c)
        x = np.asarray(x, dtype=SYMBOL_DTYPE)
        if c == 0:
            return np.zeros_like(x)
        if c == 1:
            return x.copy()
        top = SYMBOL_DTYPE(1 << self.m)
        mod = SYMBOL_DTYPE(self.modulus)
        out = np.zeros_like(x)
        a = x.copy()
        while c:
            if c & 1:
                out ^= a
            c >>= 1
            a <<= SYMBOL_DTYPE(1)
            a = np.where(a & top, a ^ mod, a)
        return out

    def mul_arrays(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=SYMBOL_DTYPE)
        y = np.asarray(y, dtype=SYMBOL_DTYPE).copy()
        x, y = np.broadcast_arrays(x, y)
        top = SYMBOL_DTYPE(1 << self.m)
        mod = SYMBOL_DTYPE(self.modulus)
        out = np.zeros(x.shape, dtype=SYMBOL_DTYPE)
        a = x.copy()
        y = y.copy()
        for _ in range(self.m):
            out ^= np.where(y & SYMBOL_DTYPE(1), a, SYMBOL_DTYPE(0))
            y >>= SYMBOL_DTYPE(1)
            a <<= SYMBOL_DTYPE(1)
            a = np.where(a & top, a ^ mod, a)
        return out


@dataclass(frozen=True)
class FieldElem:
    value: int
    field: FieldParams = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "value", self.field.check(self.value))

    def _same(self, other: "FieldElem") -> None:
        if other.field != self.field:
            raise FieldError("operands belong to different fields")

    def __add__(self, other: "FieldElem") -> "FieldElem":
        return add(self, other)

    __sub__ = __add__

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        return mul(self, other)

    def __truediv__(self, other: "FieldElem") -> "FieldElem":
        return mul(self, inv(other))

    def inverse(self) -> "FieldElem":
        return inv(self)

    def __int__(self) -> int:
        return self.value


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    a._same(b)
    return FieldElem(a.value ^ b.value, a.field)


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    a._same(b)
    return FieldElem(a.field.mul(a.value, b.value), a.field)


def inv(a: FieldElem) -> FieldElem:
    return FieldElem(a.field.inv(a.value), a.field)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Dense matrix over GF(2^m); entries are stored row-major as integers."""

    field: FieldParams
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=SYMBOL_DTYPE, copy=True)
        if e.ndim != 2:
            raise FieldError("matrix entries must be two-dimensional")
        if e.size and int(e.max()) >= self.field.order:
            raise FieldError("matrix entry outside the field")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __getitem__(self, ij) -> int:
        return int(self.entries[ij])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldMatrix)
            and self.field == other.field
            and np.array_equal(self.entries, other.entries)
        )

    @classmethod
    def identity(cls, n: int, fld: FieldParams) -> "FieldMatrix":
        return cls(fld, np.eye(n, dtype=SYMBOL_DTYPE))

    @classmethod
    def zeros(cls, rows: int, cols: int, fld: FieldParams) -> "FieldMatrix":
        return cls(fld, np.zeros((rows, cols), dtype=SYMBOL_DTYPE))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "FieldMatrix":
        return FieldMatrix(self.field, self.entries[np.ix_(list(rows), list(cols))])

    def apply(self, data: np.ndarray) -> np.ndarray:
        """Multiply by a stack of symbol rows: ``(cols, ...) -> (rows, ...)``."""
        data = np.asarray(data, dtype=SYMBOL_DTYPE)
        if data.shape[0] != self.cols:
            raise FieldError(f"expected {self.cols} input rows, got {data.shape[0]}")
        if self.field.m <= 8 and self.rows * self.cols * data[0].size <= 1 << 24:
            prods = mul_table(self.field)[self.entries.reshape(self.entries.shape + (1,) * (data.ndim - 1)), data[None]]
            return np.bitwise_xor.reduce(prods, axis=1)
        out = np.zeros((self.rows,) + data.shape[1:], dtype=SYMBOL_DTYPE)
        for i in range(self.rows):
            for j in range(self.cols):
                c = int(self.entries[i, j])
                if c:
                    out[i] ^= self.field.mul_scalar(c, data[j])
        return out

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        if other.field != self.field:
            raise FieldError("operands belong to different fields")
        return FieldMatrix(self.field, self.apply(other.entries))


@lru_cache(maxsize=None)
def cauchy_matrix(n: int, params: FieldParams) -> FieldMatrix:
    """n x n Cauchy matrix with points x_i = i and y_j = n + j (0-based)."""
    if n < 1:
        raise FieldError("dimension must be positive")
    if 2 * n > params.order:
        raise FieldTooSmallError(
            f"a {n}x{n} Cauchy matrix needs 2^m >= {2 * n}, field has {params.order} elements"
        )
    g = np.empty((n, n), dtype=SYMBOL_DTYPE)
    for i in range(n):
        for j in range(n):
            g[i, j] = params.inv(i ^ (n + j))
    return FieldMatrix(params, g)


def _as_rows(rhs, fld: FieldParams) -> tuple[np.ndarray, bool]:
    if len(rhs) and isinstance(rhs[0], FieldElem):
        return np.array([e.value for e in rhs], dtype=SYMBOL_DTYPE), True
    return np.array(rhs, dtype=SYMBOL_DTYPE), False


def _eliminate_column(fld: FieldParams, a: np.ndarray, b: np.ndarray | None, r: int, col: int, rows) -> None:
    """Zero column ``col`` of ``rows`` using the normalised pivot row ``r``."""
    f = a[rows, col]
    hit = rows[f != 0]
    if hit.size == 0:
        return
    f = a[hit, col]
    a[hit] ^= fld.mul_arrays(f[:, None], a[r][None, :])
    if b is not None:
        fb = f.reshape((-1,) + (1,) * (b.ndim - 1))
        b[hit] ^= fld.mul_arrays(fb, b[r][None, ...])


def solve(mat: FieldMatrix, rhs):
    """Solve ``mat @ x = rhs`` by Gauss-Jordan elimination.

    ``rhs`` may be a sequence of FieldElem (returns a list of FieldElem) or an
    array of shape ``(n,)`` or ``(n, s)``; every column of a 2-D right-hand
    side is solved against the same matrix.
    """
    if mat.rows != mat.cols:
        raise FieldError("solve needs a square matrix")
    fld = mat.field
    n = mat.rows
    b, wrap = _as_rows(rhs, fld)
    if b.shape[0] != n:
        raise FieldError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    a = mat.entries.copy()
    b = b.copy()
    every = np.arange(n)
    for col in range(n):
        nz = np.flatnonzero(a[col:, col])
        if nz.size == 0:
            raise SingularMatrixError("matrix is singular")
        pivot = col + int(nz[0])
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        scale = fld.inv(int(a[col, col]))
        a[col] = fld.mul_scalar(scale, a[col])
        b[col] = fld.mul_scalar(scale, b[col])
        _eliminate_column(fld, a, b, col, col, every[every != col])
    if wrap:
        return [FieldElem(int(v), fld) for v in b]
    return b


def rank(mat: FieldMatrix) -> int:
    fld = mat.field
    a = mat.entries.copy()
    r = 0
    for col in range(mat.cols):
        if r == mat.rows:
            break
        nz = np.flatnonzero(a[r:, col])
        if nz.size == 0:
            continue
        pivot = r + int(nz[0])
        if pivot != r:
            a[[r, pivot]] = a[[pivot, r]]
        a[r] = fld.mul_scalar(fld.inv(int(a[r, col])), a[r])
        _eliminate_column(fld, a, None, r, col, np.arange(r + 1, mat.rows))
        r += 1
    return r


@lru_cache(maxsize=None)
def mul_table(fld: FieldParams) -> np.ndarray:
    """Full product table, built with ``FieldParams.mul``; only for m <= 8."""
    if fld.m > 8:
        raise FieldError("product tables are only built for m <= 8")
    n = fld.order
    x = np.arange(n, dtype=SYMBOL_DTYPE)
    return np.stack([fld.mul_scalar(c, x) for c in range(n)])


def rank_batch(fld: FieldParams, mats: np.ndarray) -> np.ndarray:
    """Ranks of a stack of equally-shaped matrices, shape ``(B, r, c)``."""
    if fld.m <= 8:
        table = mul_table(fld)
        mul_arrays = lambda x, y: table[x, y]  # noqa: E731
    else:
        mul_arrays = fld.mul_arrays
    a = np.array(mats, dtype=SYMBOL_DTYPE, copy=True)
    n_b, n_r, n_c = a.shape
    inverses = np.array([0] + [fld.inv(x) for x in range(1, fld.order)], dtype=SYMBOL_DTYPE)
    r = np.zeros(n_b, dtype=np.int64)
    batch = np.arange(n_b)
    row_ids = np.arange(n_r)
    for col in range(n_c):
        live = r < n_r
        below = (row_ids[None, :] >= r[:, None]) & (a[:, :, col] != 0)
        has = below.any(axis=1) & live
        if not has.any():
            continue
        b = batch[has]
        rb = r[has]
        p = below[has].argmax(axis=1)
        top, piv = a[b, rb].copy(), a[b, p].copy()
        a[b, rb], a[b, p] = piv, top
        a[b, rb] = mul_arrays(inverses[a[b, rb, col]][:, None], a[b, rb])
        f = a[b, :, col] * (row_ids[None, :] > rb[:, None])
        a[b] ^= mul_arrays(f[:, :, None], a[b, rb][:, None, :])
        r[has] += 1
    return r
