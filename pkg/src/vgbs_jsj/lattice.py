"""Exact integer matrices and sublattices of Z^n.

All arithmetic uses Python integers, so there is no overflow path.  Matrices
act on column vectors from the left; a sublattice is stored by a basis in
canonical column Hermite normal form (lower echelon, positive pivots, entries
to the left of each pivot reduced into ``[0, pivot)``), which makes equality
of sublattices plain equality of the stored bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    NotContained,
    NotCorankOne,
    NotRepresentable,
    NotSaturated,
    NotUnimodular,
)

INFINITE = math.inf

Vector = tuple[int, ...]


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    data: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimension")
        if len(self.data) != self.rows or any(len(r) != self.cols for r in self.data):
            raise ValueError(f"entry storage does not match {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], cols: int | None = None) -> "IntMatrix":
        data = tuple(tuple(int(x) for x in r) for r in rows)
        if cols is None:
            cols = len(data[0]) if data else 0
        return cls(len(data), cols, data)

    @classmethod
    def from_columns(cls, columns: Iterable[Sequence[int]], rows: int) -> "IntMatrix":
        columns = [tuple(c) for c in columns]
        if any(len(c) != rows for c in columns):
            raise ValueError("column length does not match row count")
        data = tuple(tuple(c[i] for c in columns) for i in range(rows))
        return cls(rows, len(columns), data)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows,
                         tuple(tuple(r[j] for r in self.data) for j in range(self.cols)))

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self.data)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.data]

    def apply(self, v: Sequence[int]) -> Vector:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self.data)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ocols = other.columns()
        data = tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in ocols) for r in self.data)
        return IntMatrix(self.rows, other.cols, data)

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntMatrix(self.rows, self.cols,
                         tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.data, other.data)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(tuple(-a for a in r) for r in self.data))

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(tuple(k * a for a in r) for r in self.data))

    def __pow__(self, k: int) -> "IntMatrix":
        if self.rows != self.cols or k < 0:
            raise ValueError("power needs a square matrix and k >= 0")
        result, base = IntMatrix.identity(self.rows), self
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        return result

    def hstack(self, *others: "IntMatrix") -> "IntMatrix":
        cols = self.columns()
        for o in others:
            if o.rows != self.rows:
                raise ValueError("row count mismatch in hstack")
            cols.extend(o.columns())
        return IntMatrix.from_columns(cols, self.rows)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "IntMatrix":
        return IntMatrix.from_rows([r[c0:c1] for r in self.data[r0:r1]], cols=c1 - c0)

    def is_identity(self) -> bool:
        return self.rows == self.cols and all(
            a == (i == j) for i, r in enumerate(self.data) for j, a in enumerate(r))

    def det(self) -> int:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        return _bareiss_det([list(r) for r in self.data])

    def rank(self) -> int:
        _, _, r = _column_hnf([list(r) for r in self.data], self.rows, self.cols, track=False)
        return r


def _bareiss_det(a: list[list[int]]) -> int:
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def as_matrix(m) -> IntMatrix:
    if isinstance(m, IntMatrix):
        return m
    if isinstance(m, UnimodularAuto):
        return m.matrix
    return IntMatrix.from_rows(m)


def column_matrix(v: Sequence[int]) -> IntMatrix:
    return IntMatrix.from_columns([tuple(v)], len(v))


@dataclass(frozen=True)
class UnimodularAuto:
    """Square integer matrix with determinant +1 or -1."""

    matrix: IntMatrix

    def __post_init__(self):
        m = self.matrix
        if m.rows != m.cols:
            raise NotUnimodular(f"automorphism must be square, got {m.shape}")
        if m.det() not in (1, -1):
            raise NotUnimodular(f"determinant {m.det()} is not +-1")

    @classmethod
    def of(cls, m) -> "UnimodularAuto":
        return cls(as_matrix(m))

    @classmethod
    def identity(cls, n: int) -> "UnimodularAuto":
        return cls(IntMatrix.identity(n))

    @property
    def n(self) -> int:
        return self.matrix.rows

    def det(self) -> int:
        return self.matrix.det()

    def inverse(self) -> "UnimodularAuto":
        return UnimodularAuto(solve_in_basis(self.matrix, IntMatrix.identity(self.n)))

    def __matmul__(self, other):
        if isinstance(other, UnimodularAuto):
            return UnimodularAuto(self.matrix @ other.matrix)
        return self.matrix @ other

    def __pow__(self, k: int) -> "UnimodularAuto":
        return UnimodularAuto(self.matrix ** k)

    def tolist(self) -> list[list[int]]:
        return self.matrix.tolist()


@dataclass(frozen=True)
class Sublattice:
    """A subgroup of Z^ambient, stored by its canonical column-HNF basis."""

    ambient: int
    basis: IntMatrix

    @property
    def rank(self) -> int:
        return self.basis.cols

    @classmethod
    def zero(cls, n: int) -> "Sublattice":
        return cls(n, IntMatrix.zeros(n, 0))

    @classmethod
    def full(cls, n: int) -> "Sublattice":
        return cls(n, IntMatrix.identity(n))

    def generators(self) -> list[Vector]:
        return self.basis.columns()

    def __contains__(self, v) -> bool:
        return contains(self, v)

    def issubset(self, other: "Sublattice") -> bool:
        return all(contains(other, c) for c in self.basis.columns())

    def __add__(self, other: "Sublattice") -> "Sublattice":
        return hnf_basis(self.basis.hstack(other.basis))

    def image(self, m: IntMatrix) -> "Sublattice":
        return hnf_basis(as_matrix(m) @ self.basis)


# ---------------------------------------------------------------------------
# Column Hermite normal form with transform.


def _column_hnf(a: list[list[int]], m: int, n: int, track: bool):
    """Column-reduce the m x n matrix ``a`` in place.

    Returns (columns, transform_columns, r): the first r columns are the
    canonical HNF basis of the column span, the remaining columns are zero,
    and (when tracked) ``a @ V = H`` with V given by its columns.
    """
    cols = [[a[i][j] for i in range(m)] for j in range(n)]
    V = [[int(i == j) for i in range(n)] for j in range(n)] if track else None

    def axpy(dst, src, q):
        # dst -= q * src
        cd, cs = cols[dst], cols[src]
        for i in range(m):
            if cs[i]:
                cd[i] -= q * cs[i]
        if track:
            vd, vs = V[dst], V[src]
            for i in range(n):
                if vs[i]:
                    vd[i] -= q * vs[i]

    def swap(i, j):
        cols[i], cols[j] = cols[j], cols[i]
        if track:
            V[i], V[j] = V[j], V[i]

    k = 0
    for row in range(m):
        if k == n:
            break
        while True:
            nz = [j for j in range(k, n) if cols[j][row] != 0]
            if not nz:
                break
            j0 = min(nz, key=lambda j: abs(cols[j][row]))
            if j0 != k:
                swap(k, j0)
            piv = cols[k][row]
            clean = True
            for j in range(k + 1, n):
                if cols[j][row]:
                    axpy(j, k, cols[j][row] // piv)
                    if cols[j][row]:
                        clean = False
            if clean:
                break
        if cols[k][row] == 0:
            continue
        if cols[k][row] < 0:
            cols[k] = [-x for x in cols[k]]
            if track:
                V[k] = [-x for x in V[k]]
        piv = cols[k][row]
        for j in range(k):
            q = cols[j][row] // piv
            if q:
                axpy(j, k, q)
        k += 1
    return cols, V, k


def hnf_basis(generators) -> Sublattice:
    """Canonical basis of the Z-span of the columns of ``generators``."""
    g = as_matrix(generators)
    cols, _, r = _column_hnf([list(x) for x in g.data], g.rows, g.cols, track=False)
    return Sublattice(g.rows, IntMatrix.from_columns(cols[:r], g.rows))


def span(vectors: Iterable[Sequence[int]], n: int) -> Sublattice:
    return hnf_basis(IntMatrix.from_columns(list(vectors), n))


def _triangular_coords(basis_cols: list[list[int]], m: int, v: Sequence[int]):
    """Coordinates of v in an echelon basis, or None if v is outside the span."""
    res = list(v)
    coeffs = []
    for col in basis_cols:
        p = next(i for i in range(m) if col[i] != 0)
        q, r = divmod(res[p], col[p])
        if r:
            return None
        coeffs.append(q)
        if q:
            for i in range(p, m):
                res[i] -= q * col[i]
    if any(res):
        return None
    return coeffs


def contains(sub: Sublattice, v: Sequence[int]) -> bool:
    if len(v) != sub.ambient:
        raise ValueError("vector has wrong ambient dimension")
    return _triangular_coords([list(c) for c in sub.basis.columns()], sub.ambient, v) is not None


def solve_in_basis(S, Mt) -> IntMatrix:
    """Exact integer X with S @ X = Mt; raises NotRepresentable otherwise."""
    S, Mt = as_matrix(S), as_matrix(Mt)
    if S.rows != Mt.rows:
        raise ValueError("row count mismatch")
    cols, V, r = _column_hnf([list(x) for x in S.data], S.rows, S.cols, track=True)
    out = []
    for j, target in enumerate(Mt.columns()):
        y = _triangular_coords(cols[:r], S.rows, target)
        if y is None:
            raise NotRepresentable(f"column {j} of the target lies outside the span")
        out.append(tuple(sum(V[k][i] * y[k] for k in range(r)) for i in range(S.cols)))
    return IntMatrix.from_columns(out, S.cols)


def coordinates(sub: Sublattice, v: Sequence[int]) -> Vector:
    """Coordinates of v with respect to the stored basis of ``sub``."""
    y = _triangular_coords([list(c) for c in sub.basis.columns()], sub.ambient, v)
    if y is None:
        raise NotRepresentable(f"{tuple(v)} is not in the sublattice")
    return tuple(y)


def kernel_lattice(A) -> Sublattice:
    """The saturated sublattice {v : A v = 0} of Z^cols."""
    A = as_matrix(A)
    cols, V, r = _column_hnf([list(x) for x in A.data], A.rows, A.cols, track=True)
    return hnf_basis(IntMatrix.from_columns(V[r:], A.cols))


def saturation(sub: Sublattice) -> Sublattice:
    """Elements of the ambient lattice with a nonzero multiple in ``sub``."""
    normals = kernel_lattice(sub.basis.T)
    return kernel_lattice(normals.basis.T)


def is_saturated(sub: Sublattice) -> bool:
    return saturation(sub) == sub


# ---------------------------------------------------------------------------
# Smith normal form.


def _smith(a: list[list[int]], m: int, n: int, track: bool):
    U = [[int(i == j) for j in range(m)] for i in range(m)] if track else None
    V = [[int(i == j) for j in range(n)] for i in range(n)] if track else None

    def row_axpy(dst, src, q):
        a[dst] = [x - q * y for x, y in zip(a[dst], a[src])]
        if track:
            U[dst] = [x - q * y for x, y in zip(U[dst], U[src])]

    def col_axpy(dst, src, q):
        for r in a:
            r[dst] -= q * r[src]
        if track:
            for r in V:
                r[dst] -= q * r[src]

    def row_swap(i, j):
        a[i], a[j] = a[j], a[i]
        if track:
            U[i], U[j] = U[j], U[i]

    def col_swap(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        if track:
            for r in V:
                r[i], r[j] = r[j], r[i]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        row_swap(t, best[0])
        col_swap(t, best[1])
        while True:
            piv = a[t][t]
            for i in range(t + 1, m):
                if a[i][t]:
                    row_axpy(i, t, a[i][t] // piv)
            for j in range(t + 1, n):
                if a[t][j]:
                    col_axpy(j, t, a[t][j] // piv)
            rest_c = [i for i in range(t + 1, m) if a[i][t]]
            rest_r = [j for j in range(t + 1, n) if a[t][j]]
            if rest_c or rest_r:
                cand = [(abs(a[i][t]), 0, i) for i in rest_c] + [(abs(a[t][j]), 1, j) for j in rest_r]
                _, kind, idx = min(cand)
                if kind == 0:
                    row_swap(t, idx)
                else:
                    col_swap(t, idx)
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if a[i][j] % piv), None)
            if bad is None:
                break
            row_axpy(t, bad[0], -1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            if track:
                U[t] = [-x for x in U[t]]
        t += 1
    return a, U, V


def snf(A) -> tuple[IntMatrix, UnimodularAuto, UnimodularAuto]:
    """Smith normal form: returns (S, U, V) with U @ A @ V == S."""
    A = as_matrix(A)
    s, U, V = _smith([list(r) for r in A.data], A.rows, A.cols, track=True)
    return (IntMatrix.from_rows(s, cols=A.cols),
            UnimodularAuto(IntMatrix.from_rows(U, cols=A.rows)),
            UnimodularAuto(IntMatrix.from_rows(V, cols=A.cols)))


def invariant_factors(A) -> list[int]:
    """Nonzero diagonal entries of the Smith normal form of A, in divisibility order."""
    A = as_matrix(A)
    s, _, _ = _smith([list(r) for r in A.data], A.rows, A.cols, track=False)
    return [s[i][i] for i in range(min(A.rows, A.cols)) if s[i][i]]


# ---------------------------------------------------------------------------
# Quotients and indices.


def _relative_coords(sub: Sublattice, sup: Sublattice) -> IntMatrix:
    if sub.ambient != sup.ambient:
        raise ValueError("ambient ranks differ")
    try:
        return solve_in_basis(sup.basis, sub.basis)
    except NotRepresentable:
        raise NotContained("sublattice is not contained in the superlattice") from None


def index(sub: Sublattice, sup: Sublattice):
    """[sup : sub] as an int, or INFINITE when the ranks differ."""
    X = _relative_coords(sub, sup)
    if sub.rank < sup.rank:
        return INFINITE
    return math.prod(invariant_factors(X))


def quotient_invariants(sub: Sublattice, sup: Sublattice) -> tuple[int, list[int]]:
    """(free rank, torsion divisors > 1) of sup / sub."""
    X = _relative_coords(sub, sup)
    d = invariant_factors(X)
    return sup.rank - len(d), [x for x in d if x > 1]


# ---------------------------------------------------------------------------
# Complements, finite order, closures.


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def primitive_normal(H: Sublattice) -> Vector:
    """Primitive integer functional vanishing on a corank-one sublattice."""
    if H.rank != H.ambient - 1:
        raise NotCorankOne(f"rank {H.rank} in ambient rank {H.ambient}")
    return kernel_lattice(H.basis.T).basis.column(0)


def primitive_complement(H: Sublattice) -> Vector:
    """A vector x with Z^n = <x> + H, for H saturated of corank one.

    Deterministic: the first standard basis vector on which the normal
    functional of H takes a unit value, else the Bezout vector of its
    coefficients.
    """
    f = primitive_normal(H)
    if not is_saturated(H):
        raise NotSaturated("sublattice is not saturated")
    n = H.ambient
    for i, c in enumerate(f):
        if c in (1, -1):
            return tuple(int(j == i) for j in range(n))
    g, coeffs = f[0], [1]
    for c in f[1:]:
        g, a, b = _xgcd(g, c)
        coeffs = [a * x for x in coeffs] + [b]
    if g != 1:  # pragma: no cover - f is primitive
        raise NotSaturated("normal functional is not primitive")
    return tuple(coeffs)


def complete_basis(H: Sublattice) -> UnimodularAuto:
    """The unimodular matrix [x | H basis] with x = primitive_complement(H)."""
    x = primitive_complement(H)
    return UnimodularAuto(column_matrix(x).hstack(H.basis))


def _is_prime_power(q: int) -> tuple[int, int] | None:
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            while q % p == 0:
                q //= p
                k += 1
            return (p, k) if q == 1 else None
    return None


def order_exponent(k: int) -> int:
    """lcm of the prime powers q with phi(q) <= k.

    Every finite-order element of GL_k(Z) has order dividing this number.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 1
    N = 1
    # phi(p^a) >= p^a / 2, so only q <= 2k can qualify.
    for q in range(2, 2 * k + 2):
        pk = _is_prime_power(q)
        if pk is None:
            continue
        p, a = pk
        if p ** (a - 1) * (p - 1) <= k:
            N = math.lcm(N, q)
    return N


def matrix_order(M):
    """Least k >= 1 with M^k = I, or INFINITE."""
    M = as_matrix(M)
    N = order_exponent(M.rows)
    if not (M ** N).is_identity():
        return INFINITE
    for k in range(1, N + 1):
        if N % k == 0 and (M ** k).is_identity():
            return k
    raise AssertionError("unreachable")  # pragma: no cover


def invariant_closure(phi, F: Sublattice) -> Sublattice:
    """Smallest phi-invariant sublattice containing F (stabilized F + phi(F))."""
    phi = as_matrix(phi)
    if phi.rows != F.ambient:
        raise ValueError("rank mismatch")
    C = F
    for _ in range(F.ambient + 1):
        nxt = C + C.image(phi)
        if nxt == C:
            return C
        C = nxt
    raise AssertionError("closure failed to stabilize")  # pragma: no cover


# ---------------------------------------------------------------------------
# JSON encoding: numbers below 2**53 in magnitude, decimal strings beyond.

_JSON_SAFE = 2 ** 53


def encode_int(x: int):
    return x if abs(x) < _JSON_SAFE else str(x)


def decode_int(x) -> int:
    if isinstance(x, bool):
        raise TypeError("boolean is not an integer")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        return int(x)
    raise TypeError(f"expected an integer, got {type(x).__name__}")


def matrix_to_json(m) -> list[list]:
    return [[encode_int(x) for x in r] for r in as_matrix(m).data]


def matrix_from_json(rows, nrows: int | None = None, ncols: int | None = None) -> IntMatrix:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise TypeError("matrix must be an array of arrays")
    data = [[decode_int(x) for x in r] for r in rows]
    if nrows is not None and len(data) != nrows:
        raise ValueError(f"expected {nrows} rows, got {len(data)}")
    if ncols is None:
        ncols = len(data[0]) if data else 0
    return IntMatrix.from_rows(data, cols=ncols)
