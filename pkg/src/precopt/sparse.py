"""Deterministic sparse/dense linear-algebra kernels (CSR storage).

All kernels accumulate in ascending column-index order per row, so results
are bit-reproducible for fixed inputs.  Scalars are float64 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class DimensionMismatchError(ValueError):
    """Operand shapes are incompatible."""


class FactorBreakdownError(ValueError):
    """A triangular factor has a non-positive diagonal pivot."""

    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"non-positive pivot in row {row}")


def _as_f64(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


@dataclass(frozen=True)
class CsrMatrix:
    """General sparse matrix in compressed sparse row form.

    Column indices are strictly ascending within each row.  A matrix
    flagged ``symmetric`` stores both (i,j) and (j,i) explicitly.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", np.ascontiguousarray(self.row_ptr, dtype=np.int64))
        object.__setattr__(self, "col_idx", np.ascontiguousarray(self.col_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        self._validate()

    def _validate(self):
        n, rp, ci = self.n, self.row_ptr, self.col_idx
        if n <= 0:
            raise ValueError("dimension must be positive")
        if rp.shape != (n + 1,) or rp[0] != 0 or rp[-1] != len(ci):
            raise ValueError("row_ptr must have length n+1 with row_ptr[0]=0, row_ptr[n]=nnz")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if len(ci) != len(self.values):
            raise ValueError("col_idx and values length mismatch")
        if len(ci) and (ci.min() < 0 or ci.max() >= n):
            raise ValueError("column index out of range")
        for i in range(n):
            cols = ci[rp[i]:rp[i + 1]]
            if len(cols) > 1 and np.any(np.diff(cols) <= 0):
                raise ValueError(f"column indices not strictly ascending in row {i}")
        if self.symmetric:
            d = self.to_dense() if n <= 512 else None
            if d is not None and not np.array_equal(d, d.T):
                raise ValueError("matrix flagged symmetric is not value-symmetric")

    @property
    def nnz(self) -> int:
        return len(self.values)

    @staticmethod
    def from_coo(n: int, rows, cols, vals, symmetric: bool = False) -> "CsrMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = _as_f64(vals)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        row_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return CsrMatrix(n, row_ptr, cols, vals, symmetric=symmetric)

    @staticmethod
    def from_dense(a, symmetric: bool = False, drop_tol: float = 0.0) -> "CsrMatrix":
        a = _as_f64(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square 2-D array")
        rows, cols = np.nonzero(np.abs(a) > drop_tol)
        return CsrMatrix.from_coo(a.shape[0], rows, cols, a[rows, cols], symmetric=symmetric)

    @staticmethod
    def identity(n: int) -> "CsrMatrix":
        idx = np.arange(n, dtype=np.int64)
        return CsrMatrix(n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n), symmetric=True)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            s, e = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[s:e]] = self.values[s:e]
        return out

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n))

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.n)
        for i in range(self.n):
            s, e = self.row_ptr[i], self.row_ptr[i + 1]
            pos = np.searchsorted(self.col_idx[s:e], i)
            if pos < e - s and self.col_idx[s + pos] == i:
                d[i] = self.values[s + pos]
        return d


@dataclass(frozen=True)
class LowerFactor:
    """Sparse lower-triangular factor with a frozen sparsity pattern.

    Every row stores its diagonal entry (last position, ascending order)
    and all diagonal values are strictly positive.  The pattern is fixed
    at construction; use :meth:`with_values` to swap entry values.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    # CSR layout of the transpose, sharing values via a permutation.
    t_row_ptr: np.ndarray = field(init=False, repr=False, compare=False)
    t_col_idx: np.ndarray = field(init=False, repr=False, compare=False)
    t_perm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", np.ascontiguousarray(self.row_ptr, dtype=np.int64))
        object.__setattr__(self, "col_idx", np.ascontiguousarray(self.col_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        self._validate()
        self._build_transpose()

    def _validate(self):
        n, rp, ci = self.n, self.row_ptr, self.col_idx
        if n <= 0:
            raise ValueError("dimension must be positive")
        if rp.shape != (n + 1,) or rp[0] != 0 or rp[-1] != len(ci):
            raise ValueError("row_ptr must have length n+1 with row_ptr[0]=0, row_ptr[n]=nnz")
        for i in range(n):
            cols = ci[rp[i]:rp[i + 1]]
            if len(cols) == 0 or cols[-1] != i:
                raise ValueError(f"row {i} must end with its diagonal entry")
            if np.any(cols > i):
                raise ValueError(f"entry above the diagonal in row {i}")
            if len(cols) > 1 and np.any(np.diff(cols) <= 0):
                raise ValueError(f"column indices not strictly ascending in row {i}")
        diag = self.values[rp[1:] - 1]
        if np.any(diag <= 0):
            bad = int(np.nonzero(diag <= 0)[0][0])
            raise FactorBreakdownError(bad, f"non-positive diagonal in row {bad}")

    def _build_transpose(self):
        n, rp, ci = self.n, self.row_ptr, self.col_idx
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(rp))
        perm = np.lexsort((rows, ci))  # transpose rows = original cols
        t_ci = rows[perm]
        t_rp = np.zeros(n + 1, dtype=np.int64)
        np.add.at(t_rp, ci + 1, 1)
        np.cumsum(t_rp, out=t_rp)
        object.__setattr__(self, "t_row_ptr", t_rp)
        object.__setattr__(self, "t_col_idx", t_ci)
        object.__setattr__(self, "t_perm", perm)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def diag_positions(self) -> np.ndarray:
        return self.row_ptr[1:] - 1

    def with_values(self, values) -> "LowerFactor":
        """New factor on the same (immutable) pattern with different values."""
        values = _as_f64(values)
        if values.shape != self.values.shape:
            raise ValueError("value array does not match pattern size")
        return LowerFactor(self.n, self.row_ptr, self.col_idx, values)

    @property
    def entry_rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))

    @staticmethod
    def identity(n: int) -> "LowerFactor":
        idx = np.arange(n, dtype=np.int64)
        return LowerFactor(n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @staticmethod
    def from_dense(a) -> "LowerFactor":
        a = _as_f64(a)
        n = a.shape[0]
        rows, cols, vals = [], [], []
        for i in range(n):
            for j in range(i + 1):
                if a[i, j] != 0.0 or i == j:
                    rows.append(i)
                    cols.append(j)
                    vals.append(a[i, j])
        rows = np.asarray(rows, dtype=np.int64)
        row_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return LowerFactor(n, row_ptr, np.asarray(cols, dtype=np.int64), np.asarray(vals))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            s, e = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[s:e]] = self.values[s:e]
        return out

    def to_csr(self) -> CsrMatrix:
        return CsrMatrix(self.n, self.row_ptr, self.col_idx, self.values)


def _row_segment_sums(row_ptr: np.ndarray, contrib: np.ndarray, n: int) -> np.ndarray:
    """Sum contiguous nnz segments per row, left to right (ascending index)."""
    out_shape = (n,) + contrib.shape[1:]
    if contrib.shape[0] == 0:
        return np.zeros(out_shape)
    starts = row_ptr[:-1]
    nonempty = row_ptr[1:] > starts
    out = np.zeros(out_shape)
    out[nonempty] = np.add.reduceat(contrib, starts[nonempty], axis=0)
    return out


def spmv(a: CsrMatrix, x) -> np.ndarray:
    """Sparse matrix times vector (or tall matrix of column vectors)."""
    x = _as_f64(x)
    if x.shape[0] != a.n:
        raise DimensionMismatchError(f"operand has leading dimension {x.shape[0]}, expected {a.n}")
    contrib = a.values.reshape(-1, *([1] * (x.ndim - 1))) * x[a.col_idx]
    return _row_segment_sums(a.row_ptr, contrib, a.n)


def lower_apply(l: LowerFactor, x) -> np.ndarray:
    """L @ x."""
    x = _as_f64(x)
    if x.shape[0] != l.n:
        raise DimensionMismatchError(f"operand has leading dimension {x.shape[0]}, expected {l.n}")
    contrib = l.values.reshape(-1, *([1] * (x.ndim - 1))) * x[l.col_idx]
    return _row_segment_sums(l.row_ptr, contrib, l.n)


def upper_apply(l: LowerFactor, x) -> np.ndarray:
    """L.T @ x, via the precomputed transpose layout."""
    x = _as_f64(x)
    if x.shape[0] != l.n:
        raise DimensionMismatchError(f"operand has leading dimension {x.shape[0]}, expected {l.n}")
    tvals = l.values[l.t_perm]
    contrib = tvals.reshape(-1, *([1] * (x.ndim - 1))) * x[l.t_col_idx]
    return _row_segment_sums(l.t_row_ptr, contrib, l.n)


def lower_solve(l: LowerFactor, b) -> np.ndarray:
    """Solve L y = b by forward substitution (b may hold many columns)."""
    b = _as_f64(b)
    if b.shape[0] != l.n:
        raise DimensionMismatchError(f"rhs has leading dimension {b.shape[0]}, expected {l.n}")
    rp, ci, v = l.row_ptr, l.col_idx, l.values
    y = b.copy()
    for i in range(l.n):
        s, e = rp[i], rp[i + 1]
        piv = v[e - 1]
        if piv <= 0:
            raise FactorBreakdownError(i)
        if e - s > 1:
            y[i] = (y[i] - v[s:e - 1] @ y[ci[s:e - 1]]) / piv
        else:
            y[i] = y[i] / piv
    return y


def upper_solve(l: LowerFactor, b) -> np.ndarray:
    """Solve L.T y = b by backward substitution (b may hold many columns)."""
    b = _as_f64(b)
    if b.shape[0] != l.n:
        raise DimensionMismatchError(f"rhs has leading dimension {b.shape[0]}, expected {l.n}")
    trp, tci = l.t_row_ptr, l.t_col_idx
    tv = l.values[l.t_perm]
    y = b.copy()
    for i in range(l.n - 1, -1, -1):
        s, e = trp[i], trp[i + 1]
        # transpose row i is ascending, so the diagonal sits first
        piv = tv[s]
        if piv <= 0:
            raise FactorBreakdownError(i)
        if e - s > 1:
            y[i] = (y[i] - tv[s + 1:e] @ y[tci[s + 1:e]]) / piv
        else:
            y[i] = y[i] / piv
    return y


def factor_product(l: LowerFactor) -> CsrMatrix:
    """Materialize P = L L.T as a symmetric CsrMatrix (diagnostic use).

    The result carries the symbolic product pattern, which may be denser
    than the factor itself.  Stored values are exactly symmetric.
    """
    ls = l.to_csr().to_scipy()
    p = (ls @ ls.T).tocsr()
    p.sum_duplicates()
    p.sort_indices()
    # kill any last-bit asymmetry from differing accumulation orders
    pt = p.T.tocsr()
    pt.sort_indices()
    p = 0.5 * (p + pt)
    p = p.tocsr()
    p.sort_indices()
    return CsrMatrix(l.n, p.indptr.astype(np.int64), p.indices.astype(np.int64),
                     p.data, symmetric=True)


def frob_norm_sq(m) -> float:
    """Squared Frobenius norm of a CsrMatrix, LowerFactor, or dense array."""
    if isinstance(m, (CsrMatrix, LowerFactor)):
        vals = m.values
    else:
        vals = _as_f64(m).ravel()
    return float(np.dot(vals, vals))
