"""Matrix Market coordinate I/O (ASCII, 1-based indices).

Writes are byte-deterministic: entries in CSR order, values formatted
with repr-level precision, no timestamps or environment-dependent text.
"""

from __future__ import annotations

import numpy as np

from .sparse import CsrMatrix, LowerFactor

_HEADER = "%%MatrixMarket matrix coordinate real general\n"


def _fmt(x: float) -> str:
    return np.format_float_scientific(x, precision=16, trim="-")


def write_matrix_market(path, m) -> None:
    """Write a CsrMatrix or LowerFactor in coordinate format (general)."""
    if isinstance(m, LowerFactor):
        m = m.to_csr()
    with open(path, "w", newline="\n") as f:
        f.write(_HEADER)
        f.write(f"{m.n} {m.n} {m.nnz}\n")
        for i in range(m.n):
            s, e = m.row_ptr[i], m.row_ptr[i + 1]
            for k in range(s, e):
                f.write(f"{i + 1} {m.col_idx[k] + 1} {_fmt(m.values[k])}\n")


def read_matrix_market(path, symmetric: bool | None = None) -> CsrMatrix:
    """Read a coordinate-format matrix; 'symmetric' files are expanded."""
    with open(path) as f:
        header = f.readline()
        if not header.startswith("%%MatrixMarket"):
            raise ValueError("not a Matrix Market file")
        tokens = header.lower().split()
        if "coordinate" not in tokens or "real" not in tokens:
            raise ValueError("only real coordinate matrices are supported")
        sym_file = "symmetric" in tokens
        line = f.readline()
        while line.startswith("%"):
            line = f.readline()
        nrows, ncols, nnz = (int(t) for t in line.split())
        if nrows != ncols:
            raise ValueError("only square matrices are supported")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k in range(nnz):
            parts = f.readline().split()
            rows[k] = int(parts[0]) - 1
            cols[k] = int(parts[1]) - 1
            vals[k] = float(parts[2])
    if sym_file:
        off = rows != cols
        rows = np.concatenate([rows, cols[off]])
        cols = np.concatenate([cols, rows[:nnz][off]])
        vals = np.concatenate([vals, vals[off]])
    return CsrMatrix.from_coo(nrows, rows, cols, vals,
                              symmetric=bool(symmetric) if symmetric is not None else sym_file)


def read_lower_factor(path) -> LowerFactor:
    m = read_matrix_market(path)
    return LowerFactor(m.n, m.row_ptr, m.col_idx, m.values)
