"""Incomplete Cholesky factorization with zero fill-in, IC(0).

Up-looking row algorithm on the lower-triangular pattern of A.  No
diagonal shifting: a non-positive pivot raises immediately.
"""

from __future__ import annotations

import math

import numpy as np

from .sparse import CsrMatrix, FactorBreakdownError, LowerFactor


def ic0_factorize(a: CsrMatrix) -> LowerFactor:
    """IC(0) factor L with pattern(L) = lower triangle of pattern(A).

    For every (i,j) stored in the pattern, (L L^T)_{ij} = A_{ij} up to
    rounding.  Requires a symmetric matrix with positive diagonal.
    """
    n = a.n
    rp, ci, av = a.row_ptr, a.col_idx, a.values

    # lower-triangular pattern of A (diagonal must be present)
    l_cols: list[np.ndarray] = []
    l_vals: list[np.ndarray] = []
    for i in range(n):
        s, e = rp[i], rp[i + 1]
        keep = ci[s:e] <= i
        cols = ci[s:e][keep]
        if len(cols) == 0 or cols[-1] != i:
            raise ValueError(f"missing diagonal entry in row {i}")
        l_cols.append(cols.copy())
        l_vals.append(av[s:e][keep].astype(np.float64))

    for i in range(n):
        cols_i = l_cols[i]
        vals_i = l_vals[i]
        for p in range(len(cols_i)):
            j = cols_i[p]
            # dot product of rows i and j over shared columns k < j
            cols_j = l_cols[j]
            vals_j = l_vals[j]
            acc = 0.0
            qi = 0
            qj = 0
            while qi < p and qj < len(cols_j) - 1:
                ki, kj = cols_i[qi], cols_j[qj]
                if ki == kj:
                    acc += vals_i[qi] * vals_j[qj]
                    qi += 1
                    qj += 1
                elif ki < kj:
                    qi += 1
                else:
                    qj += 1
            if j == i:
                pivot = vals_i[p] - acc
                if pivot <= 0.0:
                    raise FactorBreakdownError(i, f"IC(0) breakdown: pivot {pivot:.3e} in row {i}")
                vals_i[p] = math.sqrt(pivot)
            else:
                vals_i[p] = (vals_i[p] - acc) / vals_j[-1]

    counts = np.array([len(c) for c in l_cols], dtype=np.int64)
    row_ptr = np.concatenate([[0], np.cumsum(counts)])
    return LowerFactor(n, row_ptr, np.concatenate(l_cols), np.concatenate(l_vals))
