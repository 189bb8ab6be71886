"""Stochastic Frobenius objectives and gradient-descent factor training.

Both objectives are estimated matrix-free with Gaussian probes:

  unweighted  ||L L^T - A||_F^2   via probes (v, t) = (z, A z)
  weighted    ||(L L^T - A) A^{-1}||_F^2  via (v, t) = (x, b), x = A^{-1} b

since E ||M z||^2 = ||M||_F^2 for z ~ N(0, I).  One probe contributes
||L (L^T v) - t||^2; its gradient restricted to the factor pattern is
2 (r u^T + v (L^T r)^T) with u = L^T v and r = L u - t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .problem import ProbeSet
from .sparse import (CsrMatrix, DimensionMismatchError, LowerFactor,
                     lower_apply, spmv, upper_apply)

LOSS_KINDS = ("unweighted", "weighted")


class TrainingDivergedError(RuntimeError):
    """The batch loss became non-finite."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch} (non-finite loss)")


@dataclass(frozen=True)
class TrainConfig:
    step_size: float = 1e-3
    batch_size: int = 512
    epochs: int = 10_000
    seed: int = 0
    diag_floor: float = 1e-8
    loss_kind: str = "unweighted"

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step_size must be non-negative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.diag_floor <= 0:
            raise ValueError("diag_floor must be positive")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")


@dataclass(frozen=True)
class TrainReport:
    factor: LowerFactor
    history: np.ndarray          # per-epoch batch-mean loss, history[0] == 1
    seed: int
    epochs_run: int
    floor_activations: int
    loss_kind: str
    step_size: float

    def __post_init__(self):
        object.__setattr__(self, "history", np.ascontiguousarray(self.history, dtype=np.float64))


def loss_probe(l: LowerFactor, v, t) -> float:
    """||L (L^T v) - t||_2^2 using two sparse products."""
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if v.shape != (l.n,) or t.shape != (l.n,):
        raise DimensionMismatchError("probe vectors must have length n")
    r = lower_apply(l, upper_apply(l, v)) - t
    return float(r @ r)


def loss_gradient_probe(l: LowerFactor, v, t) -> np.ndarray:
    """Pattern-masked gradient of loss_probe, aligned with L's stored entries."""
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if v.shape != (l.n,) or t.shape != (l.n,):
        raise DimensionMismatchError("probe vectors must have length n")
    u = upper_apply(l, v)
    r = lower_apply(l, u) - t
    s = upper_apply(l, r)
    rows = l.entry_rows
    cols = l.col_idx
    return 2.0 * (r[rows] * u[cols] + v[rows] * s[cols])


@numba.njit(cache=True)
def _batch_step_kernel(rp, ci, vals, trp, tci, tvals, rows, vb, tb):  # pragma: no cover - jitted
    """Batch-mean loss and pattern gradient; probes are columns of vb/tb.

    All accumulations run row-sequentially in ascending stored order, so
    the result is bit-reproducible for fixed inputs.
    """
    n, nb = vb.shape
    nnz = len(vals)
    u = np.zeros((n, nb))
    for i in range(n):
        for k in range(trp[i], trp[i + 1]):
            c = tci[k]
            w = tvals[k]
            for m in range(nb):
                u[i, m] += w * vb[c, m]
    loss = 0.0
    r = np.empty((n, nb))
    for i in range(n):
        for m in range(nb):
            r[i, m] = -tb[i, m]
        for k in range(rp[i], rp[i + 1]):
            c = ci[k]
            w = vals[k]
            for m in range(nb):
                r[i, m] += w * u[c, m]
        for m in range(nb):
            loss += r[i, m] * r[i, m]
    s = np.zeros((n, nb))
    for i in range(n):
        for k in range(trp[i], trp[i + 1]):
            c = tci[k]
            w = tvals[k]
            for m in range(nb):
                s[i, m] += w * r[c, m]
    grad = np.empty(nnz)
    for k in range(nnz):
        i = rows[k]
        j = ci[k]
        acc = 0.0
        for m in range(nb):
            acc += r[i, m] * u[j, m] + vb[i, m] * s[j, m]
        grad[k] = 2.0 * acc / nb
    return loss / nb, grad


def _batch_loss_and_gradient(l: LowerFactor, vb: np.ndarray, tb: np.ndarray):
    """Mean loss and mean pattern gradient over a batch (columns = probes)."""
    return _batch_step_kernel(l.row_ptr, l.col_idx, l.values,
                              l.t_row_ptr, l.t_col_idx, l.values[l.t_perm],
                              l.entry_rows, vb, tb)


def train(a: CsrMatrix, l0: LowerFactor, probes: ProbeSet, cfg: TrainConfig) -> TrainReport:
    """Plain gradient descent on the factor entries, frozen pattern.

    Each epoch samples cfg.batch_size probes with replacement from the
    pool, averages the per-probe gradients, takes one step of size
    cfg.step_size, and clamps any diagonal entry below cfg.diag_floor.
    The recorded history is the batch-mean loss normalized by its first
    value.
    """
    if a.n != l0.n or probes.n != a.n:
        raise DimensionMismatchError("matrix, factor, and probes must share one dimension")
    if cfg.loss_kind == "weighted":
        if probes.solutions is None:
            raise ValueError("weighted loss requires probe solutions (attach_solutions)")
        v_pool = probes.solutions
        t_pool = probes.probes
    else:
        v_pool = probes.probes
        t_pool = spmv(a, probes.probes.T).T

    # column-major pools so each batch gather is one contiguous copy
    v_pool = np.ascontiguousarray(v_pool.T)
    t_pool = np.ascontiguousarray(t_pool.T)

    rng = np.random.default_rng(cfg.seed)
    vals = l0.values.copy()
    diag_pos = l0.diag_positions
    rows = l0.entry_rows
    raw = np.empty(cfg.epochs)
    floor_hits = 0

    for epoch in range(cfg.epochs):
        idx = rng.integers(0, v_pool.shape[1], size=cfg.batch_size)
        loss, grad = _batch_step_kernel(l0.row_ptr, l0.col_idx, vals,
                                        l0.t_row_ptr, l0.t_col_idx, vals[l0.t_perm],
                                        rows, v_pool[:, idx], t_pool[:, idx])
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        raw[epoch] = loss
        vals = vals - cfg.step_size * grad
        low = vals[diag_pos] < cfg.diag_floor
        if np.any(low):
            floor_hits += int(low.sum())
            vals[diag_pos[low]] = cfg.diag_floor

    history = raw / raw[0] if raw[0] != 0.0 else raw.copy()
    history[0] = 1.0
    return TrainReport(factor=l0.with_values(vals), history=history, seed=cfg.seed,
                       epochs_run=cfg.epochs, floor_activations=floor_hits,
                       loss_kind=cfg.loss_kind, step_size=cfg.step_size)
