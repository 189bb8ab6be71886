"""Preconditioned conjugate gradient with residual-history reporting.

Stopping uses the true residual ||b - A x|| / ||b||, recomputed every
iteration, so iteration counts are comparable across preconditioners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, LowerFactor, lower_solve, spmv, upper_solve


class CgMaxIterationsError(RuntimeError):
    """CG hit the iteration cap; carries the partial residual history."""

    def __init__(self, max_iter: int, history):
        self.history = np.asarray(history)
        super().__init__(f"CG did not reach tolerance within {max_iter} iterations")


class CgNumericalError(RuntimeError):
    """Non-finite quantity encountered during the iteration."""


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    history: np.ndarray          # true relative residual, history[0] = 1
    precond_history: np.ndarray  # sqrt(r^T M^{-1} r), internal quantity


def pcg(a: CsrMatrix, b, l: LowerFactor | None = None, rel_tol: float = 1e-8,
        max_iter: int | None = None) -> tuple[np.ndarray, int, np.ndarray]:
    """Solve A x = b from x0 = 0; returns (x, iterations, residual_history).

    With a factor L the preconditioner application is
    M^{-1} r = (L L^T)^{-1} r via forward/backward substitution.
    See :func:`pcg_detailed` for the internal preconditioned-norm history.
    """
    res = pcg_detailed(a, b, l, rel_tol=rel_tol, max_iter=max_iter)
    return res.x, res.iterations, res.history


def pcg_detailed(a: CsrMatrix, b, l: LowerFactor | None = None, rel_tol: float = 1e-8,
                 max_iter: int | None = None) -> CgResult:
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (a.n,):
        raise ValueError(f"rhs must have length {a.n}")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must lie in (0, 1)")
    if max_iter is None:
        max_iter = 10 * a.n

    def apply_m_inv(r):
        if l is None:
            return r
        return upper_solve(l, lower_solve(l, r))

    bnorm = np.linalg.norm(b)
    x = np.zeros(a.n)
    if bnorm == 0.0:
        return CgResult(x=x, iterations=0, history=np.zeros(1), precond_history=np.zeros(1))

    r = b.copy()
    z = apply_m_inv(r)
    p = z.copy()
    rz = float(r @ z)
    history = [1.0]
    precond_history = [np.sqrt(rz)]

    for it in range(1, max_iter + 1):
        ap = spmv(a, p)
        pap = float(p @ ap)
        if not np.isfinite(pap) or pap <= 0.0:
            raise CgNumericalError(f"non-positive curvature p^T A p = {pap} at iteration {it}")
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        # true residual, recomputed for the reported history
        true_rel = float(np.linalg.norm(b - spmv(a, x)) / bnorm)
        if not np.isfinite(true_rel):
            raise CgNumericalError(f"non-finite residual at iteration {it}")
        history.append(true_rel)
        z = apply_m_inv(r)
        rz_new = float(r @ z)
        precond_history.append(np.sqrt(max(rz_new, 0.0)))
        if true_rel <= rel_tol:
            return CgResult(x=x, iterations=it, history=np.asarray(history),
                            precond_history=np.asarray(precond_history))
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
    raise CgMaxIterationsError(max_iter, history)
