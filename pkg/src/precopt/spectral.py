"""Spectral diagnostics for SPD matrices and their preconditioned forms.

Provides a dense symmetric eigensolver (cyclic Jacobi), per-eigendirection
error energies of an approximation, the identity/lower-bound checks built
on them, the spectrum of the preconditioned operator, condition numbers,
and eigenvalue histograms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .sparse import CsrMatrix, LowerFactor, lower_solve, spmv, upper_solve


class EigenConvergenceError(RuntimeError):
    """Jacobi sweeps failed to reduce off-diagonal mass in time."""


@dataclass(frozen=True)
class EigenPair:
    """Orthonormal eigenvectors (columns of q) and ascending eigenvalues."""

    q: np.ndarray
    lam: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lam)


@dataclass(frozen=True)
class ModeEnergies:
    """Squared column norms of Q^T E Q: error energy per eigendirection."""

    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.ascontiguousarray(self.a, dtype=np.float64))
        if np.any(self.a < 0):
            raise ValueError("mode energies must be non-negative")

    @property
    def c(self) -> float:
        return float(self.a.sum())


def _round_robin_schedule(n: int) -> np.ndarray:
    """Tournament pairing: (n-1) rounds of n/2 disjoint index pairs.

    Pads odd n with a dummy index that is skipped by the kernel.  Every
    unordered pair appears exactly once per sweep, so sweeping all rounds
    is a cyclic Jacobi ordering.
    """
    m = n if n % 2 == 0 else n + 1
    arr = list(range(m))
    rounds = []
    for _ in range(m - 1):
        rounds.append([(min(arr[i], arr[m - 1 - i]), max(arr[i], arr[m - 1 - i]))
                       for i in range(m // 2)])
        arr = [arr[0], arr[-1]] + arr[1:-1]
    sched = np.asarray(rounds, dtype=np.int64)  # (m-1, m//2, 2)
    return sched


@numba.njit(cache=True)
def _jacobi_sweeps(s, q, sched, tol, max_sweeps):  # pragma: no cover - jitted
    # Round-based cyclic Jacobi: per round the rotations act on disjoint
    # index pairs, so both update passes run over contiguous rows.
    n = s.shape[0]
    n_rounds, n_pairs, _ = sched.shape
    skip = 0.01 * tol / n
    cs = np.empty(n_pairs)
    sn = np.empty(n_pairs)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for r in range(p + 1, n):
                if abs(s[p, r]) > off:
                    off = abs(s[p, r])
        if off <= tol:
            return sweep
        for rnd in range(n_rounds):
            for j in range(n_pairs):
                p = sched[rnd, j, 0]
                r = sched[rnd, j, 1]
                if r >= n:
                    cs[j] = 1.0
                    sn[j] = 0.0
                    continue
                apq = s[p, r]
                if abs(apq) <= skip:
                    cs[j] = 1.0
                    sn[j] = 0.0
                    continue
                theta = 0.5 * (s[r, r] - s[p, p]) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                cs[j] = c
                sn[j] = t * c
            # left pass: rows p and r of J^T S (contiguous)
            for j in range(n_pairs):
                if sn[j] == 0.0:
                    continue
                p = sched[rnd, j, 0]
                r = sched[rnd, j, 1]
                c = cs[j]
                t = sn[j]
                for k in range(n):
                    spk = s[p, k]
                    srk = s[r, k]
                    s[p, k] = c * spk - t * srk
                    s[r, k] = t * spk + c * srk
            # right pass: columns p and r of (J^T S) J, row by row
            for k in range(n):
                for j in range(n_pairs):
                    if sn[j] == 0.0:
                        continue
                    p = sched[rnd, j, 0]
                    r = sched[rnd, j, 1]
                    c = cs[j]
                    t = sn[j]
                    skp = s[k, p]
                    skr = s[k, r]
                    s[k, p] = c * skp - t * skr
                    s[k, r] = t * skp + c * skr
            # accumulate eigenvectors: Q <- Q J
            for k in range(n):
                for j in range(n_pairs):
                    if sn[j] == 0.0:
                        continue
                    p = sched[rnd, j, 0]
                    r = sched[rnd, j, 1]
                    c = cs[j]
                    t = sn[j]
                    qkp = q[k, p]
                    qkr = q[k, r]
                    q[k, p] = c * qkp - t * qkr
                    q[k, r] = t * qkp + c * qkr
    return -1


def sym_eig(m, max_sweeps: int = 100) -> EigenPair:
    """Eigendecomposition of a dense symmetric matrix by cyclic Jacobi.

    Rotations are applied until every off-diagonal magnitude is at most
    1e-12 times the Frobenius norm of the input.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square 2-D array")
    norm = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > 1e-12 * max(norm, 1e-300):
        raise ValueError("matrix is not symmetric to working precision")
    n = m.shape[0]
    s = np.ascontiguousarray(0.5 * (m + m.T))
    q = np.eye(n)
    if norm == 0.0:
        return EigenPair(q=q, lam=np.zeros(n))
    sweeps = _jacobi_sweeps(s, q, _round_robin_schedule(n), 1e-12 * norm, max_sweeps)
    if sweeps < 0:
        raise EigenConvergenceError(f"no convergence after {max_sweeps} Jacobi sweeps")
    lam = np.diag(s).copy()
    order = np.argsort(lam, kind="stable")
    return EigenPair(q=np.ascontiguousarray(q[:, order]), lam=lam[order])


def mode_energies(e, eig: EigenPair) -> ModeEnergies:
    """Energy of the error matrix e in each eigendirection of the basis."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (eig.n, eig.n):
        raise ValueError("error matrix does not match eigenbasis dimension")
    m = eig.q.T @ e @ eig.q
    return ModeEnergies(a=(m * m).sum(axis=0))


def verify_lemma(a, e) -> tuple[float, float]:
    """Relative residuals of the two energy decompositions.

    res1 compares ||E||_F^2 with the total mode energy; res2 compares
    ||E A^{-1}||_F^2 (computed by dense column solves, never by explicit
    inversion) with sum(a_j / lambda_j^2).
    """
    a = np.asarray(a, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if not np.any(e):
        return 0.0, 0.0
    eig = sym_eig(a)
    if np.any(eig.lam <= 0):
        raise ValueError("matrix must be positive definite")
    energies = mode_energies(e, eig)
    ef2 = float((e * e).sum())
    res1 = abs(ef2 - energies.c) / ef2
    # E A^{-1} = (A^{-1} E^T)^T since A is symmetric
    ea_inv = np.linalg.solve(a, e.T).T
    w2 = float((ea_inv * ea_inv).sum())
    res2 = abs(w2 - float((energies.a / eig.lam ** 2).sum())) / w2
    return res1, res2


def theorem_bound(energies: ModeEnergies, lam) -> tuple[float, float]:
    """Weighted energy sum and its lower bound c / lambda_max^2.

    The sum equals the bound exactly when all energy sits in the direction
    of the largest eigenvalue.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if len(lam) != len(energies.a):
        raise ValueError("eigenvalue count does not match energies")
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be ascending")
    c = energies.c
    if c == 0.0:
        raise ValueError("total energy is zero")
    value = float((energies.a / lam ** 2).sum())
    bound = float(c / lam[-1] ** 2)
    if value < bound * (1.0 - 1e-12):
        raise AssertionError("weighted energy fell below its lower bound")
    return value, bound


def precond_spectrum(a: CsrMatrix, l: LowerFactor, *, dense_limit: int = 4096) -> np.ndarray:
    """Eigenvalues of P^{-1} A for P = L L^T, via the similar SPD form.

    Forms S = L^{-1} A L^{-T} densely with triangular solves against
    identity columns, symmetrizes to remove rounding asymmetry, and
    returns its (ascending) eigenvalues.
    """
    if a.n > dense_limit:
        raise ValueError(f"n={a.n} exceeds the dense diagnostic limit {dense_limit}; "
                         "use CG iteration counts instead")
    if a.n != l.n:
        raise ValueError("matrix and factor dimensions differ")
    w = upper_solve(l, np.eye(a.n))        # L^{-T}
    s = lower_solve(l, spmv(a, w))
    s = 0.5 * (s + s.T)
    return sym_eig(s).lam


def condition_number(eigs) -> float:
    """max/min over a positive spectrum."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if np.any(eigs <= 0):
        raise ValueError("spectrum contains non-positive eigenvalues (indefinite operator)")
    return float(eigs.max() / eigs.min())


def eigen_histogram(eigs, num_bins: int, scale: str = "log"):
    """Histogram of eigenvalues; returns (bin_edges, counts)."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    if scale not in ("linear", "log"):
        raise ValueError("scale must be 'linear' or 'log'")
    lo, hi = float(eigs.min()), float(eigs.max())
    if scale == "log":
        if lo <= 0:
            raise ValueError("log-scale bins require positive eigenvalues")
        edges = np.geomspace(lo, hi, num_bins + 1) if hi > lo else np.geomspace(lo, lo * (1 + 1e-12), num_bins + 1)
    else:
        edges = np.linspace(lo, hi, num_bins + 1) if hi > lo else np.linspace(lo, lo + 1e-12, num_bins + 1)
    # clip so edge rounding cannot drop the extremes; counts always sum to n
    counts, _ = np.histogram(np.clip(eigs, edges[0], edges[-1]), bins=edges)
    return edges, counts
