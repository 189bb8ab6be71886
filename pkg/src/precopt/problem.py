"""Test-problem generation: heterogeneous diffusion on the unit square.

Assembles the SPD matrix of a cell-centered 5-point finite-volume
discretization of -div(k grad u) = f with Dirichlet boundaries, where the
coefficient k is the exponential of a smoothed Gaussian white-noise field.
Also produces random right-hand-side probes and their reference solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.ndimage import gaussian_filter

from .sparse import CsrMatrix, spmv


@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid on the unit square; cells indexed iy*nx + ix."""

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx != self.ny:
            raise ValueError("grid must be square (nx == ny)")
        if self.nx < 2:
            raise ValueError("need at least 2 cells per axis")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def n(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class CoefficientField:
    """Positive diffusion coefficient per cell (flat, iy*nx + ix order)."""

    k: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", np.ascontiguousarray(self.k, dtype=np.float64))
        if np.any(self.k <= 0) or not np.all(np.isfinite(self.k)):
            raise ValueError("coefficients must be positive and finite")

    @property
    def contrast(self) -> float:
        return float(self.k.max() / self.k.min())


@dataclass(frozen=True)
class ProbeSet:
    """Batch of N(0, I) probe vectors, optionally with solutions A x = b."""

    probes: np.ndarray          # shape (count, n)
    seed: int
    solutions: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "probes", np.ascontiguousarray(self.probes, dtype=np.float64))
        if self.probes.ndim != 2 or self.probes.shape[0] < 1:
            raise ValueError("probes must be a non-empty (count, n) array")
        if self.solutions is not None:
            sols = np.ascontiguousarray(self.solutions, dtype=np.float64)
            if sols.shape != self.probes.shape:
                raise ValueError("solutions shape must match probes")
            object.__setattr__(self, "solutions", sols)

    @property
    def count(self) -> int:
        return self.probes.shape[0]

    @property
    def n(self) -> int:
        return self.probes.shape[1]


def gaussian_random_field(spec: GridSpec, seed: int, corr_len: float = 0.2,
                          target_contrast: float = 10.0) -> CoefficientField:
    """Log-Gaussian coefficient field with an exact max/min contrast.

    White noise per cell is smoothed with an isotropic Gaussian kernel of
    standard deviation corr_len*nx cells (truncated at 3 sigma, reflecting
    boundaries), then the log-field is affinely rescaled so that
    max(k)/min(k) equals target_contrast.
    """
    if target_contrast < 1.0:
        raise ValueError("target_contrast must be >= 1")
    if not (0.0 < corr_len <= 1.0):
        raise ValueError("corr_len must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((spec.ny, spec.nx))
    g = gaussian_filter(noise, sigma=corr_len * spec.nx, mode="reflect", truncate=3.0)
    span = g.max() - g.min()
    if target_contrast == 1.0:
        return CoefficientField(np.ones(spec.n))
    if span == 0.0:
        raise ValueError("degenerate smoothed field (max == min); grid too small")
    g = (g - g.mean()) * (np.log(target_contrast) / span)
    return CoefficientField(np.exp(g).ravel())


def assemble_fvm(spec: GridSpec, field: CoefficientField) -> CsrMatrix:
    """5-point SPD finite-volume matrix with harmonic-mean transmissibilities.

    Interior face between cells i, j: T = 2 k_i k_j / (k_i + k_j) / h^2.
    Dirichlet boundary faces add 2 k_i / h^2 to the diagonal (half-cell
    distance to the boundary).  Off-diagonals are -T.
    """
    nx, ny = spec.nx, spec.ny
    if field.k.shape != (spec.n,):
        raise ValueError("coefficient field does not match grid size")
    k = field.k.reshape(ny, nx)
    inv_h2 = float(nx) * float(nx)

    rows, cols, vals = [], [], []
    diag_flat = np.zeros(spec.n)
    diag = diag_flat.reshape(ny, nx)

    def harmonic(ka, kb):
        return 2.0 * ka * kb / (ka + kb) * inv_h2

    # horizontal faces
    tx = harmonic(k[:, :-1], k[:, 1:])
    # vertical faces
    ty = harmonic(k[:-1, :], k[1:, :])

    idx = np.arange(spec.n).reshape(ny, nx)
    for (left, right, t) in [(idx[:, :-1], idx[:, 1:], tx), (idx[:-1, :], idx[1:, :], ty)]:
        rows.extend([left.ravel(), right.ravel()])
        cols.extend([right.ravel(), left.ravel()])
        vals.extend([-t.ravel(), -t.ravel()])
        np.add.at(diag_flat, left.ravel(), t.ravel())
        np.add.at(diag_flat, right.ravel(), t.ravel())

    # Dirichlet boundary faces (half-cell transmissibility)
    diag[:, 0] += 2.0 * k[:, 0] * inv_h2
    diag[:, -1] += 2.0 * k[:, -1] * inv_h2
    diag[0, :] += 2.0 * k[0, :] * inv_h2
    diag[-1, :] += 2.0 * k[-1, :] * inv_h2

    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag_flat)
    return CsrMatrix.from_coo(spec.n, np.concatenate(rows), np.concatenate(cols),
                              np.concatenate(vals), symmetric=True)


def sample_probes(n: int, count: int, seed: int) -> ProbeSet:
    """Draw `count` i.i.d. standard-normal vectors of length n (seeded)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return ProbeSet(probes=rng.standard_normal((count, n)), seed=seed)


def attach_solutions(a: CsrMatrix, probes: ProbeSet, *, dense_limit: int = 4096) -> ProbeSet:
    """Compute reference solutions x_i with A x_i = b_i for every probe.

    Dense Cholesky up to `dense_limit`; CG with tolerance 1e-12 beyond.
    Residuals are verified to 1e-10 relative.
    """
    if a.n != probes.n:
        raise ValueError("probe length does not match matrix dimension")
    b = probes.probes
    if a.n <= dense_limit:
        cho = scipy.linalg.cho_factor(a.to_dense(), lower=True)
        x = scipy.linalg.cho_solve(cho, b.T).T
    else:
        from .solver import pcg
        x = np.empty_like(b)
        for i in range(probes.count):
            x[i], _, _ = pcg(a, b[i], None, rel_tol=1e-12, max_iter=100 * a.n)
    res = np.linalg.norm(spmv(a, x.T) - b.T, axis=0)
    bnorm = np.linalg.norm(b, axis=1)
    if np.any(res > 1e-10 * bnorm):
        bad = int(np.argmax(res / bnorm))
        raise RuntimeError(f"reference solve failed for probe {bad}: "
                           f"relative residual {res[bad] / bnorm[bad]:.3e}")
    return ProbeSet(probes=b, seed=probes.seed, solutions=x)

