import numpy as np
import pytest

from precopt import (CoefficientField, CsrMatrix, GridSpec, assemble_fvm,
                     attach_solutions, gaussian_random_field, sample_probes,
                     spmv)


class TestGridSpec:
    def test_requires_square(self):
        with pytest.raises(ValueError):
            GridSpec(4, 5)

    def test_requires_minimum_size(self):
        with pytest.raises(ValueError):
            GridSpec(1, 1)

    def test_derived_quantities(self):
        spec = GridSpec(8, 8)
        assert spec.h == 0.125
        assert spec.n == 64


class TestGaussianRandomField:
    def test_unit_contrast_limit(self):
        field = gaussian_random_field(GridSpec(8, 8), seed=0, target_contrast=1.0)
        assert np.array_equal(field.k, np.ones(64))

    def test_contrast_is_exact(self):
        for seed in [0, 1, 42]:
            field = gaussian_random_field(GridSpec(16, 16), seed=seed, target_contrast=10.0)
            assert field.contrast == pytest.approx(10.0, rel=1e-8)

    def test_determinism(self):
        a = gaussian_random_field(GridSpec(16, 16), seed=3)
        b = gaussian_random_field(GridSpec(16, 16), seed=3)
        c = gaussian_random_field(GridSpec(16, 16), seed=4)
        assert np.array_equal(a.k, b.k)
        assert not np.array_equal(a.k, c.k)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gaussian_random_field(GridSpec(8, 8), seed=0, target_contrast=0.5)
        with pytest.raises(ValueError):
            gaussian_random_field(GridSpec(8, 8), seed=0, corr_len=0.0)


class TestAssembleFvm:
    def test_interior_stencil_constant_coefficient(self):
        spec = GridSpec(3, 3)
        a = assemble_fvm(spec, CoefficientField(np.ones(9))).to_dense()
        inv_h2 = 9.0
        center = 4  # middle cell of the 3x3 grid
        assert a[center, center] == pytest.approx(4.0 * inv_h2)
        for nb in [1, 3, 5, 7]:
            assert a[center, nb] == pytest.approx(-inv_h2)

    def test_corner_cell(self):
        spec = GridSpec(3, 3)
        a = assemble_fvm(spec, CoefficientField(np.ones(9))).to_dense()
        inv_h2 = 9.0
        # corner: two interior faces plus two Dirichlet half-cell faces
        assert a[0, 0] == pytest.approx((2 + 2 + 1 + 1) * inv_h2)
        assert a[0, 1] == pytest.approx(-inv_h2)
        assert a[0, 3] == pytest.approx(-inv_h2)

    def test_spd_with_heterogeneous_coefficient(self):
        spec = GridSpec(8, 8)
        field = gaussian_random_field(spec, seed=5, target_contrast=10.0)
        a = assemble_fvm(spec, field)
        d = a.to_dense()
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) > 0)
        assert np.linalg.eigvalsh(d).min() > 0

    def test_weak_diagonal_dominance(self):
        spec = GridSpec(6, 6)
        field = gaussian_random_field(spec, seed=9, target_contrast=10.0)
        d = assemble_fvm(spec, field).to_dense()
        offsum = np.abs(d).sum(axis=1) - 2 * np.diag(d)
        assert np.all(offsum <= 1e-12 * np.diag(d))
        # boundary rows are strictly dominant
        nx = 6
        boundary = [i for i in range(36)
                    if i % nx in (0, nx - 1) or i // nx in (0, nx - 1)]
        assert np.all(offsum[boundary] < -1e-12)

    def test_rotation_symmetry(self):
        # rotating the coefficient field by 90 degrees permutes the matrix
        spec = GridSpec(5, 5)
        field = gaussian_random_field(spec, seed=2, target_contrast=8.0)
        k = field.k.reshape(5, 5)
        rot = np.rot90(k)
        a = assemble_fvm(spec, field)
        a_rot = assemble_fvm(spec, CoefficientField(rot.ravel()))
        # permutation mapping cell (iy, ix) of the rotated grid to the original
        perm = np.rot90(np.arange(25).reshape(5, 5)).ravel()
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.standard_normal(25)
            lhs = spmv(a_rot, x)
            rhs = spmv(a, x[np.argsort(perm)])[perm]
            assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


class TestProbes:
    def test_zero_count_rejected(self):
        with pytest.raises(ValueError):
            sample_probes(10, 0, seed=0)

    def test_determinism(self):
        a = sample_probes(16, 5, seed=11)
        b = sample_probes(16, 5, seed=11)
        assert np.array_equal(a.probes, b.probes)

    def test_chi_squared_concentration(self):
        probes = sample_probes(1024, 1000, seed=13)
        mean_sq = (probes.probes ** 2).sum(axis=1).mean() / 1024
        assert mean_sq == pytest.approx(1.0, abs=0.05)


class TestAttachSolutions:
    def test_identity(self):
        probes = sample_probes(6, 3, seed=1)
        out = attach_solutions(CsrMatrix.identity(6), probes)
        assert np.allclose(out.solutions, probes.probes, rtol=0, atol=1e-12)

    def test_scalar(self):
        probes_in = sample_probes(1, 1, seed=0)
        a = CsrMatrix.from_coo(1, [0], [0], [2.0], symmetric=True)
        b = np.array([[4.0]])
        out = attach_solutions(a, type(probes_in)(probes=b, seed=0))
        assert out.solutions[0][0] == pytest.approx(2.0)

    def test_residual_oracle_random_spd(self):
        rng = np.random.default_rng(21)
        m = rng.standard_normal((64, 64))
        a = CsrMatrix.from_dense(m @ m.T + 64 * np.eye(64), symmetric=True)
        probes = sample_probes(64, 8, seed=22)
        out = attach_solutions(a, probes)
        for i in range(8):
            r = spmv(a, out.solutions[i]) - out.probes[i]
            assert np.linalg.norm(r) <= 1e-10 * np.linalg.norm(out.probes[i])
