import numpy as np
import pytest
import scipy.linalg

from precopt import (CsrMatrix, LowerFactor, condition_number,
                     eigen_histogram, frob_norm_sq, ic0_factorize,
                     mode_energies, precond_spectrum, sym_eig,
                     verify_lemma, theorem_bound)
from precopt.problem import CoefficientField, GridSpec, assemble_fvm, gaussian_random_field
from precopt.spectral import ModeEnergies


def random_spd(n, seed, spread=10.0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(1.0, spread, n)
    m = q @ np.diag(lam) @ q.T
    return 0.5 * (m + m.T)


class TestSymEig:
    def test_diagonal(self):
        eig = sym_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(eig.lam, [1.0, 2.0, 3.0], rtol=0, atol=1e-14)
        assert np.allclose(np.abs(eig.q), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    def test_hand_2x2(self):
        eig = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(eig.lam, [1.0, 3.0], rtol=1e-12)

    def test_self_consistency_random(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((32, 32))
        m = m + m.T
        eig = sym_eig(m)
        n = 32
        assert np.linalg.norm(eig.q.T @ eig.q - np.eye(n)) <= 1e-9 * n
        recon = eig.q @ np.diag(eig.lam) @ eig.q.T
        assert np.linalg.norm(recon - m) <= 1e-9 * np.linalg.norm(m)
        assert np.all(np.diff(eig.lam) >= 0)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_matches_lapack(self):
        m = random_spd(24, seed=5)
        eig = sym_eig(m)
        assert np.allclose(eig.lam, np.linalg.eigvalsh(m), rtol=1e-10, atol=1e-12)


class TestModeEnergies:
    def test_identity_basis(self):
        from precopt.spectral import EigenPair
        e = np.arange(9.0).reshape(3, 3)
        eig = EigenPair(q=np.eye(3), lam=np.array([1.0, 2.0, 3.0]))
        a = mode_energies(e, eig)
        assert np.allclose(a.a, (e * e).sum(axis=0))

    def test_zero_error(self):
        eig = sym_eig(random_spd(6, seed=2))
        a = mode_energies(np.zeros((6, 6)), eig)
        assert np.all(a.a == 0.0)

    def test_total_energy_identity(self):
        rng = np.random.default_rng(3)
        a_mat = random_spd(16, seed=4)
        e = rng.standard_normal((16, 16))
        eig = sym_eig(a_mat)
        energies = mode_energies(e, eig)
        assert energies.c == pytest.approx(frob_norm_sq(e), rel=1e-10)


class TestVerifyIdentities:
    def test_e_equals_a(self):
        # E = A means E A^{-1} = I, so the weighted norm is exactly n
        a = random_spd(10, seed=6)
        res1, res2 = verify_lemma(a, a)
        assert res1 <= 1e-10
        assert res2 <= 1e-8

    def test_random_pairs(self):
        rng = np.random.default_rng(7)
        a = random_spd(16, seed=8)
        e = rng.standard_normal((16, 16))
        res1, res2 = verify_lemma(a, e)
        assert res1 <= 1e-10
        assert res2 <= 1e-8

    def test_diagonal_single_entry(self):
        lam = np.array([2.0, 3.0, 5.0])
        e = np.zeros((3, 3))
        e[0, 2] = 4.0
        ea_inv = e @ np.diag(1.0 / lam)
        assert (ea_inv ** 2).sum() == pytest.approx(16.0 / 25.0)
        res1, res2 = verify_lemma(np.diag(lam), e)
        assert res1 <= 1e-12 and res2 <= 1e-12

    def test_zero_error_matrix(self):
        assert verify_lemma(random_spd(5, seed=9), np.zeros((5, 5))) == (0.0, 0.0)


class TestWeightedLowerBound:
    def test_equality_when_energy_on_largest(self):
        lam = np.array([1.0, 2.0, 4.0])
        a = ModeEnergies(a=np.array([0.0, 0.0, 3.0]))
        value, bound = theorem_bound(a, lam)
        assert value == pytest.approx(bound, rel=1e-12)

    def test_strict_inequality_hand_case(self):
        lam = np.array([1.0, 2.0])
        c = 5.0
        value, bound = theorem_bound(ModeEnergies(a=np.array([c, 0.0])), lam)
        assert value == pytest.approx(c)
        assert bound == pytest.approx(c / 4.0)
        assert value > bound

    def test_brute_force_random_allocations(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            lam = np.sort(rng.uniform(0.5, 5.0, 8))
            alloc = rng.dirichlet(np.ones(8))
            value, bound = theorem_bound(ModeEnergies(a=alloc), lam)
            assert value >= bound * (1.0 - 1e-12)

    def test_minimum_attained_by_concentration(self):
        rng = np.random.default_rng(11)
        lam = np.sort(rng.uniform(0.5, 5.0, 8))
        best = np.inf
        for _ in range(1000):
            alloc = rng.dirichlet(np.ones(8))
            value, bound = theorem_bound(ModeEnergies(a=alloc), lam)
            best = min(best, value)
        conc_value, conc_bound = theorem_bound(
            ModeEnergies(a=np.eye(8)[-1]), lam)
        assert conc_value == pytest.approx(conc_bound, rel=1e-12)
        assert best >= conc_bound

    def test_zero_energy_rejected(self):
        with pytest.raises(ValueError):
            theorem_bound(ModeEnergies(a=np.zeros(3)), np.array([1.0, 2.0, 3.0]))


class TestPrecondSpectrum:
    def test_exact_cholesky_gives_unit_spectrum(self):
        a_dense = random_spd(20, seed=12)
        a = CsrMatrix.from_dense(a_dense, symmetric=True)
        l = LowerFactor.from_dense(np.linalg.cholesky(a_dense))
        eigs = precond_spectrum(a, l)
        assert np.allclose(eigs, 1.0, rtol=0, atol=1e-8)
        assert condition_number(eigs) == pytest.approx(1.0, abs=1e-8)

    def test_identity_factor_gives_spectrum_of_a(self):
        a_dense = random_spd(16, seed=13)
        a = CsrMatrix.from_dense(a_dense, symmetric=True)
        eigs = precond_spectrum(a, LowerFactor.identity(16))
        assert np.allclose(eigs, np.linalg.eigvalsh(a_dense), rtol=1e-10)

    def test_ic0_improves_fvm_conditioning(self):
        spec = GridSpec(8, 8)
        a = assemble_fvm(spec, gaussian_random_field(spec, seed=3, target_contrast=10.0))
        l = ic0_factorize(a)
        k_a = condition_number(precond_spectrum(a, LowerFactor.identity(a.n)))
        k_p = condition_number(precond_spectrum(a, l))
        assert k_p < k_a

    def test_matches_generalized_eigenvalues(self):
        a_dense = random_spd(24, seed=14)
        a = CsrMatrix.from_dense(a_dense, symmetric=True)
        l0 = ic0_factorize(a)
        eigs = precond_spectrum(a, l0)
        p = l0.to_dense() @ l0.to_dense().T
        gen = scipy.linalg.eigh(a_dense, p, eigvals_only=True)
        assert np.allclose(eigs, gen, rtol=1e-6)

    def test_size_limit(self):
        a = CsrMatrix.identity(8)
        with pytest.raises(ValueError, match="iteration"):
            precond_spectrum(a, LowerFactor.identity(8), dense_limit=4)


class TestConditionNumber:
    def test_unit_spectrum(self):
        assert condition_number(np.ones(5)) == 1.0

    def test_hand_value(self):
        assert condition_number([0.5, 2.0]) == 4.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="indefinite"):
            condition_number([1.0, -0.5])

    def test_fvm_matches_dense_oracle(self):
        spec = GridSpec(16, 16)
        a = assemble_fvm(spec, gaussian_random_field(spec, seed=6, target_contrast=10.0))
        eigs = precond_spectrum(a, LowerFactor.identity(a.n))
        lam = np.linalg.eigvalsh(a.to_dense())
        assert condition_number(eigs) == pytest.approx(lam.max() / lam.min(), rel=1e-6)


class TestEigenHistogram:
    def test_single_repeated_value(self):
        edges, counts = eigen_histogram(np.full(7, 2.0), 3, scale="linear")
        assert counts.sum() == 7
        assert counts.max() == 7

    def test_hand_linear_binning(self):
        edges, counts = eigen_histogram(np.array([1.0, 2.0, 3.0, 4.0]), 2, scale="linear")
        assert np.array_equal(counts, [2, 2])

    def test_counts_conserved(self):
        rng = np.random.default_rng(15)
        eigs = rng.uniform(0.1, 50.0, 321)
        for scale in ("linear", "log"):
            _, counts = eigen_histogram(eigs, 17, scale=scale)
            assert counts.sum() == 321

    def test_log_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            eigen_histogram(np.array([-1.0, 2.0]), 4, scale="log")


class TestCrossModuleConsistency:
    def test_weighted_loss_equals_spectral_sum(self):
        # dense ||(L L^T - A) A^{-1}||_F^2 equals sum(a_j / lambda_j^2)
        spec = GridSpec(4, 4)
        a = assemble_fvm(spec, gaussian_random_field(spec, seed=8, target_contrast=5.0))
        l0 = ic0_factorize(a)
        l = l0.with_values(l0.values * 1.02)
        a_dense = a.to_dense()
        e = l.to_dense() @ l.to_dense().T - a_dense
        exact = np.linalg.norm(np.linalg.solve(a_dense, e.T).T, "fro") ** 2
        eig = sym_eig(a_dense)
        energies = mode_energies(e, eig)
        spectral_sum = (energies.a / eig.lam ** 2).sum()
        assert spectral_sum == pytest.approx(exact, rel=1e-8)
