import numpy as np
import pytest

from faqr import (
    DataMatrix,
    DegenerateSpectrum,
    DimensionError,
    NonFinite,
    RankDeficient,
    estimate_factors,
    select_num_factors,
)
from faqr.harness import generate_dgp, sparse_signal_spec

from oracles import canonical_correlations, jacobi_eigh


def random_data(n, d, seed=0):
    rng = np.random.default_rng(seed)
    return DataMatrix(x=rng.standard_normal((n, d)))


class TestDataMatrix:
    def test_rejects_too_few_rows(self):
        with pytest.raises(DimensionError):
            DataMatrix(x=np.ones((1, 3)))

    def test_rejects_nonfinite(self):
        x = np.ones((4, 2))
        x[2, 1] = np.nan
        with pytest.raises(NonFinite):
            DataMatrix(x=x)

    def test_rejects_mismatched_response(self):
        with pytest.raises(DimensionError):
            DataMatrix(x=np.ones((4, 2)), y=np.ones(3))

    def test_arrays_are_frozen(self):
        data = random_data(5, 3)
        with pytest.raises(ValueError):
            data.x[0, 0] = 1.0


class TestEstimateFactors:
    def test_noiseless_rank_one_input_gives_zero_idiosyncratic(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(6)
        f = np.sqrt(6) * v / np.linalg.norm(v)
        b = rng.standard_normal(5)
        x = np.outer(f, b)
        fm = estimate_factors(DataMatrix(x=x), 1)
        assert np.abs(fm.u_hat).max() <= 1e-8
        assert np.allclose(fm.f_hat @ fm.b_hat.T, x, atol=1e-10)

    @pytest.mark.parametrize("n,d,m", [(8, 5, 2), (30, 4, 3), (12, 40, 4)])
    def test_reconstruction_and_normalization(self, n, d, m):
        data = random_data(n, d, seed=n * d)
        fm = estimate_factors(data, m)
        scale = np.abs(data.x).max()
        assert np.abs(fm.f_hat @ fm.b_hat.T + fm.u_hat - data.x).max() <= 1e-10 * scale
        gram = fm.f_hat.T @ fm.f_hat / n
        assert np.abs(gram - np.eye(m)).max() <= 1e-8
        btb = fm.b_hat.T @ fm.b_hat
        off = btb - np.diag(np.diag(btb))
        assert np.abs(off).max() <= 1e-8 * max(1.0, np.abs(btb).max())
        assert np.all(np.diff(fm.eigenvalues) <= 1e-9 * fm.eigenvalues[0])
        assert np.all(fm.eigenvalues >= 0)

    @pytest.mark.parametrize("n,d", [(8, 5), (30, 4)])
    def test_projection_identity(self, n, d):
        data = random_data(n, d, seed=7)
        fm = estimate_factors(data, 2)
        proj = (np.eye(n) - fm.f_hat @ fm.f_hat.T / n) @ data.x
        assert np.abs(proj - fm.u_hat).max() <= 1e-10 * max(1.0, np.abs(data.x).max())

    def test_matches_jacobi_eigendecomposition_oracle(self):
        data = random_data(8, 5, seed=11)
        x = data.x
        fm = estimate_factors(data, 2)
        evals, vecs = jacobi_eigh(x @ x.T)
        assert np.abs(fm.eigenvalues[:2] - evals[:2]).max() <= 1e-8 * evals[0]
        for k in range(2):
            ours = fm.f_hat[:, k] / np.sqrt(8)
            ref = vecs[:, k]
            if np.dot(ours, ref) < 0:
                ref = -ref
            assert np.abs(ours - ref).max() <= 1e-8
            b_ref = x.T @ (np.sqrt(8) * ref) / 8
            assert np.abs(fm.b_hat[:, k] - b_ref).max() <= 1e-8

    def test_sign_convention_largest_entry_positive(self):
        data = random_data(20, 6, seed=5)
        fm = estimate_factors(data, 3)
        for k in range(3):
            col = fm.f_hat[:, k]
            assert col[np.argmax(np.abs(col))] > 0

    def test_tall_and_wide_routes_agree(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((30, 4))
        fm = estimate_factors(DataMatrix(x=x), 4)
        evals, vecs = np.linalg.eigh(x @ x.T)
        vecs = vecs[:, np.argsort(evals)[::-1][:4]]
        for k in range(4):
            ours = fm.f_hat[:, k] / np.sqrt(30)
            ref = vecs[:, k]
            if np.dot(ours, ref) < 0:
                ref = -ref
            assert np.abs(ours - ref).max() <= 1e-8

    def test_rank_deficient_raises(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 6))
        with pytest.raises(RankDeficient):
            estimate_factors(DataMatrix(x=x), 3)

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            estimate_factors(random_data(6, 4), 5)


class TestSelectNumFactors:
    def test_single_candidate(self):
        assert select_num_factors(random_data(10, 6, seed=1), 1) == 1

    def test_spiked_two_factor_design(self):
        rng = np.random.default_rng(12)
        n, d = 200, 100
        f = rng.standard_normal((n, 2))
        b = np.sqrt(d) * rng.uniform(-1, 1, (d, 2))
        x = f @ b.T + 0.1 * rng.standard_normal((n, d))
        data = DataMatrix(x=x)
        got = select_num_factors(data, 8)
        assert got == 2
        # full-spectrum oracle via singular values
        sv = np.linalg.svd(x, compute_uv=False)
        ev = sv ** 2
        ratios = ev[:8] / ev[1:9]
        assert got == int(np.argmax(ratios)) + 1

    def test_benchmark_dgp_monte_carlo(self):
        hits = 0
        reps = 100
        for rep in range(reps):
            spec = sparse_signal_spec(n=500, d=200, replicate_seed=900 + rep)
            data, _ = generate_dgp(spec)
            if select_num_factors(data, 8) == 2:
                hits += 1
        assert hits >= 0.95 * reps

    def test_scale_invariance(self):
        data = random_data(40, 12, seed=3)
        base = select_num_factors(data, 6)
        for c in (1e-6, 3.7, 1e8):
            scaled = DataMatrix(x=c * data.x)
            assert select_num_factors(scaled, 6) == base

    def test_degenerate_spectrum(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 6))
        with pytest.raises(DegenerateSpectrum):
            select_num_factors(DataMatrix(x=x), 4)

    def test_m_max_bounds(self):
        with pytest.raises(DimensionError):
            select_num_factors(random_data(10, 4), 4)


class TestRotationConsistency:
    @pytest.mark.parametrize("d", [200, 500])
    def test_canonical_correlation_with_true_factors(self, d):
        spec = sparse_signal_spec(n=200, d=d, replicate_seed=31)
        data, truth = generate_dgp(spec)
        fm = estimate_factors(data, 2)
        cc = canonical_correlations(fm.f_hat, truth.f)
        assert cc.min() >= 0.95
