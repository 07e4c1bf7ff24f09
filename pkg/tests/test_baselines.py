import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eht.baselines import RankConfig, lrls, lrls_objective, pls, project_psd, rho_rt
from eht.core import trace_distance, uhlmann_fidelity
from eht.measurements import Dataset, MeasurementRecord, exact_dataset, identity_setting, sample_dataset

from conftest import random_mixed, random_pure


def single_record_dataset(counts):
    return Dataset((MeasurementRecord(identity_setting(1), counts=np.array(counts)),), (0,))


class TestRhoRT:
    def test_single_qubit_shadow(self):
        assert np.allclose(rho_rt(single_record_dataset([10, 0])), np.diag([2, -1]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_unit_trace_and_hermitian(self, n, n_u, seed):
        rng = np.random.default_rng(seed)
        d = sample_dataset(random_mixed(rng, n), n_u, 7, seed=seed)
        m = rho_rt(d)
        assert abs(np.trace(m) - 1) < 1e-12
        assert np.allclose(m, m.conj().T)

    def test_converges_to_state(self, rng):
        rho = random_mixed(rng, 2)
        assert trace_distance(rho_rt(exact_dataset(rho, 10_000, seed=1)), rho) < 1e-2

    def test_linear_in_frequencies(self):
        a = single_record_dataset([3, 1])
        b = single_record_dataset([1, 3])
        mix = Dataset((MeasurementRecord(identity_setting(1), frequencies=np.array([0.5, 0.5])),), (0,))
        assert np.allclose(rho_rt(mix), 0.5 * (rho_rt(a) + rho_rt(b)))

    def test_mean_over_datasets(self, rng):
        rho = random_mixed(rng, 2)
        mean = np.mean([rho_rt(sample_dataset(rho, 1000, 20, seed=s)) for s in range(10)], axis=0)
        assert np.abs(mean - rho.matrix).max() < 2e-2

    def test_empty(self):
        with pytest.raises(ValueError):
            rho_rt(single_record_dataset([1, 0]).subset([]))


class TestProjection:
    def test_psd_unchanged(self, rng):
        rho = random_mixed(rng, 2)
        assert np.allclose(project_psd(rho.matrix).matrix, rho.matrix)

    def test_hand_example(self):
        assert np.allclose(project_psd(np.diag([2.0, -1.0])).matrix, np.diag([1.0, 0.0]))

    def test_redistribution(self):
        # -0.2 is dropped and spread over the surviving eigenvalues
        out = np.linalg.eigvalsh(project_psd(np.diag([0.7, 0.5, -0.2, 0.0])).matrix)
        assert np.allclose(np.sort(out), [0, 0, 0.4, 0.6])

    def test_minimizes_distance_on_simplex(self, rng):
        mu = np.array([0.9, 0.35, -0.25])
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        m = (q * mu) @ q.conj().T
        # pad to a 4x4 (two-qubit) matrix with a zero eigenvalue along a fourth direction
        m4 = np.zeros((4, 4), dtype=complex)
        m4[:3, :3] = m
        best = np.inf
        grid = np.linspace(0, 1, 201)
        for a, b in itertools.product(grid, grid):
            c = 1 - a - b
            if c < -1e-12:
                continue
            best = min(best, (mu[0] - a) ** 2 + (mu[1] - b) ** 2 + (mu[2] - c) ** 2)
        lam = np.sort(np.linalg.eigvalsh(project_psd(m4).matrix))[::-1]
        ours = (mu[0] - lam[0]) ** 2 + (mu[1] - lam[1]) ** 2 + (mu[2] - lam[2]) ** 2 + lam[3] ** 2
        assert ours <= best + 1e-8

    def test_trace_checked(self):
        with pytest.raises(ValueError):
            project_psd(np.diag([1.0, 1.0]))


class TestPLS:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_always_density_matrix(self, n, n_u, seed):
        rng = np.random.default_rng(seed)
        rho = pls(sample_dataset(random_mixed(rng, n), n_u, 3, seed=seed))
        assert abs(np.trace(rho.matrix) - 1) < 1e-10 and np.linalg.eigvalsh(rho.matrix).min() > -1e-10

    def test_exact_limit(self, rng):
        rho = random_mixed(rng, 2)
        assert uhlmann_fidelity(rho, pls(exact_dataset(rho, 10_000, seed=2))) >= 0.99

    def test_product_state(self):
        rho = np.zeros((4, 4))
        rho[1, 1] = 1
        assert uhlmann_fidelity(rho, pls(sample_dataset(rho, 200, 200, seed=3))) >= 0.99


class TestLRLS:
    def test_gradient(self, rng):
        rho = random_mixed(rng, 2)
        fun, _ = lrls_objective(sample_dataset(rho, 10, 50, seed=0), 2)
        v = rng.standard_normal(16)
        _, g = fun(v)
        fd = np.array([(fun(v + 1e-6 * e)[0] - fun(v - 1e-6 * e)[0]) / 2e-6 for e in np.eye(16)])
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)

    def test_pure_state_rank_one(self, rng):
        psi = random_pure(rng, 3).to_density_matrix()
        rec, info = lrls(sample_dataset(psi, 100, 500, seed=5), RankConfig(1), return_info=True)
        assert uhlmann_fidelity(psi, rec) >= 0.99 and info["iterations"] > 0

    def test_rank_two_output_valid(self, rng):
        rho = lrls(sample_dataset(random_mixed(rng, 2), 10, 20, seed=1), RankConfig(2))
        ev = np.linalg.eigvalsh(rho.matrix)
        assert ev.min() > -1e-12 and abs(ev.sum() - 1) < 1e-12
        assert np.sum(ev > 1e-8) <= 2

    def test_config(self, rng):
        with pytest.raises(ValueError):
            RankConfig(0)
        with pytest.raises(ValueError):
            lrls(sample_dataset(random_mixed(rng, 1), 3, 5, seed=0), RankConfig(3))
