import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import sqrtm

from eht.core import (Bipartition, DensityMatrix, PureState, born_probabilities, entanglement_spectrum,
                      fmax_exact, gibbs_from_eh, kron_all, partial_trace, trace_distance, uhlmann_fidelity)
from eht.measurements import MeasurementSetting, identity_setting

from conftest import random_hermitian, random_mixed, random_pure

I2 = np.eye(2)


def basis(bits):
    v = np.zeros(2 ** len(bits))
    v[int(bits, 2)] = 1
    return PureState(v)


class TestTypes:
    def test_pure_state_norm_checked(self):
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            PureState(np.ones(3) / np.sqrt(3))

    def test_density_invariants(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[1, 0.5], [0, 0]]))
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([0.7, 0.7]))
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_bipartition(self):
        b = Bipartition.from_subsystem([3, 1], 5)
        assert b.subsystem_a == (1, 3) and b.subsystem_b == (0, 2, 4)


class TestPartialTrace:
    def test_bell_is_maximally_mixed(self):
        bell = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2))
        assert np.allclose(partial_trace(bell, [0]).matrix, I2 / 2)

    def test_product_state(self):
        rho = partial_trace(basis("01"), [1])
        assert np.allclose(rho.matrix, np.diag([0, 1]))

    def test_svd_oracle(self, rng):
        psi = random_pure(rng, 6)
        rho = partial_trace(psi, [0, 1, 2])
        sv = np.linalg.svd(psi.amplitudes.reshape(8, 8), compute_uv=False)
        assert np.allclose(np.sort(np.linalg.eigvalsh(rho.matrix)), np.sort(sv**2), atol=1e-12)

    def test_mixed_matches_pure(self, rng):
        psi = random_pure(rng, 5)
        a = partial_trace(psi, [1, 3])
        b = partial_trace(psi.to_density_matrix(), [1, 3])
        assert np.allclose(a.matrix, b.matrix, atol=1e-12)
        assert a.sites == (1, 3)

    def test_noncontiguous_against_einsum(self, rng):
        psi = random_pure(rng, 3)
        t = psi.amplitudes.reshape(2, 2, 2)
        oracle = np.einsum("ajb,cjd->abcd", t, t.conj()).reshape(4, 4)
        assert np.allclose(partial_trace(psi, [0, 2]).matrix, oracle)

    def test_nested_traces(self, rng):
        rho = random_mixed(rng, 4)
        inner = partial_trace(partial_trace(rho, [0, 1, 3]), [0])
        assert np.allclose(inner.matrix, partial_trace(rho, [0]).matrix)

    @pytest.mark.parametrize("keep", [[], [5], [0, 0]])
    def test_bad_subsets(self, rng, keep):
        with pytest.raises(ValueError):
            partial_trace(random_pure(rng, 3), keep)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.data())
    def test_schmidt_symmetry(self, n, seed, data):
        rng = np.random.default_rng(seed)
        psi = random_pure(rng, n)
        k = data.draw(st.integers(1, n - 1))
        keep = sorted(data.draw(st.permutations(range(n)))[:k])
        rest = [i for i in range(n) if i not in keep]
        ea = entanglement_spectrum(partial_trace(psi, keep), truncation=1e-10)
        eb = entanglement_spectrum(partial_trace(psi, rest), truncation=1e-10)
        m = min(ea.xis.size, eb.xis.size)
        assert np.allclose(ea.eigenvalues[:m], eb.eigenvalues[:m], atol=1e-8)
        assert abs(ea.entropy_bits - eb.entropy_bits) < 1e-8


class TestGibbs:
    def test_zero_is_infinite_temperature(self):
        assert np.allclose(gibbs_from_eh(np.zeros((4, 4))).matrix, np.eye(4) / 4)

    def test_diagonal(self):
        assert np.allclose(gibbs_from_eh(np.diag([np.log(3), 0])).matrix, np.diag([0.25, 0.75]))

    def test_taylor_oracle(self, rng):
        h = random_hermitian(rng, 8, 0.5)
        series, term = np.eye(8, dtype=complex), np.eye(8, dtype=complex)
        for k in range(1, 60):
            term = term @ (-h) / k
            series += term
        assert np.allclose(gibbs_from_eh(h).matrix, series / np.trace(series), atol=1e-8)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            gibbs_from_eh(np.array([[0, 1], [0, 0]]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
    def test_shift_invariance(self, seed, c):
        h = random_hermitian(np.random.default_rng(seed), 4)
        a = gibbs_from_eh(h).matrix
        b = gibbs_from_eh(h + c * np.eye(4)).matrix
        assert np.max(np.abs(a - b)) < 1e-10

    def test_large_coefficients_do_not_overflow(self):
        rho = gibbs_from_eh(np.diag([1000.0, 2000.0]))
        assert np.allclose(rho.matrix, np.diag([1.0, 0.0]))


class TestSpectrum:
    def test_bell(self):
        es = entanglement_spectrum(DensityMatrix(I2 / 2))
        assert np.allclose(es.xis, [math.log(2)] * 2) and es.entropy_bits == pytest.approx(1.0)

    def test_pure(self):
        es = entanglement_spectrum(DensityMatrix(np.diag([1.0, 0.0])))
        assert np.allclose(es.xis, [0.0]) and es.schmidt_rank == 1 and es.entropy_bits == 0

    def test_known_diagonal(self):
        h = np.array([0.3, 1.1, 2.0, 4.0])
        lnz = np.log(np.sum(np.exp(-h)))
        es = entanglement_spectrum(gibbs_from_eh(np.diag(h)))
        assert np.allclose(es.xis, h + lnz)

    def test_normalization_and_order(self, rng):
        es = entanglement_spectrum(random_mixed(rng, 3))
        assert np.all(np.diff(es.xis) >= 0)
        assert abs(np.sum(np.exp(-es.xis)) - 1) < 1e-8

    def test_rank_truncation(self):
        es = entanglement_spectrum(DensityMatrix(np.diag([0.999, 1e-3 - 1e-14, 1e-14, 0])), truncation=1e-12)
        assert es.schmidt_rank == 2

    def test_bad_truncation(self):
        with pytest.raises(ValueError):
            entanglement_spectrum(DensityMatrix(I2 / 2), truncation=1.5)


class TestFidelities:
    def test_self(self, rng):
        rho = random_mixed(rng, 2)
        assert uhlmann_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
        assert fmax_exact(rho, rho) == pytest.approx(1.0)

    def test_pure_states(self, rng):
        a, b = random_pure(rng, 2), random_pure(rng, 2)
        f = uhlmann_fidelity(a.to_density_matrix(), b.to_density_matrix())
        assert f == pytest.approx(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, abs=1e-8)

    def test_sqrtm_oracle_and_symmetry(self, rng):
        r, s = random_mixed(rng, 2).matrix, random_mixed(rng, 2).matrix
        sr = sqrtm(r)
        oracle = np.real(np.trace(sqrtm(sr @ s @ sr))) ** 2
        assert uhlmann_fidelity(r, s) == pytest.approx(oracle, abs=1e-10)
        assert abs(uhlmann_fidelity(r, s) - uhlmann_fidelity(s, r)) < 1e-8

    def test_fmax_arithmetic(self, rng):
        assert fmax_exact(np.diag([1.0, 0]), I2 / 2) == pytest.approx(0.5)
        r, s = random_mixed(rng, 2).matrix, random_mixed(rng, 2).matrix
        oracle = np.trace(r @ s).real / max(np.trace(r @ r).real, np.trace(s @ s).real)
        assert fmax_exact(r, s) == pytest.approx(oracle)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            uhlmann_fidelity(I2 / 2, np.eye(4) / 4)
        with pytest.raises(ValueError):
            fmax_exact(I2 / 2, np.eye(4) / 4)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 1))
    def test_unit_fidelity_iff_equal(self, seed, mix):
        rng = np.random.default_rng(seed)
        r = random_mixed(rng, 2).matrix
        s = (1 - mix) * r + mix * random_mixed(rng, 2).matrix
        f = uhlmann_fidelity(r, s)
        assert 0 <= f <= 1
        if trace_distance(r, s) > 1e-6:
            assert f < 1 - 1e-13
        else:
            assert f > 1 - 1e-8


class TestBorn:
    def test_identity_setting(self):
        p = born_probabilities(basis("01").to_density_matrix(), identity_setting(2))
        assert np.allclose(p, [0, 1, 0, 0])

    def test_balanced_rotation(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        p = born_probabilities(np.diag([1.0, 0]), MeasurementSetting(0, np.array([h])))
        assert np.allclose(p, [0.5, 0.5])

    def test_elementwise_oracle(self, rng):
        from eht.measurements import sample_setting
        rho = random_mixed(rng, 3).matrix
        s = sample_setting(rng, 3)
        u = kron_all(s.unitaries)
        oracle = [np.real(u[:, k].conj() @ rho @ u[:, k]) for k in range(8)]
        p = born_probabilities(rho, s)
        assert np.allclose(p, oracle) and abs(p.sum() - 1) < 1e-10 and np.all(p >= 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            born_probabilities(np.eye(4) / 4, identity_setting(3))
