from functools import reduce
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eht.ansatz import (ParamVector, assemble_eh, build_ansatz, bw_linear_ramp, density_matrix_from_params,
                        pauli_term, AnsatzFamily)
from eht.models import PAULI, SpinModel


def ps(ops, n):
    return reduce(np.kron, [PAULI[ops.get(i, "I")] for i in range(n)])


def total_z(n):
    return sum(ps({i: "Z"}, n) for i in range(n))


ISING = SpinModel(6, field=0.88, eta=2.5)


class TestCounts:
    @pytest.mark.parametrize("n", [2, 4, 7])
    def test_parabolic_three(self, n):
        assert build_ansatz("parabolic_reduced", n, ISING if n <= 6 else SpinModel(n, eta=2.5)).n_params == 3

    def test_deformed_local(self):
        assert build_ansatz("deformed_ising_local", 8, SpinModel(8, field=0.9)).n_params == 16

    def test_quench(self):
        # N_A fields, N_A - 1 bonds and two momentum orientations per bond
        fam = build_ansatz("quench_energy_momentum", 5)
        assert fam.n_params == 5 + 4 + 8

    def test_exchange_k1_k3_hand_count(self):
        n = 5
        fam = build_ansatz("exchange_with_corrections", n, corrections=("K1", "K3"))
        expected = n + comb(n, 2) + comb(n, 2) + comb(n, 2) + comb(n, 3)
        assert fam.n_params == expected == len(fam.terms)

    def test_exchange_all_levels(self):
        n = 4
        fam = build_ansatz("exchange_with_corrections", n, corrections=("K1", "K2", "K3", "K4"))
        pairs, triples = comb(n, 2), comb(n, 3)
        k2 = pairs * (n - 2)
        assert fam.n_params == n + pairs + pairs + k2 + pairs + triples + k2

    def test_errors(self):
        with pytest.raises(ValueError):
            build_ansatz("mystery", 4)
        with pytest.raises(ValueError):
            build_ansatz("quench_energy_momentum", 1)
        with pytest.raises(ValueError):
            build_ansatz("deformed_ising_local", 4)
        with pytest.raises(ValueError):
            build_ansatz("exchange_with_corrections", 4, corrections=("K9",))
        with pytest.raises(ValueError):
            build_ansatz("quench_energy_momentum", 4, corrections=("K1",))
        with pytest.raises(ValueError):
            AnsatzFamily("x", 2, (), ())


class TestOrdering:
    def test_body_count_then_leftmost_site(self):
        fam = build_ansatz("exchange_with_corrections", 4, corrections=("K1", "K3"))
        keys = [fam.terms[i].sort_key for i in range(fam.n_params)]
        assert keys == sorted(keys)
        assert [t.param for t in fam.terms] == list(range(fam.n_params))
        assert fam.param_labels[:4] == ("B~_0", "B~_1", "B~_2", "B~_3")

    def test_deterministic(self):
        a = build_ansatz("quench_energy_momentum", 5)
        b = build_ansatz("quench_energy_momentum", 5)
        assert a.param_labels == b.param_labels
        assert np.array_equal(a.operators, b.operators)


class TestAssemble:
    def test_zero(self):
        fam = build_ansatz("quench_energy_momentum", 3)
        assert np.all(assemble_eh(fam, np.zeros(fam.n_params)) == 0)

    def test_single_field_term(self):
        fam = AnsatzFamily("custom", 1, (pauli_term({0: "Z"}, 1.0, "B~_0", 0),), ("B~_0",))
        assert np.allclose(assemble_eh(fam, [1.0]), np.diag([1, -1]))

    def test_quench_brute_force(self, rng):
        n = 4
        fam = build_ansatz("quench_energy_momentum", n)
        g = rng.standard_normal(fam.n_params)
        oracle = np.zeros((16, 16), dtype=complex)
        for k in range(n):
            oracle += g[fam.index(f"B~_{k}")] * ps({k: "Z"}, n)
        for k in range(n - 1):
            oracle += g[fam.index(f"J~_{k},{k + 1}")] * ps({k: "X", k + 1: "X"}, n)
            oracle += g[fam.index(f"XY_{k},{k + 1}")] * ps({k: "X", k + 1: "Y"}, n)
            oracle += g[fam.index(f"XY_{k + 1},{k}")] * ps({k + 1: "X", k: "Y"}, n)
        assert np.allclose(assemble_eh(fam, g), oracle, atol=1e-12)

    def test_deformed_literal_attachment(self, rng):
        n = 4
        fam = build_ansatz("deformed_ising_local", n, ISING, cut="right")
        g = rng.standard_normal(2 * n)
        beta, gamma = g[:n], g[n:]
        c = ISING.couplings
        oracle = np.zeros((16, 16), dtype=complex)
        for k, l in combinations(range(n), 2):
            d = max(n - k, n - l)  # farther site from the cut carries beta
            oracle += c[k, l] * beta[d - 1] * ps({k: "X", l: "X"}, n)
        for k in range(n):
            oracle += ISING.field * gamma[n - k - 1] * ps({k: "Z"}, n)
        assert np.allclose(assemble_eh(fam, g), oracle)

    def test_deformed_cut_side(self):
        right = build_ansatz("deformed_ising_local", 4, ISING, cut="right")
        left = build_ansatz("deformed_ising_local", 4, ISING, cut="left")
        g = np.arange(1.0, 9.0)
        flip = np.array([int(f"{i:04b}"[::-1], 2) for i in range(16)])
        assert np.allclose(assemble_eh(right, g)[np.ix_(flip, flip)], assemble_eh(left, g))

    def test_parabolic_brute_force(self):
        n = 4
        beta = np.array([0.3, 1.1, -0.2])
        c = ISING.couplings
        for pos, scale in (("literal", 1.0), ("midpoint", 0.5)):
            fam = build_ansatz("parabolic_reduced", n, ISING, pair_position=pos)
            oracle = np.zeros((16, 16), dtype=complex)
            for k, l in combinations(range(n), 2):
                x = scale * ((n - k) + (n - l) - 1)
                oracle += c[k, l] * np.polyval(beta[::-1], x) * ps({k: "X", l: "X"}, n)
            for k in range(n):
                oracle += ISING.field * np.polyval(beta[::-1], n - k - 0.5) * ps({k: "Z"}, n)
            assert np.allclose(assemble_eh(fam, beta), oracle)

    def test_length_mismatch(self):
        fam = build_ansatz("quench_energy_momentum", 3)
        with pytest.raises(ValueError):
            assemble_eh(fam, np.zeros(fam.n_params + 1))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["quench_energy_momentum", "deformed_ising_local",
                                                            "parabolic_reduced"]))
    def test_linear_and_hermitian(self, seed, kind):
        rng = np.random.default_rng(seed)
        fam = build_ansatz(kind, 4, ISING)
        g1, g2 = rng.standard_normal((2, fam.n_params))
        h1, h2 = assemble_eh(fam, g1), assemble_eh(fam, g2)
        assert np.allclose(assemble_eh(fam, g1 + g2), h1 + h2)
        assert np.max(np.abs(h1 - h1.conj().T)) < 1e-12
        assert np.allclose(np.trace(h1), 0)  # no identity term

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_exchange_conserves_subsystem_magnetization(self, seed):
        g_rng = np.random.default_rng(seed)
        fam = build_ansatz("exchange_with_corrections", 4, corrections=("K1", "K2", "K3", "K4"))
        h = assemble_eh(fam, g_rng.standard_normal(fam.n_params))
        z = total_z(4)
        assert np.max(np.abs(h @ z - z @ h)) < 1e-10

    def test_k1_odd_under_transposition(self):
        fam = build_ansatz("exchange_with_corrections", 3, corrections=("K1",))
        a = fam.operators[fam.index("XY_0,2")]
        assert np.allclose(a, ps({0: "X", 2: "Y"}, 3) - ps({0: "Y", 2: "X"}, 3))
        assert np.allclose(ps({2: "X", 0: "Y"}, 3) - ps({2: "Y", 0: "X"}, 3), -a)


class TestDensity:
    def test_full_depolarization(self):
        fam = build_ansatz("quench_energy_momentum", 3)
        rho = density_matrix_from_params(fam, ParamVector(np.ones(fam.n_params), 1.0))
        assert np.allclose(rho.matrix, np.eye(8) / 8)

    def test_diagonal_qubit(self):
        fam = AnsatzFamily("custom", 1, (pauli_term({0: "Z"}, 0.5, "B", 0),), ("B",))
        # H = (ln 3 / 2) Z differs from ln(3) diag(1, 0) by a constant
        rho = density_matrix_from_params(fam, ParamVector([np.log(3)], 0.0))
        assert np.allclose(rho.matrix, np.diag([0.25, 0.75]))

    def test_depolarized_eigenvalues(self, rng):
        fam = build_ansatz("exchange_with_corrections", 3, corrections=("K3",))
        g = np.zeros(fam.n_params)
        g[fam.indices("B~_")] = rng.standard_normal(3)
        g[fam.indices("ZZ")] = rng.standard_normal(len(fam.indices("ZZ")))
        p = 0.1
        h = np.real(np.diag(assemble_eh(fam, g)))
        w = np.exp(-h) / np.exp(-h).sum()
        rho = density_matrix_from_params(fam, ParamVector(g, p))
        assert np.allclose(np.sort(np.linalg.eigvalsh(rho.matrix)), np.sort((1 - p) * w + p / 8))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-40, 40))
    def test_gauge(self, seed, c):
        rng = np.random.default_rng(seed)
        fam = build_ansatz("quench_energy_momentum", 3)
        g = rng.standard_normal(fam.n_params)
        rho = density_matrix_from_params(fam, ParamVector(g, 0.2))
        from eht.core import gibbs_from_eh
        shifted = gibbs_from_eh(assemble_eh(fam, g) + c * np.eye(8)).matrix
        assert np.allclose(rho.matrix, 0.8 * shifted + 0.2 * np.eye(8) / 8, atol=1e-10)
        assert abs(np.trace(rho.matrix) - 1) < 1e-12

    def test_bad_p(self):
        with pytest.raises(ValueError):
            ParamVector([0.0], 1.5)

    def test_ramp_grows_with_distance(self):
        fam = build_ansatz("quench_energy_momentum", 5)
        g = bw_linear_ramp(fam)
        fields = [g[fam.index(f"B~_{k}")] for k in range(5)]
        assert np.all(np.diff(fields) < 0)  # cut on the right: site 0 is farthest
        assert np.all(g[fam.indices("XY")] == 0)
