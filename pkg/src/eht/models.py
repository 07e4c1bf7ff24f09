"""Transverse-field Ising and exchange spin chains with open boundaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import DensityMatrix, PureState, gibbs_from_eh

MAX_DENSE_SITES = 14

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def power_law_couplings(n_sites: int, j: float = 1.0, eta: float = np.inf) -> np.ndarray:
    """J_ij = J / |i-j|^eta; eta = inf keeps nearest neighbours only."""
    idx = np.arange(n_sites)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        if np.isinf(eta):
            c = np.where(dist == 1, j, 0.0)
        else:
            c = np.where(dist > 0, j / np.where(dist > 0, dist, 1.0) ** eta, 0.0)
    return c


@dataclass(frozen=True)
class SpinModel:
    n_sites: int
    field: float = 0.0
    j: float = 1.0
    eta: float = np.inf
    variant: str = "ising_xx"
    boundary: str = "open"
    couplings: np.ndarray | None = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least two sites")
        if self.variant not in ("ising_xx", "exchange_xy"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.boundary != "open":
            raise ValueError("only open boundaries are supported")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        c = self.couplings
        if c is None:
            c = power_law_couplings(self.n_sites, self.j, self.eta)
        c = np.array(c, dtype=float)
        if c.shape != (self.n_sites, self.n_sites) or not np.allclose(c, c.T):
            raise ValueError("couplings must be a symmetric n_sites x n_sites matrix")
        np.fill_diagonal(c, 0.0)
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)


def _bit(index: np.ndarray, site: int, n: int) -> np.ndarray:
    return (index >> (n - 1 - site)) & 1


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    model: SpinModel | None = field(default=None)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        evals, vecs = np.linalg.eigh(self.matrix)
        evals.setflags(write=False)
        vecs.setflags(write=False)
        return evals, vecs

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_hamiltonian(model: SpinModel, max_sites: int = MAX_DENSE_SITES) -> HamiltonianMatrix:
    """H = sum_{i<j} J_ij s_i s_j + B sum_i Z_i with s_i s_j = XX or (XX+YY)/2.

    Built directly from bit manipulations; the result is real symmetric.
    """
    n = model.n_sites
    if n > max_sites:
        raise ValueError(f"{n} sites exceeds the dense cap of {max_sites}")
    dim = 2**n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    z = 1 - 2 * np.stack([_bit(idx, i, n) for i in range(n)])
    h[idx, idx] = model.field * z.sum(axis=0)
    c = model.couplings
    for i in range(n):
        for k in range(i + 1, n):
            if c[i, k] == 0.0:
                continue
            mask = (1 << (n - 1 - i)) | (1 << (n - 1 - k))
            flipped = idx ^ mask
            if model.variant == "ising_xx":
                h[idx, flipped] += c[i, k]
            else:
                differ = z[i] != z[k]
                h[idx[differ], flipped[differ]] += c[i, k]
    return HamiltonianMatrix(h, model)


def ground_state(h: HamiltonianMatrix) -> PureState:
    evals, vecs = h.eigh
    return PureState(_fix_phase(vecs[:, 0]))


def ground_energy(h: HamiltonianMatrix) -> float:
    return float(h.eigh[0][0])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    k = int(np.argmax(np.abs(v) > 1e-12))
    v = v * (abs(v[k]) / v[k])
    return v / np.linalg.norm(v)


def evolve(psi0: PureState, h: HamiltonianMatrix, t: float) -> PureState:
    """exp(-iHt)|psi0> in the cached eigenbasis of H."""
    amps = psi0.amplitudes
    if amps.size != h.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    evals, vecs = h.eigh
    c = vecs.conj().T @ amps
    out = vecs @ (np.exp(-1j * evals * t) * c)
    return PureState(out / np.linalg.norm(out))


def product_state(pattern: str) -> PureState:
    """Computational basis state; '0' is spin up (Z = +1)."""
    if not pattern or set(pattern) - {"0", "1"}:
        raise ValueError(f"pattern must be a nonempty bitstring, got {pattern!r}")
    amps = np.zeros(2 ** len(pattern), dtype=complex)
    amps[int(pattern, 2)] = 1.0
    return PureState(amps)


def neel_pattern(n_sites: int) -> str:
    return "".join("01"[i % 2] for i in range(n_sites))


def thermal_state(h: HamiltonianMatrix, beta: float) -> DensityMatrix:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    evals, vecs = h.eigh
    w = np.exp(-beta * (evals - evals[0]))
    w /= w.sum()
    rho = (vecs * w) @ vecs.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    mats = [PAULI["I"]] * n_sites
    mats[site] = op
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _apply_pauli(amps: np.ndarray, axis: str, site: int, n: int) -> np.ndarray:
    psi = amps.reshape([2] * n)
    psi = np.moveaxis(np.tensordot(PAULI[axis], psi, axes=([1], [site])), 0, site)
    return psi.reshape(-1)


def expectation(psi: PureState, ops: dict[int, str]) -> complex:
    n = psi.n_sites
    phi = psi.amplitudes
    for site, axis in ops.items():
        if not 0 <= site < n:
            raise ValueError(f"site {site} out of range")
        phi = _apply_pauli(phi, axis, site, n)
    return complex(np.vdot(psi.amplitudes, phi))


def connected_correlation(psi: PureState, site_i: int, site_j: int, axis: str = "z") -> float:
    """<s_i s_j> - <s_i><s_j> for the Pauli operator along `axis`."""
    axis = axis.upper()
    if axis not in ("X", "Y", "Z"):
        raise ValueError(f"unknown axis {axis!r}")
    if site_i == site_j:
        raise ValueError("sites must be distinct")
    both = expectation(psi, {site_i: axis, site_j: axis}).real
    return float(both - expectation(psi, {site_i: axis}).real * expectation(psi, {site_j: axis}).real)
