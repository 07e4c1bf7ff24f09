"""Dense linear algebra for multi-qubit states.

Conventions: site 0 is the leftmost lattice site and the most significant bit
of every bitstring index. All matrix functions go through a Hermitian
eigendecomposition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLIP_TOL = 1e-12
HERMITIAN_TOL = 1e-8


def _check_power_of_two(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        _check_power_of_two(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm^2 = {norm}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return _check_power_of_two(self.amplitudes.size)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(range(self.n_sites))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        n = _check_power_of_two(m.shape[0])
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        sites = tuple(range(n)) if self.sites is None else tuple(self.sites)
        if len(sites) != n:
            raise ValueError("site labels do not match matrix dimension")
        object.__setattr__(self, "sites", sites)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


@dataclass(frozen=True)
class Bipartition:
    subsystem_a: tuple[int, ...]
    subsystem_b: tuple[int, ...]

    @classmethod
    def from_subsystem(cls, keep, n_sites: int) -> "Bipartition":
        keep = tuple(sorted(set(int(k) for k in keep)))
        _validate_sites(keep, n_sites)
        rest = tuple(i for i in range(n_sites) if i not in keep)
        return cls(keep, rest)


@dataclass(frozen=True)
class EntanglementSpectrum:
    xis: np.ndarray
    schmidt_rank: int
    entropy_bits: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(-self.xis)


def _validate_sites(keep, n_sites: int):
    if len(keep) == 0:
        raise ValueError("subsystem must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate sites in subsystem")
    for k in keep:
        if not 0 <= k < n_sites:
            raise ValueError(f"site {k} out of range for {n_sites} sites")


def partial_trace(state, keep) -> DensityMatrix:
    """Reduced density matrix on the sites in `keep` (kept in ascending order)."""
    if isinstance(state, Bipartition):
        raise TypeError("pass the state first, then the kept sites")
    keep = list(keep)
    _validate_sites(keep, state.n_sites)
    keep = sorted(keep)
    n = state.n_sites
    rest = [i for i in range(n) if i not in keep]
    da, db = 2 ** len(keep), 2 ** len(rest)
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape([2] * n).transpose(keep + rest).reshape(da, db)
        rho = psi @ psi.conj().T
    else:
        t = state.matrix.reshape([2] * (2 * n))
        perm = keep + rest
        t = t.transpose(perm + [n + p for p in perm]).reshape(da, db, da, db)
        rho = np.einsum("ajbj->ab", t)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(rho, tuple(keep))


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (h + h.conj().T)


def gibbs_weights(evals: np.ndarray) -> np.ndarray:
    """Normalized e^{-lambda} for ascending eigenvalues, computed without overflow."""
    w = np.exp(-(evals - evals.min()))
    return w / w.sum()


def gibbs_from_eh(h: np.ndarray) -> DensityMatrix:
    """e^{-H} / Tr e^{-H} through the eigendecomposition of H."""
    h = check_hermitian(h)
    evals, vecs = np.linalg.eigh(h)
    rho = (vecs * gibbs_weights(evals)) @ vecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


def clipped_eigvalsh(rho: DensityMatrix) -> np.ndarray:
    evals = np.linalg.eigvalsh(rho.matrix)
    evals = np.where(np.abs(evals) < CLIP_TOL, 0.0, evals)
    return np.clip(evals, 0.0, 1.0)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits."""
    lam = clipped_eigvalsh(rho)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def entanglement_spectrum(rho: DensityMatrix, truncation: float = 1e-12) -> EntanglementSpectrum:
    if not 0 < truncation < 1:
        raise ValueError("truncation must lie in (0, 1)")
    lam = clipped_eigvalsh(rho)
    kept = np.sort(lam[lam > truncation])[::-1]
    xis = -np.log(kept)
    return EntanglementSpectrum(xis=xis, schmidt_rank=int(kept.size),
                                entropy_bits=von_neumann_entropy(rho))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(m)
    evals = np.clip(evals, 0.0, None)
    return (vecs * np.sqrt(evals)) @ vecs.conj().T


def _as_matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def uhlmann_fidelity(rho, sigma) -> float:
    """[Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2, clipped to [0, 1]."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    _check_dims(a, b)
    s = _psd_sqrt(a)
    inner = s @ b @ s
    inner = 0.5 * (inner + inner.conj().T)
    ev = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(ev)) ** 2))


def fmax_exact(rho1, rho2) -> float:
    a, b = _as_matrix(rho1), _as_matrix(rho2)
    _check_dims(a, b)
    overlap = np.real(np.vdot(a, b))
    return float(overlap / max(np.real(np.vdot(a, a)), np.real(np.vdot(b, b))))


def trace_distance(rho, sigma) -> float:
    a, b = _as_matrix(rho), _as_matrix(sigma)
    _check_dims(a, b)
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def rotated_diagonals(rho: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """<s|U^dag rho U|s> for a stack of full unitaries, shape (n_settings, dim)."""
    rho_u = np.einsum("ij,ujk->uik", rho, unitaries)
    return np.real(np.einsum("uik,uik->uk", unitaries.conj(), rho_u))


def born_probabilities(rho, setting) -> np.ndarray:
    """Outcome distribution over 2^N bitstrings after rotating by the setting.

    P(s) = Tr(rho U|s><s|U^dag) with U the tensor product of the per-site unitaries.
    """
    m = _as_matrix(rho)
    unitaries = getattr(setting, "unitaries", setting)
    unitaries = np.asarray(unitaries)
    n = _check_power_of_two(m.shape[0])
    if unitaries.shape[0] != n:
        raise ValueError(f"setting has {unitaries.shape[0]} sites, state has {n}")
    u = kron_all(unitaries)
    p = rotated_diagonals(m, u[None])[0]
    p = np.clip(p, 0.0, None)
    return p / p.sum()
