"""Randomized local measurements and cross-correlation estimators."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .core import DensityMatrix, kron_all, rotated_diagonals

ENSEMBLES = ("haar_su2", "single_qubit_clifford")


def bitstring(index: int, n_sites: int) -> str:
    return format(index, f"0{n_sites}b")


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    setting_id: int
    unitaries: np.ndarray

    def __post_init__(self):
        u = np.array(self.unitaries, dtype=complex)
        if u.ndim != 3 or u.shape[1:] != (2, 2):
            raise ValueError("unitaries must have shape (n_sites, 2, 2)")
        err = np.abs(np.einsum("nji,njk->nik", u.conj(), u) - np.eye(2)).max()
        if err > 1e-8:
            raise ValueError(f"setting {self.setting_id}: non-unitary matrix (error {err:.2e})")
        u.setflags(write=False)
        object.__setattr__(self, "unitaries", u)

    @property
    def n_sites(self) -> int:
        return self.unitaries.shape[0]

    @cached_property
    def full_unitary(self) -> np.ndarray:
        return kron_all(self.unitaries)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """One setting plus its outcome table.

    `counts` holds integer shot counts indexed by bitstring integer. Records built
    from exact Born probabilities carry `counts=None` and `frequencies` only.
    """
    setting: MeasurementSetting
    counts: np.ndarray | None = None
    frequencies: np.ndarray | None = None

    def __post_init__(self):
        dim = 2**self.setting.n_sites
        if self.counts is not None:
            c = np.asarray(self.counts, dtype=np.int64)
            if c.shape != (dim,) or (c < 0).any() or c.sum() <= 0:
                raise ValueError(f"setting {self.setting.setting_id}: invalid counts")
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)
            f = c / c.sum()
        elif self.frequencies is not None:
            f = np.asarray(self.frequencies, dtype=float)
            if f.shape != (dim,) or (f < 0).any() or abs(f.sum() - 1) > 1e-10:
                raise ValueError(f"setting {self.setting.setting_id}: invalid frequencies")
        else:
            raise ValueError("record needs counts or frequencies")
        f = np.array(f)
        f.setflags(write=False)
        object.__setattr__(self, "frequencies", f)

    @property
    def n_shots(self) -> int | None:
        return None if self.counts is None else int(self.counts.sum())

    def counts_dict(self) -> dict[str, int]:
        n = self.setting.n_sites
        return {bitstring(i, n): int(c) for i, c in enumerate(self.counts) if c}


@dataclass(frozen=True, eq=False)
class Dataset:
    records: tuple[MeasurementRecord, ...]
    sites: tuple[int, ...]
    ensemble: str = "haar_su2"
    seed: int | None = None

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "sites", tuple(self.sites))
        ids = [r.setting.setting_id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("setting ids must be unique")
        for r in records:
            if r.setting.n_sites != len(self.sites):
                raise ValueError("record site count differs from dataset sites")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_settings(self) -> int:
        return len(self.records)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def setting_ids(self) -> tuple[int, ...]:
        return tuple(r.setting.setting_id for r in self.records)

    @property
    def is_exact(self) -> bool:
        return all(r.counts is None for r in self.records)

    @cached_property
    def full_unitaries(self) -> np.ndarray:
        return np.stack([r.setting.full_unitary for r in self.records])

    @cached_property
    def frequencies(self) -> np.ndarray:
        return np.stack([r.frequencies for r in self.records])

    @cached_property
    def counts(self) -> np.ndarray:
        if any(r.counts is None for r in self.records):
            raise ValueError("dataset holds exact probabilities, not counts")
        return np.stack([r.counts for r in self.records])

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.sites, self.ensemble, self.seed)

    def split(self, n_first: int) -> tuple["Dataset", "Dataset"]:
        """Disjoint (first n_first records, remaining records)."""
        if not 0 < n_first < len(self):
            raise ValueError("split point must leave both parts nonempty")
        return self.subset(range(n_first)), self.subset(range(n_first, len(self)))

    def without(self, index: int) -> "Dataset":
        return self.subset([i for i in range(len(self)) if i != index])


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary from a polar angle, two azimuthal phases and a global phase."""
    cos_t = np.sqrt(rng.random())
    sin_t = np.sqrt(1.0 - cos_t**2)
    alpha, beta, phase = rng.random(3) * 2 * np.pi
    u = np.array([[np.exp(1j * alpha) * cos_t, np.exp(1j * beta) * sin_t],
                  [-np.exp(-1j * beta) * sin_t, np.exp(-1j * alpha) * cos_t]])
    return np.exp(1j * phase) * u


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(u.ravel()) > 1e-9)
    v = u.ravel()[k]
    return u * (abs(v) / v)


def _clifford_group() -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    group = [np.eye(2, dtype=complex)]
    frontier = list(group)
    while frontier:
        new = []
        for g in frontier:
            for gen in (h, s):
                c = _canonical_phase(gen @ g)
                if not any(np.allclose(c, x) for x in group):
                    group.append(c)
                    new.append(c)
        frontier = new
    return np.array(group)


SINGLE_QUBIT_CLIFFORDS = _clifford_group()


def sample_unitary(rng: np.random.Generator, ensemble: str = "haar_su2") -> np.ndarray:
    if ensemble == "haar_su2":
        return haar_su2(rng)
    if ensemble == "single_qubit_clifford":
        return SINGLE_QUBIT_CLIFFORDS[rng.integers(len(SINGLE_QUBIT_CLIFFORDS))].copy()
    raise ValueError(f"unknown ensemble {ensemble!r}")


def sample_setting(rng, n_sites: int, ensemble: str = "haar_su2", setting_id: int = 0) -> MeasurementSetting:
    if n_sites < 1:
        raise ValueError("need at least one site")
    rng = np.random.default_rng(rng)
    return MeasurementSetting(setting_id, np.stack([sample_unitary(rng, ensemble) for _ in range(n_sites)]))


def identity_setting(n_sites: int, setting_id: int = 0) -> MeasurementSetting:
    return MeasurementSetting(setting_id, np.tile(np.eye(2, dtype=complex), (n_sites, 1, 1)))


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def model_probabilities(rho, unitaries: np.ndarray) -> np.ndarray:
    """Born tables for a stack of full unitaries, shape (n_settings, dim)."""
    return rotated_diagonals(_matrix(rho), unitaries)


def simulate_counts(rho, setting: MeasurementSetting, n_shots: int, rng) -> MeasurementRecord:
    if n_shots < 1:
        raise ValueError("n_shots must be positive")
    m = _matrix(rho)
    if m.shape[0] != 2**setting.n_sites:
        raise ValueError("state and setting dimensions differ")
    p = np.clip(model_probabilities(m, setting.full_unitary[None])[0], 0.0, None)
    counts = np.random.default_rng(rng).multinomial(n_shots, p / p.sum())
    return MeasurementRecord(setting, counts=counts)


def _setting_streams(seed, n_settings: int):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n_settings)]


def sample_dataset(rho, n_settings: int, n_shots: int, seed=None, ensemble: str = "haar_su2",
                   sites=None, first_id: int = 0) -> Dataset:
    """Randomized-measurement dataset; every setting draws from its own child seed."""
    m = _matrix(rho)
    n = int(np.log2(m.shape[0]))
    records = []
    for k, rng in enumerate(_setting_streams(seed, n_settings)):
        setting = sample_setting(rng, n, ensemble, setting_id=first_id + k)
        records.append(simulate_counts(m, setting, n_shots, rng))
    sites = tuple(range(n)) if sites is None else sites
    return Dataset(tuple(records), sites, ensemble, seed if isinstance(seed, int) else None)


def exact_dataset(rho, n_settings: int, seed=None, ensemble: str = "haar_su2", sites=None) -> Dataset:
    """Dataset holding exact Born probabilities instead of sampled counts."""
    m = _matrix(rho)
    n = int(np.log2(m.shape[0]))
    settings = [sample_setting(rng, n, ensemble, setting_id=k)
                for k, rng in enumerate(_setting_streams(seed, n_settings))]
    probs = model_probabilities(m, np.stack([s.full_unitary for s in settings]))
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    records = tuple(MeasurementRecord(s, frequencies=p) for s, p in zip(settings, probs))
    sites = tuple(range(n)) if sites is None else sites
    return Dataset(records, sites, ensemble, seed if isinstance(seed, int) else None)


def hamming_distance_matrix(n_sites: int) -> np.ndarray:
    idx = np.arange(2**n_sites)
    x = idx[:, None] ^ idx[None, :]
    return np.array([[bin(v).count("1") for v in row] for row in x])


def hamming_kernel(n_sites: int) -> np.ndarray:
    """(-2)^{-D[s,s']}."""
    return (-2.0) ** (-hamming_distance_matrix(n_sites))


def estimate_overlap(p1: np.ndarray, p2: np.ndarray) -> float:
    """2^N / N_U * sum_U sum_{s,s'} (-2)^{-D[s,s']} P1_U(s) P2_U(s')."""
    p1, p2 = np.atleast_2d(p1), np.atleast_2d(p2)
    if p1.shape != p2.shape:
        raise ValueError("probability tables cover different settings")
    dim = p1.shape[1]
    n = int(np.log2(dim))
    per_setting = np.einsum("us,st,ut->u", p1, hamming_kernel(n), p2)
    return float(dim * per_setting.mean())


def per_setting_overlaps(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    dim = p1.shape[1]
    return dim * np.einsum("us,st,ut->u", p1, hamming_kernel(int(np.log2(dim))), p2)


def per_setting_purities(data: Dataset, unbiased: bool = True) -> np.ndarray:
    """Purity estimate per setting; `unbiased` drops coincident-shot pairs."""
    if not unbiased or data.is_exact:
        return per_setting_overlaps(data.frequencies, data.frequencies)
    c = data.counts.astype(float)
    m = c.sum(axis=1)
    if (m < 2).any():
        raise ValueError("unbiased purity needs at least two shots per setting")
    k = hamming_kernel(data.n_sites)
    pairs = np.einsum("us,st,ut->u", c, k, c) - c.sum(axis=1)
    return data.dim * pairs / (m * (m - 1))


def estimate_purity(data: Dataset, unbiased: bool = True) -> float:
    if len(data) == 0:
        raise ValueError("empty dataset")
    return float(per_setting_purities(data, unbiased).mean())


def _fmax_parts(data: Dataset, model, exact_model_purity: bool, unbiased: bool):
    m = _matrix(model)
    if m.shape[0] != data.dim:
        raise ValueError("model dimension differs from dataset")
    pm = model_probabilities(m, data.full_unitaries)
    overlap = per_setting_overlaps(data.frequencies, pm)
    purity_data = per_setting_purities(data, unbiased)
    if exact_model_purity:
        purity_model = np.full(len(data), np.real(np.vdot(m, m)))
    else:
        purity_model = per_setting_overlaps(pm, pm)
    return overlap, purity_data, purity_model


def _fmax_from_parts(overlap, pd, pm) -> float:
    return float(overlap.mean() / max(pd.mean(), pm.mean()))


def estimate_fmax(data: Dataset, model, exact_model_purity: bool = True, unbiased: bool = True) -> float:
    """Overlap fidelity between the state behind `data` and `model`, from cross-correlations."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    return _fmax_from_parts(*_fmax_parts(data, model, exact_model_purity, unbiased))


def estimate_fmax_jackknife(data: Dataset, model, exact_model_purity: bool = True,
                            unbiased: bool = True) -> tuple[float, float]:
    """F_max and its leave-one-setting-out jackknife standard error."""
    if len(data) < 2:
        raise ValueError("jackknife needs at least two settings")
    parts = _fmax_parts(data, model, exact_model_purity, unbiased)
    full = _fmax_from_parts(*parts)
    n = len(data)
    idx = np.arange(n)
    loo = np.array([_fmax_from_parts(*(p[idx != i] for p in parts)) for i in range(n)])
    err = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return full, float(err)


def all_bitstrings(n_sites: int) -> list[str]:
    return ["".join(b) for b in product("01", repeat=n_sites)]
