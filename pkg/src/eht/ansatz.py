"""Quasi-local entanglement-Hamiltonian ansatz families.

A family is an ordered list of Hermitian Pauli-string terms, each tied to one
real coefficient. Sites are local indices 0..n_sites-1 of the subsystem, with
the same most-significant-bit ordering as the full chain. Distances from the
entanglement cut are counted so that the site touching the cut sits at 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .core import DensityMatrix, gibbs_weights
from .models import PAULI, SpinModel

KINDS = ("deformed_ising_local", "parabolic_reduced", "quench_energy_momentum",
         "exchange_with_corrections")
CORRECTIONS = ("K1", "K2", "K3", "K4")


@dataclass(frozen=True)
class OperatorTerm:
    """sum_c coef_c * P_c times `prefactor`, attached to coefficient `param`.

    Each P_c is a Pauli string given as ((site, letter), ...).
    """
    components: tuple[tuple[float, tuple[tuple[int, str], ...]], ...]
    prefactor: float
    label: str
    param: int

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({s for _, ops in self.components for s, _ in ops}))

    @property
    def sort_key(self):
        ops = self.components[0][1]
        return (len(self.support), self.support[0], "".join(l for _, l in ops), self.support)

    def matrix(self, n_sites: int) -> np.ndarray:
        out = np.zeros((2**n_sites, 2**n_sites), dtype=complex)
        for coef, ops in self.components:
            letters = dict(ops)
            m = np.ones((1, 1), dtype=complex)
            for s in range(n_sites):
                m = np.kron(m, PAULI[letters.get(s, "I")])
            out += coef * m
        return self.prefactor * out


def pauli_term(ops: dict[int, str], prefactor: float, label: str, param: int) -> OperatorTerm:
    return OperatorTerm(((1.0, tuple(sorted(ops.items()))),), float(prefactor), label, param)


@dataclass(frozen=True)
class ParamVector:
    g: np.ndarray
    p: float = 0.0

    def __post_init__(self):
        g = np.array(self.g, dtype=float).ravel()
        g.setflags(write=False)
        object.__setattr__(self, "g", g)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("depolarization p must lie in [0, 1]")
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True, eq=False)
class AnsatzFamily:
    kind: str
    n_sites: int
    terms: tuple[OperatorTerm, ...]
    param_labels: tuple[str, ...]
    corrections: tuple[str, ...] = ()
    cut: str = "right"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("ansatz has no terms")
        used = {t.param for t in self.terms}
        if used - set(range(self.n_params)):
            raise ValueError("term attached to an unknown parameter")

    @property
    def n_params(self) -> int:
        return len(self.param_labels)

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    @cached_property
    def operators(self) -> np.ndarray:
        """Stack A_a with H = sum_a g_a A_a, shape (n_params, dim, dim)."""
        ops = np.zeros((self.n_params, self.dim, self.dim), dtype=complex)
        for t in self.terms:
            ops[t.param] += t.matrix(self.n_sites)
        ops.setflags(write=False)
        return ops

    def index(self, label: str) -> int:
        return self.param_labels.index(label)

    def indices(self, prefix: str) -> list[int]:
        return [i for i, lab in enumerate(self.param_labels) if lab.startswith(prefix)]

    def distance_from_cut(self, site: int) -> int:
        return self.n_sites - site if self.cut == "right" else site + 1

    def site_at_distance(self, d: int) -> int:
        return self.n_sites - d if self.cut == "right" else d - 1


def _distance(n: int, site: int, cut: str) -> int:
    return n - site if cut == "right" else site + 1


def _deformed_ising_local(n, model, cut, attach):
    c = model.couplings
    labels = [f"beta_{d}" for d in range(1, n + 1)] + [f"gamma_{d}" for d in range(1, n + 1)]
    terms = []
    for k, l in combinations(range(n), 2):
        if c[k, l] == 0.0:
            continue
        dk, dl = _distance(n, k, cut), _distance(n, l, cut)
        if attach == "average":
            # bond coefficient J_kl (beta_k + beta_l) / 2
            for d in (dk, dl):
                terms.append(pauli_term({k: "X", l: "X"}, 0.5 * c[k, l], f"J~_{k},{l}", d - 1))
            continue
        if attach == "outer":
            d = max(dk, dl)
        elif attach == "midpoint":
            d = int(np.ceil((dk + dl) / 2))
        else:
            raise ValueError(f"unknown attachment {attach!r}")
        terms.append(pauli_term({k: "X", l: "X"}, c[k, l], f"J~_{k},{l}", d - 1))
    for k in range(n):
        d = _distance(n, k, cut)
        terms.append(pauli_term({k: "Z"}, model.field, f"B~_{k}", n + d - 1))
    return terms, labels


def _parabolic_reduced(n, model, cut, pair_position):
    c = model.couplings
    labels = ["beta_0", "beta_1", "beta_2"]
    terms = []
    for k, l in combinations(range(n), 2):
        if c[k, l] == 0.0:
            continue
        x = _distance(n, k, cut) + _distance(n, l, cut) - 1
        if pair_position == "midpoint":
            x = x / 2
        for order in range(3):
            terms.append(pauli_term({k: "X", l: "X"}, c[k, l] * x**order, f"J~_{k},{l}^{order}", order))
    for k in range(n):
        x = _distance(n, k, cut) - 0.5
        for order in range(3):
            terms.append(pauli_term({k: "Z"}, model.field * x**order, f"B~_{k}^{order}", order))
    return terms, labels


def _sorted_single(terms):
    terms = sorted(terms, key=lambda t: t.sort_key)
    out = [OperatorTerm(t.components, t.prefactor, t.label, i) for i, t in enumerate(terms)]
    return out, [t.label for t in out]


def _quench_energy_momentum(n):
    terms = [pauli_term({k: "Z"}, 1.0, f"B~_{k}", -1) for k in range(n)]
    for k in range(n - 1):
        terms.append(pauli_term({k: "X", k + 1: "X"}, 1.0, f"J~_{k},{k + 1}", -1))
        # both orientations of each nearest-neighbour bond: X_k Y_{k+1} and X_{k+1} Y_k
        terms.append(pauli_term({k: "X", k + 1: "Y"}, 1.0, f"XY_{k},{k + 1}", -1))
        terms.append(pauli_term({k + 1: "X", k: "Y"}, 1.0, f"XY_{k + 1},{k}", -1))
    return _sorted_single(terms)


def _combo(parts, label):
    comps = tuple((coef, tuple(sorted(ops.items()))) for coef, ops in parts)
    return OperatorTerm(comps, 1.0, label, -1)


def _exchange_with_corrections(n, corrections):
    terms = [pauli_term({k: "Z"}, 1.0, f"B~_{k}", -1) for k in range(n)]
    for k, l in combinations(range(n), 2):
        # sigma+ sigma- + h.c. = (XX + YY) / 2
        terms.append(_combo([(0.5, {k: "X", l: "X"}), (0.5, {k: "Y", l: "Y"})], f"J~_{k},{l}"))
    if "K1" in corrections:
        for k, l in combinations(range(n), 2):
            terms.append(_combo([(1.0, {k: "X", l: "Y"}), (-1.0, {k: "Y", l: "X"})], f"XY_{k},{l}"))
    if "K2" in corrections:
        for k, l in combinations(range(n), 2):
            for m in range(n):
                if m in (k, l):
                    continue
                terms.append(_combo([(1.0, {k: "X", l: "Y", m: "Z"}), (-1.0, {k: "Y", l: "X", m: "Z"})],
                                    f"XYZ_{k},{l},{m}"))
    if "K3" in corrections:
        for k, l in combinations(range(n), 2):
            terms.append(pauli_term({k: "Z", l: "Z"}, 1.0, f"ZZ_{k},{l}", -1))
        for k, l, m in combinations(range(n), 3):
            terms.append(pauli_term({k: "Z", l: "Z", m: "Z"}, 1.0, f"ZZZ_{k},{l},{m}", -1))
    if "K4" in corrections:
        for k, l in combinations(range(n), 2):
            for m in range(n):
                if m in (k, l):
                    continue
                terms.append(_combo([(1.0, {k: "X", l: "X", m: "Z"}), (1.0, {k: "Y", l: "Y", m: "Z"})],
                                    f"XXZ_{k},{l},{m}"))
    return _sorted_single(terms)


def build_ansatz(kind: str, n_sites: int, base_model: SpinModel | None = None,
                 corrections=(), cut: str = "right", attach: str = "outer",
                 pair_position: str = "midpoint") -> AnsatzFamily:
    """Build an ansatz family on `n_sites` subsystem sites.

    `cut` names the side of the subsystem that borders the rest of the chain.
    deformed_ising_local and parabolic_reduced take their bare couplings and
    field from `base_model` (only its first n_sites x n_sites couplings are used).
    """
    if n_sites < 2:
        raise ValueError("subsystem needs at least two sites")
    if cut not in ("right", "left"):
        raise ValueError(f"unknown cut side {cut!r}")
    corrections = tuple(sorted(set(corrections)))
    if set(corrections) - set(CORRECTIONS):
        raise ValueError(f"unknown correction levels {corrections}")
    options = {}
    if kind in ("deformed_ising_local", "parabolic_reduced"):
        if base_model is None:
            raise ValueError(f"{kind} needs a base model")
        local = SpinModel(n_sites, field=base_model.field, variant=base_model.variant,
                          couplings=base_model.couplings[:n_sites, :n_sites])
        if kind == "deformed_ising_local":
            terms, labels = _deformed_ising_local(n_sites, local, cut, attach)
            options["attach"] = attach
        else:
            terms, labels = _parabolic_reduced(n_sites, local, cut, pair_position)
            options["pair_position"] = pair_position
    elif kind == "quench_energy_momentum":
        terms, labels = _quench_energy_momentum(n_sites)
    elif kind == "exchange_with_corrections":
        terms, labels = _exchange_with_corrections(n_sites, corrections)
    else:
        raise ValueError(f"unknown ansatz kind {kind!r}")
    if kind != "exchange_with_corrections" and corrections:
        raise ValueError("correction levels only apply to exchange_with_corrections")
    return AnsatzFamily(kind, n_sites, tuple(terms), tuple(labels), corrections, cut, options)


def _as_params(family: AnsatzFamily, params) -> ParamVector:
    if not isinstance(params, ParamVector):
        params = ParamVector(params)
    if params.g.size != family.n_params:
        raise ValueError(f"expected {family.n_params} coefficients, got {params.g.size}")
    return params


def assemble_eh(family: AnsatzFamily, params) -> np.ndarray:
    params = _as_params(family, params)
    h = np.tensordot(params.g, family.operators, axes=1)
    return 0.5 * (h + h.conj().T)


def coherent_density(family: AnsatzFamily, params) -> np.ndarray:
    h = assemble_eh(family, params)
    evals, vecs = np.linalg.eigh(h)
    return (vecs * gibbs_weights(evals)) @ vecs.conj().T


def density_matrix_from_params(family: AnsatzFamily, params) -> DensityMatrix:
    """(1 - p) e^{-H(g)} / Z + p I / D."""
    params = _as_params(family, params)
    rho = (1 - params.p) * coherent_density(family, params) + params.p * np.eye(family.dim) / family.dim
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def bw_linear_ramp(family: AnsatzFamily, slope: float = 1.0) -> np.ndarray:
    """Initial coefficients growing linearly with distance from the cut, no momentum terms."""
    g = np.zeros(family.n_params)
    if family.kind == "deformed_ising_local":
        for i, lab in enumerate(family.param_labels):
            g[i] = slope * (int(lab.split("_")[1]) - 0.5)
        return g
    if family.kind == "parabolic_reduced":
        return np.array([0.0, slope, 0.0])
    for t in family.terms:
        label = family.param_labels[t.param]
        if label.startswith("B~_") or label.startswith("J~_"):
            d = np.mean([family.distance_from_cut(s) for s in t.support]) - 0.5
            g[t.param] = slope * d
    return g
