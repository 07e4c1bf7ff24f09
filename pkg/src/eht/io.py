"""Dataset text format, experiment configuration and result serialization."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .ansatz import AnsatzFamily, build_ansatz
from .core import DensityMatrix, partial_trace
from .fitting import FitConfig, FitResult
from .measurements import Dataset, MeasurementRecord, MeasurementSetting
from .models import SpinModel, build_hamiltonian, evolve, ground_state, product_state, thermal_state

FORMAT_NAME = "eht-dataset"
FORMAT_VERSION = 1


class DatasetFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def record_line(record: MeasurementRecord) -> str:
    if record.counts is None:
        raise ValueError("only count-based records can be written")
    u = record.setting.unitaries
    nums = np.stack([u.real, u.imag], axis=-1).ravel()
    counts = " ".join(f"{b}:{c}" for b, c in record.counts_dict().items())
    return f"{record.setting.setting_id}\t{' '.join(_fmt(v) for v in nums)}\t{counts}"


def record_digest(record: MeasurementRecord) -> str:
    return hashlib.sha256(record_line(record).encode()).hexdigest()[:16]


def dataset_digests(data: Dataset) -> list[str]:
    return [record_digest(r) for r in data.records]


def write_dataset(data: Dataset, path) -> None:
    lines = [f"# {FORMAT_NAME} {FORMAT_VERSION}",
             f"sites: {' '.join(str(s) for s in data.sites)}",
             f"ensemble: {data.ensemble}",
             f"seed: {'none' if data.seed is None else data.seed}",
             f"records: {len(data)}"]
    lines += [record_line(r) for r in data.records]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_record(line: str, n_sites: int, lineno: int) -> MeasurementRecord:
    parts = line.split("\t")
    if len(parts) != 3:
        raise DatasetFormatError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
    try:
        setting_id = int(parts[0])
        nums = np.array([float(v) for v in parts[1].split()])
    except ValueError as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from None
    if nums.size != 8 * n_sites:
        raise DatasetFormatError(f"line {lineno}: expected {8 * n_sites} unitary entries, got {nums.size}")
    pairs = nums.reshape(n_sites, 2, 2, 2)
    unitaries = pairs[..., 0] + 1j * pairs[..., 1]
    counts = np.zeros(2**n_sites, dtype=np.int64)
    for item in parts[2].split():
        bits, _, c = item.partition(":")
        if len(bits) != n_sites or set(bits) - {"0", "1"} or not c.isdigit():
            raise DatasetFormatError(f"line {lineno}: malformed count entry {item!r}")
        counts[int(bits, 2)] += int(c)
    try:
        return MeasurementRecord(MeasurementSetting(setting_id, unitaries), counts=counts)
    except ValueError as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from None


def read_dataset(path) -> Dataset:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split()[:2] != ["#", FORMAT_NAME]:
        raise DatasetFormatError("line 1: not an eht-dataset file")
    try:
        version = int(lines[0].split()[2])
    except (IndexError, ValueError):
        raise DatasetFormatError("line 1: missing format version") from None
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"line 1: unsupported format version {version}")
    header = {}
    for lineno in range(2, 6):
        if lineno > len(lines):
            raise DatasetFormatError(f"line {lineno}: truncated header")
        key, sep, value = lines[lineno - 1].partition(":")
        if not sep:
            raise DatasetFormatError(f"line {lineno}: malformed header line")
        header[key.strip()] = value.strip()
    try:
        sites = tuple(int(s) for s in header["sites"].split())
        n_records = int(header["records"])
        seed = None if header["seed"] == "none" else int(header["seed"])
        ensemble = header["ensemble"]
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(f"malformed header: {exc}") from None
    body = [(i + 6, l) for i, l in enumerate(lines[5:]) if l.strip()]
    records = [_parse_record(l, len(sites), i) for i, l in body]
    if len(records) != n_records:
        raise DatasetFormatError(f"line {len(lines) + 1}: expected {n_records} records, file ends after {len(records)}")
    try:
        return Dataset(tuple(records), sites, ensemble, seed)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from None


@dataclass
class ModelConfig:
    n_sites: int = 10
    eta: float = float("inf")
    j: float = 1.0
    field: float = 0.88
    variant: str = "ising_xx"


@dataclass
class StateConfig:
    kind: str = "ground"
    t: float = 0.0
    b_initial: float = 2.5
    b_final: float = 0.97
    beta: float = 1.0
    pattern: str | None = None


@dataclass
class BudgetConfig:
    n_u: int = 20
    n_m: int = 5000
    ensemble: str = "haar_su2"
    n_fit: int | None = None


@dataclass
class AnsatzConfig:
    kind: str = "deformed_ising_local"
    corrections: list = field(default_factory=list)
    cut: str = "auto"
    attach: str = "outer"
    pair_position: str = "midpoint"


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    state: StateConfig = field(default_factory=StateConfig)
    subsystem: list = field(default_factory=lambda: [0, 1, 2, 3])
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)
    fit: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        sub = list(self.subsystem)
        if not sub or len(set(sub)) != len(sub) or min(sub) < 0 or max(sub) >= self.model.n_sites:
            raise ValueError("subsystem must be a nonempty set of chain sites")
        if self.budget.n_u < 1 or self.budget.n_m < 1:
            raise ValueError("measurement budgets must be at least 1")
        if self.state.kind not in ("ground", "quench", "thermal", "product"):
            raise ValueError(f"unknown state preparation {self.state.kind!r}")
        self.fit_config()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        def sub(klass, key):
            raw = dict(d.get(key, {}))
            names = {f.name for f in fields(klass)}
            unknown = set(raw) - names
            if unknown:
                raise ValueError(f"unknown {key} options: {sorted(unknown)}")
            if klass is ModelConfig and isinstance(raw.get("eta"), str):
                raw["eta"] = float(raw["eta"])
            return klass(**raw)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        return cls(model=sub(ModelConfig, "model"), state=sub(StateConfig, "state"),
                   subsystem=list(d.get("subsystem", [0, 1, 2, 3])), budget=sub(BudgetConfig, "budget"),
                   ansatz=sub(AnsatzConfig, "ansatz"), fit=dict(d.get("fit", {})), seed=int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"]["eta"] = "inf" if np.isinf(self.model.eta) else self.model.eta
        return d

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def spin_model(self, field_value: float | None = None) -> SpinModel:
        m = self.model
        b = m.field if field_value is None else field_value
        return SpinModel(m.n_sites, field=b, j=m.j, eta=m.eta, variant=m.variant)

    def fit_config(self) -> FitConfig:
        return FitConfig(**self.fit)

    @property
    def cut(self) -> str:
        if self.ansatz.cut != "auto":
            return self.ansatz.cut
        return "left" if max(self.subsystem) == self.model.n_sites - 1 and 0 not in self.subsystem else "right"

    def global_state(self):
        s = self.state
        if s.kind == "ground":
            return ground_state(build_hamiltonian(self.spin_model()))
        if s.kind == "quench":
            psi0 = ground_state(build_hamiltonian(self.spin_model(s.b_initial)))
            return evolve(psi0, build_hamiltonian(self.spin_model(s.b_final)), s.t)
        if s.kind == "thermal":
            return thermal_state(build_hamiltonian(self.spin_model()), s.beta)
        pattern = s.pattern or "".join("01"[i % 2] for i in range(self.model.n_sites))
        return product_state(pattern)

    def reduced_state(self) -> DensityMatrix:
        return partial_trace(self.global_state(), sorted(self.subsystem))

    def base_model(self) -> SpinModel:
        sub = sorted(self.subsystem)
        field_value = self.state.b_final if self.state.kind == "quench" else self.model.field
        full = self.spin_model()
        return SpinModel(len(sub), field=field_value, variant=self.model.variant,
                         couplings=full.couplings[np.ix_(sub, sub)])

    def family(self) -> AnsatzFamily:
        a = self.ansatz
        return build_ansatz(a.kind, len(self.subsystem), self.base_model(), corrections=a.corrections,
                            cut=self.cut, attach=a.attach, pair_position=a.pair_position)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def family_spec(family: AnsatzFamily, base_model: SpinModel | None) -> dict:
    spec = {"kind": family.kind, "n_sites": family.n_sites, "corrections": list(family.corrections),
            "cut": family.cut, "options": dict(family.options)}
    if base_model is not None:
        spec["field"] = base_model.field
        spec["variant"] = base_model.variant
        spec["couplings"] = base_model.couplings.tolist()
    return spec


def family_from_spec(spec: dict) -> AnsatzFamily:
    base = None
    if "couplings" in spec:
        base = SpinModel(spec["n_sites"], field=spec["field"], variant=spec["variant"],
                         couplings=np.array(spec["couplings"]))
    return build_ansatz(spec["kind"], spec["n_sites"], base, corrections=spec["corrections"],
                        cut=spec["cut"], **spec["options"])


def fit_result_to_dict(result: FitResult) -> dict:
    return {"labels": list(result.labels), "g": result.params.g.tolist(), "p": result.params.p,
            "chi2": result.chi2, "xis": result.spectrum.xis.tolist(),
            "schmidt_rank": result.spectrum.schmidt_rank, "entropy_bits": result.entropy_bits,
            "errors": result.errors, "diagnostics": result.diagnostics}


def density_to_dict(rho) -> dict:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def density_from_dict(d: dict) -> DensityMatrix:
    return DensityMatrix(np.array(d["real"]) + 1j * np.array(d["imag"]))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
