"""Least-squares fit of an ansatz family to randomized-measurement frequencies."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .ansatz import AnsatzFamily, ParamVector, bw_linear_ramp, density_matrix_from_params
from .core import DensityMatrix, EntanglementSpectrum, entanglement_spectrum, uhlmann_fidelity
from .measurements import Dataset, sample_dataset

DEGENERATE_GAP = 1e-9
P_BOUNDS = (1e-9, 1 - 1e-9)


@dataclass(frozen=True)
class FitConfig:
    init: str = "bw_linear_ramp"
    init_params: tuple | None = None
    init_slope: float = 1.0
    p_init: float = 0.05
    max_iterations: int = 3000
    gradient_mode: str = "spectral_analytic"
    convergence_tol: float = 1e-15
    gradient_tol: float = 1e-12
    fit_depolarization: bool = False
    restarts: int = 5
    perturbation: float = 0.5
    param_bound: float | None = None
    bound_ladder: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.init not in ("bw_linear_ramp", "zeros", "user"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "user" and self.init_params is None:
            raise ValueError("init='user' needs init_params")
        if self.gradient_mode not in ("spectral_analytic", "finite_difference"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.convergence_tol <= 0 or self.gradient_tol <= 0 or self.max_iterations < 1:
            raise ValueError("tolerances and iteration cap must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")
        if self.bound_ladder is not None:
            ladder = tuple(float(b) for b in self.bound_ladder)
            if not ladder or min(ladder) <= 0 or list(ladder) != sorted(ladder):
                raise ValueError("bound_ladder must be increasing positive bounds")
            object.__setattr__(self, "bound_ladder", ladder)


@dataclass
class FitResult:
    params: ParamVector
    chi2: float
    spectrum: EntanglementSpectrum
    entropy_bits: float
    errors: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    labels: tuple[str, ...] = ()

    def coefficient(self, label: str) -> float:
        return float(self.params.g[self.labels.index(label)])


def _check(data: Dataset, family: AnsatzFamily):
    if len(data) == 0:
        raise ValueError("empty dataset")
    if data.n_sites != family.n_sites:
        raise ValueError(f"dataset has {data.n_sites} sites, ansatz has {family.n_sites}")


class _Gibbs:
    """Eigendecomposition of H(g) with the normalized Gibbs weights."""

    def __init__(self, family: AnsatzFamily, g: np.ndarray):
        h = np.tensordot(g, family.operators, axes=1)
        self.evals, self.vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
        w = np.exp(-(self.evals - self.evals.min()))
        self.weights = w / w.sum()
        self.rho = (self.vecs * self.weights) @ self.vecs.conj().T

    def divided_differences(self) -> np.ndarray:
        """(w_i - w_j) / (l_i - l_j) for f(l) = e^{-l}/Z, with the derivative on near-degenerate pairs."""
        lam, w = self.evals, self.weights
        dl = lam[:, None] - lam[None, :]
        dw = w[:, None] - w[None, :]
        close = np.abs(dl) < DEGENERATE_GAP
        out = np.empty_like(dl)
        out[~close] = dw[~close] / dl[~close]
        out[close] = -0.5 * (w[:, None] + w[None, :])[close]
        return out

    def pullback(self, grad_rho: np.ndarray) -> np.ndarray:
        """Matrix M with d/dt Tr(G rho(H + tV)) = Re Tr(M V) at t = 0."""
        g = grad_rho - np.real(np.vdot(self.rho, grad_rho)) * np.eye(len(self.evals))
        gt = self.vecs.conj().T @ g @ self.vecs
        return self.vecs @ (self.divided_differences() * gt) @ self.vecs.conj().T


def _model_matrix(gibbs: _Gibbs, p: float) -> np.ndarray:
    d = gibbs.rho.shape[0]
    return (1 - p) * gibbs.rho + p * np.eye(d) / d


def _probabilities(rho: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    rho_u = np.matmul(rho[None], unitaries)
    return np.real(np.einsum("uik,uik->uk", unitaries.conj(), rho_u))


def chi_squared(data: Dataset, family: AnsatzFamily, params) -> float:
    """sum_U sum_s [P_U(s) - Tr(rho(g, p) U|s><s|U^dag)]^2 over all bitstrings."""
    _check(data, family)
    rho = density_matrix_from_params(family, params).matrix
    resid = data.frequencies - _probabilities(rho, data.full_unitaries)
    return float(np.sum(resid**2))


def chi_squared_matrix(data: Dataset, rho: np.ndarray) -> float:
    resid = data.frequencies - _probabilities(np.asarray(rho), data.full_unitaries)
    return float(np.sum(resid**2))


def chi_squared_grad_rho(data: Dataset, rho: np.ndarray) -> tuple[float, np.ndarray]:
    """chi^2 and the Hermitian G with d chi^2 = Tr(G d rho)."""
    u = data.full_unitaries
    resid = data.frequencies - _probabilities(rho, u)
    d = u.shape[1]
    weighted = (u * resid[:, None, :]).transpose(1, 0, 2).reshape(d, -1)
    g = -2.0 * weighted @ u.conj().transpose(1, 0, 2).reshape(d, -1).T
    return float(np.sum(resid**2)), 0.5 * (g + g.conj().T)


class Objective:
    """chi^2 as a function of x = (g, logit p) (or g alone) with its analytic gradient."""

    def __init__(self, data: Dataset, family: AnsatzFamily, fit_depolarization: bool, p_fixed: float = 0.0):
        _check(data, family)
        self.data, self.family = data, family
        self.fit_p = fit_depolarization
        self.p_fixed = p_fixed
        self.n_calls = 0

    def split(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        if self.fit_p:
            return x[:-1], float(np.clip(expit(x[-1]), *P_BOUNDS))
        return x, self.p_fixed

    def pack(self, g: np.ndarray, p: float) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.fit_p:
            return np.append(g, logit(np.clip(p, *P_BOUNDS)))
        return g.copy()

    def value(self, x: np.ndarray) -> float:
        g, p = self.split(x)
        return chi_squared_matrix(self.data, _model_matrix(_Gibbs(self.family, g), p))

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self.n_calls += 1
        g, p = self.split(x)
        gibbs = _Gibbs(self.family, g)
        chi2, grad_rho = chi_squared_grad_rho(self.data, _model_matrix(gibbs, p))
        m = gibbs.pullback(grad_rho)
        grad_g = (1 - p) * np.real(np.einsum("aij,ji->a", self.family.operators, m))
        if not self.fit_p:
            return chi2, grad_g
        d = gibbs.rho.shape[0]
        dp = np.real(np.trace(grad_rho) / d - np.vdot(gibbs.rho, grad_rho))
        return chi2, np.append(grad_g, dp * p * (1 - p))

    def value_and_fd_grad(self, x: np.ndarray, step: float = 1e-6) -> tuple[float, np.ndarray]:
        self.n_calls += 1
        grad = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            grad[i] = (self.value(x + e) - self.value(x - e)) / (2 * step)
        return self.value(x), grad


def _initial_guess(family: AnsatzFamily, config: FitConfig) -> np.ndarray:
    if config.init == "user":
        g = np.asarray(config.init_params, dtype=float)
        if g.size != family.n_params:
            raise ValueError("init_params length differs from the ansatz")
        return g
    if config.init == "zeros":
        return np.zeros(family.n_params)
    return bw_linear_ramp(family, config.init_slope)


def _result(family, g, p, chi2, diagnostics) -> FitResult:
    params = ParamVector(g, p)
    coherent = density_matrix_from_params(family, ParamVector(g, 0.0))
    spec = entanglement_spectrum(coherent)
    return FitResult(params, chi2, spec, spec.entropy_bits, {}, diagnostics, family.param_labels)


def fit(data: Dataset, family: AnsatzFamily, config: FitConfig = FitConfig()) -> FitResult:
    """Minimize chi^2 over (g, p); best local minimum over the restarts.

    With `bound_ladder` the box bound is relaxed step by step, each stage
    starting from the previous optimum; this lets near-pure states reach large
    coefficients without the optimizer running away from the first step.
    The reported spectrum and entropy are those of the coherent part e^{-H(g)}/Z.
    """
    _check(data, family)
    if family.n_params >= data.n_settings * (data.dim - 1) + (1 if config.fit_depolarization else 0):
        raise ValueError("more parameters than observed degrees of freedom")
    if config.bound_ladder is None:
        return _fit_once(data, family, config)
    result, iterations = None, 0
    for k, bound in enumerate(config.bound_ladder):
        stage = replace(config, bound_ladder=None, param_bound=bound)
        if result is not None:
            stage = replace(stage, init="user", init_params=tuple(result.params.g),
                            p_init=min(max(result.params.p, 1e-6), 1 - 1e-6), restarts=0)
        result = _fit_once(data, family, stage)
        iterations += result.diagnostics["iterations"]
    result.diagnostics["iterations"] = iterations
    return result


def _fit_once(data: Dataset, family: AnsatzFamily, config: FitConfig) -> FitResult:
    obj = Objective(data, family, config.fit_depolarization)
    fun = obj.value_and_grad if config.gradient_mode == "spectral_analytic" else obj.value_and_fd_grad
    rng = np.random.default_rng(config.seed)
    g0 = _initial_guess(family, config)
    best = None
    for restart in range(config.restarts + 1):
        if restart == 0:
            g_start, p_start = g0, config.p_init
        else:
            scale = config.perturbation * max(1.0, np.max(np.abs(g0), initial=0.0))
            g_start = g0 * rng.uniform(0.5, 1.5) + scale * rng.standard_normal(g0.size)
            p_start = rng.uniform(0.01, 0.3)
        x0 = obj.pack(g_start, p_start)
        bounds = None
        if config.param_bound is not None:
            b = config.param_bound
            x0[:family.n_params] = np.clip(x0[:family.n_params], -b, b)
            bounds = [(-b, b)] * family.n_params + ([(None, None)] if config.fit_depolarization else [])
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": config.max_iterations, "ftol": config.convergence_tol,
                                "gtol": config.gradient_tol, "maxcor": 30})
        if best is None or res.fun < best[0].fun:
            best = (res, restart)
        if res.fun < 1e-24:
            break
    res, restart = best
    g, p = obj.split(res.x)
    diagnostics = {"iterations": int(res.nit), "restart": restart, "converged": bool(res.success),
                   "message": str(res.message), "evaluations": obj.n_calls}
    return _result(family, g, p if config.fit_depolarization else 0.0, float(res.fun), diagnostics)


def fit_sequence(datasets, family: AnsatzFamily, config: FitConfig = FitConfig()) -> list[FitResult]:
    """Fit a time series of datasets, e.g. snapshots of a quench.

    Each snapshot is fitted from the configured initialization and, as a second
    candidate, from the previous snapshot's optimum with no bound. The
    candidate with the smaller chi^2 is kept.
    """
    results = []
    for data in datasets:
        best = fit(data, family, config)
        if results:
            warm = replace(config, init="user", init_params=tuple(results[-1].params.g), restarts=0,
                           param_bound=None, bound_ladder=None,
                           p_init=min(max(results[-1].params.p, 1e-6), 1 - 1e-6))
            cont = fit(data, family, warm)
            if cont.chi2 < best.chi2:
                cont.diagnostics["continued"] = True
                best = cont
        best.diagnostics.setdefault("continued", False)
        results.append(best)
    return results


def fitted_density(family: AnsatzFamily, result: FitResult, coherent: bool = False) -> DensityMatrix:
    p = 0.0 if coherent else result.params.p
    return density_matrix_from_params(family, ParamVector(result.params.g, p))


def jackknife(values: np.ndarray) -> np.ndarray:
    """Standard error from leave-one-out replicas stacked along axis 0."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    return np.sqrt((n - 1) / n * np.sum((values - values.mean(axis=0)) ** 2, axis=0))


def default_statistic(result: FitResult) -> np.ndarray:
    return np.append(result.params.g, [result.params.p, result.entropy_bits])


def jackknife_errors(data: Dataset, family: AnsatzFamily, config: FitConfig = FitConfig(),
                     statistic: Callable[[FitResult], np.ndarray] = default_statistic,
                     full_result: FitResult | None = None) -> np.ndarray:
    """Leave-one-setting-out jackknife standard error of `statistic`.

    Each replica is refit from the full-data optimum.
    """
    if len(data) < 2:
        raise ValueError("jackknife needs at least two settings")
    if full_result is None:
        full_result = fit(data, family, config)
    warm = replace(config, init="user", init_params=tuple(full_result.params.g),
                   p_init=max(full_result.params.p, 1e-6), restarts=0)
    reps = [np.atleast_1d(statistic(fit(data.without(i), family, warm))) for i in range(len(data))]
    return jackknife(np.stack(reps))


def fit_with_errors(data: Dataset, family: AnsatzFamily, config: FitConfig = FitConfig()) -> FitResult:
    result = fit(data, family, config)
    err = jackknife_errors(data, family, config, full_result=result)
    n = family.n_params
    result.errors = {"g": err[:n].tolist(), "p": float(err[n]), "entropy_bits": float(err[n + 1])}
    return result


@dataclass
class ScanResult:
    rows: list[dict]
    target: float
    minimal_budget: int | None
    minimal_point: tuple[int, int] | None

    @property
    def reached(self) -> bool:
        return self.minimal_budget is not None


def eht_reconstructor(family: AnsatzFamily, config: FitConfig = FitConfig()):
    def reconstruct(data: Dataset) -> DensityMatrix:
        return fitted_density(family, fit(data, family, config))
    return reconstruct


def measurement_budget_scan(state: DensityMatrix, family: AnsatzFamily | None, target_fidelity: float,
                            grid, n_seeds: int = 5, config: FitConfig = FitConfig(), reconstruct=None,
                            ensemble: str = "haar_su2", seed: int = 0) -> ScanResult:
    """Smallest N_U * N_M on `grid` whose median Uhlmann fidelity over `n_seeds` reaches the target.

    `reconstruct` maps a Dataset to a DensityMatrix; by default the EHT fit of `family`.
    Grid points are visited in order of increasing budget and the scan stops at
    the first success.
    """
    if not 0 < target_fidelity < 1:
        raise ValueError("target fidelity must lie in (0, 1)")
    if n_seeds < 1:
        raise ValueError("need at least one seed")
    if reconstruct is None:
        reconstruct = eht_reconstructor(family, config)
    points = sorted({(int(nu), int(nm)) for nu, nm in grid}, key=lambda x: (x[0] * x[1], x[0]))
    seeds = np.random.SeedSequence(seed).spawn(len(points) * n_seeds)
    rows = []
    for k, (nu, nm) in enumerate(points):
        fids = []
        for s in range(n_seeds):
            data = sample_dataset(state, nu, nm, seeds[k * n_seeds + s], ensemble)
            f = uhlmann_fidelity(state, reconstruct(data))
            fids.append(f)
            rows.append({"n_u": nu, "n_m": nm, "seed": s, "fidelity": f})
        if np.median(fids) >= target_fidelity:
            return ScanResult(rows, target_fidelity, nu * nm, (nu, nm))
    return ScanResult(rows, target_fidelity, None, None)
