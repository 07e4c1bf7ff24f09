"""Bisognano-Wichmann and CFT weight profiles beta(x) on a boundary interval [0, l].

The open edge of the chain sits at x = 0 and the entanglement cut at x = l,
except for bw_halfline, whose coordinate is the distance from the cut.
Profiles are shapes; overall normalization is fitted away when comparing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzFamily

PROFILE_KINDS = ("bw_halfline", "parabolic", "short_range", "thermal")


@dataclass(frozen=True)
class WeightProfile:
    kind: str
    l: float
    beta0: float | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile {self.kind!r}")
        if self.l <= 0:
            raise ValueError("interval length must be positive")
        if self.kind in ("short_range", "thermal") and (self.beta0 is None or self.beta0 <= 0):
            raise ValueError(f"{self.kind} profile needs beta0 > 0")


def evaluate_weight(profile: WeightProfile, x):
    x_arr = np.asarray(x, dtype=float)
    l = profile.l
    if np.any(x_arr < -1e-12) or np.any(x_arr > l + 1e-12):
        raise ValueError(f"x outside [0, {l}]")
    x_arr = np.clip(x_arr, 0.0, l)
    if profile.kind == "bw_halfline":
        out = 2 * np.pi * x_arr
    elif profile.kind == "parabolic":
        out = (l**2 - x_arr**2) / (2 * l)
    elif profile.kind == "short_range":
        b = profile.beta0
        out = b * np.sinh(2 * np.pi * (l - x_arr) / b)
    else:
        # 2 b sinh(a1) sinh(a2) / sinh(a1 + a2), rewritten to avoid overflow
        b = profile.beta0
        a1 = np.pi * (l - x_arr) / b
        a2 = np.pi * (l + x_arr) / b
        out = b * (-np.expm1(-2 * a1)) * (-np.expm1(-2 * a2)) / (-np.expm1(-2 * (a1 + a2)))
    return float(out) if np.ndim(x) == 0 else out


def profile_table(profile: WeightProfile, n_points: int = 101) -> np.ndarray:
    x = np.linspace(0.0, profile.l, n_points)
    return np.column_stack([x, evaluate_weight(profile, x)])


def site_coordinates(family: AnsatzFamily, profile: WeightProfile) -> np.ndarray:
    """Profile coordinate of every subsystem site, taken at the lattice midpoint."""
    dist = np.array([family.distance_from_cut(s) for s in range(family.n_sites)]) - 0.5
    if profile.kind == "bw_halfline":
        return dist
    return family.n_sites - dist


def site_weights(result, family: AnsatzFamily) -> np.ndarray:
    """Fitted coefficient of the on-site energy term, indexed by subsystem site."""
    params = getattr(result, "params", result)
    g = np.asarray(getattr(params, "g", params), dtype=float)
    if family.kind == "deformed_ising_local":
        return np.array([g[family.index(f"gamma_{family.distance_from_cut(s)}")]
                         for s in range(family.n_sites)])
    if family.kind in ("quench_energy_momentum", "exchange_with_corrections"):
        return np.array([g[family.index(f"B~_{s}")] for s in range(family.n_sites)])
    raise ValueError(f"{family.kind} has no site-resolved coefficients")


@dataclass
class ProfileComparison:
    sites: np.ndarray
    fitted: np.ndarray
    profile: np.ndarray
    scale: float
    residuals: np.ndarray
    correlation: float

    @property
    def relative_residual(self) -> float:
        return float(np.linalg.norm(self.residuals) / max(np.linalg.norm(self.fitted), 1e-300))


def compare_fit_to_profile(result, family: AnsatzFamily, profile: WeightProfile) -> ProfileComparison:
    """Least-squares scale of the profile onto the fitted site weights, residuals and correlation."""
    fitted = site_weights(result, family)
    prof = evaluate_weight(WeightProfile(profile.kind, family.n_sites, profile.beta0),
                           site_coordinates(family, profile))
    scale = float(prof @ fitted / (prof @ prof))
    resid = fitted - scale * prof
    if np.std(fitted) < 1e-12 or np.std(prof) < 1e-12:
        corr = 1.0 if np.allclose(resid, 0, atol=1e-9 * max(1.0, np.abs(fitted).max())) else 0.0
    else:
        corr = float(np.corrcoef(fitted, prof)[0, 1])
    return ProfileComparison(np.arange(family.n_sites), fitted, prof, scale, resid, corr)


def best_profile(result, family: AnsatzFamily, profiles) -> WeightProfile:
    return min(profiles, key=lambda p: compare_fit_to_profile(result, family, p).relative_residual)
