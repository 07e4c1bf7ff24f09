"""Reference tomography methods: randomized-measurement linear inversion, PLS and low-rank LS."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import DensityMatrix, check_hermitian
from .fitting import chi_squared_grad_rho
from .measurements import Dataset, hamming_kernel


@dataclass(frozen=True)
class RankConfig:
    rank: int = 2

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")


def rho_rt(data: Dataset) -> np.ndarray:
    """(2^N / N_U) sum_U sum_{s,s'} P_U(s) (-2)^{-D[s,s']} U|s'><s'|U^dag.

    Unit trace and unbiased over local 2-designs, but not necessarily PSD.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    weights = data.dim * data.frequencies @ hamming_kernel(data.n_sites)
    u = data.full_unitaries
    m = np.einsum("uik,uk,ujk->ij", u, weights, u.conj()) / len(data)
    return 0.5 * (m + m.conj().T)


def project_psd(m: np.ndarray) -> DensityMatrix:
    """Closest density matrix in the eigenbasis of `m`: truncate negatives, redistribute their weight."""
    m = check_hermitian(np.asarray(m, dtype=complex))
    tr = np.trace(m).real
    if abs(tr - 1) > 1e-8:
        raise ValueError(f"input trace {tr}, expected 1")
    evals, vecs = np.linalg.eigh(m)
    order = np.argsort(evals)[::-1]
    mu = evals[order].copy()
    vecs = vecs[:, order]
    acc = 0.0
    i = mu.size
    while i > 0 and mu[i - 1] + acc / i < 0:
        acc += mu[i - 1]
        mu[i - 1] = 0.0
        i -= 1
    mu[:i] += acc / i
    rho = (vecs * mu) @ vecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def pls(data: Dataset) -> DensityMatrix:
    return project_psd(rho_rt(data))


def _rho_from_x(x: np.ndarray) -> np.ndarray:
    rho = x.conj().T @ x
    return rho / np.trace(rho).real


def lrls_objective(data: Dataset, rank: int):
    """chi^2 as a function of the stacked real and imaginary parts of X (rank x dim)."""
    d = data.dim

    def unpack(v):
        return (v[: rank * d] + 1j * v[rank * d:]).reshape(rank, d)

    def fun(v):
        x = unpack(v)
        t = np.vdot(x, x).real
        rho = x.conj().T @ x / t
        chi2, g = chi_squared_grad_rho(data, rho)
        g = g - np.real(np.vdot(rho, g)) * np.eye(d)
        # d chi2 = 2 Re Tr(g X^dag dX) / t
        grad = 2.0 * x.conj() @ g.T / t
        return chi2, np.concatenate([grad.real.ravel(), -grad.imag.ravel()])

    return fun, unpack


def lrls(data: Dataset, cfg: RankConfig = RankConfig(), max_iterations: int = 3000,
         tol: float = 1e-15, return_info: bool = False):
    """Minimize chi^2 over rho = X^dag X / Tr(X^dag X), X started from the top eigenvectors of PLS.

    With `return_info` the optimizer diagnostics (converged flag, iterations, chi^2) come back too.
    """
    d = data.dim
    if cfg.rank > d:
        raise ValueError("rank exceeds the Hilbert-space dimension")
    start = pls(data).matrix
    evals, vecs = np.linalg.eigh(start)
    evals, vecs = evals[::-1][: cfg.rank], vecs[:, ::-1][:, : cfg.rank]
    x0 = np.sqrt(np.clip(evals, 1e-3, None))[:, None] * vecs.conj().T
    fun, unpack = lrls_objective(data, cfg.rank)
    v0 = np.concatenate([x0.real.ravel(), x0.imag.ravel()])
    res = minimize(fun, v0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iterations, "ftol": tol, "gtol": 1e-12, "maxcor": 30})
    rho = DensityMatrix(_rho_from_x(unpack(res.x)))
    if return_info:
        return rho, {"converged": bool(res.success), "iterations": int(res.nit), "chi2": float(res.fun),
                     "message": str(res.message)}
    return rho
