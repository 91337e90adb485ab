"""Total least squares on prewhitened data.

The scaling factors minimize the Rayleigh-quotient objective
||W^{-1/2}(Y - X~ b)||^2 / (1 + b^T D b) with W = S + lambda*I and
D = diag(1/n_i). Rescaling b* = D^{1/2} b turns the denominator into
1 + ||b*||^2, so the minimizer is read off the eigenvector with smallest
eigenvalue of the (p+1) x (p+1) Gram matrix of the whitened, rescaled design
[X~ D^{-1/2}, Y]. p is small, so the Gram eigenproblem beats an N x (p+1)
SVD and the whitened products come straight from the spectral cache.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EigenFailure, NearDegenerateWarning, VerticalSolution
from .spectral import SpectralCache, _check_lambda

__all__ = ["TlsSolution", "tls_fit", "tls_objective"]

# |last eigenvector component| below this (relative to the vector norm) means
# the fit has no finite solution in the whitened metric.
VERTICAL_TOL = 1e-10

# Eigenvalue gaps below 1e-8 * mean diagonal of the Gram matrix trigger a
# non-uniqueness warning.
NEAR_DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class TlsSolution:
    """Fitted scaling factors plus eigenstructure diagnostics.

    ``beta_star`` is the solution in the rescaled parameterization
    (beta_star = D^{1/2} beta_hat); ``min_eigenvalue`` equals the attained
    objective value and ``gap`` (second smallest minus smallest eigenvalue)
    measures how well-separated the minimizer is.
    """

    beta_hat: np.ndarray
    beta_star: np.ndarray
    min_eigenvalue: float
    gap: float


def _augmented_gram(cache: SpectralCache, ensemble_sizes, lam: float) -> np.ndarray:
    sizes = np.asarray(ensemble_sizes, dtype=float)
    if sizes.shape != (cache.proj_x.shape[1],):
        raise ValueError(
            f"ensemble_sizes must have length {cache.proj_x.shape[1]}, got {sizes.shape}"
        )
    if (sizes < 1).any():
        raise ValueError("all ensemble sizes must be >= 1")
    w = 1.0 / (cache.eigvals + lam)
    p = np.column_stack([cache.proj_x * np.sqrt(sizes), cache.proj_y])
    m = (p.T * w) @ p
    return 0.5 * (m + m.T)


def tls_fit(cache: SpectralCache, ensemble_sizes, lam: float) -> TlsSolution:
    """Solve the prewhitened total-least-squares problem at one lambda.

    Raises VerticalSolution when the minimizing eigenvector is orthogonal to
    the response direction (no finite estimate exists), and emits a
    NearDegenerateWarning when the smallest eigenvalue is nearly tied.
    """
    lam = _check_lambda(lam)
    m = _augmented_gram(cache, ensemble_sizes, lam)
    try:
        eigvals, eigvecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"augmented Gram eigenproblem failed: {exc}") from exc

    v = eigvecs[:, 0]
    k = m.shape[0]
    gap = float(eigvals[1] - eigvals[0]) if k > 1 else np.inf
    if gap < NEAR_DEGENERATE_TOL * np.trace(m) / k:
        warnings.warn(
            f"smallest Gram eigenvalue nearly tied (gap {gap:.3e}); "
            "solution numerically non-unique",
            NearDegenerateWarning,
            stacklevel=2,
        )

    last = v[-1]
    if abs(last) < VERTICAL_TOL * np.linalg.norm(v):
        raise VerticalSolution(
            "minimizing eigenvector has zero response component; "
            "fingerprints are orthogonal to Y in the whitened metric"
        )
    beta_star = -v[:-1] / last
    sizes = np.asarray(ensemble_sizes, dtype=float)
    return TlsSolution(
        beta_hat=np.sqrt(sizes) * beta_star,
        beta_star=beta_star,
        min_eigenvalue=float(max(eigvals[0], 0.0)),
        gap=max(gap, 0.0),
    )


def tls_objective(cache: SpectralCache, ensemble_sizes, lam: float, beta) -> float:
    """Rayleigh-quotient objective at an arbitrary coefficient vector."""
    lam = _check_lambda(lam)
    beta = np.asarray(beta, dtype=float)
    sizes = np.asarray(ensemble_sizes, dtype=float)
    w = 1.0 / (cache.eigvals + lam)
    resid = cache.proj_y - cache.proj_x @ beta
    return float(np.sum(w * resid**2) / (1.0 + np.sum(beta**2 / sizes)))
