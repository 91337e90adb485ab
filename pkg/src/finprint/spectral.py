"""Spectral cache and per-lambda trace/quadratic functionals.

All quantities the estimator needs at a given regularization level are
functions of the eigendecomposition of the sample covariance S and of the
data projected onto its eigenbasis. The decomposition is done once; every
subsequent functional evaluation costs O(pN), so a grid search over lambda
is cheap. The shrunk matrix S + lambda*I is never formed or inverted densely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import SampleCovariance
from .errors import DegenerateDenominator, DimensionMismatch, EigenFailure

__all__ = [
    "SpectralCache",
    "RmtFunctionals",
    "build_cache",
    "q1",
    "q2",
    "theta1",
    "theta2",
    "g_forms",
    "whiten",
    "rmt_functionals",
    "stability_margin",
]

# Denominators b = 1 - (N/m)(1 - lambda*Q1) smaller than this are treated as
# degenerate; b -> 0 as lambda -> 0 whenever m < N.
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class SpectralCache:
    """Eigendecomposition of S plus the data expressed in its eigenbasis.

    ``eigvals`` are ascending and clamped to >= 0; ``eigvecs`` has the
    matching eigenvectors as columns. ``proj_x`` and ``proj_y`` are the
    fingerprints and observations rotated into the eigenbasis, which is all
    the weighted products below ever touch.
    """

    eigvals: np.ndarray
    eigvecs: np.ndarray
    proj_x: np.ndarray
    proj_y: np.ndarray
    n_dim: int
    m_runs: int
    tau_bar: float


@dataclass(frozen=True)
class RmtFunctionals:
    """All trace/quadratic functionals of the shrunk covariance at one lambda."""

    lam: float
    q1: float
    q2: float
    theta1: float
    theta2: float
    g1: np.ndarray
    g2: np.ndarray


def build_cache(cov: SampleCovariance, x_tilde, y) -> SpectralCache:
    """Eigendecompose S once and project the data onto its eigenbasis.

    Negative eigenvalues from round-off are clamped to zero (threshold
    1e-10 * tau_bar). Raises EigenFailure if the symmetric solver does not
    converge and DimensionMismatch on inconsistent shapes.
    """
    s = cov.s
    n = s.shape[0]
    x_tilde = np.asarray(x_tilde, dtype=float)
    y = np.asarray(y, dtype=float)
    if x_tilde.ndim != 2 or x_tilde.shape[0] != n:
        raise DimensionMismatch(f"x_tilde must be {n} x p, got {x_tilde.shape}")
    if y.shape != (n,):
        raise DimensionMismatch(f"y must have shape ({n},), got {y.shape}")

    try:
        eigvals, eigvecs = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"symmetric eigendecomposition failed: {exc}") from exc

    tau_bar = float(np.trace(s)) / n
    # Round-off eigenvalues (either sign) below 1e-10 * tau_bar are exact
    # zeros of the rank-deficient S.
    clamp = 1e-10 * max(tau_bar, 0.0)
    eigvals = np.where(eigvals < clamp, 0.0, eigvals)

    return SpectralCache(
        eigvals=eigvals,
        eigvecs=eigvecs,
        proj_x=eigvecs.T @ x_tilde,
        proj_y=eigvecs.T @ y,
        n_dim=n,
        m_runs=cov.m,
        tau_bar=tau_bar,
    )


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam


def q1(cache: SpectralCache, lam: float) -> float:
    """Normalized trace of the inverse shrunk covariance, (1/N) sum 1/(d_i + lambda)."""
    lam = _check_lambda(lam)
    return float(np.mean(1.0 / (cache.eigvals + lam)))


def q2(cache: SpectralCache, lam: float) -> float:
    """Normalized trace of the squared inverse, (1/N) sum 1/(d_i + lambda)^2."""
    lam = _check_lambda(lam)
    return float(np.mean(1.0 / (cache.eigvals + lam) ** 2))


def stability_margin(cache: SpectralCache, lam: float) -> float:
    """Denominator b = 1 - (N/m)(1 - lambda*Q1).

    Approaches zero as lambda -> 0 when m < N, which is where the trace
    functionals become unstable; exposed as a diagnostic rather than
    guessing a hard cutoff.
    """
    lam = _check_lambda(lam)
    ratio = cache.n_dim / cache.m_runs
    return 1.0 - ratio * (1.0 - lam * q1(cache, lam))


def theta1(cache: SpectralCache, lam: float) -> float:
    """First self-consistent trace functional (1 - lambda*Q1) / b."""
    lam = _check_lambda(lam)
    u = 1.0 - lam * q1(cache, lam)
    b = 1.0 - (cache.n_dim / cache.m_runs) * u
    if abs(b) <= DEGENERATE_TOL:
        raise DegenerateDenominator(f"denominator {b:.3e} at lambda={lam:.6g}")
    return u / b


def theta2(cache: SpectralCache, lam: float) -> float:
    """Second trace functional, (1 - lambda*Q1)/b^3 - lambda*(Q1 - lambda*Q2)/b^4."""
    lam = _check_lambda(lam)
    q1v = q1(cache, lam)
    q2v = q2(cache, lam)
    u = 1.0 - lam * q1v
    b = 1.0 - (cache.n_dim / cache.m_runs) * u
    if abs(b) <= DEGENERATE_TOL:
        raise DegenerateDenominator(f"denominator {b:.3e} at lambda={lam:.6g}")
    return u / b**3 - lam * (q1v - lam * q2v) / b**4


def g_forms(cache: SpectralCache, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Fingerprint quadratic forms in the inverse shrunk covariance.

    Returns ``(g1, g2)`` with g1 = X~^T (S+lambda I)^-1 X~ / N and g2 the
    analogous form with the squared inverse; both symmetric PSD p x p.
    """
    lam = _check_lambda(lam)
    w = 1.0 / (cache.eigvals + lam)
    v = cache.proj_x
    g1 = (v.T * w) @ v / cache.n_dim
    g2 = (v.T * w**2) @ v / cache.n_dim
    return 0.5 * (g1 + g1.T), 0.5 * (g2 + g2.T)


def whiten(cache: SpectralCache, lam: float, a) -> np.ndarray:
    """Apply the inverse square root of the shrunk covariance to a vector."""
    lam = _check_lambda(lam)
    a = np.asarray(a, dtype=float)
    scaled = (cache.eigvecs.T @ a) / np.sqrt(cache.eigvals + lam)
    return cache.eigvecs @ scaled


def rmt_functionals(cache: SpectralCache, lam: float) -> RmtFunctionals:
    """Evaluate every functional needed by the covariance assembly at one lambda."""
    lam = _check_lambda(lam)
    q1v = q1(cache, lam)
    q2v = q2(cache, lam)
    u = 1.0 - lam * q1v
    b = 1.0 - (cache.n_dim / cache.m_runs) * u
    if abs(b) <= DEGENERATE_TOL:
        raise DegenerateDenominator(f"denominator {b:.3e} at lambda={lam:.6g}")
    g1v, g2v = g_forms(cache, lam)
    return RmtFunctionals(
        lam=lam,
        q1=q1v,
        q2=q2v,
        theta1=u / b,
        theta2=u / b**3 - lam * (q1v - lam * q2v) / b**4,
        g1=g1v,
        g2=g2v,
    )
