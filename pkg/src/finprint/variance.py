"""Plug-in asymptotic covariance of the scaling factors and lambda selection.

The sampling covariance of sqrt(N)*(beta_hat - beta) has a limit that can be
estimated consistently from the noisy fingerprints and the sample covariance
alone, by correcting the fingerprint quadratic forms for measurement error
with the trace functionals of the shrunk covariance. Minimizing the trace of
that estimate over lambda on a log grid picks the weight matrix with the
smallest total asymptotic uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .dataset import DetectionDataset, validate_dataset
from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    NoFeasiblePoint,
    SingularDelta1,
    VerticalSolution,
)
from .spectral import RmtFunctionals, SpectralCache, build_cache, rmt_functionals, stability_margin
from .tls import tls_fit

if TYPE_CHECKING:
    from .inference import FitResult

__all__ = [
    "XiEstimate",
    "LambdaCurve",
    "FitOptions",
    "delta1_hat",
    "delta2_hat",
    "k_hat",
    "xi_hat",
    "evaluate_lambda",
    "select_lambda",
    "fit_optimal",
]

# Reciprocal condition number below which the corrected Gram matrix is
# treated as singular.
RCOND_TOL = 1e-10

DEFAULT_GRID_SIZE = 100
# Search bounds as multiples of tau_bar = tr(S)/N.
DEFAULT_BOUNDS = (0.01, 10.0)

_OBJECTIVES = ("trace", "determinant", "max_eigenvalue")


def _d_vector(d) -> np.ndarray:
    """Accept the measurement-error scaling as a diagonal vector or matrix."""
    d = np.asarray(d, dtype=float)
    if d.ndim == 2:
        d = np.diag(d)
    return d


@dataclass(frozen=True)
class XiEstimate:
    """Everything computed at a single regularization level.

    ``feasible`` is true iff the corrected Gram matrix was invertible
    (reciprocal condition >= 1e-10) and every diagonal entry of the
    covariance estimate is positive. ``stability`` records the denominator
    b = 1 - (N/m)(1 - lambda*Q1), which drifts to zero at small lambda when
    m < N. Infeasible points keep NaN payloads plus a failure message.
    """

    lam: float
    beta_hat: np.ndarray
    delta1_hat: np.ndarray
    delta2_hat: np.ndarray
    k_hat: float
    xi_hat: np.ndarray
    trace_xi: float
    feasible: bool
    stability: float = np.nan
    failure: str | None = None

    @classmethod
    def infeasible(cls, lam: float, p: int, reason: str, stability: float = np.nan) -> "XiEstimate":
        nan_vec = np.full(p, np.nan)
        nan_mat = np.full((p, p), np.nan)
        return cls(
            lam=lam,
            beta_hat=nan_vec,
            delta1_hat=nan_mat,
            delta2_hat=nan_mat,
            k_hat=np.nan,
            xi_hat=nan_mat,
            trace_xi=np.nan,
            feasible=False,
            stability=stability,
            failure=reason,
        )


@dataclass(frozen=True)
class LambdaCurve:
    """Objective profile of the regularization search.

    ``objective[chosen_index]`` is the smallest finite value; infeasible
    points carry +inf. Ties resolve to the smallest lambda.
    """

    grid: np.ndarray
    objective: np.ndarray
    chosen_index: int
    feasible: np.ndarray
    estimates: tuple[XiEstimate, ...]

    @property
    def chosen_lambda(self) -> float:
        return float(self.grid[self.chosen_index])

    @property
    def chosen(self) -> XiEstimate:
        return self.estimates[self.chosen_index]


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the end-to-end fit; defaults follow the method's recipe."""

    alpha: float = 0.05
    lambda_min: float | None = None
    lambda_max: float | None = None
    grid_size: int = DEFAULT_GRID_SIZE
    objective: str = "trace"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.objective not in _OBJECTIVES:
            raise ValueError(f"objective must be one of {_OBJECTIVES}")


def delta1_hat(f: RmtFunctionals, d) -> np.ndarray:
    """Measurement-error corrected Gram matrix G1 - theta1 * D."""
    d = _d_vector(d)
    out = f.g1 - f.theta1 * np.diag(d)
    return 0.5 * (out + out.T)


def delta2_hat(f: RmtFunctionals, d, n_dim: int, m_runs: int) -> np.ndarray:
    """Corrected middle matrix [1 + (N/m) theta1]^2 (G1 - lambda G2) - theta2 * D."""
    d = _d_vector(d)
    scale = (1.0 + (n_dim / m_runs) * f.theta1) ** 2
    out = scale * (f.g1 - f.lam * f.g2) - f.theta2 * np.diag(d)
    return 0.5 * (out + out.T)


def k_hat(f: RmtFunctionals) -> float:
    """Plug-in estimate of the residual-interaction trace; equals theta2."""
    return f.theta2


def xi_hat(beta_hat, d, d1, d2, k) -> np.ndarray:
    """Assemble the covariance estimate from its plug-in ingredients.

    Computes (1 + b^T D b) * D1^{-1} {D2 + k (D^{-1} + b b^T)^{-1}} D1^{-1}
    and symmetrizes the result. Raises SingularDelta1 when D1 cannot be
    inverted reliably.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    d = _d_vector(d)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)

    svals = np.linalg.svd(d1, compute_uv=False)
    if svals[0] <= 0.0 or svals[-1] / svals[0] < RCOND_TOL:
        raise SingularDelta1(
            f"corrected Gram matrix has reciprocal condition "
            f"{0.0 if svals[0] <= 0.0 else svals[-1] / svals[0]:.3e}"
        )
    d1_inv = np.linalg.inv(d1)

    factor = 1.0 + float(beta_hat @ (d * beta_hat))
    # Sherman-Morrison form of (D^-1 + b b^T)^-1; never forms D^-1.
    db = d * beta_hat
    core_inv = np.diag(d) - np.outer(db, db) / factor
    middle = d2 + k * core_inv
    xi = factor * d1_inv @ middle @ d1_inv
    return 0.5 * (xi + xi.T)


def evaluate_lambda(cache: SpectralCache, ensemble_sizes, lam: float) -> XiEstimate:
    """Fit the scaling factors and assemble their covariance at one lambda.

    Costs O(p^2 N) given the cache. Degenerate denominators, vertical TLS
    solutions, and singular corrected Gram matrices do not raise here; they
    come back as infeasible estimates so a surrounding grid search can skip
    the point.
    """
    sizes = np.asarray(ensemble_sizes, dtype=float)
    p = cache.proj_x.shape[1]
    d = 1.0 / sizes
    margin = stability_margin(cache, lam)
    try:
        f = rmt_functionals(cache, lam)
        sol = tls_fit(cache, ensemble_sizes, lam)
        d1 = delta1_hat(f, d)
        # The correction is a difference of two terms; a smallest singular
        # value that is round-off relative to their size means the matrix is
        # singular even when its own condition number looks fine (p = 1).
        scale = np.linalg.norm(f.g1, 2) + abs(f.theta1) * d.max()
        if np.linalg.svd(d1, compute_uv=False)[-1] < RCOND_TOL * scale:
            raise SingularDelta1(
                f"corrected Gram matrix is singular at the assembly scale {scale:.3e}"
            )
        d2 = delta2_hat(f, d, cache.n_dim, cache.m_runs)
        k = k_hat(f)
        xi = xi_hat(sol.beta_hat, d, d1, d2, k)
    except (DegenerateDenominator, VerticalSolution, SingularDelta1) as exc:
        return XiEstimate.infeasible(lam, p, reason=str(exc), stability=margin)

    feasible = bool((np.diag(xi) > 0.0).all())
    return XiEstimate(
        lam=float(lam),
        beta_hat=sol.beta_hat,
        delta1_hat=d1,
        delta2_hat=d2,
        k_hat=k,
        xi_hat=xi,
        trace_xi=float(np.trace(xi)),
        feasible=feasible,
        stability=margin,
        failure=None if feasible else "nonpositive variance estimate on the diagonal",
    )


def _objective_value(est: XiEstimate, kind: str) -> float:
    if not est.feasible:
        return np.inf
    if kind == "trace":
        return est.trace_xi
    if kind == "determinant":
        return float(np.linalg.det(est.xi_hat))
    return float(np.linalg.eigvalsh(est.xi_hat)[-1])


def default_bounds(tau_bar: float) -> tuple[float, float]:
    """Search interval [0.01, 10] * tau_bar; unit scale when tr(S) = 0."""
    scale = tau_bar if tau_bar > 0.0 else 1.0
    return (DEFAULT_BOUNDS[0] * scale, DEFAULT_BOUNDS[1] * scale)


def select_lambda(
    cache: SpectralCache,
    ensemble_sizes,
    bounds: tuple[float, float] | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    objective: str = "trace",
) -> LambdaCurve:
    """Grid-search the regularization level minimizing the covariance objective.

    The grid is log-spaced and inclusive of both bounds; infeasible points
    are skipped rather than fatal. Raises NoFeasiblePoint when nothing on
    the grid is usable.
    """
    if bounds is None:
        bounds = default_bounds(cache.tau_bar)
    lo, hi = float(bounds[0]), float(bounds[1])
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < lambda_min < lambda_max, got ({lo}, {hi})")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if objective not in _OBJECTIVES:
        raise ValueError(f"objective must be one of {_OBJECTIVES}")

    grid = np.geomspace(lo, hi, grid_size)
    estimates = tuple(evaluate_lambda(cache, ensemble_sizes, lam) for lam in grid)
    values = np.array([_objective_value(est, objective) for est in estimates])
    feasible = np.isfinite(values)
    if not feasible.any():
        raise NoFeasiblePoint("every grid point was infeasible")
    chosen = int(np.argmin(values))  # first minimum = smallest lambda on ties
    return LambdaCurve(
        grid=grid,
        objective=values,
        chosen_index=chosen,
        feasible=feasible,
        estimates=estimates,
    )


def fit_optimal(ds: DetectionDataset, options: FitOptions | None = None) -> "FitResult":
    """End-to-end fit: cache, lambda search, covariance, intervals, verdicts.

    Raises DimensionMismatch on inconsistent inputs and NoFeasiblePoint when
    the search fails everywhere.
    """
    from .inference import build_fit_result

    opts = options or FitOptions()
    report = validate_dataset(ds)
    if not report.ok:
        raise DimensionMismatch("; ".join(report.errors))

    cov = ds.sample_covariance()
    cache = build_cache(cov, ds.x_tilde, ds.y)
    lo, hi = default_bounds(cache.tau_bar)
    if opts.lambda_min is not None:
        lo = opts.lambda_min
    if opts.lambda_max is not None:
        hi = opts.lambda_max
    curve = select_lambda(
        cache,
        ds.ensemble_sizes,
        bounds=(lo, hi),
        grid_size=opts.grid_size,
        objective=opts.objective,
    )
    return build_fit_result(curve, n_dim=cache.n_dim, alpha=opts.alpha)
