"""Regression-problem instances and the sample covariance of control runs.

A detection dataset bundles the observed climate vector, the ensemble-mean
fingerprints of the external forcings, the ensemble sizes, and the control
runs used to estimate internal variability. Control runs are assumed to be
centered (and detrended, if needed) upstream; no centering happens here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFinite

__all__ = [
    "DetectionDataset",
    "SampleCovariance",
    "ValidationReport",
    "compute_sample_covariance",
    "ensemble_mean",
    "validate_dataset",
]

# Norm below which a fingerprint column is flagged as effectively zero.
ZERO_FINGERPRINT_TOL = 1e-12


def _as_float_array(a, name: str, ndim: int) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    if out.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise NonFinite(f"{name} contains NaN or infinite entries")
    return out


@dataclass(frozen=True)
class SampleCovariance:
    """Sample covariance S of the control runs together with the run count m."""

    s: np.ndarray
    m: int

    def __post_init__(self):
        s = _as_float_array(self.s, "s", 2)
        if s.shape[0] != s.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {s.shape}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        object.__setattr__(self, "s", 0.5 * (s + s.T))

    @property
    def n_dim(self) -> int:
        return self.s.shape[0]

    @property
    def tau_bar(self) -> float:
        """Average eigenvalue tr(S)/N; sets the regularization search scale."""
        return float(np.trace(self.s)) / self.n_dim


@dataclass(frozen=True)
class DetectionDataset:
    """One fingerprinting regression instance.

    Parameters
    ----------
    y : (N,) array
        Observed climate variable (anomalies, centered upstream).
    x_tilde : (N, p) array
        Ensemble-mean fingerprints, one column per external forcing.
    ensemble_sizes : (p,) int array
        Number of simulation runs averaged into each fingerprint.
    control_runs : (N, m) array, optional
        Centered control runs realizing internal variability. May be
        omitted when ``sample_cov`` is supplied directly.
    sample_cov : SampleCovariance, optional
        Precomputed sample covariance of the control runs.
    """

    y: np.ndarray
    x_tilde: np.ndarray
    ensemble_sizes: np.ndarray
    control_runs: np.ndarray | None = None
    sample_cov: SampleCovariance | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "y", _as_float_array(self.y, "y", 1))
        object.__setattr__(self, "x_tilde", _as_float_array(self.x_tilde, "x_tilde", 2))
        sizes = np.asarray(self.ensemble_sizes, dtype=int)
        if sizes.ndim != 1:
            raise DimensionMismatch("ensemble_sizes must be a 1-d integer vector")
        if (sizes < 1).any():
            raise ValueError("all ensemble sizes must be >= 1")
        object.__setattr__(self, "ensemble_sizes", sizes)
        if self.control_runs is not None:
            object.__setattr__(
                self, "control_runs", _as_float_array(self.control_runs, "control_runs", 2)
            )
        if self.control_runs is None and self.sample_cov is None:
            raise ValueError("either control_runs or sample_cov must be supplied")

    @property
    def n_dim(self) -> int:
        return self.y.shape[0]

    @property
    def n_forcings(self) -> int:
        return self.x_tilde.shape[1]

    @property
    def m_runs(self) -> int:
        if self.control_runs is not None:
            return self.control_runs.shape[1]
        return self.sample_cov.m

    def d_diagonal(self) -> np.ndarray:
        """Diagonal of the measurement-error scaling matrix, 1/n_i per forcing."""
        return 1.0 / self.ensemble_sizes.astype(float)

    def sample_covariance(self) -> SampleCovariance:
        """Return the supplied covariance, or compute it from the control runs."""
        if self.sample_cov is not None:
            return self.sample_cov
        return compute_sample_covariance(self.control_runs)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of dataset validation: hard errors abort, warnings proceed."""

    n_dim: int
    n_forcings: int
    m_runs: int
    n_over_m: float
    tau_bar: float
    s_rank: int
    errors: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def compute_sample_covariance(control_runs) -> SampleCovariance:
    """Sample covariance S = (1/m) * sum_j Z_j Z_j^T of centered control runs.

    The divisor is m (not m-1) and the columns are not re-centered: the runs
    are taken as mean-zero draws of internal variability.
    """
    z = _as_float_array(control_runs, "control_runs", 2)
    m = z.shape[1]
    if m < 1:
        raise ValueError("need at least one control run")
    s = (z @ z.T) / m
    return SampleCovariance(s=s, m=m)


def ensemble_mean(runs) -> np.ndarray:
    """Column-wise mean of one forcing's simulation runs (N x n_i)."""
    r = _as_float_array(runs, "runs", 2)
    if r.shape[1] < 1:
        raise ValueError("need at least one run")
    return r.mean(axis=1)


def validate_dataset(ds: DetectionDataset) -> ValidationReport:
    """Check shapes and identifiability heuristics of a dataset.

    Raises
    ------
    DimensionMismatch
        If array shapes disagree with each other, with ``ensemble_sizes``,
        or with the length of ``y``.

    Notes
    -----
    m < N is expected in practice and merely flags a singular sample
    covariance; the shrinkage weight matrix handles it.
    """
    n = ds.y.shape[0]
    if ds.x_tilde.shape[0] != n:
        raise DimensionMismatch(
            f"y has length {n} but x_tilde has {ds.x_tilde.shape[0]} rows"
        )
    p = ds.x_tilde.shape[1]
    if ds.ensemble_sizes.shape[0] != p:
        raise DimensionMismatch(
            f"x_tilde has {p} columns but ensemble_sizes has length {ds.ensemble_sizes.shape[0]}"
        )
    if ds.control_runs is not None and ds.control_runs.shape[0] != n:
        raise DimensionMismatch(
            f"control_runs has {ds.control_runs.shape[0]} rows, expected {n}"
        )
    cov = ds.sample_covariance()
    if cov.n_dim != n:
        raise DimensionMismatch(f"sample covariance is {cov.n_dim}x{cov.n_dim}, expected {n}x{n}")

    m = ds.m_runs
    errors: list[str] = []
    warnings: list[str] = []

    if p < 1:
        errors.append("need at least one forcing")
    if n < p + 1:
        errors.append(f"N={n} too small for p={p} forcings (need N >= p+1)")

    eigvals = np.linalg.eigvalsh(cov.s)
    tau_bar = cov.tau_bar
    rank_tol = max(n * np.finfo(float).eps * max(eigvals.max(initial=0.0), 0.0), 0.0)
    s_rank = int((eigvals > rank_tol).sum())

    if m < n:
        warnings.append(
            f"m={m} < N={n}: singular sample covariance (rank <= {m}); "
            "regularization is required"
        )
    col_norms = np.linalg.norm(ds.x_tilde, axis=0)
    for i, nrm in enumerate(col_norms):
        if nrm <= ZERO_FINGERPRINT_TOL:
            warnings.append(f"fingerprint column {i} has (near-)zero norm {nrm:.3e}")
    if tau_bar <= 0.0:
        warnings.append("tr(S) = 0: all control runs vanish; search bounds fall back to unit scale")

    return ValidationReport(
        n_dim=n,
        n_forcings=p,
        m_runs=m,
        n_over_m=n / m,
        tau_bar=tau_bar,
        s_rank=s_rank,
        errors=tuple(errors),
        warnings=tuple(warnings),
    )
