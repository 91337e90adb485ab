import numpy as np
import pytest

import finprint as fp


def random_cache(seed=0, n=8, p=2, m=12):
    """Spectral cache built from a seeded random problem instance."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, m))
    x = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    cov = fp.compute_sample_covariance(z)
    return fp.build_cache(cov, x, y)


def random_dataset(seed=0, n=12, p=2, m=20, ensemble_sizes=(3, 5)):
    rng = np.random.default_rng(seed)
    return fp.DetectionDataset(
        y=rng.standard_normal(n),
        x_tilde=rng.standard_normal((n, p)),
        ensemble_sizes=np.asarray(ensemble_sizes),
        control_runs=rng.standard_normal((n, m)),
    )


@pytest.fixture
def cache_factory():
    return random_cache


@pytest.fixture
def dataset_factory():
    return random_dataset
