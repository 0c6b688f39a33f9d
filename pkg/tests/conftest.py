import numpy as np
import pytest

from mixedts.cts import CtsParams
from mixedts.multivariate import MarginalParams, MultivariateParams
from mixedts.univariate import UnivariateParams

SKEWED_REF = dict(mu=0.0, beta=0.0, alpha=1.25, lambda_plus=1.2, lambda_minus=1.9, a=1.0, b=1.0)
REF_Q_STAR = 1.4105
REF_R_STAR = 1.2


def skewed_params() -> UnivariateParams:
    return UnivariateParams.from_dict(SKEWED_REF)


def bivariate_params() -> MultivariateParams:
    m1 = MarginalParams(0.0, 0.0, CtsParams(1.2, 1.0, 1.0), 1.5, 1.0)
    m2 = MarginalParams(0.0, 0.0, CtsParams(0.8, 1.0, 1.0), 1.5, 1.0)
    return MultivariateParams((m1, m2), 0.5, 1.0)


def batch_moments(x, batches=100):
    """Sample (mean, var, m3, m4) and batch-means standard errors."""
    x = np.asarray(x, dtype=float)
    x = x[: x.size - x.size % batches].reshape(batches, -1)

    def stats(z):
        m = z.mean(axis=-1, keepdims=True)
        c = z - m
        return np.stack([m[..., 0], (c**2).mean(-1), (c**3).mean(-1), (c**4).mean(-1)], axis=-1)

    full = stats(x.reshape(-1))
    per = stats(x)
    se = per.std(axis=0, ddof=1) / np.sqrt(batches)
    return full, se


@pytest.fixture
def skewed():
    return skewed_params()


@pytest.fixture
def bivariate():
    return bivariate_params()


@pytest.fixture(scope="session")
def skewed_million():
    from mixedts.univariate import sample

    return sample(skewed_params(), 1_000_000, np.random.default_rng(20240601))
