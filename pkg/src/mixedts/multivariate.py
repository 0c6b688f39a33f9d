"""Multivariate MixedTS with common-factor Gamma mixing.

Component i is Y_i = mu_i + beta_i V_i + sqrt(V_i) X_i with
V_i = G_i + a_i Z, G_i ~ Gamma(l_i, m_i), Z ~ Gamma(n, k) and a_i = k / m_i,
so that V_i ~ Gamma(l_i + n, m_i). Conditionally on (G, Z) the X_i are
independent stdCTS(alpha_i, lambda_{+,i} sqrt(V_i), lambda_{-,i} sqrt(V_i)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cts import CtsParams, char_exponent_derivatives, cts_higher_cumulants, cts_levy_values
from .univariate import (
    UnivariateParams,
    gamma_central_moments,
    gamma_log_mgf,
    mixture_moments,
)

__all__ = [
    "MarginalParams",
    "MultivariateParams",
    "MomentSummary",
    "SkewRegime",
    "CovarianceBounds",
    "joint_characteristic_function",
    "log_joint_characteristic_function",
    "moments",
    "skew_boundary_beta",
    "skew_cubic",
    "covariance_bounds",
    "attainable_covariance_range",
    "sample",
]

SKEW_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class MarginalParams:
    mu: float
    beta: float
    cts: CtsParams
    l: float  # noqa: E741 - shape of the idiosyncratic Gamma factor
    m: float

    def __post_init__(self):
        if not (self.l > 0.0 and self.m > 0.0):
            raise ValueError(f"l and m must be positive, got l={self.l}, m={self.m}")
        if not (math.isfinite(self.mu) and math.isfinite(self.beta)):
            raise ValueError("mu and beta must be finite")

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalParams":
        return cls(float(d["mu"]), float(d["beta"]),
                   CtsParams(float(d["alpha"]), float(d["lambda_plus"]), float(d["lambda_minus"])),
                   float(d["l"]), float(d["m"]))

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "beta": self.beta,
            "alpha": self.cts.alpha,
            "lambda_plus": self.cts.lambda_plus,
            "lambda_minus": self.cts.lambda_minus,
            "l": self.l,
            "m": self.m,
        }


@dataclass(frozen=True)
class MultivariateParams:
    marginals: tuple[MarginalParams, ...]
    n: float
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) < 2:
            raise ValueError("a multivariate MixedTS needs N >= 2 components")
        if not (self.n > 0.0 and self.k > 0.0):
            raise ValueError(f"n and k must be positive, got n={self.n}, k={self.k}")

    @property
    def dim(self) -> int:
        return len(self.marginals)

    @property
    def loadings(self) -> np.ndarray:
        """a_i = k / m_i, so that a_i Z ~ Gamma(n, m_i)."""
        return np.array([self.k / mg.m for mg in self.marginals])

    def marginal(self, i: int) -> UnivariateParams:
        """Univariate law of component i: mixing Gamma(l_i + n, m_i)."""
        mg = self.marginals[i]
        return UnivariateParams(mg.mu, mg.beta, mg.cts, mg.l + self.n, mg.m)

    @classmethod
    def from_dict(cls, d: dict) -> "MultivariateParams":
        return cls(tuple(MarginalParams.from_dict(x) for x in d["marginals"]),
                   float(d["n"]), float(d.get("k", 1.0)))

    def to_dict(self) -> dict:
        return {"marginals": [mg.to_dict() for mg in self.marginals], "n": self.n, "k": self.k}


@dataclass(frozen=True)
class MomentSummary:
    means: np.ndarray
    covariance: np.ndarray
    central_m3: np.ndarray
    central_m4: np.ndarray

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "central_m3": self.central_m3.tolist(),
            "central_m4": self.central_m4.tolist(),
        }


class SkewRegime(str, enum.Enum):
    BothNonneg = "BothNonneg"
    BothNonpos = "BothNonpos"
    Mixed = "Mixed"


@dataclass(frozen=True)
class CovarianceBounds:
    lower: float
    upper: float
    beta_star_i: float
    beta_star_j: float
    skew_regime: SkewRegime


def log_joint_characteristic_function(params: MultivariateParams, t):
    """log E[exp(i <t, Y>)]; `t` has shape (N,) or (P, N)."""
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    t2 = np.atleast_2d(t)
    if t2.shape[1] != params.dim:
        raise ValueError(f"t must have {params.dim} columns, got shape {t.shape}")
    loadings = params.loadings
    total = np.zeros(t2.shape[0], dtype=complex)
    factor_arg = np.zeros(t2.shape[0], dtype=complex)
    for h, mg in enumerate(params.marginals):
        th = t2[:, h]
        w = 1j * th * mg.beta + char_exponent_derivatives(mg.cts, th)[0]
        total += 1j * th * mg.mu + gamma_log_mgf(mg.l, mg.m, w)
        factor_arg += loadings[h] * w
    total += gamma_log_mgf(params.n, params.k, factor_arg)
    return total[0] if single else total


def joint_characteristic_function(params: MultivariateParams, t):
    return np.exp(log_joint_characteristic_function(params, t))


def moments(params: MultivariateParams) -> MomentSummary:
    """Means, covariance matrix and marginal third/fourth central moments."""
    dim = params.dim
    means = np.empty(dim)
    m3 = np.empty(dim)
    m4 = np.empty(dim)
    cov = np.empty((dim, dim))
    for i, mg in enumerate(params.marginals):
        shape = mg.l + params.n
        mm = mixture_moments(mg.beta, mg.cts, gamma_central_moments(shape, mg.m))
        means[i] = mg.mu + mm.mean
        cov[i, i] = mm.variance
        m3[i] = mm.central_m3
        m4[i] = mm.central_m4
    for i in range(dim):
        for j in range(i + 1, dim):
            bi, bj = params.marginals[i], params.marginals[j]
            cov[i, j] = cov[j, i] = bi.beta * bj.beta * params.n / (bi.m * bj.m)
    return MomentSummary(means, cov, m3, m4)


def skew_cubic(mg: MarginalParams, beta):
    """g(beta) = k3 + 3 beta / m + 2 beta^3 / m^2; the sign of g is the sign of the marginal skewness."""
    k3 = cts_higher_cumulants(mg.cts)[0]
    beta = np.asarray(beta, dtype=float)
    return k3 + 3.0 * beta / mg.m + 2.0 * beta**3 / mg.m**2


def skew_boundary_beta(mg: MarginalParams) -> float:
    """Unique real root beta* of the strictly increasing cubic skew_cubic."""
    k3 = cts_higher_cumulants(mg.cts)[0]
    m = mg.m
    # beta^3 + p beta + q = 0 with p > 0: one real root (Cardano)
    p = 1.5 * m
    q = 0.5 * k3 * m**2
    disc = math.sqrt(0.25 * q * q + p**3 / 27.0)
    root = float(np.cbrt(-0.5 * q + disc) + np.cbrt(-0.5 * q - disc))
    scale = abs(k3) + 3.0 * abs(root) / m + 2.0 * abs(root) ** 3 / m**2
    if abs(float(skew_cubic(mg, root))) <= 1e-12 * max(scale, 1.0):
        return root
    # bracket and bisect
    bound = 1.0
    while skew_cubic(mg, -bound) > 0.0 or skew_cubic(mg, bound) < 0.0:
        bound *= 2.0
    lo, hi = -bound, bound
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if skew_cubic(mg, mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _skew_signs(params: MultivariateParams, i: int, j: int) -> tuple[bool, bool]:
    m3 = moments(params).central_m3
    return bool(m3[i] >= -SKEW_ZERO_TOL), bool(m3[j] >= -SKEW_ZERO_TOL)


def covariance_bounds(params: MultivariateParams, i: int, j: int) -> CovarianceBounds:
    """Corner bound beta*_i beta*_j n / (m_i m_j) placed by skew regime.

    BothNonneg gives (corner, +inf), BothNonpos (-inf, corner), Mixed (-inf, +inf).
    Skewness within SKEW_ZERO_TOL of zero is treated as nonnegative.

    The corner value is the true extremum of sigma_ij over the betas keeping
    the skew signs only when both beta* are >= 0; otherwise see
    attainable_covariance_range.
    """
    if i == j:
        raise ValueError("covariance bounds need two distinct components")
    mi, mj = params.marginals[i], params.marginals[j]
    bsi, bsj = skew_boundary_beta(mi), skew_boundary_beta(mj)
    nonneg_i, nonneg_j = _skew_signs(params, i, j)
    corner = bsi * bsj * params.n / (mi.m * mj.m)
    if nonneg_i and nonneg_j:
        return CovarianceBounds(corner, math.inf, bsi, bsj, SkewRegime.BothNonneg)
    if not nonneg_i and not nonneg_j:
        return CovarianceBounds(-math.inf, corner, bsi, bsj, SkewRegime.BothNonpos)
    return CovarianceBounds(-math.inf, math.inf, bsi, bsj, SkewRegime.Mixed)


def _ext_mul(x: float, y: float) -> float:
    # limit of a product along a rectangle edge; a zero factor pins it at zero
    return 0.0 if x == 0.0 or y == 0.0 else x * y


def attainable_covariance_range(params: MultivariateParams, i: int, j: int) -> tuple[float, float]:
    """Exact inf and sup of sigma_ij as beta_i, beta_j vary with both skew signs held.

    Nonnegative skew means beta >= beta*, nonpositive beta <= beta*; sigma_ij
    is bilinear in the betas so the extremes sit at corners of that rectangle.
    """
    if i == j:
        raise ValueError("covariance bounds need two distinct components")
    mi, mj = params.marginals[i], params.marginals[j]
    nonneg_i, nonneg_j = _skew_signs(params, i, j)
    bsi, bsj = skew_boundary_beta(mi), skew_boundary_beta(mj)
    ends_i = (bsi, math.inf) if nonneg_i else (-math.inf, bsi)
    ends_j = (bsj, math.inf) if nonneg_j else (-math.inf, bsj)
    scale = params.n / (mi.m * mj.m)
    corners = [_ext_mul(x, y) * scale for x in ends_i for y in ends_j]
    return min(corners), max(corners)


def sample(params: MultivariateParams, count: int, rng: np.random.Generator,
           return_mixing: bool = False):
    """Draw a (count, N) matrix of i.i.d. rows.

    Steps per row: G_i ~ Gamma(l_i, m_i), Z ~ Gamma(n, k); V_i = G_i + a_i Z;
    X_i | V_i ~ stdCTS; Y_i = mu_i + beta_i V_i + sqrt(V_i) X_i.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    dim = params.dim
    g = np.column_stack([rng.gamma(mg.l, 1.0 / mg.m, size=count) for mg in params.marginals])
    z = rng.gamma(params.n, 1.0 / params.k, size=count)
    v = g + z[:, None] * params.loadings[None, :]
    y = np.empty((count, dim))
    for i, mg in enumerate(params.marginals):
        y[:, i] = mg.mu + mg.beta * v[:, i] + cts_levy_values(mg.cts, v[:, i], rng)
    return (y, v) if return_mixing else y


def marginal_params_list(params: MultivariateParams) -> Sequence[UnivariateParams]:
    return [params.marginal(i) for i in range(params.dim)]
