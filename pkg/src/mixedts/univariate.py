"""Univariate MixedTS with Gamma(a, b) mixing: Y = mu + beta V + sqrt(V) X."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cts import (
    CtsParams,
    char_exponent_derivatives,
    cts_cumulant,
    cts_higher_cumulants,
    cts_levy_values,
)
from .errors import DomainError, NumericalError, UnsupportedParameterError

__all__ = [
    "UnivariateParams",
    "StripCase",
    "StripResult",
    "TailExponents",
    "Moments",
    "cumulant",
    "characteristic_function",
    "log_characteristic_function",
    "moments",
    "fundamental_strip",
    "tail_exponents",
    "sample",
    "levy_increment_params",
    "gamma_central_moments",
]

BISECTION_MAX_ITER = 200
BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class UnivariateParams:
    mu: float
    beta: float
    cts: CtsParams
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.beta)):
            raise ValueError("mu and beta must be finite")
        if not (self.a > 0.0 and self.b > 0.0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"Gamma shape and rate must be positive, got a={self.a}, b={self.b}")

    @classmethod
    def from_values(cls, mu, beta, alpha, lambda_plus, lambda_minus, a, b) -> "UnivariateParams":
        return cls(float(mu), float(beta), CtsParams(float(alpha), float(lambda_plus), float(lambda_minus)),
                   float(a), float(b))

    @classmethod
    def from_dict(cls, d: dict) -> "UnivariateParams":
        return cls.from_values(d["mu"], d["beta"], d["alpha"], d["lambda_plus"], d["lambda_minus"],
                               d["a"], d["b"])

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "beta": self.beta,
            "alpha": self.cts.alpha,
            "lambda_plus": self.cts.lambda_plus,
            "lambda_minus": self.cts.lambda_minus,
            "a": self.a,
            "b": self.b,
        }

    @property
    def alpha(self) -> float:
        return self.cts.alpha


class StripCase(str, enum.Enum):
    Case1 = "Case1"
    Case2 = "Case2"
    Case3 = "Case3"
    Case4 = "Case4"


@dataclass(frozen=True)
class StripResult:
    lower: float
    upper: float
    case_tag: StripCase
    lower_is_solution: bool
    upper_is_solution: bool

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "case": self.case_tag.value,
            "lower_is_solution": self.lower_is_solution,
            "upper_is_solution": self.upper_is_solution,
        }


@dataclass(frozen=True)
class TailExponents:
    q_star: float
    r_star: float


class Moments(NamedTuple):
    mean: float
    variance: float
    central_m3: float
    central_m4: float


def _phi_h(cts: CtsParams, u):
    # alpha = 2 falls back to the Gaussian cumulant, which the closed form also reproduces
    if cts.alpha == 2.0:
        return 0.5 * np.asarray(u) ** 2
    return cts_cumulant(cts, u)


def gamma_log_mgf(shape: float, rate: float, s):
    """log E[exp(s V)] for V ~ Gamma(shape, rate), Re(s) < rate, principal branch."""
    return -shape * np.log(1.0 - np.asarray(s) / rate)


def cumulant(params: UnivariateParams, u):
    """Cumulant generating function log E[exp(u Y)].

    Raises DomainError when Re(u) leaves [-lambda_minus, lambda_plus] or the
    Gamma argument beta*u + Phi_H(u) reaches b.
    """
    u = np.asarray(u)
    inner = params.beta * u + _phi_h(params.cts, u)
    if np.any(np.real(inner) >= params.b):
        raise DomainError("beta*u + Phi_H(u) reaches the Gamma rate b (moment explosion)")
    inner = np.asarray(inner, dtype=complex if np.iscomplexobj(inner) else float)
    out = params.mu * u + gamma_log_mgf(params.a, params.b, inner)
    return out[()] if out.ndim == 0 else out


def log_characteristic_function(params: UnivariateParams, t):
    """log phi_Y(t) = i t mu + Phi_Gamma(i t beta + L_stdCTS(t))."""
    t = np.asarray(t, dtype=float)
    lexp = char_exponent_derivatives(params.cts, t)[0]
    out = 1j * t * params.mu + gamma_log_mgf(params.a, params.b, 1j * t * params.beta + lexp)
    return out[()] if out.ndim == 0 else out


def characteristic_function(params: UnivariateParams, t):
    """E[exp(i t Y)] for real t (scalar or array)."""
    return np.exp(log_characteristic_function(params, t))


def gamma_central_moments(a: float, b: float) -> dict:
    """Moments of Gamma(a, b) used by the mixture formulas."""
    return {
        "mean": a / b,
        "var": a / b**2,
        "m3": 2.0 * a / b**3,
        "m4": (3.0 * a**2 + 6.0 * a) / b**4,
        # E[(V - EV)^2 V] = m3 + EV * Var
        "dev2_v": a * (a + 2.0) / b**3,
        "second_raw": a * (a + 1.0) / b**2,
    }


def mixture_moments(beta: float, cts: CtsParams, g: dict) -> Moments:
    """Central moments of mu + beta V + sqrt(V) X given the mixing moments `g`."""
    k3, k4 = cts_higher_cumulants(cts)
    mean_shift = beta * g["mean"]
    var = beta**2 * g["var"] + g["mean"]
    m3 = beta**3 * g["m3"] + 3.0 * beta * g["var"] + k3 * g["mean"]
    # E[V^2 X^4 | V] = 3 V^2 + k4 V: the 3 E[V^2] term completes the fourth moment
    m4 = (
        beta**4 * g["m4"]
        + 6.0 * beta**2 * g["dev2_v"]
        + 4.0 * beta * k3 * g["var"]
        + 3.0 * g["second_raw"]
        + k4 * g["mean"]
    )
    return Moments(mean_shift, var, m3, m4)


def moments(params: UnivariateParams) -> Moments:
    """Mean, variance and third/fourth central moments."""
    g = gamma_central_moments(params.a, params.b)
    m = mixture_moments(params.beta, params.cts, g)
    return Moments(params.mu + m.mean, m.variance, m.central_m3, m.central_m4)


def _bisect(f, lo: float, hi: float) -> tuple[float, float]:
    """Bracket [lo, hi] with f(lo) <= 0 <= f(hi), shrunk to floating-point resolution.

    Stops after BISECTION_MAX_ITER halvings; the bracket is always narrower
    than BISECTION_TOL by then for the unit-scale intervals used here.
    """
    if f(lo) > 0.0 or f(hi) < 0.0:
        raise NumericalError(f"bisection bracket [{lo}, {hi}] does not change sign")
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    if hi - lo > BISECTION_TOL:
        raise NumericalError("bisection did not reach the requested tolerance")
    return lo, hi


def fundamental_strip(params: UnivariateParams) -> StripResult:
    """Real endpoints of the strip where E[exp(uY)] is finite, classified into four cases.

    With G(u) = beta u + Phi_H(u) - b (convex, G(0) = -b < 0), an endpoint of
    [-lambda_minus, lambda_plus] where G >= 0 is replaced by the root of G on
    the corresponding side of zero.
    """
    cts = params.cts
    if cts.alpha in (1.0, 2.0):
        raise UnsupportedParameterError("fundamental strip needs alpha in (0,1)U(1,2)")
    lp, lm, beta, b = cts.lambda_plus, cts.lambda_minus, params.beta, params.b
    a = cts.alpha
    # scalar closed form of Phi_H on the real strip (called many times by the estimator)
    scale = 1.0 / (a * (a - 1.0) * cts.norm)
    const = lp**a + lm**a
    drift = (lp ** (a - 1.0) - lm ** (a - 1.0)) / ((a - 1.0) * cts.norm)

    def g(u):
        phi = scale * (max(lp - u, 0.0) ** a + max(lm + u, 0.0) ** a - const) + drift * u
        return beta * u + phi - b

    left_hit = g(-lm) >= 0.0
    right_hit = g(lp) >= 0.0
    # each root is reported from the side of the bracket where G <= 0
    if right_hit:
        upper = _bisect(g, 0.0, lp)[0]
    else:
        upper = lp
    if left_hit:
        # G decreases on [-lm, 0]: bisect on -G
        lower = _bisect(lambda u: -g(u), -lm, 0.0)[1]
    else:
        lower = -lm
    case = {
        (False, False): StripCase.Case1,
        (False, True): StripCase.Case2,
        (True, False): StripCase.Case3,
        (True, True): StripCase.Case4,
    }[(left_hit, right_hit)]
    return StripResult(lower, upper, case, left_hit, right_hit)


def tail_exponents(params: UnivariateParams) -> TailExponents:
    """Exponential decay rates (q*, r*) of the left and right tails."""
    strip = fundamental_strip(params)
    return TailExponents(-strip.lower, strip.upper)


def sample(params: UnivariateParams, count: int, rng: np.random.Generator,
           return_mixing: bool = False):
    """Draw `count` MixedTS variates: V ~ Gamma(a, b), Y = mu + beta V + sqrt(V) X."""
    if count < 1:
        raise ValueError("count must be >= 1")
    v = rng.gamma(params.a, 1.0 / params.b, size=count)
    y = params.mu + params.beta * v + cts_levy_values(params.cts, v, rng)
    return (y, v) if return_mixing else y


def levy_increment_params(params: UnivariateParams, t: float) -> UnivariateParams:
    """Law of Y_t for the MixedTS Levy process with Y_1 ~ params: mu -> mu t, a -> a t."""
    if not t > 0.0:
        raise ValueError("t must be positive")
    return UnivariateParams(params.mu * t, params.beta, params.cts, params.a * t, params.b)
