"""Standardized Classical Tempered Stable (stdCTS) building blocks.

A stdCTS(alpha, lambda_plus, lambda_minus) variable H has zero mean, unit
variance and cumulant generating function

    Phi_H(u) = [(l+ - u)^a - l+^a + (l- + u)^a - l-^a] / (a (a-1) S)
               + (l+^(a-1) - l-^(a-1)) u / ((a-1) S),     S = l+^(a-2) + l-^(a-2).

Sampling uses the Levy-process view: if L is the Levy process whose unit-time
law is stdCTS(alpha, l+, l-), then L_v has the law of sqrt(v) X with
X ~ stdCTS(alpha, l+ sqrt(v), l- sqrt(v)).  L is the centred difference of two
spectrally one-sided tempered stable processes, each drawn by exponential
tilting of a totally skewed stable variate.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, UnsupportedParameterError

__all__ = [
    "CtsParams",
    "cts_cumulant",
    "cts_characteristic_exponent",
    "cts_cumulant_d1",
    "cts_cumulant_d2",
    "cts_higher_cumulants",
    "stable_variates",
    "cts_levy_values",
    "cts_sample",
]

# Per-piece bound on the probability mass cut off by the rejection threshold (alpha > 1).
TRUNCATION_EPS = 1e-12
# Upper bound on the number of rejection pieces held in memory at once.
_MAX_PIECES = 2_000_000
# proposal batch size; cache-sized batches keep the elementwise chain fast
_POOL_BATCH = 1 << 15


@dataclass(frozen=True)
class CtsParams:
    alpha: float
    lambda_plus: float
    lambda_minus: float

    def __post_init__(self):
        a, lp, lm = self.alpha, self.lambda_plus, self.lambda_minus
        if not all(math.isfinite(v) for v in (a, lp, lm)):
            raise ValueError(f"non-finite CTS parameters: {self}")
        if not 0.0 < a <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {a}")
        if lp <= 0.0 or lm <= 0.0:
            raise ValueError(f"tempering rates must be positive, got {lp}, {lm}")

    @property
    def norm(self) -> float:
        """lambda_plus^(alpha-2) + lambda_minus^(alpha-2)."""
        return self.lambda_plus ** (self.alpha - 2.0) + self.lambda_minus ** (self.alpha - 2.0)

    def rescaled(self, v: float) -> "CtsParams":
        """Tempering rates multiplied by sqrt(v)."""
        s = math.sqrt(v)
        return CtsParams(self.alpha, self.lambda_plus * s, self.lambda_minus * s)


def _require_closed_form(params: CtsParams) -> None:
    if params.alpha == 1.0:
        raise UnsupportedParameterError("alpha = 1 has no closed-form stdCTS exponent here")
    if params.alpha == 2.0:
        raise UnsupportedParameterError(
            "alpha = 2 is the Gaussian case; use the Gaussian reduction u**2 / 2"
        )


def _check_strip(params: CtsParams, u, closed: bool = True) -> None:
    re = np.real(u)
    lo, hi = -params.lambda_minus, params.lambda_plus
    bad = (re < lo) | (re > hi) if closed else (re <= lo) | (re >= hi)
    if np.any(bad):
        raise DomainError(
            f"Re(u) must lie in [{lo}, {hi}]" + ("" if closed else " (open)")
        )


def _cumulant_raw(params: CtsParams, u):
    a, lp, lm = params.alpha, params.lambda_plus, params.lambda_minus
    s = params.norm
    u = np.asarray(u)
    cplx = np.iscomplexobj(u)
    w_plus = (lp - u).astype(complex) if cplx else lp - u
    w_minus = (lm + u).astype(complex) if cplx else lm + u
    nonlin = (w_plus**a - lp**a + w_minus**a - lm**a) / (a * (a - 1.0) * s)
    return nonlin + (lp ** (a - 1.0) - lm ** (a - 1.0)) * u / ((a - 1.0) * s)


def cts_cumulant(params: CtsParams, u):
    """Cumulant generating function log E[exp(u H)] for Re(u) in [-lambda_minus, lambda_plus].

    Accepts scalars or arrays, real or complex. Principal branch powers.
    """
    _require_closed_form(params)
    _check_strip(params, u)
    out = _cumulant_raw(params, u)
    return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out


def cts_characteristic_exponent(params: CtsParams, u):
    """log E[exp(i u H)] for real u; equals cts_cumulant at i*u."""
    _require_closed_form(params)
    u = np.asarray(u, dtype=float)
    out = _cumulant_raw(params, 1j * u)
    return out[()] if out.ndim == 0 else out


def _d1_raw(params: CtsParams, u):
    a, lp, lm = params.alpha, params.lambda_plus, params.lambda_minus
    u = np.asarray(u)
    wp = lp - u
    wm = lm + u
    if np.iscomplexobj(u):
        wp, wm = wp.astype(complex), wm.astype(complex)
    num = wp ** (a - 1.0) - lp ** (a - 1.0) - wm ** (a - 1.0) + lm ** (a - 1.0)
    return num / ((1.0 - a) * params.norm)


def _d2_raw(params: CtsParams, u):
    a, lp, lm = params.alpha, params.lambda_plus, params.lambda_minus
    u = np.asarray(u)
    wp = lp - u
    wm = lm + u
    if np.iscomplexobj(u):
        wp, wm = wp.astype(complex), wm.astype(complex)
    return (wp ** (a - 2.0) + wm ** (a - 2.0)) / params.norm


def _squeeze(out):
    return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out


def cts_cumulant_d1(params: CtsParams, u):
    """First derivative of the stdCTS cumulant function.

    Singular at the strip endpoints when alpha < 1.
    """
    _require_closed_form(params)
    _check_strip(params, u, closed=params.alpha > 1.0)
    return _squeeze(_d1_raw(params, u))


def cts_cumulant_d2(params: CtsParams, u):
    """Second derivative of the stdCTS cumulant function; singular at both endpoints."""
    _require_closed_form(params)
    _check_strip(params, u, closed=False)
    return _squeeze(_d2_raw(params, u))


def cts_higher_cumulants(params: CtsParams) -> tuple[float, float]:
    """Third and fourth cumulants of stdCTS (both zero in the Gaussian case)."""
    a, lp, lm = params.alpha, params.lambda_plus, params.lambda_minus
    s = params.norm
    k3 = (2.0 - a) * (lp ** (a - 3.0) - lm ** (a - 3.0)) / s
    k4 = (3.0 - a) * (2.0 - a) * (lp ** (a - 4.0) + lm ** (a - 4.0)) / s
    return k3, k4


def char_exponent_derivatives(params: CtsParams, u):
    """(L, L', L'') of the stdCTS characteristic exponent at real u.

    alpha = 2 is handled through the Gaussian reduction L(u) = -u^2 / 2.
    """
    u = np.asarray(u, dtype=float)
    if params.alpha == 2.0:
        return -0.5 * u**2 + 0j, -u + 0j, -np.ones_like(u) + 0j
    _require_closed_form(params)
    iu = 1j * u
    return _cumulant_raw(params, iu), 1j * _d1_raw(params, iu), -_d2_raw(params, iu)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def stable_variates(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Totally right-skewed strictly stable variates with unit scale.

    Chambers-Mallows-Stuck method; the characteristic function is
    exp(-|u|^alpha (1 - i sign(u) tan(pi alpha / 2))), alpha != 1. For
    alpha < 1 the support is (0, inf).
    """
    if alpha == 1.0 or not 0.0 < alpha < 2.0:
        raise UnsupportedParameterError(f"stable_variates needs alpha in (0,1)U(1,2), got {alpha}")
    u = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    w = rng.standard_exponential(size)
    shift = 0.5 * math.pi * alpha - (math.pi if alpha > 1.0 else 0.0)
    scale = abs(math.cos(0.5 * math.pi * alpha)) ** (-1.0 / alpha)
    # log-domain evaluation with in-place updates to limit temporaries
    au = alpha * u
    au += shift
    out = np.sin(au)
    au -= u
    np.cos(au, out=au)
    np.log(au, out=au)
    np.log(w, out=w)
    au -= w
    au *= (1.0 - alpha) / alpha
    np.cos(u, out=u)
    np.log(u, out=u)
    u *= 1.0 / alpha
    au -= u
    np.exp(au, out=au)
    out *= au
    out *= scale
    return out


def _chernoff_log_bound(c: float, s: float, alpha: float) -> float:
    # log P(T <= -c/lambda) bound for a tilted piece with s = tau*kappa*lambda^alpha
    v = (c / (s * alpha)) ** (1.0 / (alpha - 1.0)) - 1.0
    if v <= 0.0:
        return 0.0
    return s * ((1.0 + v) ** alpha - 1.0) - v * c


def _threshold(s: float, alpha: float, log_eps: float) -> float:
    lo = s * alpha * (1.0 + 1e-9)
    hi = lo + 1.0
    while _chernoff_log_bound(hi, s, alpha) > log_eps:
        hi *= 2.0
    return brentq(lambda c: _chernoff_log_bound(c, s, alpha) - log_eps, lo, hi, xtol=1e-12)


@functools.lru_cache(maxsize=64)
def _rejection_plan(alpha: float) -> tuple[float, float]:
    """(piece size s, scaled threshold c*lambda) minimising proposals per unit s."""
    if alpha < 1.0:
        return 1.0, 0.0
    log_eps = math.log(TRUNCATION_EPS)

    def cost(log_s):
        s = math.exp(log_s)
        return _threshold(s, alpha, log_eps) - s - log_s

    res = minimize_scalar(cost, bounds=(math.log(1e-4), math.log(50.0)), method="bounded")
    s = math.exp(res.x)
    return s, _threshold(s, alpha, log_eps)


def _accepted_pool(alpha, lam_sigma, c_scaled, log_accept, count, rng):
    # `count` iid tilted pieces sharing one scale, returned as lam * x
    out = np.empty(count)
    filled = 0
    inv_accept = math.exp(-log_accept)
    while filled < count:
        need = count - filled
        m = min(int(need * inv_accept * 1.1) + 64, _POOL_BATCH)
        y = stable_variates(alpha, m, rng)
        y *= lam_sigma
        e = rng.standard_exponential(m)
        e -= c_scaled
        y = y[e >= y]
        take = min(y.size, need)
        out[filled:filled + take] = y[:take]
        filled += take
    return out


def _one_sided(alpha, lam, kappa, times, rng):
    # Centred one-sided tempered stable process (Levy density C e^{-lam x} x^{-1-alpha},
    # kappa = C Gamma(-alpha)) evaluated at each entry of `times`. Each time is split
    # into full pieces of a common size, drawn from one stream, plus one remainder piece.
    rate = abs(kappa) * lam**alpha
    s_max, c_scaled = _rejection_plan(alpha)
    tau = s_max / rate
    scale_coef = -kappa * math.cos(0.5 * math.pi * alpha)
    full = np.floor(times / tau).astype(np.int64)
    rest = np.maximum(times - full * tau, 0.0)
    total = np.zeros(times.size)

    n_full = int(full.sum())
    if n_full:
        # acceptance probability of a piece is exp(kappa tau lam^alpha - c_scaled)
        log_accept = math.copysign(s_max, kappa) - c_scaled
        pool = _accepted_pool(alpha, lam * (tau * scale_coef) ** (1.0 / alpha), c_scaled,
                              log_accept, n_full, rng)
        owners = np.flatnonzero(full)
        starts = np.concatenate(([0], np.cumsum(full[owners])[:-1]))
        total[owners] = np.add.reduceat(pool, starts)

    # remainder pieces have individual scales; work with lam * x so the
    # acceptance test reads E >= lam * x + lam * threshold
    pending = np.flatnonzero(rest > 0.0)
    lam_sigma = lam * (rest[pending] * scale_coef) ** (1.0 / alpha)
    while pending.size:
        y = stable_variates(alpha, pending.size, rng)
        y *= lam_sigma
        e = rng.standard_exponential(pending.size)
        e -= c_scaled
        rejected = e < y
        hit = np.flatnonzero(~rejected)
        total[pending[hit]] += y[hit]
        pending = pending[rejected]
        lam_sigma = lam_sigma[rejected]
    return total / lam + times * kappa * alpha * lam ** (alpha - 1.0)


def cts_levy_values(params: CtsParams, times, rng: np.random.Generator) -> np.ndarray:
    """Draw L_t for each t in `times`, L the stdCTS Levy process (independent draws).

    L_t has cumulant t * Phi_H(u); equivalently L_t = sqrt(t) X with
    X ~ stdCTS(alpha, lambda_plus sqrt(t), lambda_minus sqrt(t)).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0.0):
        raise ValueError("times must be nonnegative")
    a = params.alpha
    if a == 2.0:
        return np.sqrt(times) * rng.standard_normal(times.size)
    _require_closed_form(params)
    kappa = 1.0 / (a * (a - 1.0) * params.norm)
    rate = abs(kappa) * (params.lambda_plus**a + params.lambda_minus**a)
    s_max = _rejection_plan(a)[0]
    out = np.empty(times.size)
    # chunk so the piece arrays stay bounded
    per_item = 2.0 + float(np.mean(times)) * rate / s_max if times.size else 1.0
    step = max(1, int(_MAX_PIECES / per_item))
    for start in range(0, times.size, step):
        t = times[start:start + step]
        up = _one_sided(a, params.lambda_plus, kappa, t, rng)
        down = _one_sided(a, params.lambda_minus, kappa, t, rng)
        out[start:start + step] = up - down
    return out


def _fft_inverse_cdf_sample(params: CtsParams, count: int, rng, nodes: int = 2**15):
    lo_rate = min(params.lambda_plus, params.lambda_minus)
    half = min(max(12.0, 40.0 / lo_rate), 400.0)
    dx = 2.0 * half / nodes
    x = -half + dx * np.arange(nodes)
    du = 2.0 * math.pi / (nodes * dx)
    u = du * (np.arange(nodes) - nodes // 2)
    phi = np.exp(char_exponent_derivatives(params, u)[0])
    # density on x-grid: (1/2pi) sum_k exp(-i u_k x_j) phi(u_k) du
    phase = np.exp(-1j * u[0] * x)
    dens = du / (2.0 * math.pi) * phase * np.fft.fft(phi * np.exp(1j * u * half))
    dens = np.clip(dens.real, 0.0, None)
    cdf = np.cumsum(dens) * dx
    cdf /= cdf[-1]
    cdf, keep = np.unique(cdf, return_index=True)
    return np.interp(rng.uniform(size=count), cdf, x[keep] + 0.5 * dx)


def cts_sample(
    params: CtsParams,
    scale_v,
    count: int,
    rng: np.random.Generator,
    method: str = "rejection",
) -> np.ndarray:
    """Draw `count` variates from stdCTS(alpha, lambda_plus sqrt(v), lambda_minus sqrt(v)).

    `scale_v` is a positive scalar or an array of length `count` (one mixing
    value per draw). method="fft" switches to inverse-CDF sampling from an
    FFT-tabulated distribution function and needs a scalar `scale_v`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    v = np.asarray(scale_v, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("scale_v must be positive")
    if params.alpha == 2.0:
        return rng.standard_normal(count)
    _require_closed_form(params)
    if method == "fft":
        if v.ndim != 0:
            raise ValueError("fft sampling needs a scalar scale_v")
        return _fft_inverse_cdf_sample(params.rescaled(float(v)), count, rng)
    if method != "rejection":
        raise ValueError(f"unknown sampling method {method!r}")
    times = np.broadcast_to(v, (count,)).astype(float)
    return cts_levy_values(params, times, rng) / np.sqrt(times)
