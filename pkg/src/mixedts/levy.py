"""Levy density of a univariate MixedTS recovered by Fourier inversion.

With Psi(u) = log phi_Y(u) = i E[Y] u + int (e^{iux} - 1 - iux) g(x) dx, the
second derivative is Psi''(u) = -int e^{iux} x^2 g(x) dx, so

    x^2 g(x) = -(1 / 2 pi) int e^{-iux} Psi''(u) du,

evaluated on [-T, T] with an FFT of M nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cts import char_exponent_derivatives
from .univariate import UnivariateParams, log_characteristic_function, moments

__all__ = [
    "DEFAULT_TRUNCATION",
    "DEFAULT_NODES",
    "LevyDensityCurve",
    "cumulant_second_derivative",
    "levy_density",
    "levy_khintchine_exponent",
    "small_jump_mass",
]

DEFAULT_TRUNCATION = 200.0
DEFAULT_NODES = 2**14
ORIGIN_WINDOW_CELLS = 4
TRUNCATION_WARN_RATIO = 1e-6


@dataclass(frozen=True)
class LevyDensityCurve:
    abscissae: np.ndarray
    values: np.ndarray
    truncation: float
    nodes: int
    truncation_warning: bool
    max_negative_ringing: float
    # x^2 g(x) on the full FFT grid, origin included; used for re-integration
    grid: np.ndarray = field(repr=False)
    weighted: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])


def cumulant_second_derivative(params: UnivariateParams, u):
    """Second derivative of log phi_Y at real u, by the chain rule.

    log phi_Y(u) = i mu u + Psi_G(w(u)) with w(u) = i beta u + L(u) and
    Psi_G(s) = -a log(1 - s / b).
    """
    u = np.asarray(u, dtype=float)
    lexp, d1, d2 = char_exponent_derivatives(params.cts, u)
    w = 1j * params.beta * u + lexp
    wp = 1j * params.beta + d1
    gap = params.b - w
    out = params.a / gap**2 * wp**2 + params.a / gap * d2
    return out[()] if out.ndim == 0 else out


def levy_density(
    params: UnivariateParams,
    truncation: float = DEFAULT_TRUNCATION,
    nodes: int = DEFAULT_NODES,
) -> LevyDensityCurve:
    """Levy density g on the FFT-induced grid x_j = (j - M/2) pi / T, j >= 1, origin window removed.

    The window |x| <= 4 dx is dropped because dividing by x^2 amplifies the
    inversion error there. Negative ringing is clipped to zero and its size
    reported; a warning flag is set when |Psi''(+-T)| exceeds 1e-6 |Psi''(0)|.
    """
    if not (truncation > 0.0 and math.isfinite(truncation)):
        raise ValueError("truncation must be a positive finite number")
    nodes = int(nodes)
    if nodes < 2**10 or nodes & (nodes - 1):
        raise ValueError(f"nodes must be a power of two >= 1024, got {nodes}")
    du = 2.0 * truncation / nodes
    dx = math.pi / truncation
    k = np.arange(nodes)
    u = (k - nodes // 2) * du
    x = (k - nodes // 2) * dx
    h = cumulant_second_derivative(params, u)
    # exp(-i u_k x_j) = exp(-2 pi i k j / M) (-1)^(k + j) since M/2 is even
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    weighted = -(du / (2.0 * math.pi)) * sign * np.fft.fft(sign * h)
    weighted = weighted.real

    edge = max(abs(cumulant_second_derivative(params, truncation)),
               abs(cumulant_second_derivative(params, -truncation)))
    warn = bool(edge > TRUNCATION_WARN_RATIO * abs(cumulant_second_derivative(params, 0.0)))

    # the first node has no mirror image on the grid; drop it with the origin window
    keep = np.abs(x) > ORIGIN_WINDOW_CELLS * dx
    keep[0] = False
    g = weighted[keep] / x[keep] ** 2
    neg = float(max(0.0, -g.min())) if g.size else 0.0
    g = np.clip(g, 0.0, None)
    return LevyDensityCurve(x[keep], g, float(truncation), nodes, warn, neg, x, weighted)


def levy_khintchine_exponent(params: UnivariateParams, curve: LevyDensityCurve, u):
    """log phi_Y(u) rebuilt from the recovered density in centred form.

    i E[Y] u + sum_j (e^{iux_j} - 1 - iux_j) / x_j^2 * (x_j^2 g(x_j)) dx over the
    full grid; the kernel tends to -u^2 / 2 at x = 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    x = curve.grid
    dx = curve.spacing
    ux = np.outer(u, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        kernel = (np.expm1(1j * ux) - 1j * ux) / x**2
    kernel = np.where(x == 0.0, -0.5 * u[:, None] ** 2, kernel)
    mean = moments(params).mean
    out = 1j * mean * u + kernel @ curve.weighted * dx
    return out if out.size > 1 else out[0]


def small_jump_mass(curve: LevyDensityCurve) -> float:
    """Trapezoid estimate of int min(1, x^2) g(x) dx over the full grid."""
    x = curve.grid
    g_part = np.where(np.abs(x) <= 1.0, curve.weighted, curve.weighted / np.where(x == 0, 1, x) ** 2)
    return float(np.trapezoid(np.clip(g_part, 0.0, None), x))


def reference_exponent(params: UnivariateParams, u):
    return log_characteristic_function(params, u)
