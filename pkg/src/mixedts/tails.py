"""Empirical exponential tail rates from a sample.

The left rate q is read off log F(x) ~ q x as x -> -inf and the right rate r
off log(1 - F(x)) ~ -r x as x -> +inf, each by least squares (with intercept)
over the observations beyond the empirical zeta / (1 - zeta) quantiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateWindowError, InsufficientDataError

__all__ = [
    "DEFAULT_ZETA",
    "ECDF",
    "ecdf",
    "empirical_quantile",
    "tail_regression",
    "EmpiricalTailFit",
    "TailFitFailure",
    "fit_tail_exponents",
    "zeta_sweep",
]

DEFAULT_ZETA = 0.01


class ECDF:
    """Right-continuous empirical distribution function F(x) = #{x_i <= x} / n."""

    def __init__(self, sample):
        x = np.asarray(sample, dtype=float).ravel()
        if x.size == 0:
            raise InsufficientDataError("empirical CDF of an empty sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample contains non-finite values")
        self.sorted = np.sort(x)
        self.n = x.size

    def __call__(self, x):
        out = np.searchsorted(self.sorted, x, side="right") / self.n
        return out[()] if np.ndim(out) == 0 else out

    def quantile(self, p: float) -> float:
        """inf{x_i : F(x_i) >= p}."""
        if not 0.0 < p <= 1.0:
            raise ValueError(f"quantile level must lie in (0, 1], got {p}")
        # F(x_(k)) >= k/n with equality unless ties; the smallest k with k/n >= p
        # is ceil(n p), and ties only move F upward, so x_(ceil(np)) is the infimum.
        k = max(1, math.ceil(self.n * p - 1e-12 * self.n))
        return float(self.sorted[k - 1])


def ecdf(sample) -> ECDF:
    return ECDF(sample)


def empirical_quantile(sample, p: float) -> float:
    return ECDF(sample).quantile(p)


def tail_regression(x, y) -> tuple[float, float]:
    """Least-squares (slope, intercept) of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientDataError(f"regression needs at least 2 points, got {x.size}")
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx <= 0.0 or np.all(x == x[0]):
        raise DegenerateWindowError("all abscissae in the regression window coincide")
    slope = float(np.dot(xc, y - y.mean())) / sxx
    return slope, float(y.mean() - slope * x.mean())


@dataclass(frozen=True)
class EmpiricalTailFit:
    q_star_hat: float
    r_star_hat: float
    zeta: float
    n_left: int
    n_right: int

    def to_dict(self) -> dict:
        return {
            "q_star_hat": self.q_star_hat,
            "r_star_hat": self.r_star_hat,
            "zeta": self.zeta,
            "n_left": self.n_left,
            "n_right": self.n_right,
        }


@dataclass(frozen=True)
class TailFitFailure:
    zeta: float
    error: str

    def to_dict(self) -> dict:
        return {"zeta": self.zeta, "error": self.error}


def _window_points(f: ECDF, lo: float, hi: float):
    # distinct sample values in [lo, hi] with their F values
    vals = f.sorted[(f.sorted >= lo) & (f.sorted <= hi)]
    xs = np.unique(vals)
    return xs, f(xs)


def fit_tail_exponents(sample, zeta: float = DEFAULT_ZETA) -> EmpiricalTailFit:
    """Regress log F on x below the zeta-quantile and log(1 - F) on x above the (1 - zeta)-quantile.

    q_star_hat is the slope of the left regression, r_star_hat minus the slope
    of the right one, so both are positive for exponentially decaying tails.
    Points where 1 - F = 0 (the sample maximum) are dropped.
    """
    if not 0.0 < zeta < 0.5:
        raise ValueError(f"zeta must lie in (0, 0.5), got {zeta}")
    f = ECDF(sample)
    x_lo = f.quantile(zeta)
    x_hi = f.quantile(1.0 - zeta)

    xl, fl = _window_points(f, f.sorted[0], x_lo)
    xu, fu = _window_points(f, x_hi, f.sorted[-1])
    keep = fu < 1.0
    xu, fu = xu[keep], fu[keep]
    if xl.size < 2 or xu.size < 2:
        raise InsufficientDataError(
            f"tail windows hold {xl.size} (left) and {xu.size} (right) distinct points; need 2 each"
        )
    slope_left, _ = tail_regression(xl, np.log(fl))
    slope_right, _ = tail_regression(xu, np.log1p(-fu))
    return EmpiricalTailFit(slope_left, -slope_right, float(zeta), int(xl.size), int(xu.size))


def zeta_sweep(sample, zetas: Sequence[float]) -> list[Union[EmpiricalTailFit, TailFitFailure]]:
    """fit_tail_exponents for each zeta, in input order; failures become TailFitFailure entries."""
    out: list[Union[EmpiricalTailFit, TailFitFailure]] = []
    for z in zetas:
        try:
            out.append(fit_tail_exponents(sample, z))
        except (ValueError, ArithmeticError) as exc:
            out.append(TailFitFailure(float(z), f"{type(exc).__name__}: {exc}"))
    return out
