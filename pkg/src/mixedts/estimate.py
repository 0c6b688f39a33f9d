"""Characteristic-function distance estimation with a tail-matching penalty.

The objective is

    (1 / n0) sum_j |phi_emp(t_j) - phi(-t_j; theta)|^2 + lambda * h(theta),

with t_j drawn once from an N-variate standard normal, phi_emp(t) the sample
average of exp(-i <t, X>) and h the squared gap between the model's marginal
tail exponents and those regressed from the data. It is minimised by
Nelder-Mead in an unconstrained parametrisation. With the default "dynamic"
penalty mode lambda is reset at every simplex iteration to the penalty of the
best vertex after the previous iteration (1 at the start); "sequential" runs
whole searches with lambda growing tenfold until the objective settles.
"""
from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .cts import CtsParams
from .errors import InsufficientDataError, MixedTSError
from .multivariate import MarginalParams, MultivariateParams, log_joint_characteristic_function
from .tails import DEFAULT_ZETA, fit_tail_exponents
from .univariate import UnivariateParams, log_characteristic_function, tail_exponents

__all__ = [
    "QuadratureGrid",
    "ParameterCodec",
    "codec_for",
    "Objective",
    "EstimationConfig",
    "EstimationReport",
    "BootstrapRow",
    "BootstrapSummary",
    "NelderMeadResult",
    "empirical_cf",
    "model_cf",
    "cf_distance",
    "penalty",
    "target_tails",
    "nelder_mead",
    "moment_start",
    "estimate",
    "bootstrap_study",
]

Params = Union[UnivariateParams, MultivariateParams]

ALPHA_MARGIN = 1e-3
NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5
SIMPLEX_STEP = 0.05
SEQUENTIAL_GROWTH = 10.0
SEQUENTIAL_EPS = 1e-6
SEQUENTIAL_MAX_ROUNDS = 8
MAX_FAILURE_SHARE = 0.2
CF_CHUNK_ROWS = 1 << 15


# --------------------------------------------------------------------------
# data and grid
# --------------------------------------------------------------------------

def as_sample_matrix(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise InsufficientDataError("sample must be a nonempty (observations x components) array")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return x


@dataclass(frozen=True)
class QuadratureGrid:
    """n0 evaluation nodes drawn once from an N-variate standard normal."""

    points: np.ndarray
    seed: int

    @classmethod
    def draw(cls, n0: int, dim: int, seed: int) -> "QuadratureGrid":
        if n0 < 1 or dim < 1:
            raise ValueError("n0 and dim must be positive")
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((n0, dim))
        pts.setflags(write=False)
        return cls(pts, int(seed))

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.points).tobytes()).hexdigest()


def empirical_cf(sample, t) -> np.ndarray:
    """(1/m) sum_j exp(-i <t, x_j>) for each row of `t` (or a single vector `t`)."""
    x = as_sample_matrix(sample)
    t = np.asarray(t, dtype=float)
    single = t.ndim <= 1
    t2 = np.atleast_2d(t).reshape(-1, x.shape[1]) if t.ndim else np.full((1, 1), float(t))
    total = np.zeros(t2.shape[0], dtype=complex)
    # chunked so that memory stays bounded for large samples
    for start in range(0, x.shape[0], CF_CHUNK_ROWS):
        phase = x[start:start + CF_CHUNK_ROWS] @ t2.T
        total += np.exp(-1j * phase).sum(axis=0)
    out = total / x.shape[0]
    return out[0] if single else out


def model_cf(theta: Params, t) -> np.ndarray:
    """Model characteristic function E[exp(i <t, Y>)] at the rows of `t`."""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    if isinstance(theta, UnivariateParams):
        return np.exp(log_characteristic_function(theta, t[:, 0]))
    return np.exp(log_joint_characteristic_function(theta, t))


def marginal_list(theta: Params) -> list[UnivariateParams]:
    if isinstance(theta, UnivariateParams):
        return [theta]
    return [theta.marginal(i) for i in range(theta.dim)]


def penalty(theta: Params, targets) -> float:
    """Sum over marginals of (q_emp - q*)^2 + (r_emp - r*)^2."""
    margs = marginal_list(theta)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    if targets.shape[0] != len(margs):
        raise ValueError(f"expected {len(margs)} target pairs, got {targets.shape[0]}")
    total = 0.0
    for mp, (q_emp, r_emp) in zip(margs, targets):
        te = tail_exponents(mp)
        total += (q_emp - te.q_star) ** 2 + (r_emp - te.r_star) ** 2
    return float(total)


def target_tails(sample, zeta: float = DEFAULT_ZETA) -> np.ndarray:
    """Empirical (q, r) per column, shape (N, 2)."""
    x = as_sample_matrix(sample)
    out = np.empty((x.shape[1], 2))
    for i in range(x.shape[1]):
        fit = fit_tail_exponents(x[:, i], zeta)
        out[i] = fit.q_star_hat, fit.r_star_hat
    return out


@dataclass
class Objective:
    sample: np.ndarray
    grid: QuadratureGrid
    penalty_weight: float
    target_tails: np.ndarray
    empirical: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.sample = as_sample_matrix(self.sample)
        if self.grid.points.shape[1] != self.sample.shape[1]:
            raise ValueError("grid dimension does not match the sample")
        if self.penalty_weight < 0.0:
            raise ValueError("penalty weight must be nonnegative")
        self.target_tails = np.asarray(self.target_tails, dtype=float).reshape(-1, 2)
        if self.target_tails.shape[0] != self.sample.shape[1]:
            raise ValueError("one (q, r) target pair per component is required")
        self.empirical = empirical_cf(self.sample, self.grid.points)

    @classmethod
    def build(cls, sample, grid: QuadratureGrid, zeta: float = DEFAULT_ZETA,
              penalty_weight: float = 1.0) -> "Objective":
        x = as_sample_matrix(sample)
        return cls(x, grid, penalty_weight, target_tails(x, zeta))

    def distance(self, theta: Params) -> float:
        # exp(-i<t,x>) averages pair with the model CF at -t, i.e. its conjugate
        gap = self.empirical - np.conj(model_cf(theta, self.grid.points))
        return float(np.mean(gap.real**2 + gap.imag**2))

    def penalty(self, theta: Params) -> float:
        return penalty(theta, self.target_tails)

    def __call__(self, theta: Params) -> float:
        return self.distance(theta) + self.penalty_weight * self.penalty(theta)


def cf_distance(objective: Objective, theta: Params) -> float:
    return objective.distance(theta)


# --------------------------------------------------------------------------
# unconstrained parametrisation
# --------------------------------------------------------------------------

def _alpha_to_free(alpha: float) -> float:
    lo, width = ALPHA_MARGIN, 2.0 - 2.0 * ALPHA_MARGIN
    p = min(max((alpha - lo) / width, 1e-15), 1.0 - 1e-15)
    return math.log(p / (1.0 - p))


def _alpha_from_free(z: float) -> float:
    lo, width = ALPHA_MARGIN, 2.0 - 2.0 * ALPHA_MARGIN
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    alpha = lo + width * p
    if abs(alpha - 1.0) < ALPHA_MARGIN:
        alpha = 1.0 - ALPHA_MARGIN if alpha < 1.0 else 1.0 + ALPHA_MARGIN
    return alpha


def _exp(z: float) -> float:
    return math.exp(min(z, 700.0))


class ParameterCodec:
    """Maps parameters to an unconstrained real vector and back.

    Positive quantities are log-transformed; alpha goes through a logistic map
    onto (1e-3, 2 - 1e-3) and is pushed out of the band |alpha - 1| < 1e-3.
    The common-factor rate k is held at its given value (1 by default).
    """

    def __init__(self, dim: int, k: float = 1.0):
        self.dim = dim
        self.k = k
        if dim == 1:
            self.names = ["mu", "beta", "alpha", "lambda_plus", "lambda_minus", "a", "b"]
        else:
            self.names = []
            for i in range(1, dim + 1):
                self.names += [f"mu_{i}", f"beta_{i}", f"m_{i}", f"l_{i}", f"alpha_{i}",
                               f"lambda_plus_{i}", f"lambda_minus_{i}"]
            self.names.append("n")

    @property
    def size(self) -> int:
        return len(self.names)

    def values(self, theta: Params) -> np.ndarray:
        """Natural-scale values in `names` order."""
        if isinstance(theta, UnivariateParams):
            c = theta.cts
            return np.array([theta.mu, theta.beta, c.alpha, c.lambda_plus, c.lambda_minus,
                             theta.a, theta.b])
        out = []
        for mg in theta.marginals:
            c = mg.cts
            out += [mg.mu, mg.beta, mg.m, mg.l, c.alpha, c.lambda_plus, c.lambda_minus]
        out.append(theta.n)
        return np.array(out)

    def encode(self, theta: Params) -> np.ndarray:
        v = self.values(theta)
        if self.dim == 1:
            mu, beta, alpha, lp, lm, a, b = v
            return np.array([mu, beta, _alpha_to_free(alpha), math.log(lp), math.log(lm),
                             math.log(a), math.log(b)])
        out = []
        for i in range(self.dim):
            mu, beta, m, l, alpha, lp, lm = v[7 * i:7 * i + 7]
            out += [mu, beta, math.log(m), math.log(l), _alpha_to_free(alpha),
                    math.log(lp), math.log(lm)]
        out.append(math.log(v[-1]))
        return np.array(out)

    def decode(self, z) -> Params:
        z = [float(x) for x in z]
        if self.dim == 1:
            mu, beta, za, zp, zm, zaa, zb = z
            return UnivariateParams(mu, beta, CtsParams(_alpha_from_free(za), _exp(zp), _exp(zm)),
                                    _exp(zaa), _exp(zb))
        margs = []
        for i in range(self.dim):
            mu, beta, zmm, zl, za, zp, zm = z[7 * i:7 * i + 7]
            margs.append(MarginalParams(mu, beta, CtsParams(_alpha_from_free(za), _exp(zp), _exp(zm)),
                                        _exp(zl), _exp(zmm)))
        return MultivariateParams(tuple(margs), _exp(z[-1]), self.k)


def codec_for(theta: Params) -> ParameterCodec:
    if isinstance(theta, UnivariateParams):
        return ParameterCodec(1)
    return ParameterCodec(theta.dim, theta.k)


# --------------------------------------------------------------------------
# Nelder-Mead with a penalty weight that may change between iterations
# --------------------------------------------------------------------------

@dataclass
class NelderMeadResult:
    x: np.ndarray
    distance: float
    penalty: float
    objective: float
    weight: float
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)
    penalty_trace: list = field(default_factory=list)
    weight_trace: list = field(default_factory=list)


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    d = x0.size
    simplex = np.tile(x0, (d + 1, 1))
    for i in range(d):
        simplex[i + 1, i] = x0[i] * (1.0 + SIMPLEX_STEP) if x0[i] != 0.0 else SIMPLEX_STEP
    return simplex


def nelder_mead(
    components: Callable[[np.ndarray], tuple[float, float]],
    x0,
    max_iter: int,
    tol: float,
    weight: Union[float, str] = "dynamic",
    initial_weight: float = 1.0,
) -> NelderMeadResult:
    """Minimise distance + weight * penalty, where components(x) = (distance, penalty).

    weight="dynamic" sets the weight of iteration k to the penalty of the best
    vertex after iteration k-1 (initial_weight for k = 0); a number holds it
    fixed. If a dynamic run revisits the simplex it held two iterations
    earlier, the weight is frozen from then on. Stops when the spread of
    objective values over the simplex falls below `tol` or after `max_iter`
    iterations. Traces hold one entry per iteration: best objective, its
    penalty and the weight in force.
    """
    x0 = np.asarray(x0, dtype=float)
    dynamic = weight == "dynamic"
    lam = float(initial_weight if dynamic else weight)

    def evaluate(x):
        try:
            d, p = components(x)
        except (MixedTSError, ValueError, ArithmeticError):
            return math.inf, math.inf
        if not (math.isfinite(d) and math.isfinite(p)):
            return math.inf, math.inf
        return d, p

    d0, p0 = evaluate(x0)
    if not math.isfinite(d0):
        raise ValueError("objective is not finite at the starting point")
    simplex = _initial_simplex(x0)
    comps = np.empty((simplex.shape[0], 2))
    comps[0] = d0, p0
    if max_iter > 0:
        for i in range(1, simplex.shape[0]):
            comps[i] = evaluate(simplex[i])
    else:
        return NelderMeadResult(x0, d0, p0, d0 + lam * p0, lam, 0, False)

    def combined(c):
        with np.errstate(invalid="ignore"):
            f = c[:, 0] + lam * c[:, 1]
        return np.where(np.isfinite(c[:, 0]), f, math.inf)

    obj_trace, pen_trace, w_trace = [], [], []
    converged = False
    iterations = 0
    history = (None, None)
    while iterations < max_iter:
        f = combined(comps)
        order = np.argsort(f, kind="stable")
        simplex, comps, f = simplex[order], comps[order], f[order]
        if f[-1] - f[0] < tol:
            converged = True
            break
        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        xr = centroid + NM_REFLECT * (centroid - worst)
        cr = evaluate(xr)
        fr = cr[0] + lam * cr[1]
        if fr < f[0]:
            xe = centroid + NM_EXPAND * (xr - centroid)
            ce = evaluate(xe)
            fe = ce[0] + lam * ce[1]
            if fe < fr:
                simplex[-1], comps[-1] = xe, ce
            else:
                simplex[-1], comps[-1] = xr, cr
        elif fr < f[-2]:
            simplex[-1], comps[-1] = xr, cr
        else:
            if fr < f[-1]:
                xc = centroid + NM_CONTRACT * (xr - centroid)
                cc = evaluate(xc)
                accept = cc[0] + lam * cc[1] <= fr
            else:
                xc = centroid + NM_CONTRACT * (worst - centroid)
                cc = evaluate(xc)
                accept = cc[0] + lam * cc[1] < f[-1]
            if accept:
                simplex[-1], comps[-1] = xc, cc
            else:
                best = simplex[0]
                for i in range(1, simplex.shape[0]):
                    simplex[i] = best + NM_SHRINK * (simplex[i] - best)
                    comps[i] = evaluate(simplex[i])

        f = combined(comps)
        ib = int(np.argmin(f))
        obj_trace.append(float(f[ib]))
        pen_trace.append(float(comps[ib, 1]))
        w_trace.append(lam)
        if dynamic:
            # a reweighting can reorder two vertices so that each reflection undoes
            # the previous one; once the simplex repeats itself the weight is frozen
            state = simplex[np.lexsort(simplex.T[::-1])]
            if history[0] is not None and np.allclose(state, history[0], rtol=1e-9, atol=1e-12):
                dynamic = False
            else:
                history = (history[1], state)
                lam = float(comps[ib, 1])

    f = combined(comps)
    ib = int(np.argmin(f))
    d, p = comps[ib]
    return NelderMeadResult(simplex[ib].copy(), float(d), float(p), float(f[ib]), lam,
                            iterations, converged, obj_trace, pen_trace, w_trace)


# --------------------------------------------------------------------------
# configuration, starting values, reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimationConfig:
    n0: int = 150
    seed: int = 20240601
    initial_theta: Union[str, Params] = "auto"
    max_iter: Optional[int] = None  # None: 2000 * number of free parameters
    tol: float = 1e-8
    zeta: float = DEFAULT_ZETA
    penalty_mode: str = "dynamic"
    replications: int = 100
    resample_size: Optional[int] = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.penalty_mode not in ("dynamic", "sequential"):
            raise ValueError(f"penalty_mode must be 'dynamic' or 'sequential', got {self.penalty_mode!r}")
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if not 0.0 < self.zeta < 0.5:
            raise ValueError("zeta must lie in (0, 0.5)")
        if isinstance(self.initial_theta, str) and self.initial_theta != "auto":
            raise ValueError("initial_theta must be 'auto' or a parameter object")

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown estimation config keys: {sorted(unknown)}")
        kw = dict(d)
        init = kw.get("initial_theta", "auto")
        if isinstance(init, dict):
            kw["initial_theta"] = (MultivariateParams.from_dict(init) if "marginals" in init
                                   else UnivariateParams.from_dict(init))
        return cls(**kw)

    def to_dict(self) -> dict:
        init = self.initial_theta
        return {
            "n0": self.n0,
            "seed": self.seed,
            "initial_theta": init if isinstance(init, str) else init.to_dict(),
            "max_iter": self.max_iter,
            "tol": self.tol,
            "zeta": self.zeta,
            "penalty_mode": self.penalty_mode,
            "replications": self.replications,
            "resample_size": self.resample_size,
            "n_jobs": self.n_jobs,
        }


@dataclass
class EstimationReport:
    theta_hat: Params
    objective_value: float
    penalty_trace: list
    iterations: int
    converged: bool
    cf_distance: float = 0.0
    penalty: float = 0.0
    penalty_weight: float = 1.0
    objective_trace: list = field(default_factory=list)
    weight_trace: list = field(default_factory=list)
    target_tails: Optional[np.ndarray] = None
    grid_digest: str = ""

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.to_dict(),
            "objective_value": self.objective_value,
            "cf_distance": self.cf_distance,
            "penalty": self.penalty,
            "penalty_weight": self.penalty_weight,
            "iterations": self.iterations,
            "converged": self.converged,
            "target_tails": None if self.target_tails is None else self.target_tails.tolist(),
            "grid_sha256": self.grid_digest,
            "objective_trace": self.objective_trace,
            "penalty_trace": self.penalty_trace,
            "weight_trace": self.weight_trace,
        }


def moment_start(sample, dim_hint: Optional[int] = None) -> Params:
    """Method-of-moments start with alpha = 1.5 and lambda_plus = lambda_minus = 1.

    Per column the Gamma shape s and rate m come from the variance and excess
    kurtosis of a beta = 0 model, beta from the third central moment and mu
    from the mean; for N >= 2 the common shape n is a third of the smallest s.
    """
    x = as_sample_matrix(sample)
    cts = CtsParams(1.5, 1.0, 1.0)
    k4 = 0.75  # fourth cumulant of stdCTS(1.5, 1, 1)
    blocks = []
    for col in x.T:
        mean = float(col.mean())
        c = col - mean
        var = max(float(np.mean(c**2)), 1e-12)
        m3 = float(np.mean(c**3))
        excess = float(np.mean(c**4)) / var**2 - 3.0
        denom = excess - k4 / var
        shape = 3.0 / denom if denom > 0 else 20.0
        shape = min(max(shape, 0.2), 20.0)
        rate = shape / var
        beta = m3 / (3.0 * shape / rate**2)
        beta = max(min(beta, rate), -rate)
        blocks.append((mean - beta * shape / rate, beta, shape, rate))
    if x.shape[1] == 1:
        mu, beta, shape, rate = blocks[0]
        return UnivariateParams(mu, beta, cts, shape, rate)
    n = min(b[2] for b in blocks) / 3.0
    margs = tuple(MarginalParams(mu, beta, cts, shape - n, rate) for mu, beta, shape, rate in blocks)
    return MultivariateParams(margs, n, 1.0)


def _check_dimensions(theta: Params, x: np.ndarray) -> None:
    dim = 1 if isinstance(theta, UnivariateParams) else theta.dim
    if dim != x.shape[1]:
        raise ValueError(f"initial parameters have {dim} components, sample has {x.shape[1]}")


def estimate(sample, config: EstimationConfig = EstimationConfig()) -> EstimationReport:
    """Fit MixedTS parameters to the rows of `sample` (univariate if it has one column)."""
    x = as_sample_matrix(sample)
    if np.unique(x, axis=0).shape[0] < 2:
        raise InsufficientDataError("estimation needs at least two distinct observations")
    start = moment_start(x) if isinstance(config.initial_theta, str) else config.initial_theta
    _check_dimensions(start, x)
    if isinstance(start, MultivariateParams) and start.k != 1.0:
        # k is a normalisation: rescale the common factor so that k = 1
        start = MultivariateParams(start.marginals, start.n, 1.0)

    grid = QuadratureGrid.draw(config.n0, x.shape[1], config.seed)
    objective = Objective.build(x, grid, config.zeta)
    digest = grid.digest()
    codec = codec_for(start)
    max_iter = 2000 * codec.size if config.max_iter is None else config.max_iter

    def components(z):
        theta = codec.decode(z)
        return objective.distance(theta), objective.penalty(theta)

    z0 = codec.encode(start)
    if config.penalty_mode == "dynamic":
        res = nelder_mead(components, z0, max_iter, config.tol, "dynamic", 1.0)
        obj_trace, pen_trace, w_trace = res.objective_trace, res.penalty_trace, res.weight_trace
        iterations, converged = res.iterations, res.converged
    else:
        lam = 1.0
        res = nelder_mead(components, z0, max_iter, config.tol, lam)
        obj_trace, pen_trace, w_trace = list(res.objective_trace), list(res.penalty_trace), list(res.weight_trace)
        iterations = res.iterations
        for _ in range(SEQUENTIAL_MAX_ROUNDS - 1):
            if max_iter == 0:
                break
            lam *= SEQUENTIAL_GROWTH
            prev = res.objective
            res = nelder_mead(components, res.x, max_iter, config.tol, lam)
            obj_trace += res.objective_trace
            pen_trace += res.penalty_trace
            w_trace += res.weight_trace
            iterations += res.iterations
            if abs(prev - res.objective) <= SEQUENTIAL_EPS:
                break
        converged = res.converged

    if grid.digest() != digest:  # pragma: no cover - the grid array is read-only
        raise RuntimeError("quadrature grid changed during estimation")
    theta_hat = codec.decode(res.x) if max_iter > 0 else start
    return EstimationReport(
        theta_hat=theta_hat,
        objective_value=res.objective,
        penalty_trace=pen_trace,
        iterations=iterations,
        converged=converged,
        cf_distance=res.distance,
        penalty=res.penalty,
        penalty_weight=res.weight,
        objective_trace=obj_trace,
        weight_trace=w_trace,
        target_tails=objective.target_tails,
        grid_digest=digest,
    )


# --------------------------------------------------------------------------
# bootstrap
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapRow:
    name: str
    true: Optional[float]
    mean_est: float
    median: float
    sd: float
    quartile1: float
    quartile3: float


@dataclass
class BootstrapSummary:
    rows: list
    replications: int
    failures: int
    estimates: np.ndarray = field(repr=False)
    failure_messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "failures": self.failures,
            "failure_messages": self.failure_messages,
            "rows": [r.__dict__ for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "true", "est", "median", "sd", "quartile1", "quartile3"])
        for r in self.rows:
            w.writerow([r.name, "" if r.true is None else repr(float(r.true))]
                       + [repr(float(v)) for v in (r.mean_est, r.median, r.sd, r.quartile1, r.quartile3)])
        return buf.getvalue()


def _replicate(args):
    x, config, seed_seq, size = args
    rng = np.random.default_rng(seed_seq)
    rows = rng.integers(0, x.shape[0], size=size)
    try:
        rep = estimate(x[rows], config)
    except (MixedTSError, ValueError, ArithmeticError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return rep.theta_hat, None


def summarize(names: Sequence[str], estimates: np.ndarray, truth: Optional[np.ndarray] = None):
    rows = []
    for j, name in enumerate(names):
        col = estimates[:, j]
        sd = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
        q1, med, q3 = np.percentile(col, [25.0, 50.0, 75.0])
        rows.append(BootstrapRow(name, None if truth is None else float(truth[j]), float(col.mean()),
                                 float(med), sd, float(q1), float(q3)))
    return rows


def bootstrap_study(
    sample,
    config: EstimationConfig = EstimationConfig(),
    replications: Optional[int] = None,
    resample_size: Optional[int] = None,
    truth: Optional[Params] = None,
) -> BootstrapSummary:
    """Re-estimate on row resamples drawn with replacement and summarise each parameter.

    Replicate r draws its rows from the r-th child of SeedSequence(config.seed);
    every replicate uses the same quadrature grid. Failed replicates are
    counted and excluded; more than 20% failures raise an error.
    """
    x = as_sample_matrix(sample)
    reps = config.replications if replications is None else replications
    size = resample_size or config.resample_size or x.shape[0]
    if reps < 1:
        raise ValueError("replications must be >= 1")
    if size < 2:
        raise ValueError("resample_size must be >= 2")
    children = np.random.SeedSequence(config.seed).spawn(reps)
    jobs = [(x, config, child, size) for child in children]
    if config.n_jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(_replicate, jobs))
    else:
        results = [_replicate(j) for j in jobs]

    fitted = [r for r, _ in results if r is not None]
    messages = [m for _, m in results if m is not None]
    if len(messages) > MAX_FAILURE_SHARE * reps:
        raise MixedTSError(f"{len(messages)} of {reps} bootstrap replicates failed: {messages[:3]}")
    codec = codec_for(fitted[0])
    est = np.array([codec.values(t) for t in fitted])
    true_vals = None if truth is None else codec.values(truth)
    return BootstrapSummary(summarize(codec.names, est, true_vals), reps, len(messages), est, messages)
