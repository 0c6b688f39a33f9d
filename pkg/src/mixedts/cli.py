"""Command-line interface: mixedts <command> [options].

Every command is deterministic given its inputs and --seed. JSON goes to
--out (or stdout), CSV tables to the paths given; files are written
atomically. Wall-clock timings are printed to stderr only, so that output
files are byte-identical across runs.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
import time
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from . import multivariate as mv
from . import univariate as uv
from .errors import MixedTSError
from .estimate import EstimationConfig, bootstrap_study, estimate
from .levy import DEFAULT_NODES, DEFAULT_TRUNCATION, levy_density
from .tails import DEFAULT_ZETA, fit_tail_exponents, zeta_sweep

DEFAULT_SEED = 20240601


class CliError(Exception):
    pass


def versions() -> dict:
    return {
        "mixedts": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def jsonable(obj):
    """Replace non-finite floats by the strings "inf", "-inf", "nan" (strict JSON)."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return "nan" if obj != obj else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def emit_json(obj: dict, out: Optional[str]) -> None:
    text = json.dumps(jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from exc


def load_params(path: str):
    d = load_json(path)
    try:
        if "marginals" in d:
            return mv.MultivariateParams.from_dict(d)
        return uv.UnivariateParams.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid parameter file {path}: {exc!r}") from exc


def matrix_to_csv(y: np.ndarray, names: Sequence[str]) -> str:
    lines = [",".join(names)]
    lines += [",".join(repr(float(v)) for v in row) for row in y]
    return "\n".join(lines) + "\n"


def read_csv_matrix(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"{path}: malformed CSV ({exc})") from exc
    names = [h.strip() for h in header.split(",")] if header else []
    if data.size == 0:
        data = np.empty((0, len(names)))
    if names and data.shape[1] != len(names):
        raise CliError(f"{path}: header has {len(names)} columns, data has {data.shape[1]}")
    return names, data


def _meta(seed: Optional[int] = None) -> dict:
    out = {"versions": versions()}
    if seed is not None:
        out["seed"] = seed
    return out


# --------------------------------------------------------------------------
# commands (each returns the process exit status)
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    params = load_params(args.params)
    if args.count < 0:
        raise CliError("--count must be >= 0")
    rng = np.random.default_rng(args.seed)
    dim = params.dim if isinstance(params, mv.MultivariateParams) else 1
    names = [f"y{i + 1}" for i in range(dim)]
    if args.count == 0:
        y = np.empty((0, dim))
    elif dim == 1:
        y = uv.sample(params, args.count, rng)[:, None]
    else:
        y = mv.sample(params, args.count, rng)
    text = matrix_to_csv(y, names)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_tails(args) -> int:
    names, data = read_csv_matrix(args.data)
    sweep = [float(z) for z in args.sweep.split(",") if z.strip()] if args.sweep else None
    columns = []
    failed = False
    for j, name in enumerate(names or [f"y{k + 1}" for k in range(data.shape[1])]):
        entry = {"column": name}
        try:
            entry["fit"] = fit_tail_exponents(data[:, j], args.zeta).to_dict()
        except (MixedTSError, ValueError) as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
            failed = True
        if sweep is not None:
            rows = zeta_sweep(data[:, j], sweep)
            entry["sweep"] = [r.to_dict() for r in rows]
            failed = failed or any("error" in r.to_dict() for r in rows)
        columns.append(entry)
    emit_json({"zeta": args.zeta, "columns": columns, "meta": _meta()}, args.out)
    return 1 if failed else 0


def cmd_strip(args) -> int:
    params = load_params(args.params)
    if isinstance(params, mv.MultivariateParams):
        out = {"marginals": [uv.fundamental_strip(params.marginal(i)).to_dict()
                             for i in range(params.dim)]}
    else:
        out = uv.fundamental_strip(params).to_dict()
    out["meta"] = _meta()
    emit_json(out, args.out)
    return 0


def cmd_moments(args) -> int:
    params = load_params(args.params)
    if isinstance(params, mv.MultivariateParams):
        out = mv.moments(params).to_dict()
        bounds = []
        for i in range(params.dim):
            for j in range(i + 1, params.dim):
                cb = mv.covariance_bounds(params, i, j)
                lo, hi = mv.attainable_covariance_range(params, i, j)
                bounds.append({"i": i + 1, "j": j + 1, "lower": cb.lower, "upper": cb.upper,
                               "beta_star_i": cb.beta_star_i, "beta_star_j": cb.beta_star_j,
                               "skew_regime": cb.skew_regime.value,
                               "attainable_lower": lo, "attainable_upper": hi})
        out["covariance_bounds"] = bounds
    else:
        out = uv.moments(params)._asdict()
    out["meta"] = _meta()
    emit_json(out, args.out)
    return 0


def _config(args) -> EstimationConfig:
    d = load_json(args.config) if args.config else {}
    if args.seed is not None:
        d["seed"] = args.seed
    try:
        return EstimationConfig.from_dict(d)
    except (TypeError, ValueError, KeyError) as exc:
        raise CliError(f"invalid estimation config: {exc}") from exc


def cmd_estimate(args) -> int:
    _, data = read_csv_matrix(args.data)
    config = _config(args)
    report = estimate(data, config)
    out = {"report": report.to_dict(), "config": config.to_dict(), "meta": _meta(config.seed)}
    emit_json(out, args.out)
    if args.params_out:
        emit_json(report.theta_hat.to_dict(), args.params_out)
    return 0


def cmd_bootstrap(args) -> int:
    _, data = read_csv_matrix(args.data)
    config = _config(args)
    truth = load_params(args.truth) if args.truth else None
    summary = bootstrap_study(data, config, replications=args.reps, resample_size=args.size, truth=truth)
    out = {"summary": summary.to_dict(), "config": config.to_dict(), "meta": _meta(config.seed)}
    emit_json(out, args.out)
    if args.table:
        atomic_write(args.table, summary.to_csv())
    return 0


def cmd_levy(args) -> int:
    params = load_params(args.params)
    if not isinstance(params, uv.UnivariateParams):
        raise CliError("levy needs univariate parameters")
    curve = levy_density(params, args.truncation, args.nodes)
    lines = ["x,g"] + [f"{x!r},{g!r}" for x, g in zip(curve.abscissae.tolist(), curve.values.tolist())]
    csv_text = "\n".join(lines) + "\n"
    if args.csv:
        atomic_write(args.csv, csv_text)
    summary = {
        "truncation": curve.truncation,
        "nodes": curve.nodes,
        "points": int(curve.abscissae.size),
        "truncation_warning": curve.truncation_warning,
        "max_negative_ringing": curve.max_negative_ringing,
        "meta": _meta(),
    }
    if args.csv:
        emit_json(summary, args.out)
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(json.dumps(summary) + "\n")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedts", description="Mixed Tempered Stable toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw a sample to CSV")
    s.add_argument("--params", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("tails", help="empirical tail exponents per column")
    s.add_argument("--data", required=True)
    s.add_argument("--zeta", type=float, default=DEFAULT_ZETA)
    s.add_argument("--sweep", help="comma-separated zeta values")
    s.add_argument("--out")
    s.set_defaults(func=cmd_tails)

    s = sub.add_parser("strip", help="fundamental strip and tail case")
    s.add_argument("--params", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_strip)

    s = sub.add_parser("moments", help="analytic moments")
    s.add_argument("--params", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_moments)

    for name, func, hlp in (("estimate", cmd_estimate, "fit parameters to a sample"),
                            ("bootstrap", cmd_bootstrap, "bootstrap the estimator")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--data", required=True)
        s.add_argument("--config")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--out")
        if name == "estimate":
            s.add_argument("--params-out", help="write fitted parameters as a params JSON")
        else:
            s.add_argument("--reps", type=int, default=None)
            s.add_argument("--size", type=int, default=None)
            s.add_argument("--truth", help="params JSON filling the 'true' column")
            s.add_argument("--table", help="CSV in true/est/median/sd/quartile layout")
        s.set_defaults(func=func)

    s = sub.add_parser("levy", help="Levy density by Fourier inversion")
    s.add_argument("--params", required=True)
    s.add_argument("--truncation", type=float, default=DEFAULT_TRUNCATION)
    s.add_argument("--nodes", type=int, default=DEFAULT_NODES)
    s.add_argument("--csv", help="output path for the (x, g) table")
    s.add_argument("--out")
    s.set_defaults(func=cmd_levy)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        status = args.func(args)
    except (CliError, MixedTSError, ValueError) as exc:
        sys.stderr.write(f"mixedts {args.command}: error: {exc}\n")
        return 2
    sys.stderr.write(f"mixedts {args.command}: {time.perf_counter() - start:.3f}s\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
