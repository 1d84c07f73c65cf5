"""Command-line front end: theory curves, Monte Carlo curves, CV curves and
nonlinear Laurent coefficients as CSV or JSON tables.

Exit codes: 0 success, 2 invalid arguments or unwritable output, 3 when fewer
than 90% of grid points succeed.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
import warnings
import numpy as np

from . import __version__
from .errors import RRLError
from .nonlinear import laurent_variance
from .risk_theory import cv_asymptotic, isotropic_closed_forms, theory_curve
from .simulate import DEFAULT_SEED, mc_cv_curve, mc_risk_curve
from .spectra import AR1, Equicorrelated, Isotropic, Latent, Misspecified, Nonlinear

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
THEORY_BAND = 0.02
SIM_BAND = 0.05


class CLIError(Exception):
    """Invalid configuration; the message names the offending flag."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_grid(text: str, flag: str) -> list:
    """``min:max:steps[:log]``, a comma list, or a single number."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ValueError
            lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
            scale = parts[3] if len(parts) == 4 else "linear"
            if steps < 1 or scale not in ("log", "linear", "lin"):
                raise ValueError
            if steps == 1:
                return [lo]
            if scale == "log":
                if lo <= 0 or hi <= 0:
                    raise CLIError(f"{flag}: log grid needs positive endpoints")
                return list(np.geomspace(lo, hi, steps))
            return list(np.linspace(lo, hi, steps))
        vals = [float(v) for v in text.split(",") if v.strip()]
        if not vals:
            raise ValueError
        return vals
    except CLIError:
        raise
    except ValueError:
        raise CLIError(f"{flag}: cannot parse grid {text!r} (expected min:max:steps[:log] or a list)") from None


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def build_spec(args):
    m = args.model
    if m == "isotropic":
        return Isotropic(args.r2, args.sigma2)
    if m == "equicorrelated":
        return Equicorrelated(args.rho, args.r2, args.sigma2)
    if m == "ar1":
        return AR1(args.rho, args.r2, args.sigma2, args.p_quad)
    if m == "misspecified":
        if args.kappa is None and args.decay is None:
            raise CLIError("--kappa or --decay is required for --model misspecified")
        return Misspecified(args.r2, args.sigma2, kappa=args.kappa, decay=args.decay)
    if m == "latent":
        return Latent(args.psi, args.r_theta2, args.sigma_xi2, d=args.d)
    if m == "nonlinear":
        return Nonlinear(args.activation, args.psi, args.r2, args.sigma2, d=args.d)
    raise CLIError(f"--model: unknown model {m!r}")


def _point_spec(spec, gamma, n):
    """Latent models with a pinned d use psi = d / round(gamma n)."""
    if isinstance(spec, Latent) and spec.d is not None and n:
        p = max(1, int(round(gamma * n)))
        return dataclasses.replace(spec, psi=min(1.0, spec.d / p), d=None)
    return spec


def _theory_total(spec, gamma, lam, n=None):
    if isinstance(spec, Nonlinear):
        if lam == 0 and gamma != 1:
            return isotropic_closed_forms(gamma, spec.r2, spec.sigma2)[0].total
        return math.nan
    try:
        return theory_curve(_point_spec(spec, gamma, n), gamma, lam).total
    except RRLError:
        return math.nan


# ---------------------------------------------------------------------------
# commands; each returns (columns, rows, excluded)
# ---------------------------------------------------------------------------


def _status(exc):
    return f"error:{type(exc).__name__}"


EXCLUDED = "excluded:interpolation_band"


def _split_band(grid, band):
    kept = [g for g in grid if abs(g - 1.0) >= band]
    excluded = [g for g in grid if abs(g - 1.0) < band]
    return kept, excluded


def _merge_excluded(grid, rows, excluded, width):
    """Re-insert excluded gamma values as placeholder rows, in grid order."""
    done = iter(rows)
    out = []
    for g in grid:
        if g in excluded:
            out.append([g] + [math.nan] * (width - 2) + [EXCLUDED])
        else:
            out.append(next(done))
    return out


def _require_spectrum(spec, command):
    if isinstance(spec, Nonlinear):
        raise CLIError(f"--model: the nonlinear model has no covariance spectrum; "
                       f"use the 'nonlinear' command instead of '{command}'")


def cmd_theory(args, spec):
    _require_spectrum(spec, "theory")
    grid = parse_grid(args.gamma, "--gamma")
    kept, excluded = _split_band(grid, THEORY_BAND)
    cols = ["gamma", "bias", "variance", "misspec_bias", "total", "status"]
    rows = []
    for g in kept:
        try:
            r = theory_curve(_point_spec(spec, g, args.n), g, 0.0)
            rows.append([g, r.bias, r.variance, r.misspec_bias, r.total, "ok"])
        except RRLError as exc:
            rows.append([g, math.nan, math.nan, math.nan, math.nan, _status(exc)])
    return cols, _merge_excluded(grid, rows, excluded, len(cols)), excluded


def cmd_ridge_theory(args, spec):
    _require_spectrum(spec, "ridge-theory")
    grid = parse_grid(args.gamma, "--gamma")
    lams = parse_grid(args.lambda_grid, "--lambda")
    if any(l <= 0 for l in lams):
        raise CLIError("--lambda: ridge theory needs lambda > 0")
    cols = ["gamma", "lambda", "bias", "variance", "misspec_bias", "total", "status"]
    rows = []
    for g in grid:
        for lam in lams:
            try:
                r = theory_curve(_point_spec(spec, g, args.n), g, lam)
                rows.append([g, lam, r.bias, r.variance, r.misspec_bias, r.total, "ok"])
            except RRLError as exc:
                rows.append([g, lam, math.nan, math.nan, math.nan, math.nan, _status(exc)])
    return cols, rows, []


def cmd_simulate(args, spec):
    grid = parse_grid(args.gamma, "--gamma")
    kept, excluded = _split_band(grid, SIM_BAND)
    if not kept:
        raise CLIError("--gamma: every grid point lies in the interpolation band")
    if args.n < 1:
        raise CLIError("--n must be >= 1")
    if args.reps < 1:
        raise CLIError("--reps must be >= 1")
    lam = float(args.lambda_grid) if args.lambda_grid else 0.0
    res = mc_risk_curve(spec, args.n, kept, lam=lam, reps=args.reps, master_seed=args.seed,
                        threads=args.threads)
    cols = ["gamma", "n", "p", "lambda", "mean_bias", "mean_variance", "mean_misspec", "mean_total",
            "stderr_total", "reps", "failed", "theory_total", "status"]
    rows = []
    for r in res.records:
        rows.append([r.gamma, r.n, r.p, r.lam, r.mean_bias, r.mean_variance, r.mean_misspec, r.mean_total,
                     r.stderr_total, r.reps, r.failed, _theory_total(spec, r.gamma, lam, args.n),
                     "ok" if r.valid else "error:too_many_failed_reps"])
    return cols, _merge_excluded(grid, rows, excluded, len(cols)), excluded


def cmd_cv(args, spec):
    gammas = parse_grid(args.gamma, "--gamma")
    if len(gammas) != 1:
        raise CLIError("--gamma: cv takes a single gamma")
    gamma = gammas[0]
    lams = parse_grid(args.lambda_grid or "0.25:16:17:log", "--lambda")
    if any(l <= 0 for l in lams) or any(b <= a for a, b in zip(lams, lams[1:])):
        raise CLIError("--lambda: grid must be positive and increasing")
    res = mc_cv_curve(spec, args.n, gamma, lams, reps=args.reps, master_seed=args.seed, threads=args.threads)
    tuned_lambda = float(np.median(res.tuned_lambda))
    cols = ["lambda", "cv", "cv_stderr", "gcv", "gcv_stderr", "cv_theory", "tuned_lambda", "tuned_risk",
            "tuned_risk_stderr", "status"]
    rows = []
    for k, lam in enumerate(res.lambdas):
        theory = math.nan
        if isinstance(spec, Isotropic) and spec.sigma2 > 0:
            theory = cv_asymptotic(gamma, spec.r2, spec.sigma2, lam) + spec.sigma2
        rows.append([lam, res.mean_cv[k], res.stderr_cv[k], res.mean_gcv[k], res.stderr_gcv[k], theory,
                     tuned_lambda, res.tuned_risk_mean, res.tuned_risk_stderr, "ok"])
    return cols, rows, []


def cmd_nonlinear(args, spec):
    grid = parse_grid(args.gamma, "--gamma")
    kept, excluded = _split_band(grid, THEORY_BAND)
    cols = ["gamma", "psi", "c1", "d_minus1", "d0", "variance", "error_estimate", "status"]
    rows = []
    for g in kept:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                L = laurent_variance(g, args.psi, args.c1, args.sigma2)
            rows.append([g, args.psi, args.c1, L.d_minus1, L.d0, L.variance, L.error_estimate, "ok"])
        except RRLError as exc:
            rows.append([g, args.psi, args.c1, math.nan, math.nan, math.nan, math.nan, _status(exc)])
    rows = _merge_excluded(grid, rows, excluded, len(cols))
    for r in rows:
        if r[-1] == EXCLUDED:
            r[1], r[2] = args.psi, args.c1
    return cols, rows, excluded


COMMANDS = {
    "theory": cmd_theory,
    "ridge-theory": cmd_ridge_theory,
    "simulate": cmd_simulate,
    "cv": cmd_cv,
    "nonlinear": cmd_nonlinear,
}

DEFAULT_GAMMA = {
    "theory": "0.1:10:100",
    "ridge-theory": "2",
    "simulate": "0.3,0.7,1.5,2,4,8",
    "cv": "2",
    "nonlinear": "1.5,2,5",
}

DEFAULT_N = {"simulate": 200, "cv": 300}
DEFAULT_REPS = {"simulate": 50, "cv": 20}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def render(fmt_name, command, config, cols, rows, excluded) -> str:
    if fmt_name == "json":
        records = [{c: _jsonable(v) for c, v in zip(cols, row)} for row in rows]
        doc = {"tool": "ridgeless", "version": __version__, "command": command, "config": config,
               "excluded_gamma": [_jsonable(g) for g in excluded], "columns": cols, "records": records}
        return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# ridgeless {__version__} {command}\n")
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    buf.write("# excluded_gamma: " + ",".join(fmt(g) for g in excluded) + "\n")
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ridgeless", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ridgeless {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", default="isotropic",
                       choices=["isotropic", "equicorrelated", "ar1", "misspecified", "latent", "nonlinear"])
        p.add_argument("--r2", type=float, default=1.0, help="signal energy ||beta||^2")
        p.add_argument("--sigma2", type=float, default=1.0, help="noise variance")
        p.add_argument("--rho", type=float, default=0.5)
        p.add_argument("--p-quad", dest="p_quad", type=int, default=2000, help="AR1 quadrature size")
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--decay", type=float, default=None, help="misspecification decay exponent a")
        p.add_argument("--psi", type=float, default=0.5)
        p.add_argument("--r-theta2", dest="r_theta2", type=float, default=1.0)
        p.add_argument("--sigma-xi2", dest="sigma_xi2", type=float, default=0.0)
        p.add_argument("--d", type=int, default=None, help="pin the latent dimension")
        p.add_argument("--activation", default="abs", choices=["abs"])
        p.add_argument("--c1", type=float, default=0.0)
        p.add_argument("--gamma", default=DEFAULT_GAMMA[name], help="grid min:max:steps[:log] or list")
        p.add_argument("--lambda", dest="lambda_grid", default=None,
                       help="lambda grid (ridge-theory, cv) or single value (simulate)")
        p.add_argument("--n", type=int, default=DEFAULT_N.get(name))
        p.add_argument("--reps", type=int, default=DEFAULT_REPS.get(name, 50))
        p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=None, help="worker cap (default RRL_THREADS or cpu count)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "ridge-theory" and args.lambda_grid is None:
        args.lambda_grid = "0.1:10:50:log"
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "format", "threads")}
    try:
        spec = build_spec(args)
        cols, rows, excluded = COMMANDS[args.command](args, spec)
    except (CLIError, RRLError, ValueError) as exc:
        print(f"ridgeless: error: {exc}", file=stderr)
        return EXIT_INVALID
    text = render(args.format, args.command, config, cols, rows, excluded)
    if args.output == "-":
        stdout.write(text)
    else:
        try:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"ridgeless: error: --output: cannot write {args.output!r}: {exc.strerror}", file=stderr)
            return EXIT_INVALID
    attempted = [r for r in rows if r[-1] != EXCLUDED]
    ok = sum(1 for r in attempted if r[-1] == "ok")
    if attempted and ok < 0.9 * len(attempted):
        print(f"ridgeless: {len(attempted) - ok} of {len(attempted)} grid points failed", file=stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
