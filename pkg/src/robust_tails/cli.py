"""Command-line pipeline: fit a tail, calibrate radii, compute robust bounds.

Exit codes:
  0  success
  2  input error (unreadable file, bad flag value, invalid grid)
  3  fit failure (too few exceedances, non-convergence, non-heavy tail)
  4  numerical failure (solver non-convergence, violated bound ordering)
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, fdiv, wasserstein
from ._kernels import BACKEND
from .divergences import DivergenceSpec
from .evt import (
    ExtrapolationError,
    FitError,
    FitResult,
    NoExceedancesError,
    Sample,
    TailModel,
    WorstCaseCurve,
    fit_gpd_mle,
    load_sample_csv,
    return_level,
)
from .radius import estimate_delta_knn_hellinger, estimate_delta_wasserstein, select_alpha

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_NUMERIC = 4

DEFAULT_PERIODS = "10,100,1000,10000"


class InputError(Exception):
    pass


class NumericalError(Exception):
    pass


# ---------------------------------------------------------------- JSON output


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    text = f"{v:.17g}"
    if all(ch not in text for ch in ".en"):
        text += ".0"
    return text


def dumps17(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps17(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) or v is None for v in obj):
            return "[" + ", ".join(dumps17(v) for v in obj) + "]"
        items = [pad + dumps17(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------- parsing


@dataclass
class Grid:
    lo: float | None
    hi: float | None
    points: int
    log: bool

    def values(self) -> np.ndarray:
        if self.log:
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.points)
        return np.linspace(self.lo, self.hi, self.points)


def parse_grid(text: str | None) -> Grid:
    """``min:max:points[:log|lin]``; ``min`` or ``max`` may be left empty for the default."""
    if text is None:
        return Grid(None, None, 200, True)
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise InputError(f"--grid expects min:max:points[:log|lin], got {text!r}")
    try:
        lo = float(parts[0]) if parts[0] else None
        hi = float(parts[1]) if parts[1] else None
        points = int(parts[2])
    except ValueError as exc:
        raise InputError(f"--grid: {exc}") from None
    scale = parts[3] if len(parts) == 4 else "log"
    if scale not in ("log", "lin"):
        raise InputError("--grid scale must be 'log' or 'lin'")
    if points < 2:
        raise InputError("--grid needs at least 2 points")
    return Grid(lo, hi, points, scale == "log")


def parse_delta(text: str) -> dict:
    """``auto`` | number | ``w=..,f=..`` (each side a number or ``auto``)."""
    out = {"w": "auto", "f": "auto"}
    text = text.strip()
    if "=" not in text:
        out = {"w": text, "f": text}
    else:
        for part in text.split(","):
            key, _, val = part.partition("=")
            key = key.strip().lower()
            if key not in out:
                raise InputError(f"--delta: unknown key {key!r} (use w= and f=)")
            out[key] = val.strip()
    for key, val in out.items():
        if val == "auto":
            continue
        try:
            num = float(val)
        except ValueError:
            raise InputError(f"--delta: {val!r} is neither a number nor 'auto'") from None
        if not num >= 0 or not math.isfinite(num):
            raise InputError("--delta values must be finite and nonnegative")
        out[key] = num
    return out


def parse_periods(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--periods: cannot parse {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise InputError("--periods must be positive numbers")
    return vals


def _column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _load(args) -> Sample:
    if args.input is None:
        raise InputError("--input is required")
    try:
        return load_sample_csv(args.input, _column(args.column))
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _threshold(sample: Sample, text: str) -> float:
    try:
        if text.startswith("q"):
            q = float(text[1:])
            if not 0.0 < q < 1.0:
                raise InputError("--threshold quantile must lie in (0, 1)")
            return sample.quantile(q)
        return float(text)
    except ValueError:
        raise InputError(f"--threshold: cannot parse {text!r}") from None


# ---------------------------------------------------------------- pipeline steps


def _fit(args):
    sample = _load(args)
    u = _threshold(sample, args.threshold)
    exc = sample.exceedances(u)
    if exc.size == 0:
        raise NoExceedancesError(f"no observations above u={u}")
    fit = fit_gpd_mle(exc, u=u, p_u=sample.exceedance_rate(u))
    return sample, fit


def _fit_summary(fit: FitResult) -> dict:
    m = fit.model
    return {
        "u": m.u,
        "p_u": m.p_u,
        "beta": m.beta,
        "sigma": m.sigma,
        "xi": m.xi,
        "xi_ci95": list(fit.xi_ci),
        "xi_se": fit.xi_se,
        "epsilon": fit.epsilon,
        "loglik": fit.loglik,
        "n_exceedances": fit.n_exceedances,
    }


def _alpha(args, fit: FitResult) -> float:
    if args.alpha not in (None, "auto"):
        try:
            alpha = float(args.alpha)
        except ValueError:
            raise InputError(f"--alpha: cannot parse {args.alpha!r}") from None
        if not alpha > 1:
            raise InputError("--alpha must exceed 1")
        return alpha
    return select_alpha(fit.model.beta, fit.epsilon)


def _check_s(s: float, model: TailModel):
    if not s >= 1:
        raise InputError("--s must be >= 1")
    if not s < model.beta:
        raise InputError(f"--s={s} must be below the fitted tail index {model.beta:.6g}")


def _radius_block(args, sample: Sample, fit: FitResult, want_w=True, want_f=True) -> dict:
    block = {}
    if want_w:
        _check_s(args.s, fit.model)
        est = estimate_delta_wasserstein(fit.model, sample, args.s)
        block["wasserstein"] = {
            "method": est.method,
            "s": est.s,
            "delta_conditional": est.delta,
            "delta": est.delta_unconditional,
            "n": est.n,
        }
    if want_f:
        alpha = _alpha(args, fit)
        try:
            est = estimate_delta_knn_hellinger(fit.model, sample, alpha, k=args.k, m=args.m, seed=args.seed)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        block["hellinger"] = {
            "method": est.method,
            "alpha": alpha,
            "alpha_source": "flag" if args.alpha not in (None, "auto") else "confidence-interval",
            "k": est.k,
            "m": est.m,
            "seed": est.seed,
            "jittered": est.jittered,
            "raw_conditional": est.raw,
            "delta_conditional": est.delta,
            "delta": est.delta_unconditional,
            "n": est.n,
        }
    return block


def _header(command: str, args) -> dict:
    return {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "config": {
            "input": str(args.input) if getattr(args, "input", None) else None,
            "column": getattr(args, "column", None),
            "threshold": getattr(args, "threshold", None),
        },
    }


def cmd_fit(args) -> dict:
    _, fit = _fit(args)
    report = _header("fit", args)
    report["fit"] = _fit_summary(fit)
    return report


def cmd_radius(args) -> dict:
    sample, fit = _fit(args)
    report = _header("radius", args)
    report["config"].update({"s": args.s, "alpha": args.alpha, "k": args.k, "m": args.m, "seed": args.seed})
    report["fit"] = _fit_summary(fit)
    report["radius"] = _radius_block(args, sample, fit)
    return report


def _divergence(args, fit: FitResult) -> DivergenceSpec:
    text = args.divergence
    try:
        if text in ("hellinger", "renyi") or text.endswith(":auto"):
            kind = text.split(":")[0]
            return DivergenceSpec(kind, _alpha(args, fit))
        return DivergenceSpec.parse(text)
    except ValueError as exc:
        raise InputError(f"--divergence: {exc}") from None


def parse_s_sweep(text: str | None) -> list[float]:
    """Comma-separated distortion powers, e.g. ``1.1,1.5,1.9``."""
    if not text:
        return []
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--s-sweep: cannot parse {text!r}") from None
    return sorted(set(vals))


def _safe_return_level(obj, period, obs):
    try:
        return return_level(obj, period, obs), None
    except ExtrapolationError as exc:
        return None, str(exc)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_bounds(args) -> dict:
    sample, fit = _fit(args)
    model = fit.model
    _check_s(args.s, model)
    spec = _divergence(args, fit)
    deltas = parse_delta(args.delta)
    periods = parse_periods(args.periods)
    obs = args.obs_per_year
    if not obs > 0:
        raise InputError("--obs-per-year must be positive")

    grid = parse_grid(args.grid)
    if grid.lo is None:
        if model.u <= 0:
            raise InputError("threshold is 0; give --grid with an explicit minimum")
        grid.lo = 1.01 * model.u
    if grid.hi is None:
        horizon = 1e4 * obs
        if 1.0 / horizon >= model.p_u:
            raise InputError("10^4-period level lies below the threshold; give --grid max")
        grid.hi = float(model.isf(1.0 / horizon))
    if not grid.lo > model.u:
        raise InputError(f"grid minimum {grid.lo} must exceed the threshold {model.u}")
    if not grid.hi > grid.lo:
        raise InputError("grid maximum must exceed its minimum")
    xs = grid.values()

    radius = {}
    need_w = deltas["w"] == "auto"
    need_f = deltas["f"] == "auto"
    if need_f and spec.generator.kind != "hellinger":
        raise InputError("automatic f-divergence radius is only available for hellinger/renyi; pass --delta f=...")
    if need_w or need_f:
        radius = _radius_block(args, sample, fit, want_w=need_w, want_f=need_f)
    delta_w = radius["wasserstein"]["delta"] if need_w else deltas["w"]
    delta_f = radius["hellinger"]["delta"] if need_f else deltas["f"]
    if need_f and spec.kind == "renyi":
        delta_f = math.log1p((spec.alpha - 1.0) * delta_f) / (spec.alpha - 1.0)

    ref = np.asarray(model.survival(xs), dtype=float)
    curves = {
        "reference": WorstCaseCurve(xs, ref, "exact", label="reference"),
        "wasserstein_preasymptotic": wasserstein.preasymptotic_curve(model, xs, args.s, delta_w),
        "wasserstein_asymptotic": wasserstein.asymptotic_curve(model, xs, args.s, delta_w),
        "fdiv_preasymptotic": fdiv.preasymptotic_curve(model, xs, spec, delta_f),
        "fdiv_asymptotic": fdiv.asymptotic_curve(model, xs, spec, delta_f),
    }
    sweep = []
    for s_i in parse_s_sweep(args.s_sweep):
        _check_s(s_i, model)
        d_i = estimate_delta_wasserstein(model, sample, s_i).delta_unconditional if need_w else delta_w
        name = f"wasserstein_preasymptotic_s{s_i:g}"
        curves[name] = wasserstein.preasymptotic_curve(model, xs, s_i, d_i)
        sweep.append({"s": s_i, "delta": d_i, "curve": name})
    tol = 1e-12
    for name in [k for k in curves if k.startswith(("wasserstein_pre", "fdiv_pre"))]:
        prob = curves[name].prob
        if not np.all(np.isfinite(prob)):
            raise NumericalError(f"{name}: non-finite probabilities")
        if np.any(prob < ref * (1 - tol)) or np.any(prob > 1 + tol):
            raise NumericalError(f"{name}: bound outside [reference, 1]")
    # asymptotic forms are approximations; points where they fall below the
    # reference are reported as null with a reason
    masked = {}
    for name in ("wasserstein_asymptotic", "fdiv_asymptotic"):
        prob = curves[name].prob.copy()
        bad = prob < ref
        prob[bad] = np.nan
        masked[name] = prob

    rows = []
    for i, x in enumerate(xs):
        row = {"x": x, "reference": ref[i]}
        for fam in ("wasserstein", "fdiv"):
            pre = curves[f"{fam}_preasymptotic"]
            row[f"{fam}_preasymptotic"] = pre.prob[i]
            val = masked[f"{fam}_asymptotic"][i]
            row[f"{fam}_asymptotic"] = None if math.isnan(val) else val
            if math.isnan(val):
                row[f"{fam}_asymptotic_reason"] = "asymptotic value below reference"
            else:
                row[f"{fam}_ratio"] = val / pre.prob[i]
        row["wasserstein_regime"] = int(curves["wasserstein_preasymptotic"].diagnostics["regime"][i])
        row["fdiv_saturated"] = bool(curves["fdiv_preasymptotic"].diagnostics["saturated"][i])
        rows.append(row)

    levels = []
    for period in periods:
        entry = {"period": period}
        val, why = _safe_return_level(model, period, obs)
        entry["reference"] = val
        if why:
            entry["reference_reason"] = why
        for name in ("wasserstein_preasymptotic", "fdiv_preasymptotic"):
            val, why = _safe_return_level(curves[name], period, obs)
            entry[name] = val
            if why:
                entry[f"{name}_reason"] = why
        levels.append(entry)

    report = _header("bounds", args)
    report["config"].update({
        "divergence": str(spec),
        "s": args.s,
        "delta": args.delta,
        "s_sweep": args.s_sweep,
        "grid": {"min": grid.lo, "max": grid.hi, "points": grid.points, "log": grid.log},
        "periods": periods,
        "obs_per_year": obs,
        "seed": args.seed,
    })
    report["fit"] = _fit_summary(fit)
    report["radius"] = radius
    report["delta_used"] = {"wasserstein": delta_w, "fdiv": delta_f}
    report["curves"] = {
        name: {
            "method": c.method,
            "label": c.label,
            "x": c.x,
            "probability": masked.get(name, c.prob),
        }
        for name, c in curves.items()
    }
    report["rows"] = rows
    if sweep:
        report["s_sweep"] = sweep
    report["return_levels"] = levels
    return report


def cmd_oracle_check(args) -> dict:
    """Compare analytic solvers with the brute-force oracles."""
    from . import oracle

    grid_size = args.grid_size
    worst_f = 0.0
    cells = 0
    for kind in ("kl", "hellinger:2", "chi2", "triangle", "jeffrey", "js"):
        spec = DivergenceSpec.parse(kind)
        top = spec.max_radius
        deltas = [top * i / 6 for i in range(1, 6)] if math.isfinite(top) else [0.05, 0.2, 0.5, 1.0, 2.0]
        for p in (0.3, 0.1, 0.01, 1e-4):
            ref = oracle.DiscreteDistribution([0.0, 1.0], [1.0 - p, p])
            for d in deltas:
                a = fdiv.solve_bx(p, spec, d).bound
                b = oracle.fdiv_worstcase_scan(ref, 0.5, spec, d, grid_size)
                worst_f = max(worst_f, abs(a - b))
                cells += 1
    tol_f = 1e-5

    model = TailModel(0.0, 1.0, args.beta, 1.0)
    disc = oracle.DiscreteDistribution.from_tail_model(model, args.atoms)
    xs = np.logspace(0.3, 2.0, 20)
    worst_w = 0.0
    for x in xs:
        a = wasserstein.preasymptotic_bound(model, x, args.s, args.check_delta).bound
        b = oracle.wasserstein_worstcase_greedy(disc, x, args.s, args.check_delta)
        worst_w = max(worst_w, abs(a - b) / a)
    report = _header("oracle-check", args)
    report["fdiv"] = {"cells": cells, "grid_size": grid_size, "max_abs_error": worst_f,
                      "tolerance": tol_f, "pass": worst_f <= tol_f}
    report["wasserstein"] = {"atoms": args.atoms, "beta": args.beta, "s": args.s, "delta": args.check_delta,
                             "points": int(xs.size), "max_rel_error": worst_w, "tolerance": 1e-3,
                             "pass": worst_w <= 1e-3}
    if not (report["fdiv"]["pass"] and report["wasserstein"]["pass"]):
        report["status"] = "mismatch"
    return report


# ---------------------------------------------------------------- output


def _write_outputs(report: dict, out: str | None) -> None:
    text = dumps17(report) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{report['command']}.json").write_text(text)
    for name, curve in report.get("curves", {}).items():
        with (outdir / f"{name}.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "probability"])
            for x, p in zip(curve["x"], curve["probability"]):
                writer.writerow([_fmt_float(float(x)), "" if not math.isfinite(p) else _fmt_float(float(p))])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-tails",
        description="Fit a GPD tail and compute worst-case tail probabilities over "
        "Wasserstein and f-divergence ambiguity sets.",
        epilog="exit codes: 0 success, 2 input error, 3 fit failure, 4 numerical failure. "
        "ROBUST_TAILS_THREADS caps the worker threads.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def data_flags(p):
        p.add_argument("--input", help="CSV file with one observation per row")
        p.add_argument("--column", default="0", help="column index or header name (default 0)")
        p.add_argument("--threshold", default="q0.95", help="value, or qP for the empirical P-quantile (default q0.95)")
        p.add_argument("--out", help="output directory (JSON report and per-curve CSV); stdout if omitted")

    def radius_flags(p):
        p.add_argument("--s", type=float, default=1.5, help="distortion power of the Wasserstein cost (default 1.5)")
        p.add_argument("--alpha", default="auto", help="Hellinger order, or 'auto' to match the shape CI (default)")
        p.add_argument("--k", type=int, default=None, help="nearest-neighbour order (default ceil(sqrt(n)))")
        p.add_argument("--m", type=int, default=None, help="synthetic sample size (default 10 n)")
        p.add_argument("--seed", type=int, default=0, help="seed of the synthetic sample (default 0)")

    p_fit = sub.add_parser("fit", help="fit the GPD tail above the threshold")
    data_flags(p_fit)

    p_rad = sub.add_parser("radius", help="estimate ambiguity radii and the Hellinger order")
    data_flags(p_rad)
    radius_flags(p_rad)

    p_b = sub.add_parser("bounds", help="worst-case tail curves and return levels")
    data_flags(p_b)
    radius_flags(p_b)
    p_b.add_argument("--divergence", default="hellinger",
                     help="kl | hellinger[:alpha] | chi2 | triangle | jeffrey | js | renyi[:alpha] (default hellinger)")
    p_b.add_argument("--delta", default="auto", help="'auto', a number for both sets, or w=..,f=.. (default auto)")
    p_b.add_argument("--grid", default=None, help="min:max:points[:log|lin]; empty min/max use defaults")
    p_b.add_argument("--periods", default=DEFAULT_PERIODS, help=f"return periods (default {DEFAULT_PERIODS})")
    p_b.add_argument("--obs-per-year", type=float, default=1.0, help="observations per period unit (default 1)")
    p_b.add_argument("--s-sweep", default=None,
                     help="extra distortion powers, e.g. 1.1,1.5,1.9: one more Wasserstein curve each")

    p_o = sub.add_parser("oracle-check", help="compare the solvers with brute-force oracles")
    p_o.add_argument("--grid-size", type=int, default=10**5, help="f-divergence scan grid (default 1e5)")
    p_o.add_argument("--atoms", type=int, default=10**4, help="atoms in the Wasserstein discretisation")
    p_o.add_argument("--beta", type=float, default=2.0, help="tail index of the test reference")
    p_o.add_argument("--s", type=float, default=1.5)
    p_o.add_argument("--check-delta", type=float, default=0.5)
    p_o.add_argument("--out", help="output directory; stdout if omitted")
    return parser


COMMANDS = {"fit": cmd_fit, "radius": cmd_radius, "bounds": cmd_bounds, "oracle-check": cmd_oracle_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
        _write_outputs(report, args.out)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, NoExceedancesError) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report.get("status") == "mismatch":
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
