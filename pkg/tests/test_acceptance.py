"""Acceptance criteria, one test each.

Every test prints a single ``CRITERION n: PASS|FAIL|SKIP`` line (also
collected into the terminal summary) before asserting, so a failing
criterion still reports its measured values.
"""

import argparse
import json
import math
import os
import time

import numpy as np
import pytest

from robust_tails import fdiv, oracle, wasserstein
from robust_tails.cli import _fit, main
from robust_tails.divergences import KINDS, DivergenceSpec, divergence_discrete, lambert_w
from robust_tails.evt import TailModel
from robust_tails.radius import estimate_delta_knn_hellinger, estimate_delta_wasserstein, select_alpha

from conftest import ACCEPTANCE_LINES


def report(n: int, ok: bool, elapsed: float, limit: float, detail: str):
    timed = elapsed < limit
    status = "PASS" if ok and timed else "FAIL"
    line = f"CRITERION {n}: {status} ({elapsed:.2f} s of {limit:g} s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert timed, line


def gpd(beta, sigma=1.0):
    return TailModel(0.0, 1.0, beta, sigma)


def test_criterion_01_triangle_limit():
    t0 = time.perf_counter()
    spec = DivergenceSpec("triangle")
    errs = [abs(fdiv.solve_ell(spec, d) - 2 * d / (d + 2)) for d in (0.1, 1.0, 1.9)]
    report(1, max(errs) <= 1e-10, time.perf_counter() - t0, 1.0, f"max |l - 2d/(d+2)| = {max(errs):.3e}")


def test_criterion_02_hellinger_tail_index():
    t0 = time.perf_counter()
    model = gpd(2.0)
    delta = 0.05
    asym_errs, pre_errs = [], []
    for alpha in (2.0, 2.86, 4.0):
        spec = DivergenceSpec("hellinger", alpha)
        target = -(alpha - 1) / alpha * model.beta
        xs = np.logspace(3, 6, 61)
        asym = fdiv.asymptotic_bound(model.survival(xs), spec, delta)
        slope = np.polyfit(np.log(xs), np.log(asym), 1)[0]
        asym_errs.append(abs(slope / target - 1))
        xs = np.geomspace(model.isf(1e-8), model.isf(1e-12), 41)
        pre = fdiv.preasymptotic_curve(model, xs, spec, delta).prob
        local = np.diff(np.log(pre)) / np.diff(np.log(xs))
        pre_errs.append(float(np.max(np.abs(local / target - 1))))
    ok = max(asym_errs) <= 0.005 and max(pre_errs) <= 0.02
    report(2, ok, time.perf_counter() - t0, 10.0,
           f"asymptotic slope rel err {max(asym_errs):.2e} (tol 5e-3), "
           f"pre-asymptotic local slope rel err {max(pre_errs):.2e} (tol 2e-2)")


def _nearest_to_survival(model, xs, p):
    surv = np.asarray(model.survival(xs))
    return float(xs[np.argmin(np.abs(np.log(surv / p)))])


def test_criterion_03_wasserstein_asymptote():
    t0 = time.perf_counter()
    ratios = []
    for beta, s, delta in ((2.0, 1.5, 3.2), (3.0, 1.0, 1.0), (2.5, 2.0, 0.5)):
        model = gpd(beta)
        xs = np.geomspace(1.5, model.isf(1e-12), 400)
        x = _nearest_to_survival(model, xs, 1e-8)
        bound = wasserstein.preasymptotic_bound(model, x, s, delta).bound
        ratios.append(bound / (delta * x ** (-s)))
    ok = all(0.95 <= r <= 1.05 for r in ratios)
    detail = ", ".join(f"{c}: {r:.4f}" for c, r in zip(("(2,1.5,3.2)", "(3,1,1)", "(2.5,2,0.5)"), ratios))
    report(3, ok, time.perf_counter() - t0, 10.0, f"bound/(d x^-s) at p~1e-8: {detail} (need [0.95, 1.05])")


def test_criterion_04_reference_independence():
    t0 = time.perf_counter()
    m1, m2 = gpd(2.0), gpd(3.0)
    lo = max(m1.isf(1e-8), m2.isf(1e-8))
    xs = np.geomspace(lo, m1.isf(1e-12), 60)
    b1 = wasserstein.preasymptotic_curve(m1, xs, 1.5, 1.0).prob
    b2 = wasserstein.preasymptotic_curve(m2, xs, 1.5, 1.0).prob
    dev = np.abs(b1 / b2 - 1)
    ok = float(dev.max()) <= 0.05
    report(4, ok, time.perf_counter() - t0, 10.0,
           f"max |ratio - 1| over p<=1e-8 = {dev.max():.4f} at x={xs[np.argmax(dev)]:.4g}, "
           f"{dev[-1]:.4f} at x={xs[-1]:.4g} (need <= 0.05)")


def test_criterion_05_fdiv_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    cells = 0
    for kind in ("kl", "hellinger:2", "chi2", "triangle", "jeffrey", "js"):
        spec = DivergenceSpec.parse(kind)
        top = spec.max_radius
        # infinite cap: span a range that reaches saturation at p = 0.3
        deltas = [top * i / 6 for i in range(1, 6)] if math.isfinite(top) else [0.05, 0.2, 0.5, 1.0, 2.0]
        for p in (0.3, 0.1, 0.01, 1e-4):
            ref = oracle.DiscreteDistribution([0.0, 1.0], [1.0 - p, p])
            for d in deltas:
                a = fdiv.solve_bx(p, spec, d).bound
                b = oracle.fdiv_worstcase_scan(ref, 0.5, spec, d, 10**5)
                worst = max(worst, abs(a - b))
                cells += 1
    report(5, worst <= 1e-5, time.perf_counter() - t0, 60.0,
           f"{cells} cells, max |solve_bx p - scan| = {worst:.3e} (tol 1e-5)")


def test_criterion_06_wasserstein_oracle():
    t0 = time.perf_counter()
    model = gpd(2.0)
    disc = oracle.DiscreteDistribution.from_tail_model(model, 10**4)
    worst = 0.0
    for x in np.logspace(0.3, 2.0, 20):
        a = wasserstein.preasymptotic_bound(model, x, 1.5, 0.5).bound
        b = oracle.wasserstein_worstcase_greedy(disc, x, 1.5, 0.5)
        worst = max(worst, abs(a - b) / a)
    pareto = TailModel(1.0, 1.0, 2.0, 0.5)
    u_err = abs(wasserstein.solve_U(pareto, 10.0, 1.0, 0.5) - (-5 + math.sqrt(125)) / 2)
    ok = worst <= 1e-3 and u_err <= 1e-9
    report(6, ok, time.perf_counter() - t0, 30.0,
           f"greedy rel err {worst:.3e} (tol 1e-3), Pareto U err {u_err:.2e} (tol 1e-9)")


def test_criterion_07_tilt_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for kind in KINDS:
        spec = DivergenceSpec(kind, 2.86 if kind in ("hellinger", "renyi") else None)
        for _ in range(100):
            size = int(rng.integers(2, 8))
            p = rng.dirichlet(np.ones(size))
            q = rng.dirichlet(np.ones(size))
            raw = divergence_discrete(spec, p, q)
            tilted = divergence_discrete(spec, p, q, tilted=True)
            worst = max(worst, abs(raw - tilted) / max(1.0, abs(raw)))
    report(7, worst <= 1e-12, time.perf_counter() - t0, 1.0,
           f"{len(KINDS)} kinds x 100 pairs, max discrepancy {worst:.2e} (tol 1e-12)")


def test_criterion_08_lambert_w():
    t0 = time.perf_counter()
    t = np.logspace(-6, 12, 181)
    w = np.asarray(lambert_w(t))
    rel = float(np.max(np.abs(w * np.exp(w) / t - 1)))
    e_err = abs(lambert_w(math.e) - 1.0)
    ok = rel <= 1e-12 and e_err <= 1e-14
    report(8, ok, time.perf_counter() - t0, 1.0, f"max rel residual {rel:.2e} (tol 1e-12), |W(e) - 1| = {e_err:.1e}")


DANISH = os.environ.get("ROBUST_TAILS_DANISH")


def test_criterion_09_danish(tmp_path):
    if not DANISH:
        line = "CRITERION 9: SKIP (set ROBUST_TAILS_DANISH to a CSV of the Danish fire losses to run it)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        pytest.skip("Danish fire-loss data not supplied")
    column = os.environ.get("ROBUST_TAILS_DANISH_COLUMN", "0")
    t0 = time.perf_counter()
    sample, fit = _fit(argparse.Namespace(input=DANISH, column=column, threshold="9.97"))
    model = fit.model
    alpha = select_alpha(model.beta, fit.epsilon)
    d_w = estimate_delta_wasserstein(model, sample, 1.5)
    d_h = estimate_delta_knn_hellinger(model, sample, alpha, seed=0)
    out = tmp_path / "danish"
    code = main(["bounds", "--input", DANISH, "--column", column, "--threshold", "9.97", "--out", str(out)])
    rows = json.loads((out / "bounds.json").read_text())["rows"] if code == 0 else []
    q999 = sample.quantile(0.999)
    tail = [r for r in rows if r["x"] >= q999]
    ordered = bool(tail) and all(
        r["wasserstein_preasymptotic"] is not None and r["fdiv_preasymptotic"] is not None
        and r["wasserstein_preasymptotic"] >= r["fdiv_preasymptotic"] >= r["reference"]
        for r in tail
    )
    checks = {
        "beta": abs(model.beta - 2.03) <= 0.02,
        "sigma": abs(model.sigma - 7.034) <= 0.1,
        "delta_w": abs(d_w.delta_unconditional - 3.2) <= 0.2,
        "alpha": abs(alpha - 2.86) <= 0.05,
        # the k-NN estimator works on the exceedance sample, so its native scale is conditional
        "delta_h": 0.003 <= d_h.delta <= 0.03,
        "ordering": ordered,
    }
    failed = [k for k, v in checks.items() if not v]
    report(9, not failed, time.perf_counter() - t0, 60.0,
           f"beta {model.beta:.4f}, sigma {model.sigma:.4f}, delta_W {d_w.delta_unconditional:.4f} "
           f"(conditional {d_w.delta:.4f}), alpha {alpha:.4f}, delta_H {d_h.delta:.5f} "
           f"(unconditional {d_h.delta_unconditional:.5f}), ordering {'holds' if ordered else 'violated'}"
           + (f"; failed: {', '.join(failed)}" if failed else ""))


def test_criterion_10_kl_logarithmic_convergence():
    t0 = time.perf_counter()
    model = gpd(1.0)
    delta = 1.0
    spec = DivergenceSpec("kl")
    # grid starts in the tail (p = 1e-2); closer to the body the ratio first rises
    xs = np.geomspace(model.isf(1e-2), model.isf(1e-12), 60)
    bound = fdiv.preasymptotic_curve(model, xs, spec, delta).prob
    ratio = bound * model.beta * np.log(xs) / delta
    live = bound < 1.0
    gap = np.abs(ratio[live] - 1)
    trending = bool(np.all(np.diff(gap) <= 1e-12))
    last = float(ratio[-1])
    ok = trending and 0.85 <= last <= 1.15
    report(10, ok, time.perf_counter() - t0, 10.0,
           f"|ratio - 1| {'nonincreasing' if trending else 'not monotone'} over {int(live.sum())} points, "
           f"ratio {ratio[live][0]:.4f} -> {last:.4f} at p={model.survival(xs[-1]):.1e} (need [0.85, 1.15])")
