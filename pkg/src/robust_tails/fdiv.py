"""Worst-case exceedance probabilities over f-divergence balls.

For a reference exceedance probability ``p = P(X > x)`` the optimal
likelihood ratio is two-valued, ``a`` below ``x`` and ``b`` above, with
``(1 - p) a + p b = 1`` and

    T(b) = p f~(b) + (1 - p) f~((1 - b p) / (1 - p)) - delta = 0,

so the worst-case probability is ``b p``.  When ``T(1/p) <= 0`` the budget
covers moving all mass above ``x`` and the bound saturates at 1.

Asymptotically ``b p ~ f~^{<-}(delta / p) p`` when ``f~*(0) = inf``, and
``b p -> l`` with ``l f~*(0) + f~(1 - l) = delta`` when ``f~*(0)`` is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import map_chunks
from .divergences import (
    DivergenceSpec,
    boundary_values,
    f_inverse_tail,
    f_tilted,
    f_tilted_prime,
)
from .evt import TailModel, WorstCaseCurve

__all__ = [
    "FDivBoundResult",
    "TailDescription",
    "asymptotic_bound",
    "asymptotic_curve",
    "closed_form_params",
    "preasymptotic_bounds",
    "preasymptotic_curve",
    "solve_bx",
    "solve_ell",
]


@dataclass(frozen=True)
class FDivBoundResult:
    """Worst-case probability at one level, with the optimal two-level ratio.

    ``a_x``, ``lambda1`` and ``lambda2`` are NaN when not applicable
    (saturated, zero radius, or asymptotic methods).
    """

    p_x: float
    bound: float
    method: str
    saturated: bool
    b_x: float = math.nan
    a_x: float = math.nan
    lambda1: float = math.nan
    lambda2: float = math.nan
    x: float = math.nan
    reason: str = ""


def _check_p(p_x):
    arr = np.asarray(p_x, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise ValueError("p_x must lie strictly between 0 and 1")
    return arr


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not delta >= 0.0 or math.isnan(delta):
        raise ValueError(f"radius must be nonnegative, got {delta}")
    return delta


def preasymptotic_bounds(p_x, spec: DivergenceSpec, delta: float):
    """Vectorised pre-asymptotic solve.

    Returns:
        ``(bound, b_x, saturated)`` arrays with the shape of ``p_x``.
    """
    p = np.atleast_1d(_check_p(p_x))
    delta = _check_delta(delta)
    deff = spec.effective_radius(delta)
    if deff == 0.0:
        return p.copy(), np.ones_like(p), np.zeros(p.shape, dtype=bool)
    if deff >= spec.max_radius:
        return np.ones_like(p), 1.0 / p, np.ones(p.shape, dtype=bool)
    code, alpha = spec.code, spec.generator.alpha or 0.0

    def work(chunk):
        b, status = _kernels.solve_bx(code, alpha, chunk, deff)
        return np.asarray(b), np.asarray(status)

    b, status = map_chunks(work, p)
    saturated = status == _kernels.STATUS_SATURATED
    bound = np.where(saturated, 1.0, np.minimum(b * p, 1.0))
    return bound, b, saturated


def solve_bx(p_x: float, spec: DivergenceSpec, delta: float) -> FDivBoundResult:
    """Solve ``T(b) = 0`` on ``(1, 1/p_x)`` and report the worst-case probability ``b p_x``.

    A zero radius returns the reference probability.  Radii at or above
    ``f~(0) + f~*(0)`` make the ball contain every absolutely continuous
    law, and the bound is 1.
    """
    p = float(_check_p(p_x))
    delta = _check_delta(delta)
    deff = spec.effective_radius(delta)
    if deff == 0.0:
        return FDivBoundResult(p, p, "preasymptotic", False, b_x=1.0, a_x=1.0, reason="zero radius")
    if deff >= spec.max_radius:
        return FDivBoundResult(
            p, 1.0, "preasymptotic", True, b_x=1.0 / p, a_x=0.0,
            reason="radius reaches f(0) + f*(0); ball contains every distribution",
        )
    bound, b, sat = preasymptotic_bounds(np.array([p]), spec, delta)
    if sat[0]:
        return FDivBoundResult(
            p, 1.0, "preasymptotic", True, b_x=1.0 / p, a_x=0.0,
            reason="budget moves all mass above x",
        )
    bx = float(b[0])
    ax = max((1.0 - p * bx) / (1.0 - p), 0.0)
    d_b = float(f_tilted_prime(spec, bx))
    d_a = float(f_tilted_prime(spec, ax))
    lam1 = 1.0 / (d_b - d_a) if d_b > d_a else math.nan
    return FDivBoundResult(
        p, float(bound[0]), "preasymptotic", False,
        b_x=bx, a_x=ax, lambda1=lam1, lambda2=lam1 * d_a,
    )


def solve_ell(spec: DivergenceSpec, delta: float) -> float:
    """Limit ``l`` of the worst-case probability for generators with finite ``f~*(0)``.

    Root of ``g(l) = l f~*(0) + f~(1 - l) = delta`` on ``(0, 1]``; ``g`` is
    strictly increasing from ``g(0) = 0`` to ``g(1) = f~*(0) + f~(0)``.

    Raises:
        ValueError: if ``f~*(0)`` is infinite.
    """
    delta = _check_delta(delta)
    f0, fstar0 = boundary_values(spec)
    if math.isinf(fstar0):
        raise ValueError(f"{spec} has f*(0) = inf; the limit is 0, use the inverse-tail form")
    deff = spec.effective_radius(delta)
    if deff == 0.0:
        return 0.0
    if deff >= f0 + fstar0:
        return 1.0

    def g(ell):
        return ell * fstar0 + float(f_tilted(spec, 1.0 - ell))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < deff:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    return 0.5 * (lo + hi)


def asymptotic_bound(p_x, spec: DivergenceSpec, delta: float):
    """Asymptotic worst-case probability.

    ``min(1, f~^{<-}(delta / p) p)`` if ``f~*(0) = inf``, else the constant
    ``l`` from :func:`solve_ell`.
    """
    p = _check_p(p_x)
    delta = _check_delta(delta)
    _, fstar0 = boundary_values(spec)
    deff = spec.effective_radius(delta)
    if deff >= spec.max_radius:
        out = np.ones_like(p)
    elif math.isinf(fstar0):
        inv = np.asarray(f_inverse_tail(spec.generator, deff / p), dtype=float)
        out = np.minimum(inv * p, 1.0)
    else:
        out = np.full_like(p, solve_ell(spec, delta))
    return float(out) if np.ndim(p_x) == 0 else out


@dataclass(frozen=True)
class TailDescription:
    """Closed-form worst-case tail for a GEV/GPD-type reference.

    ``shape`` is ``"power"`` (``(x / (beta_star sigma_star)) ** -beta_star``),
    ``"logarithmic"`` (``level / log x`` with ``level = delta / beta_hat``)
    or ``"constant"`` (``level``).
    """

    spec: str
    shape: str
    beta_star: float = math.nan
    sigma_star: float = math.nan
    level: float = math.nan

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        if self.shape == "power":
            out = (x / (self.beta_star * self.sigma_star)) ** (-self.beta_star)
        elif self.shape == "logarithmic":
            out = self.level / np.log(x)
        else:
            out = np.full_like(x, self.level)
        return float(out) if out.ndim == 0 else out


def closed_form_params(
    spec: DivergenceSpec, beta_hat: float, sigma_hat: float, delta: float
) -> TailDescription:
    """Worst-case tail parameters for a reference with ``p_x ~ (x / (beta_hat sigma_hat)) ** -beta_hat``."""
    if beta_hat <= 0 or sigma_hat <= 0:
        raise ValueError("beta_hat and sigma_hat must be positive")
    delta = _check_delta(delta)
    kind = spec.kind
    if kind in ("kl", "jeffrey"):
        return TailDescription(str(spec), "logarithmic", level=delta / beta_hat)
    if kind in ("triangle", "js"):
        return TailDescription(str(spec), "constant", level=solve_ell(spec, delta))
    if kind == "chi2":
        return TailDescription(
            str(spec), "power", beta_star=beta_hat / 2.0,
            sigma_star=2.0 * delta ** (1.0 / beta_hat) * sigma_hat,
        )
    alpha = spec.alpha
    expo = 1.0 / (beta_hat * (alpha - 1.0))
    beta_star = (alpha - 1.0) / alpha * beta_hat
    if kind == "renyi":
        sigma_star = alpha / (alpha - 1.0) * math.expm1((alpha - 1.0) * delta) ** expo * sigma_hat
    else:
        sigma_star = alpha * (alpha - 1.0) ** (expo - 1.0) * delta**expo * sigma_hat
    return TailDescription(str(spec), "power", beta_star=beta_star, sigma_star=sigma_star)


def _grid(model: TailModel, x):
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.asarray(model.survival(xs), dtype=float)
    if np.any(p >= 1.0):
        raise ValueError("levels must have reference exceedance probability below 1")
    return xs, p


def preasymptotic_curve(model: TailModel, x, spec: DivergenceSpec, delta: float) -> WorstCaseCurve:
    """Exact worst-case curve over the levels ``x`` (all ``>= model.u``)."""
    xs, p = _grid(model, x)
    bound, b, sat = preasymptotic_bounds(p, spec, delta)
    return WorstCaseCurve(
        xs, bound, "preasymptotic", label=str(spec),
        diagnostics={"b_x": b, "saturated": sat, "delta": float(delta)},
    )


def asymptotic_curve(model: TailModel, x, spec: DivergenceSpec, delta: float) -> WorstCaseCurve:
    xs, p = _grid(model, x)
    _, fstar0 = boundary_values(spec)
    method = "asymptotic-inverse" if math.isinf(fstar0) else "asymptotic-ell"
    bound = np.atleast_1d(asymptotic_bound(p, spec, delta))
    return WorstCaseCurve(xs, bound, method, label=str(spec), diagnostics={"delta": float(delta)})
