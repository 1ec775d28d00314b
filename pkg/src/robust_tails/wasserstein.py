"""Worst-case exceedance probabilities over distorted 1-D Wasserstein balls.

The ground cost is ``d(y, z) = |y**s - z**s|`` with distortion power
``s >= 1`` and the transport order is 1, so

    W(F, G) = int_0^inf |F(y) - G(y)| s y**(s-1) dy.

The worst case at level ``x`` moves the reference mass lying in
``[a, x]`` just above ``x``, where ``a = U**(1/s)`` solves the slackness
equation ``delta = int_a^x (x**s - y**s) dF(y)``; the worst-case
probability is ``P(X > a)``.  Far in the tail this behaves like
``delta * x**(-s)`` whatever the reference tail index.

The reference here is a :class:`~robust_tails.evt.TailModel`.  Its
unmodelled mass ``1 - p_u`` below the threshold is placed at ``u``, the
cheapest location consistent with the model.  Once the continuous tail
mass in ``[u, x]`` has been moved, the remaining budget moves part of that
atom.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import hyp2f1

from . import _kernels
from ._parallel import map_chunks
from .evt import TailModel, WorstCaseCurve

__all__ = [
    "DivergentIntegralError",
    "WassersteinBoundResult",
    "asymptotic_bound",
    "asymptotic_curve",
    "gpd_tail_integral",
    "preasymptotic_bound",
    "preasymptotic_bounds",
    "preasymptotic_curve",
    "slackness_integral",
    "solve_U",
    "wasserstein_distorted",
]

REGIME_INTERIOR = "interior"
REGIME_ATOM = "threshold-atom"
REGIME_SATURATED = "saturated"


class DivergentIntegralError(ValueError):
    """``int s y**(s-1) P(X > y) dy`` diverges (``s >= beta``)."""


class SaturationError(ValueError):
    """No interior root: the budget moves all continuous mass below ``x``."""


@dataclass(frozen=True)
class WassersteinBoundResult:
    """Worst-case probability at level ``x``.

    ``U = a**s`` where ``a`` is the lowest level whose mass is moved, and
    ``lambda_star = 1 / (x**s - U)``; both are NaN when saturated.
    """

    x: float
    bound: float
    method: str
    regime: str
    U: float = math.nan
    lambda_star: float = math.nan

    @property
    def saturated(self) -> bool:
        return self.regime == REGIME_SATURATED


def _check(model: TailModel, s: float, delta: float):
    if not s >= 1.0:
        raise ValueError(f"distortion power s must be >= 1, got {s}")
    if not s < model.beta:
        raise ValueError(f"need s < beta for a finite s-th moment (s={s}, beta={model.beta:.6g})")
    if not delta >= 0.0:
        raise ValueError(f"radius must be nonnegative, got {delta}")


def slackness_integral(model: TailModel, x: float, s: float, a: float) -> float:
    """``int_a^x (x**s - y**s) dF(y)`` over the continuous tail, ``u <= a <= x``."""
    if a < model.u:
        raise ValueError("lower limit below the model threshold")
    return float(_kernels.slackness(model.u, model.p_u, model.beta, model.sigma, s, x, a))


def preasymptotic_bounds(model: TailModel, x, s: float, delta: float):
    """Vectorised pre-asymptotic solve over levels ``x > u``.

    Returns:
        ``(bound, lower, regime_codes)`` where ``lower = U**(1/s)`` and
        regime codes are 0 interior, 1 threshold atom, 2 saturated.
    """
    _check(model, s, delta)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= model.u):
        raise ValueError("levels must lie strictly above the threshold")
    if delta == 0.0:
        return np.asarray(model.survival(xs)), xs.copy(), np.zeros(xs.shape, dtype=np.int32)

    def work(chunk):
        lower, status = _kernels.solve_lower(
            model.u, model.p_u, model.beta, model.sigma, s, chunk, delta
        )
        return np.asarray(lower), np.asarray(status)

    lower, status = map_chunks(work, xs)
    bound = np.asarray(model.survival(lower), dtype=float)
    regime = np.zeros(xs.shape, dtype=np.int32)
    edge = status == _kernels.STATUS_SATURATED
    if np.any(edge):
        atom = 1.0 - model.p_u
        span = xs[edge] ** s - model.u**s
        tail_cost = np.array(
            [slackness_integral(model, xi, s, model.u) for xi in xs[edge]], dtype=float
        )
        extra = (delta - tail_cost) / span
        partial = extra < atom
        eb = np.where(partial, model.p_u + extra, 1.0)
        bound[edge] = eb
        regime[edge] = np.where(partial, 1, 2)
        lower[edge] = np.where(partial, model.u, np.nan)
    return np.minimum(bound, 1.0), lower, regime


def preasymptotic_bound(model: TailModel, x: float, s: float, delta: float) -> WassersteinBoundResult:
    """Worst-case ``P(X > x)`` over the ball, solving the slackness equation."""
    bound, lower, regime = preasymptotic_bounds(model, np.array([float(x)]), s, delta)
    code = int(regime[0])
    name = (REGIME_INTERIOR, REGIME_ATOM, REGIME_SATURATED)[code]
    if code == 2:
        return WassersteinBoundResult(float(x), 1.0, "preasymptotic", name)
    U = float(lower[0]) ** s
    gap = float(x) ** s - U
    lam = 1.0 / gap if gap > 0 else math.inf
    return WassersteinBoundResult(float(x), float(bound[0]), "preasymptotic", name, U=U, lambda_star=lam)


def solve_U(model: TailModel, x: float, s: float, delta: float) -> float:
    """``U(x)`` solving ``delta = int_{U^(1/s)}^x (x**s - y**s) dF(y)``.

    Raises:
        SaturationError: if the continuous tail mass in ``[u, x]`` can all
            be moved within budget, so no interior root exists.
    """
    _check(model, s, delta)
    if not x > model.u:
        raise ValueError("level must lie strictly above the threshold")
    if delta == 0.0:
        return float(x) ** s
    lower, status = _kernels.solve_lower(
        model.u, model.p_u, model.beta, model.sigma, s, np.array([float(x)]), delta
    )
    if int(status[0]) == _kernels.STATUS_SATURATED:
        raise SaturationError(
            f"radius {delta} moves all tail mass between u={model.u} and x={x}"
        )
    return float(lower[0]) ** s


def asymptotic_bound(x, s: float, delta: float):
    """``min(1, delta * x**(-s))``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("levels must be positive")
    out = np.minimum(1.0, delta * arr ** (-s))
    return float(out) if np.ndim(x) == 0 else out


def preasymptotic_curve(model: TailModel, x, s: float, delta: float) -> WorstCaseCurve:
    bound, lower, regime = preasymptotic_bounds(model, x, s, delta)
    return WorstCaseCurve(
        np.atleast_1d(np.asarray(x, dtype=float)), bound, "preasymptotic",
        label=f"wasserstein:s={s:g}",
        diagnostics={"lower": lower, "regime": regime, "delta": float(delta), "s": float(s)},
    )


def asymptotic_curve(model: TailModel, x, s: float, delta: float) -> WorstCaseCurve:
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    return WorstCaseCurve(
        xs, np.atleast_1d(asymptotic_bound(xs, s, delta)), "asymptotic",
        label=f"wasserstein:s={s:g}", diagnostics={"delta": float(delta), "s": float(s)},
    )


def gpd_tail_integral(model: TailModel, a: float, s: float, conditional: bool = False) -> float:
    """``int_a^inf s y**(s-1) P(X > y) dy`` for ``a >= u`` (closed form).

    With ``c = beta * sigma`` and ``d = c - u`` the survival is
    ``p_u (c / (y + d)) ** beta`` and the integral is
    ``p_u c**beta s a**(s-beta) / (beta-s) * 2F1(beta, beta-s; beta-s+1; -d/a)``.
    ``conditional=True`` divides by ``p_u``.

    Raises:
        DivergentIntegralError: if ``s >= beta``.
    """
    beta = model.beta
    if s >= beta:
        raise DivergentIntegralError(f"tail integral diverges for s={s} >= beta={beta:.6g}")
    if a < model.u:
        raise ValueError("lower limit below the model threshold")
    c = model.scale
    d = c - model.u
    weight = 1.0 if conditional else model.p_u
    if a == 0.0:
        # u = 0: int_0^inf s y^(s-1) (c / (y + c))^beta dy = c^s s B(s, beta - s)
        return weight * c**s * s * math.exp(
            math.lgamma(s) + math.lgamma(beta - s) - math.lgamma(beta)
        )
    z = -d / a
    val = hyp2f1(beta, beta - s, beta - s + 1.0, z)
    if not math.isfinite(val):
        return weight * _tail_integral_quad(model, a, s)
    return weight * (c / a) ** beta * s * a**s / (beta - s) * val


def _tail_integral_quad(model: TailModel, a: float, s: float) -> float:
    def integrand(y):
        return s * y ** (s - 1.0) * model.conditional_survival(y)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, a, np.inf, epsabs=0.0, epsrel=1e-12, limit=500)
    return val


def wasserstein_distorted(F, G, s: float, domain_hi: float, breakpoints=(), tail_integral: float = 0.0):
    """Distorted order-1 Wasserstein distance between two CDFs on ``[0, inf)``.

    Integrates ``|F(y) - G(y)| s y**(s-1)`` over ``[0, domain_hi]``
    piecewise between ``breakpoints`` (jump points of step CDFs belong
    there) and adds ``tail_integral``, the caller's value of the same
    integrand over ``[domain_hi, inf)`` (see :func:`gpd_tail_integral`).
    """
    if s < 1.0:
        raise ValueError("distortion power s must be >= 1")
    pts = sorted({0.0, float(domain_hi), *(float(b) for b in breakpoints if 0.0 < b < domain_hi)})

    def integrand(y):
        return abs(F(y) - G(y)) * s * y ** (s - 1.0)

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)
            total += val
    if not math.isfinite(tail_integral) or tail_integral < 0:
        raise DivergentIntegralError("tail contribution must be finite and nonnegative")
    return total + tail_integral
