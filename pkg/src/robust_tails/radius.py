"""Data-driven calibration of the ambiguity radius and the Hellinger order."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from ._parallel import map_chunks
from .evt import NoExceedancesError, Sample, TailModel
from .wasserstein import gpd_tail_integral, wasserstein_distorted

__all__ = [
    "RadiusEstimate",
    "estimate_delta_knn_hellinger",
    "estimate_delta_wasserstein",
    "knn_alpha_integral",
    "philox_generator",
    "select_alpha",
]

JITTER_RELATIVE = 1e-9


@dataclass(frozen=True)
class RadiusEstimate:
    """A radius estimate with its method metadata.

    ``delta`` compares the conditional laws of ``X`` given ``X > u``.  The
    fitted and empirical laws share everything below ``u``, so the same
    discrepancy between the full (unconditional) laws is ``p_u * delta``;
    that is the value on the scale the worst-case solvers use.
    ``raw`` keeps the unclamped k-NN value, which can be slightly negative.
    """

    delta: float
    method: str
    n: int
    k: int | None = None
    m: int | None = None
    alpha: float | None = None
    s: float | None = None
    seed: int | None = None
    raw: float | None = None
    jittered: bool = False
    p_u: float = 1.0

    @property
    def delta_unconditional(self) -> float:
        return self.p_u * self.delta

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("radius estimate must be nonnegative")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")


def philox_generator(seed: int) -> np.random.Generator:
    """Counter-based generator: the i-th draw depends only on ``(seed, i)``."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _exceedances(model: TailModel, sample: Sample) -> np.ndarray:
    above = sample.above(model.u)
    if above.size == 0:
        raise NoExceedancesError(f"no observations above the threshold u={model.u}")
    return above


def estimate_delta_wasserstein(model: TailModel, sample: Sample, s: float) -> RadiusEstimate:
    """Distorted Wasserstein distance between the fitted and empirical exceedance laws.

    Both laws are conditional on ``X > u``.  The integral of
    ``|F_n - G| s y**(s-1)`` is split at the order statistics and at the
    points where the fitted CDF crosses each empirical level, so every
    piece is smooth.  Beyond the largest observation the analytic
    fitted-tail integral is added.
    """
    if not s >= 1.0:
        raise ValueError("distortion power s must be >= 1")
    if not s < model.beta:
        raise ValueError(f"need s < beta (s={s}, beta={model.beta:.6g})")
    ys = _exceedances(model, sample)
    n = ys.size
    levels = np.arange(1, n) / n
    crossings = model.u + model.scale * np.expm1(-np.log1p(-levels) / model.beta)

    def F_n(y):
        return np.searchsorted(ys, y, side="right") / n if y >= model.u else 0.0

    def G(y):
        if y <= model.u:
            return 0.0
        return -math.expm1(-model.beta * math.log1p((y - model.u) / model.scale))

    breaks = np.concatenate(([model.u], ys, crossings[crossings < ys[-1]]))
    tail = gpd_tail_integral(model, float(ys[-1]), s, conditional=True)
    dist = wasserstein_distorted(F_n, G, s, float(ys[-1]), breakpoints=breaks, tail_integral=tail)
    return RadiusEstimate(delta=float(dist), method="wasserstein-empirical", n=n, s=float(s), p_u=model.p_u)


def _jitter(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    span = float(values.max() - values.min()) or float(np.abs(values).max()) or 1.0
    return values + rng.uniform(-1.0, 1.0, values.size) * JITTER_RELATIVE * span


def knn_alpha_integral(x_sample, y_sample, alpha: float, k: int, rng=None):
    """k-NN estimate of ``int p**alpha q**(1-alpha)`` from 1-D samples of ``p`` and ``q``.

    ``D = mean_i [((n-1) rho_k(x_i)) / (m nu_k(x_i))]**(1-alpha) * B``
    with ``rho_k`` the within-sample and ``nu_k`` the cross-sample k-th
    nearest-neighbour distance and
    ``B = Gamma(k)**2 / (Gamma(k-alpha+1) Gamma(k+alpha-1))``.

    Tied values in ``x_sample`` get a seeded uniform jitter of relative
    size 1e-9 (``rng`` defaults to seed 0).

    Returns:
        ``(estimate, jittered)``.
    """
    x = np.sort(np.asarray(x_sample, dtype=float))
    y = np.sort(np.asarray(y_sample, dtype=float))
    n, m = x.size, y.size
    if not alpha > 1.0:
        raise ValueError("alpha must exceed 1")
    if k < math.ceil(alpha):
        raise ValueError(f"k={k} too small for alpha={alpha}: need k >= ceil(alpha)")
    if not k < min(n, m):
        raise ValueError(f"need k < min(n, m) (k={k}, n={n}, m={m})")
    jittered = False
    if np.any(np.diff(x) == 0.0):
        rng = rng if rng is not None else philox_generator(0)
        x = np.sort(_jitter(x, rng))
        jittered = True
    rho = np.asarray(_kernels.knn_within(x, k))

    def cross(chunk):
        return (np.asarray(_kernels.knn_cross(y, chunk, k)),)

    (nu,) = map_chunks(cross, x, min_chunk=256)
    if np.any(rho <= 0.0) or np.any(nu <= 0.0):
        raise FloatingPointError("zero nearest-neighbour distance after jitter")
    log_b = 2.0 * gammaln(k) - gammaln(k - alpha + 1.0) - gammaln(k + alpha - 1.0)
    log_terms = (1.0 - alpha) * (np.log((n - 1) * rho) - np.log(m * nu))
    return float(np.mean(np.exp(log_terms + log_b))), jittered


def estimate_delta_knn_hellinger(
    model: TailModel,
    sample: Sample,
    alpha: float,
    k: int | None = None,
    m: int | None = None,
    seed: int = 0,
) -> RadiusEstimate:
    """k-NN estimate of the order-``alpha`` Hellinger divergence between data and model.

    Draws ``m`` values (default ``10 n``) from the fitted exceedance law by
    inverse-CDF sampling with a Philox stream keyed by ``seed``;
    ``k`` defaults to ``ceil(sqrt(n))``.  The estimate
    ``(D - 1) / (alpha - 1)`` is clamped at 0.
    """
    xs = _exceedances(model, sample)
    n = xs.size
    k = int(math.ceil(math.sqrt(n))) if k is None else int(k)
    m = 10 * n if m is None else int(m)
    if m < n:
        raise ValueError(f"synthetic size m={m} must be at least n={n}")
    rng = philox_generator(seed)
    synthetic = model.sample_exceedances(rng, m)
    d, jittered = knn_alpha_integral(xs, synthetic, alpha, k, rng=rng)
    raw = (d - 1.0) / (alpha - 1.0)
    return RadiusEstimate(
        delta=max(raw, 0.0), method="knn-hellinger", n=n, k=k, m=m,
        alpha=float(alpha), seed=int(seed), raw=raw, jittered=jittered, p_u=model.p_u,
    )


def select_alpha(beta_hat: float, epsilon: float) -> float:
    """Hellinger order whose worst-case index matches ``1/beta_hat + epsilon``.

    ``alpha = (1 + epsilon beta_hat) / (epsilon beta_hat)``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not beta_hat > 0:
        raise ValueError("beta_hat must be positive")
    eb = epsilon * beta_hat
    return (1.0 + eb) / eb
