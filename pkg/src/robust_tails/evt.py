"""Reference-model machinery: samples, GPD fitting and the semi-parametric tail.

The tail model is the peaks-over-threshold construction

    P(X > x) ~= p_u * (1 + (x - u) / (beta * sigma)) ** (-beta),   x >= u,

with ``p_u`` the empirical exceedance rate of the threshold ``u``, tail
index ``beta = 1 / xi`` and scale ``sigma`` (the usual GPD scale, since
``xi (x - u) / sigma == (x - u) / (beta * sigma)``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

__all__ = [
    "ExtrapolationError",
    "FitError",
    "FitResult",
    "NoExceedancesError",
    "Sample",
    "TailModel",
    "WorstCaseCurve",
    "empirical_cdf",
    "fit_gpd_mle",
    "gpd_loglik",
    "load_sample_csv",
    "mean_excess_curve",
    "return_level",
    "survival",
]

_Z95 = 1.959963984540054


class FitError(RuntimeError):
    """GPD fit failed: degenerate data, non-convergence or a non-heavy tail."""


class NoExceedancesError(ValueError):
    """No observation lies above the requested threshold(s)."""


class ExtrapolationError(ValueError):
    """Requested probability lies outside the range a curve resolves."""


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted, finite, nonnegative observations."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float).ravel())
        if vals.size == 0:
            raise ValueError("a sample needs at least one observation")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sample values must be finite")
        if vals[0] < 0:
            raise ValueError("sample values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def quantile(self, q: float) -> float:
        """Empirical quantile (linear interpolation between order statistics)."""
        return float(np.quantile(self.values, q))

    def exceedances(self, u: float) -> np.ndarray:
        """Excesses ``X_i - u`` of the observations strictly above ``u``."""
        vals = self.values[self.values > u]
        return vals - u

    def above(self, u: float) -> np.ndarray:
        """Observations strictly above ``u`` (on the original scale)."""
        return self.values[self.values > u]

    def exceedance_rate(self, u: float) -> float:
        return float(np.count_nonzero(self.values > u)) / self.n


def empirical_cdf(sample: Sample, x):
    """Right-continuous empirical CDF ``#{X_i <= x} / n``."""
    idx = np.searchsorted(sample.values, x, side="right")
    out = idx / sample.n
    return float(out) if np.ndim(x) == 0 else out


def mean_excess_curve(sample: Sample, thresholds) -> list[tuple[float, float]]:
    """Empirical mean residual life ``(u, mean(X_i - u | X_i > u))``.

    Thresholds without exceedances are dropped.

    Raises:
        NoExceedancesError: if no threshold has a single exceedance.
    """
    vals = sample.values
    csum = np.concatenate(([0.0], np.cumsum(vals[::-1])))
    out = []
    for u in np.atleast_1d(np.asarray(thresholds, dtype=float)):
        k = sample.n - int(np.searchsorted(vals, u, side="right"))
        if k == 0:
            continue
        out.append((float(u), float(csum[k] / k - u)))
    if not out:
        raise NoExceedancesError("no threshold has exceedances")
    return out


@dataclass(frozen=True)
class TailModel:
    """Semi-parametric GPD tail above the threshold ``u``.

    Mass ``1 - p_u`` lies below ``u`` and is not modelled; the robust
    solvers treat it as sitting at ``u`` (see ``robust_tails.wasserstein``).
    """

    u: float
    p_u: float
    beta: float
    sigma: float

    def __post_init__(self):
        for name in ("u", "p_u", "beta", "sigma"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.u < 0:
            raise ValueError("threshold u must be nonnegative")
        if not 0.0 < self.p_u <= 1.0:
            raise ValueError("p_u must lie in (0, 1]")
        if self.beta <= 0 or self.sigma <= 0:
            raise ValueError("beta and sigma must be positive")

    @property
    def xi(self) -> float:
        return 1.0 / self.beta

    @property
    def scale(self) -> float:
        """``beta * sigma``, the scale of ``(x - u)`` in the survival function."""
        return self.beta * self.sigma

    def survival(self, x):
        """``P(X > x)`` for ``x >= u``."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < self.u):
            raise ValueError(f"tail model is only defined for x >= u = {self.u}")
        out = self.p_u * np.exp(-self.beta * np.log1p((arr - self.u) / self.scale))
        return float(out) if np.ndim(x) == 0 else out

    def conditional_survival(self, x):
        """``P(X > x | X > u)``."""
        out = np.asarray(self.survival(x)) / self.p_u
        return float(out) if np.ndim(x) == 0 else out

    def density(self, x):
        """Density of the (unconditional) model on ``[u, inf)``."""
        arr = np.asarray(x, dtype=float)
        z = 1.0 + (arr - self.u) / self.scale
        out = self.p_u / self.sigma * z ** (-self.beta - 1.0)
        return float(out) if np.ndim(x) == 0 else out

    def isf(self, prob):
        """Level exceeded with probability ``prob``; requires ``0 < prob <= p_u``."""
        arr = np.asarray(prob, dtype=float)
        if np.any(arr <= 0) or np.any(arr > self.p_u * (1 + 1e-15)):
            raise ValueError(f"probability must lie in (0, p_u = {self.p_u}]")
        ratio = np.minimum(arr / self.p_u, 1.0)
        out = self.u + self.scale * np.expm1(-np.log(ratio) / self.beta)
        return float(out) if np.ndim(prob) == 0 else out

    def sample_exceedances(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` values from the conditional law of ``X`` given ``X > u``."""
        v = rng.random(size)
        # 1 - v avoids v == 0 mapping to infinity
        return self.u + self.scale * np.expm1(-np.log1p(-v) / self.beta)


def survival(model: TailModel, x):
    """Module-level alias of :meth:`TailModel.survival`."""
    return model.survival(x)


@dataclass(frozen=True)
class FitResult:
    model: TailModel
    xi_ci: tuple[float, float]
    loglik: float
    xi_se: float = float("nan")
    n_exceedances: int = 0

    @property
    def epsilon(self) -> float:
        """Upper CI half-width on the ``1/beta`` scale."""
        return self.xi_ci[1] - self.model.xi


def gpd_loglik(xi: float, sigma: float, y: np.ndarray) -> float:
    """GPD log-likelihood ``sum[-log sigma - (1 + 1/xi) log(1 + xi y / sigma)]``."""
    if sigma <= 0:
        return -math.inf
    z = xi * y / sigma
    if np.any(z <= -1.0):
        return -math.inf
    if abs(xi) < 1e-10:
        return float(-y.size * math.log(sigma) - np.sum(y) / sigma)
    return float(-y.size * math.log(sigma) - (1.0 + 1.0 / xi) * np.sum(np.log1p(z)))


def fit_gpd_mle(
    exceedances,
    u: float = 0.0,
    p_u: float = 1.0,
    max_iter: int = 20000,
) -> FitResult:
    """Maximum-likelihood GPD fit with a Wald interval for the shape.

    Nelder-Mead on ``(log sigma, xi)`` from several starting points (moment
    estimator first); the interval uses the observed information obtained by
    central differences.

    Args:
        exceedances: Positive excesses ``X_i - u``.
        u: Threshold stored in the resulting model.
        p_u: Exceedance probability stored in the resulting model.
        max_iter: Nelder-Mead iteration cap per start.

    Raises:
        FitError: too few or degenerate exceedances, no converged start, or
            a fitted shape ``xi <= 0``.
    """
    y = np.asarray(exceedances, dtype=float).ravel()
    if y.size < 10:
        raise FitError(f"need at least 10 exceedances, got {y.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitError("exceedances must be finite and positive")
    mean = float(np.mean(y))
    var = float(np.var(y, ddof=1))
    if var <= 1e-14 * mean * mean:
        raise FitError("exceedances have zero variance; likelihood is degenerate")

    def nll(theta):
        val = gpd_loglik(theta[1], math.exp(theta[0]), y)
        return -val if math.isfinite(val) else 1e300

    ratio = mean * mean / var
    starts = [
        (0.5 * mean * (ratio + 1.0), 0.5 * (1.0 - ratio)),
        (mean, 0.1),
        (0.5 * mean, 0.5),
        (float(np.median(y)) / math.log(2.0), 0.25),
    ]
    best = None
    for sig0, xi0 in starts:
        if sig0 <= 0:
            continue
        res = optimize.minimize(
            nll,
            x0=[math.log(sig0), xi0],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-9, "maxiter": max_iter, "maxfev": 2 * max_iter},
        )
        if res.success and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("GPD likelihood maximisation did not converge")
    sigma_hat = math.exp(best.x[0])
    xi_hat = float(best.x[1])
    if xi_hat <= 0:
        raise FitError(f"fitted shape xi = {xi_hat:.4g} <= 0; the tail is not heavy")

    se = _shape_standard_error(xi_hat, sigma_hat, y)
    model = TailModel(u=u, p_u=p_u, beta=1.0 / xi_hat, sigma=sigma_hat)
    ci = (xi_hat - _Z95 * se, xi_hat + _Z95 * se)
    return FitResult(model=model, xi_ci=ci, loglik=-float(best.fun), xi_se=se, n_exceedances=y.size)


def _shape_standard_error(xi: float, sigma: float, y: np.ndarray) -> float:
    theta = np.array([xi, sigma])
    h = 1e-5 * np.abs(theta)

    def ll(t):
        return gpd_loglik(t[0], t[1], y)

    hess = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            ei = np.zeros(2)
            ej = np.zeros(2)
            ei[i] = h[i]
            ej[j] = h[j]
            val = (
                ll(theta + ei + ej) - ll(theta + ei - ej) - ll(theta - ei + ej) + ll(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError as exc:
        raise FitError("observed information is singular") from exc
    if not cov[0, 0] > 0:
        raise FitError("observed information is not positive definite")
    return math.sqrt(cov[0, 0])


@dataclass(frozen=True, eq=False)
class WorstCaseCurve:
    """Exceedance probabilities over an increasing grid of levels."""

    x: np.ndarray
    prob: np.ndarray
    method: str
    label: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.prob, dtype=float)
        if x.shape != p.shape or x.ndim != 1 or x.size < 2:
            raise ValueError("curve needs matching 1-D x and prob arrays with >= 2 points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve levels must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "prob", p)


def return_level(curve, period_years: float, obs_per_year: float = 1.0) -> float:
    """Level exceeded on average once every ``period_years``.

    The target exceedance probability is ``1 / (period_years * obs_per_year)``.
    For a :class:`TailModel` the level is exact; for a :class:`WorstCaseCurve`
    it is the first crossing of the target, interpolating linearly in
    ``(log x, log prob)`` between grid points.

    Raises:
        ValueError: if ``period_years * obs_per_year <= 1``.
        ExtrapolationError: if the target lies outside the curve's range.
    """
    horizon = period_years * obs_per_year
    if not horizon > 1.0:
        raise ValueError("period_years * obs_per_year must exceed 1")
    target = 1.0 / horizon
    if isinstance(curve, TailModel):
        if target > curve.p_u * (1 + 1e-12):
            raise ExtrapolationError(
                f"target probability {target:.4g} exceeds p_u = {curve.p_u:.4g}; below the threshold"
            )
        return float(curve.isf(min(target, curve.p_u)))
    x, p = curve.x, curve.prob
    hit = np.nonzero(p <= target)[0]
    if hit.size == 0:
        raise ExtrapolationError(
            f"target probability {target:.4g} is below the curve minimum {p.min():.4g}"
        )
    i = int(hit[0])
    if i == 0:
        if p[0] < target:
            raise ExtrapolationError(
                f"target probability {target:.4g} is above the curve start {p[0]:.4g}"
            )
        return float(x[0])
    p0, p1 = p[i - 1], p[i]
    if p1 <= 0 or p0 <= p1:
        return float(x[i])
    w = (math.log(p0) - math.log(target)) / (math.log(p0) - math.log(p1))
    return float(math.exp((1 - w) * math.log(x[i - 1]) + w * math.log(x[i])))


def load_sample_csv(path, column: int | str = 0) -> Sample:
    """Read one numeric column from a CSV file.

    ``column`` is a zero-based index or a header name.  A non-numeric first
    row is taken as a header; any later non-numeric row is an error.
    Blank lines are skipped.

    Raises:
        ValueError: with the offending line numbers, for an unknown column
            name, or for an empty file.
    """
    bad = []
    values = []
    with Path(path).open(newline="", encoding="utf-8-sig") as fh:
        rows = [(n, r) for n, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if rows and isinstance(column, str):
        header = [c.strip() for c in rows[0][1]]
        if column not in header:
            raise ValueError(f"{path}: no column named {column!r} (header: {', '.join(header)})")
        column = header.index(column)
        rows = rows[1:]
    for idx, (lineno, row) in enumerate(rows):
        if column >= len(row):
            bad.append(lineno)
            continue
        cell = row[column].strip()
        try:
            val = float(cell)
        except ValueError:
            if idx == 0:
                continue
            bad.append(lineno)
            continue
        if not math.isfinite(val):
            bad.append(lineno)
            continue
        values.append(val)
    if bad:
        shown = ", ".join(str(b) for b in bad[:20])
        more = "" if len(bad) <= 20 else f" (+{len(bad) - 20} more)"
        raise ValueError(f"{path}: non-numeric or missing values on line(s) {shown}{more}")
    if not values:
        raise ValueError(f"{path}: no numeric values found")
    return Sample(np.array(values))
