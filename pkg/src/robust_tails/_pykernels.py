"""Pure-Python (numpy/scipy) implementations of the hot kernels.

Signatures mirror ``_ckernels.pyx`` exactly; :mod:`robust_tails._kernels`
selects one of the two at import time.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate
from scipy.special import xlogy

STATUS_ROOT = 0
STATUS_SATURATED = 1

_LOG2 = math.log(2.0)


def ftilde(code: int, alpha: float, y):
    """Tilted generator by integer kind code (see ``divergences.KIND_CODES``)."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if code == 0:
            return xlogy(y, y) - y + 1.0
        if code == 1:
            return (y**alpha - 1.0 - alpha * (y - 1.0)) / (alpha - 1.0)
        if code == 2:
            return (y - 1.0) ** 2
        if code == 3:
            return (y - 1.0) ** 2 / (y + 1.0)
        if code == 4:
            return np.where(y == 0.0, np.inf, (y - 1.0) * np.log(y))
        if code == 5:
            return xlogy(y, y) - (1.0 + y) * np.log1p(y) + (1.0 + y) * _LOG2
    raise ValueError(f"unknown kind code {code}")


def constraint(code: int, alpha: float, p, y, delta: float):
    """``T(y) = p f~(y) + (1 - p) f~((1 - y p) / (1 - p)) - delta``."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.maximum(1.0 - p * (y - 1.0) / (1.0 - p), 0.0)
    return p * ftilde(code, alpha, y) + (1.0 - p) * ftilde(code, alpha, a) - delta


def solve_bx(code: int, alpha: float, p, delta: float, max_iter: int = 200):
    """Root ``b`` of ``T`` on ``(1, 1/p)`` for every entry of ``p``.

    Returns ``(b, status)``; status 1 marks points where ``T(1/p) <= 0``
    (no interior root, ``b`` set to ``1/p``).
    """
    p = np.asarray(p, dtype=float)
    lo = np.ones_like(p)
    hi = 1.0 / p
    status = np.where(constraint(code, alpha, p, hi, delta) <= 0.0, STATUS_SATURATED, STATUS_ROOT)
    active = status == STATUS_ROOT
    for _ in range(max_iter):
        # per-entry stopping keeps each root independent of its neighbours
        live = active & (hi - lo > 1e-15 * hi)
        if not np.any(live):
            break
        mid = 0.5 * (lo + hi)
        below = constraint(code, alpha, p, mid, delta) < 0.0
        lo = np.where(live & below, mid, lo)
        hi = np.where(live & ~below, mid, hi)
    b = np.where(active, 0.5 * (lo + hi), 1.0 / p)
    return b, status.astype(np.int32)


def _gpd_survival(t, u, p_u, beta, sigma):
    return p_u * math.exp(-beta * math.log1p((t - u) / (beta * sigma)))


def slackness(u, p_u, beta, sigma, s, x, a):
    """``int_a^x (x^s - y^s) dF(y) = int_a^x s t^(s-1) (S(a) - S(t)) dt`` for the GPD tail."""
    if a >= x:
        return 0.0
    sa = _gpd_survival(a, u, p_u, beta, sigma)

    def integrand(t):
        return s * t ** (s - 1.0) * (sa - _gpd_survival(t, u, p_u, beta, sigma))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, a, x, epsabs=0.0, epsrel=1e-12, limit=500)
    return val


def solve_lower(u, p_u, beta, sigma, s, x, delta, max_iter: int = 200):
    """Lower end ``a = U^(1/s)`` of the moved region for each level in ``x``.

    Solves ``slackness(a) = delta`` on ``(u, x)`` by bisection.  Status 1
    means the whole tail mass in ``[u, x]`` can be moved within budget
    (``a`` is then ``u``).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    status = np.zeros(xs.shape, dtype=np.int32)
    for i, xi in enumerate(xs):
        if slackness(u, p_u, beta, sigma, s, xi, u) <= delta:
            out[i] = u
            status[i] = STATUS_SATURATED
            continue
        lo, hi = u, xi
        for _ in range(max_iter):
            if hi - lo <= 2e-15 * hi:
                break
            mid = 0.5 * (lo + hi)
            if slackness(u, p_u, beta, sigma, s, xi, mid) > delta:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out, status


def knn_within(values, k: int):
    """Distance from each sorted value to its k-th nearest other value."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    idx = np.arange(n)[:, None]
    offs = np.concatenate((np.arange(-k, 0), np.arange(1, k + 1)))[None, :]
    nb = idx + offs
    valid = (nb >= 0) & (nb < n)
    d = np.where(valid, np.abs(v[np.clip(nb, 0, n - 1)] - v[:, None]), np.inf)
    return np.partition(d, k - 1, axis=1)[:, k - 1]


def knn_cross(pool, queries, k: int):
    """Distance from each query to its k-th nearest point of the sorted ``pool``."""
    pool = np.asarray(pool, dtype=float)
    q = np.asarray(queries, dtype=float)
    m = pool.size
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= len(pool)")
    pos = np.searchsorted(pool, q)[:, None]
    offs = np.arange(-k, k)[None, :]
    nb = pos + offs
    valid = (nb >= 0) & (nb < m)
    d = np.where(valid, np.abs(pool[np.clip(nb, 0, m - 1)] - q[:, None]), np.inf)
    return np.partition(d, k - 1, axis=1)[:, k - 1]
