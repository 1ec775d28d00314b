"""The f-divergence family used to build ambiguity balls.

Every divergence is described by a :class:`DivergenceSpec`.  The module
exposes the generator ``f`` as written in the literature (:func:`f_raw`),
its tilted version ``f~(y) = f(y) - f'(1)(y - 1)`` (:func:`f_tilted`),
the boundary values ``f~(0)`` and ``f~*(0) = lim f~(y)/y``, a generalized
inverse of ``f~`` on ``[1, inf)``, the principal branch of the Lambert W
function and the Renyi -> Hellinger radius map.

Renyi divergences are not given their own generator.  A Renyi ball of
radius ``delta`` and order ``alpha`` is the Hellinger(alpha) ball of radius
:func:`renyi_radius`, so ``DivergenceSpec("renyi", alpha)`` evaluates the
Hellinger generator and the solvers map the radius before solving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

__all__ = [
    "KINDS",
    "DivergenceSpec",
    "boundary_values",
    "divergence_discrete",
    "f_inverse_tail",
    "f_raw",
    "f_tilted",
    "f_tilted_prime",
    "lambert_w",
    "renyi_radius",
]

KINDS = ("kl", "hellinger", "chi2", "triangle", "jeffrey", "js", "renyi")

_ALIASES = {
    "kullback-leibler": "kl",
    "chi-squared": "chi2",
    "chisquared": "chi2",
    "chi^2": "chi2",
    "jensen-shannon": "js",
    "jensenshannon": "js",
    "delta": "triangle",
}

# integer codes shared with the compiled kernels
KIND_CODES = {"kl": 0, "hellinger": 1, "chi2": 2, "triangle": 3, "jeffrey": 4, "js": 5}

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class DivergenceSpec:
    """One member of the supported f-divergence family.

    Args:
        kind: One of :data:`KINDS`.
        alpha: Order for ``hellinger`` and ``renyi`` (must exceed 1);
            ignored (and normalised to ``None``) for the other kinds.
    """

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind in ("tv", "total-variation", "total_variation"):
            raise ValueError(
                "total variation is not supported: its generator is not "
                "regularly varying with index >= 1 after tilting"
            )
        if kind not in KINDS:
            raise ValueError(f"unknown divergence kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind in ("hellinger", "renyi"):
            if self.alpha is None or not float(self.alpha) > 1.0 or not math.isfinite(self.alpha):
                raise ValueError(f"{kind} needs a finite order alpha > 1, got {self.alpha!r}")
            object.__setattr__(self, "alpha", float(self.alpha))
        else:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def parse(cls, text: str) -> DivergenceSpec:
        """Parse the CLI form: ``kl``, ``hellinger:2.86``, ``chi2``, ``triangle``,
        ``jeffrey``, ``js`` or ``renyi:2``."""
        name, _, order = text.strip().partition(":")
        if order:
            try:
                alpha = float(order)
            except ValueError:
                raise ValueError(f"bad divergence order in {text!r}") from None
            spec = cls(name, alpha)
            if spec.alpha is None:
                raise ValueError(f"{spec.kind} takes no order, got {text!r}")
            return spec
        return cls(name)

    def __str__(self):
        if self.alpha is not None:
            return f"{self.kind}:{self.alpha:g}"
        return self.kind

    @property
    def generator(self) -> DivergenceSpec:
        """The divergence whose generator ``f`` is actually evaluated (Renyi -> Hellinger)."""
        if self.kind == "renyi":
            return DivergenceSpec("hellinger", self.alpha)
        return self

    @property
    def code(self) -> int:
        return KIND_CODES[self.generator.kind]

    @property
    def f_prime_one(self) -> float:
        """``f'(1)`` of the raw generator."""
        kind = self.generator.kind
        if kind == "kl":
            return 1.0
        if kind == "hellinger":
            return self.alpha / (self.alpha - 1.0)
        if kind == "chi2":
            return 2.0
        return 0.0

    @property
    def tail_index(self) -> float:
        """Regular-variation index of ``f~`` on ``[1, inf)``."""
        kind = self.generator.kind
        if kind == "hellinger":
            return self.alpha
        if kind == "chi2":
            return 2.0
        return 1.0

    def effective_radius(self, delta: float) -> float:
        """Radius of the ball actually solved for (maps Renyi radii to Hellinger radii)."""
        if self.kind == "renyi":
            return renyi_radius(self.alpha, delta)
        return float(delta)

    @property
    def max_radius(self) -> float:
        """``f~(0) + f~*(0)``: no divergence can exceed this value."""
        f0, fstar0 = boundary_values(self)
        return f0 + fstar0


def _as_array(y):
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("divergence generators are defined on [0, inf)")
    return arr


def _unwrap(out, y):
    return float(np.asarray(out).item()) if np.ndim(y) == 0 else out


def f_raw(spec: DivergenceSpec, y):
    """The generator ``f`` as written in the literature, with ``f(0)`` the right limit."""
    arr = _as_array(y)
    gen = spec.generator
    kind = gen.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "kl":
            out = xlogy(arr, arr)
        elif kind == "hellinger":
            out = (arr**gen.alpha - 1.0) / (gen.alpha - 1.0)
        elif kind == "chi2":
            out = arr * arr - 1.0
        elif kind == "triangle":
            out = (arr - 1.0) ** 2 / (arr + 1.0)
        elif kind == "jeffrey":
            out = np.where(arr == 0.0, np.inf, (arr - 1.0) * np.log(arr))
        else:  # js
            out = xlogy(arr, arr) - (1.0 + arr) * np.log1p(arr) + (1.0 + arr) * _LOG2
    return _unwrap(out, y)


def f_tilted(spec: DivergenceSpec, y):
    """``f~(y) = f(y) - f'(1)(y - 1)``: same divergence, minimum 0 at ``y = 1``."""
    arr = _as_array(y)
    gen = spec.generator
    kind = gen.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "kl":
            out = xlogy(arr, arr) - arr + 1.0
        elif kind == "hellinger":
            a = gen.alpha
            out = (arr**a - 1.0 - a * (arr - 1.0)) / (a - 1.0)
        elif kind == "chi2":
            out = (arr - 1.0) ** 2
        else:
            out = np.asarray(f_raw(gen, arr), dtype=float)
    return _unwrap(out, y)


def f_tilted_prime(spec: DivergenceSpec, y):
    """Derivative of :func:`f_tilted`; ``-inf`` at 0 where the limit diverges."""
    arr = _as_array(y)
    gen = spec.generator
    kind = gen.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "kl":
            out = np.log(arr)
        elif kind == "hellinger":
            a = gen.alpha
            out = a * (arr ** (a - 1.0) - 1.0) / (a - 1.0)
        elif kind == "chi2":
            out = 2.0 * (arr - 1.0)
        elif kind == "triangle":
            out = (arr - 1.0) * (arr + 3.0) / (arr + 1.0) ** 2
        elif kind == "jeffrey":
            out = np.log(arr) + 1.0 - 1.0 / arr
        else:
            out = np.log(2.0 * arr / (1.0 + arr))
    return _unwrap(out, y)


def boundary_values(spec: DivergenceSpec) -> tuple[float, float]:
    """Return ``(f~(0), f~*(0))`` where ``f~*(0) = lim_{y->inf} f~(y)/y``."""
    kind = spec.generator.kind
    if kind in ("kl", "hellinger", "chi2"):
        return 1.0, math.inf
    if kind == "triangle":
        return 1.0, 1.0
    if kind == "jeffrey":
        return math.inf, math.inf
    return _LOG2, _LOG2


def f_inverse_tail(spec: DivergenceSpec, t, tilted: bool = True):
    """Generalized inverse ``inf{z >= 1 : f(z) >= t}`` of the generator on ``[1, inf)``.

    With ``tilted=True`` (the default, and what the solvers use) the tilted
    generator is inverted; ``tilted=False`` inverts the raw generator, which
    has closed forms for KL (``t / W(t)``), Hellinger and chi-squared.
    Returns 1 wherever ``t <= 0``.
    """
    targ = np.asarray(t, dtype=float)
    if np.any(np.isnan(targ)):
        raise ValueError("t must not be NaN")
    gen = spec.generator
    kind = gen.kind
    pos = np.maximum(targ, 0.0)
    out = None
    if tilted:
        if kind == "chi2" or (kind == "hellinger" and gen.alpha == 2.0):
            out = 1.0 + np.sqrt(pos)
    elif kind == "hellinger":
        out = (1.0 + (gen.alpha - 1.0) * pos) ** (1.0 / gen.alpha)
    elif kind == "chi2":
        out = np.sqrt(1.0 + pos)
    elif kind == "kl":
        w = np.asarray(lambert_w(pos), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(pos > 0.0, pos / np.where(w > 0, w, 1.0), 1.0)
    if out is None:
        func = f_tilted if tilted else f_raw
        out = _bisect_increasing(lambda z: np.asarray(func(gen, z), dtype=float), pos)
    out = np.where(targ <= 0.0, 1.0, out)
    return _unwrap(out, t)


def _bisect_increasing(func, target, rtol=1e-13, max_iter=400):
    """Vectorised bisection for ``func(z) = target`` with ``func`` increasing on [1, inf)."""
    target = np.atleast_1d(np.asarray(target, dtype=float))
    lo = np.ones_like(target)
    hi = np.full_like(target, 2.0)
    for _ in range(2100):
        short = func(hi) < target
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, hi * 2.0, hi)
    for _ in range(max_iter):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = 0.5 * (lo + hi)
        below = func(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def lambert_w(t):
    """Principal branch of the Lambert W function on ``[0, inf)``.

    Halley iterations: on ``w e^w = t`` for ``t <= e`` and on the
    overflow-free form ``w + log w = log t`` above ``e``.
    """
    targ = np.asarray(t, dtype=float)
    if np.any(targ < 0) or np.any(np.isnan(targ)):
        raise ValueError("lambert_w is implemented for t >= 0 only")
    flat = np.atleast_1d(targ).ravel()
    out = np.empty_like(flat)
    for i, ti in enumerate(flat):
        out[i] = _lambert_w_scalar(float(ti))
    out = out.reshape(np.shape(targ))
    return _unwrap(out, t)


def _lambert_w_scalar(t: float) -> float:
    if t == 0.0:
        return 0.0
    if math.isinf(t):
        return math.inf
    if t <= math.e:
        w = math.log1p(t)
        for _ in range(100):
            ew = math.exp(w)
            r = w * ew - t
            step = r / (ew * (w + 1.0) - (w + 2.0) * r / (2.0 * w + 2.0))
            w -= step
            if abs(step) <= 1e-16 * max(abs(w), 1e-300):
                break
        return w
    lt = math.log(t)
    w = lt - math.log(lt)
    for _ in range(100):
        g = w + math.log(w) - lt
        g1 = 1.0 + 1.0 / w
        g2 = -1.0 / (w * w)
        step = g / (g1 - 0.5 * g * g2 / g1)
        w -= step
        if abs(step) <= 1e-16 * w:
            break
    return w


def renyi_radius(alpha: float, delta: float) -> float:
    """Hellinger(alpha) radius equivalent to a Renyi(alpha) radius.

    ``D_alpha = log(1 + (alpha - 1) H_alpha) / (alpha - 1)`` inverts to
    ``H_alpha = (exp((alpha - 1) delta) - 1) / (alpha - 1)``.
    """
    if not alpha > 1.0:
        raise ValueError("Renyi order must exceed 1")
    if delta < 0:
        raise ValueError("radius must be nonnegative")
    return math.expm1((alpha - 1.0) * delta) / (alpha - 1.0)


def divergence_discrete(spec: DivergenceSpec, p, q, tilted: bool = False):
    """``sum_i p_i f(q_i / p_i)``: divergence of ``q`` from the reference ``p``.

    Terms with ``p_i = q_i = 0`` contribute nothing.  For ``renyi`` the
    Hellinger sum is mapped back to the Renyi scale.  ``q`` may carry
    leading batch dimensions (shape ``(..., n)``), in which case an array
    of divergences is returned.

    Raises:
        ValueError: on shape mismatch, vectors not summing to one, or when
            ``q`` puts mass where ``p`` has none.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim != 1 or q.ndim < 1 or q.shape[-1] != p.shape[0]:
        raise ValueError("p must be a 1-D vector and q must end in an axis of the same length")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-12 or np.any(np.abs(q.sum(axis=-1) - 1.0) > 1e-12):
        raise ValueError("p and q must each sum to 1")
    if np.any((p == 0) & (q > 0)):
        raise ValueError("q is not absolutely continuous with respect to p")
    keep = p > 0
    ratio = q[..., keep] / p[keep]
    func = f_tilted if tilted else f_raw
    vals = np.asarray(func(spec, ratio), dtype=float)
    total = np.sum(p[keep] * vals, axis=-1)
    if spec.kind == "renyi":
        total = np.log1p((spec.alpha - 1.0) * total) / (spec.alpha - 1.0)
    return float(total) if q.ndim == 1 else total
