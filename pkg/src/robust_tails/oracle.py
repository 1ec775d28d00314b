"""Brute-force worst-case solvers on finite supports.

These are deliberately naive (grid scans, greedy transport, exhaustive
enumeration) and share no code with the analytic solvers, so agreement
between the two is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .divergences import DivergenceSpec, divergence_discrete
from .evt import TailModel

__all__ = [
    "DiscreteDistribution",
    "fdiv_exhaustive",
    "fdiv_worstcase_scan",
    "wasserstein_distance_discrete",
    "wasserstein_exhaustive",
    "wasserstein_worstcase_greedy",
]


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported law with strictly ascending atoms."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        probs = np.asarray(self.probs, dtype=float).ravel()
        if atoms.shape != probs.shape or atoms.size == 0:
            raise ValueError("atoms and probs must be nonempty and of equal length")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly ascending")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_tail_model(cls, model: TailModel, n_atoms: int) -> DiscreteDistribution:
        """Quantile discretisation: ``n_atoms`` equal-mass atoms at the conditional
        midpoint quantiles, plus an atom at ``u`` holding ``1 - p_u``."""
        q = (np.arange(n_atoms) + 0.5) / n_atoms
        atoms = model.u + model.scale * np.expm1(-np.log1p(-q) / model.beta)
        probs = np.full(n_atoms, model.p_u / n_atoms)
        if model.p_u < 1.0:
            atoms = np.concatenate(([model.u], atoms))
            probs = np.concatenate(([1.0 - model.p_u], probs))
        probs = probs / probs.sum()
        return cls(atoms, probs)

    def cdf(self, y):
        idx = np.searchsorted(self.atoms, y, side="right")
        csum = np.concatenate(([0.0], np.cumsum(self.probs)))
        out = np.minimum(csum[idx], 1.0)
        return float(out) if np.ndim(y) == 0 else out

    def mass_above(self, x: float) -> float:
        return float(self.probs[self.atoms > x].sum())

    def mass_at_or_above(self, x: float) -> float:
        return float(self.probs[self.atoms >= x].sum())


def fdiv_worstcase_scan(
    ref: DiscreteDistribution, x: float, spec: DivergenceSpec, delta: float, grid_size: int = 10**5
) -> float:
    """Largest feasible mass above ``x`` by scanning the two-block family.

    The candidate keeps the reference shape within ``{<= x}`` and ``{> x}``
    and puts mass ``m`` above ``x``.  Every ``m`` on a uniform grid over
    ``[p, 1]`` is tested for ``D <= delta``; the largest feasible one is
    refined by bisection towards the next grid point.
    """
    p = ref.mass_above(x)
    if not 0.0 < p < 1.0:
        raise ValueError("reference mass above x must lie strictly between 0 and 1")
    if delta == 0.0:
        return p
    base = np.array([1.0 - p, p])

    def divergence(m):
        m = np.asarray(m, dtype=float)
        return divergence_discrete(spec, base, np.stack([1.0 - m, m], axis=-1))

    grid = np.linspace(p, 1.0, grid_size)
    with np.errstate(invalid="ignore"):
        feasible = divergence(grid) <= delta
    idx = np.flatnonzero(feasible)
    last = int(idx[-1])
    if last == grid_size - 1:
        return 1.0
    lo, hi = float(grid[last]), float(grid[last + 1])
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if divergence(mid) <= delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16:
            break
    return lo


def fdiv_exhaustive(
    ref: DiscreteDistribution, x: float, spec: DivergenceSpec, delta: float, resolution: int = 60
) -> float:
    """Best mass above ``x`` over all laws on the reference support whose masses
    are multiples of ``1 / resolution`` (supports of at most 4 atoms)."""
    n = ref.atoms.size
    if n > 4:
        raise ValueError("exhaustive search supports at most 4 atoms")
    counts = np.array(
        [c for c in itertools.product(range(resolution + 1), repeat=n - 1) if sum(c) <= resolution],
        dtype=float,
    ).reshape(-1, n - 1)
    q = np.column_stack([counts, resolution - counts.sum(axis=1)]) / resolution
    q = q[~np.any(q[:, ref.probs == 0] > 0, axis=1)]
    with np.errstate(invalid="ignore"):
        feasible = divergence_discrete(spec, ref.probs, q) <= delta
    best = ref.mass_above(x)
    if feasible.any():
        best = max(best, float(q[feasible][:, ref.atoms > x].sum(axis=1).max()))
    return best


def wasserstein_worstcase_greedy(
    ref: DiscreteDistribution, x: float, s: float, delta: float, return_distribution: bool = False
):
    """Move mass below ``x`` up to ``x``, nearest atoms first, until the budget runs out.

    Returns the mass at or above ``x`` afterwards (and the transported law
    if ``return_distribution``).
    """
    if s < 1.0 or delta < 0.0:
        raise ValueError("need s >= 1 and delta >= 0")
    moved = np.zeros_like(ref.probs)
    budget = float(delta)
    xs = x**s
    for i in range(ref.atoms.size - 1, -1, -1):
        y = ref.atoms[i]
        if y >= x:
            continue
        if budget <= 0.0:
            break
        cost = xs - y**s
        take = min(ref.probs[i], budget / cost)
        moved[i] = take
        budget -= take * cost
    total = ref.mass_at_or_above(x) + float(moved.sum())
    if not return_distribution:
        return total
    probs = ref.probs - moved
    atoms = ref.atoms
    if not np.any(atoms == x):
        pos = int(np.searchsorted(atoms, x))
        atoms = np.insert(atoms, pos, x)
        probs = np.insert(probs, pos, 0.0)
    probs[atoms == x] += moved.sum()
    probs = np.maximum(probs, 0.0)
    return total, DiscreteDistribution(atoms, probs / probs.sum())


def wasserstein_exhaustive(
    ref: DiscreteDistribution, x: float, s: float, delta: float, resolution: float = 1e-3,
    max_combinations: int = 20_000_000,
) -> float:
    """Best mass at or above ``x`` over per-atom moved masses on a grid of step
    ``resolution``; the nearest atom below ``x`` takes the largest affordable
    amount given the others."""
    below = np.flatnonzero(ref.atoms < x)
    base = ref.mass_at_or_above(x)
    if below.size == 0:
        return base
    costs = x**s - ref.atoms[below] ** s
    masses = ref.probs[below]
    free, last = below[:-1], below.size - 1
    grids = [np.arange(0.0, masses[j] + 1e-15, resolution) for j in range(free.size)]
    total = math.prod(g.size for g in grids)
    if total > max_combinations:
        raise ValueError(f"{total} combinations exceed the limit {max_combinations}")
    best = base
    if free.size == 0:
        return base + min(masses[last], delta / costs[last])
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, free.size)
    spent = mesh @ costs[:-1]
    ok = spent <= delta * (1 + 1e-12)
    extra = np.minimum(masses[last], np.maximum(delta - spent[ok], 0.0) / costs[last])
    if ok.any():
        best = base + float(np.max(mesh[ok].sum(axis=1) + extra))
    return best


def wasserstein_distance_discrete(p: DiscreteDistribution, q: DiscreteDistribution, s: float) -> float:
    """``sum |F - G| (y_{i+1}**s - y_i**s)`` over the merged support."""
    pts = np.union1d(p.atoms, q.atoms)
    if pts.size < 2:
        return 0.0
    diff = np.abs(p.cdf(pts[:-1]) - q.cdf(pts[:-1]))
    return float(np.sum(diff * np.diff(pts**s)))
