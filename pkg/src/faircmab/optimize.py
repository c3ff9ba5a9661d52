"""Maximising the fair-policy expected reward over a box of plausible means.

For a mean vector ``x`` the fair policy plays arm ``a`` with probability
``L f(x_a) / sum_b f(x_b)``, so its expected reward is

    g(x) = L * sum_a f(x_a) x_a / sum_a f(x_a).

``g`` is a smooth ratio but not concave in general.  ``maximize_over_region``
runs cyclic coordinate ascent from several starting points, solving each
one-dimensional subproblem by golden-section search plus a comparison with
the interval endpoints; only improving moves are accepted, so every sweep is
monotone.  ``grid_oracle`` is the exhaustive reference used to check it on
small instances.

The inner loops are compiled with numba; the merit function is passed to
the kernels as the flat parameters of ``MeritFunction.solver_params``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .exceptions import ValidationError
from .merit import MeritFunction

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ConfidenceRegion:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("region bounds must be vectors of equal length")
        if np.any(lo > hi):
            raise ValidationError("region lower bound exceeds upper bound")
        if np.any(lo < 0) or np.any(hi > 1):
            raise ValidationError("region must lie inside [0, 1]^K")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_arms(self) -> int:
        return len(self.lower)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass(frozen=True)
class SolverOptions:
    n_random_starts: int = 3
    line_tol: float = 1e-8
    sweep_tol: float = 1e-9
    max_sweeps: int = 200
    seed: int = 0


@numba.njit(cache=True, inline="always")
def _merit(x, kind, beta, w, c, xs, ys):
    if kind == 0:
        if c == 1.0:
            return beta + w * x
        if c <= 16.0 and c == math.floor(c):
            # repeated multiplication is much cheaper than pow()
            xc = x
            for _ in range(int(c) - 1):
                xc *= x
            return beta + w * xc
        return beta + w * x**c
    return np.interp(x, xs, ys)


@numba.njit(cache=True, inline="always")
def _objective(x, n_plays, kind, beta, w, c, xs, ys):
    num = 0.0
    den = 0.0
    for a in range(x.shape[0]):
        fa = _merit(x[a], kind, beta, w, c, xs, ys)
        num += fa * x[a]
        den += fa
    if den <= 0.0:
        # only reachable for merits that vanish somewhere, e.g. the identity at 0
        return -np.inf
    return n_plays * num / den


@numba.njit(cache=True, inline="always")
def _ratio(x, rest_num, rest_den, kind, beta, w, c, xs, ys):
    fx = _merit(x, kind, beta, w, c, xs, ys)
    den = rest_den + fx
    if den <= 0.0:
        return -np.inf
    return (rest_num + fx * x) / den


@numba.njit(cache=True, inline="always")
def _line_max(lo, hi, cur, rest_num, rest_den, tol, kind, beta, w, c, xs, ys):
    """Best of golden-section search, both endpoints and the current point."""
    best_x = cur
    best_v = _ratio(cur, rest_num, rest_den, kind, beta, w, c, xs, ys)
    for e in (lo, hi):
        v = _ratio(e, rest_num, rest_den, kind, beta, w, c, xs, ys)
        if v > best_v:
            best_v = v
            best_x = e
    a = lo
    b = hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    v1 = _ratio(x1, rest_num, rest_den, kind, beta, w, c, xs, ys)
    v2 = _ratio(x2, rest_num, rest_den, kind, beta, w, c, xs, ys)
    while b - a > tol:
        if v1 < v2:
            a = x1
            x1 = x2
            v1 = v2
            x2 = a + _INV_PHI * (b - a)
            v2 = _ratio(x2, rest_num, rest_den, kind, beta, w, c, xs, ys)
        else:
            b = x2
            x2 = x1
            v2 = v1
            x1 = b - _INV_PHI * (b - a)
            v1 = _ratio(x1, rest_num, rest_den, kind, beta, w, c, xs, ys)
    for x, v in ((x1, v1), (x2, v2)):
        if v > best_v:
            best_v = v
            best_x = x
    return best_x


@numba.njit(cache=True)
def _coordinate_ascent(x, lower, upper, n_plays, line_tol, sweep_tol, max_sweeps, kind, beta, w, c, xs, ys):
    k = x.shape[0]
    f = np.empty(k)
    for a in range(k):
        f[a] = _merit(x[a], kind, beta, w, c, xs, ys)
    value = _objective(x, n_plays, kind, beta, w, c, xs, ys)
    for _ in range(max_sweeps):
        start_value = value
        for a in range(k):
            if upper[a] <= lower[a]:
                continue
            num = 0.0
            den = 0.0
            for b in range(k):
                if b != a:
                    num += f[b] * x[b]
                    den += f[b]
            new = _line_max(lower[a], upper[a], x[a], num, den, line_tol, kind, beta, w, c, xs, ys)
            if new != x[a]:
                old = x[a]
                x[a] = new
                candidate = _objective(x, n_plays, kind, beta, w, c, xs, ys)
                if candidate > value:
                    value = candidate
                    f[a] = _merit(new, kind, beta, w, c, xs, ys)
                else:
                    x[a] = old
        if value - start_value < sweep_tol:
            break
    return value


@numba.njit(cache=True)
def _multistart(starts, lower, upper, n_plays, line_tol, sweep_tol, max_sweeps, kind, beta, w, c, xs, ys):
    best = starts[0].copy()
    best_v = -1.0
    for s in range(starts.shape[0]):
        x = starts[s].copy()
        v = _coordinate_ascent(x, lower, upper, n_plays, line_tol, sweep_tol, max_sweeps, kind, beta, w, c, xs, ys)
        better = v > best_v
        if not better and v == best_v:
            # lexicographically smaller vector wins a tie
            for a in range(x.shape[0]):
                if x[a] != best[a]:
                    better = x[a] < best[a]
                    break
        if better:
            best_v = v
            best[:] = x
    return best


@numba.njit(cache=True)
def _grid_search(axes, sizes, n_plays, kind, beta, w, c, xs, ys):
    k = sizes.shape[0]
    fvals = np.empty_like(axes)
    for a in range(k):
        for i in range(sizes[a]):
            fvals[a, i] = _merit(axes[a, i], kind, beta, w, c, xs, ys)
    idx = np.zeros(k, dtype=np.int64)
    best_idx = idx.copy()
    best_v = -np.inf
    while True:
        num = 0.0
        den = 0.0
        for a in range(k):
            fa = fvals[a, idx[a]]
            num += fa * axes[a, idx[a]]
            den += fa
        if den > 0.0:
            v = n_plays * num / den
            # points are visited in increasing lexicographic order; >= keeps the largest
            if v >= best_v:
                best_v = v
                best_idx[:] = idx
        a = k - 1
        while a >= 0:
            idx[a] += 1
            if idx[a] < sizes[a]:
                break
            idx[a] = 0
            a -= 1
        if a < 0:
            break
    out = np.empty(k)
    for a in range(k):
        out[a] = axes[a, best_idx[a]]
    return out


def fair_reward_objective(f: MeritFunction, x, n_plays: int) -> float:
    """Expected reward of the merit-proportional policy built from means ``x``."""
    x = np.asarray(x, dtype=float)
    m = f(x)
    if m.sum() <= 0:
        return -math.inf
    return float(n_plays * np.dot(m, x) / m.sum())


@lru_cache(maxsize=64)
def _random_fractions(seed: int, n_starts: int, n_arms: int) -> np.ndarray:
    return np.random.default_rng(seed).random((n_starts, n_arms))


def _starts(region: ConfidenceRegion, opts: SolverOptions) -> np.ndarray:
    lo, hi = region.lower, region.upper
    r = _random_fractions(opts.seed, opts.n_random_starts, region.n_arms)
    fixed = np.stack([lo, hi, 0.5 * (lo + hi)])
    return np.vstack([fixed, lo + r * (hi - lo)])


def maximize_over_region(
    f: MeritFunction, region: ConfidenceRegion, n_plays: int, opts: SolverOptions | None = None
) -> np.ndarray:
    """Approximate argmax of the fair-policy reward over ``region``.

    Starts at the lower corner, upper corner, centre and ``opts.n_random_starts``
    seeded interior points.  Returns the best end point, ties going to the
    lexicographically smaller vector.  The result always lies in the region.
    """
    opts = opts or SolverOptions()
    lo, hi = region.lower, region.upper
    if np.array_equal(lo, hi):
        return lo.copy()
    kind, beta, w, c, xs, ys = f.solver_params()
    best = _multistart(
        _starts(region, opts), lo, hi, float(n_plays),
        opts.line_tol, opts.sweep_tol, opts.max_sweeps, kind, beta, w, c, xs, ys,
    )
    return np.clip(best, lo, hi)


def grid_oracle(f: MeritFunction, region: ConfidenceRegion, n_plays: int, step: float) -> np.ndarray:
    """Exhaustive maximiser over the grid ``{B_a, B_a + step, ..., U_a}`` per arm.

    The upper bound ``U_a`` is always part of the grid.  Points where every
    merit vanishes are skipped; ties go to the lexicographically largest
    grid point.
    """
    if region.n_arms > 4:
        raise ValidationError("grid oracle is limited to K <= 4")
    if step < 1e-3:
        raise ValidationError("grid step must be at least 1e-3")
    axes = []
    for lo, hi in zip(region.lower, region.upper):
        n = int(math.floor((hi - lo) / step + 1e-9))
        pts = lo + step * np.arange(n + 1)
        if hi - pts[-1] > 1e-12:
            pts = np.append(pts, hi)
        else:
            pts[-1] = hi
        axes.append(pts)
    sizes = np.array([len(a) for a in axes], dtype=np.int64)
    table = np.zeros((len(axes), sizes.max()))
    for a, pts in enumerate(axes):
        table[a, : len(pts)] = pts
    kind, beta, w, c, xs, ys = f.solver_params()
    return _grid_search(table, sizes, float(n_plays), kind, beta, w, c, xs, ys)
