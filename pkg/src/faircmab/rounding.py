"""Dependent randomized rounding of a selection vector to a set of exactly L arms.

Given ``p`` with entries in ``[0, 1]`` summing to the integer ``L``, repeated
pairwise mass transfers between two fractional coordinates make at least one
of them integral while preserving both the pair's sum and each coordinate's
expectation.  After at most ``K - 1`` transfers every coordinate is 0 or 1 and
the ones form the arm set, so ``P[a in A] = p_a`` exactly.

Pairs are taken left to right: the surviving fractional coordinate of a step
is paired with the next fractional coordinate to its right.  The only
randomness is the branch coin of each step.
"""

from __future__ import annotations

import numba
import numpy as np

from .exceptions import SimulationError, ValidationError

SNAP_TOL = 1e-9
SUM_TOL = 1e-9


@numba.njit(cache=True, inline="always")
def _snap(x):
    if x <= SNAP_TOL:
        return 0.0
    if x >= 1.0 - SNAP_TOL:
        return 1.0
    return x


@numba.njit(cache=True, inline="always")
def _is_fractional(x):
    return 0.0 < x < 1.0


@numba.njit(cache=True)
def _transfer(pi, pj, u):
    """One dependent-rounding step for fractional ``pi``, ``pj`` given a uniform ``u``.

    With probability beta / (alpha + beta) mass alpha moves from j to i,
    otherwise mass beta moves from i to j.  The coordinate that becomes
    integral is assigned its exact value and the other receives the rest of
    the pair sum.
    """
    alpha = min(1.0 - pi, pj)
    beta = min(pi, 1.0 - pj)
    s = pi + pj
    if u < beta / (alpha + beta):
        if 1.0 - pi <= pj:
            return 1.0, _snap(s - 1.0)
        return _snap(s), 0.0
    if pi <= 1.0 - pj:
        return 0.0, _snap(s)
    return _snap(s - 1.0), 1.0


@numba.njit(cache=True)
def _round_in_place(q, u):
    """Left-to-right cursor rounding of ``q``; step ``k`` uses the uniform ``u[k]``."""
    n = q.shape[0]
    for a in range(n):
        q[a] = _snap(q[a])
    i = 0
    while i < n and not _is_fractional(q[i]):
        i += 1
    j = i + 1
    step = 0
    while j < n:
        if not _is_fractional(q[j]):
            j += 1
            continue
        q[i], q[j] = _transfer(q[i], q[j], u[step])
        step += 1
        if _is_fractional(q[j]):
            i = j
        elif not _is_fractional(q[i]):
            # both integral: restart from the next fractional coordinate
            i = j + 1
            while i < n and not _is_fractional(q[i]):
                i += 1
            j = i
        j += 1
    if i < n and _is_fractional(q[i]):
        # a lone fractional entry can only be float drift of an integral sum
        q[i] = np.round(q[i])


@numba.njit(cache=True)
def _round_many(p, u, n_plays):
    size = u.shape[0]
    out = np.empty((size, n_plays), dtype=np.int64)
    q = np.empty_like(p)
    for r in range(size):
        q[:] = p
        _round_in_place(q, u[r])
        m = 0
        for a in range(q.shape[0]):
            if q[a] == 1.0:
                if m == n_plays:
                    return out, r
                out[r, m] = a
                m += 1
        if m != n_plays:
            return out, r
    return out, -1


def pairwise_round_step(p, i: int, j: int, rng: np.random.Generator) -> np.ndarray:
    """Return a copy of ``p`` with the pair ``(i, j)`` rounded by one transfer step."""
    q = np.array(p, dtype=float)
    if i == j:
        raise ValidationError("pairwise rounding needs two distinct coordinates")
    if not (_is_fractional(q[i]) and _is_fractional(q[j])):
        raise ValidationError(f"coordinates {i} and {j} must both be strictly fractional")
    q[i], q[j] = _transfer(float(q[i]), float(q[j]), rng.random())
    return q


def validate_selection_vector(p, n_plays: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValidationError("selection vector must be one-dimensional")
    if np.any(p < -SNAP_TOL) or np.any(p > 1.0 + SNAP_TOL) or np.any(np.isnan(p)):
        raise ValidationError(f"selection probabilities must lie in [0, 1], got {p.tolist()}")
    if abs(p.sum() - n_plays) > SUM_TOL:
        raise ValidationError(f"selection vector sums to {p.sum():.12g}, expected L={n_plays}")
    return p


def _uniforms(n_arms: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    # K - 1 steps always suffice; unused uniforms are simply discarded
    m = max(n_arms - 1, 1)
    return rng.random(m) if size is None else rng.random((size, m))


def rrs(p, n_plays: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a sorted array of exactly ``n_plays`` arm indices with marginals ``p``.

    Each call consumes ``K - 1`` uniforms from ``rng``.
    """
    p = validate_selection_vector(p, n_plays)
    arms, bad = _round_many(p, _uniforms(len(p), rng)[None, :], n_plays)
    if bad >= 0:
        raise SimulationError(f"rounding did not produce {n_plays} arms from {p.tolist()}")
    return arms[0]


def rrs_many(p, n_plays: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws as a ``(size, L)`` array.

    Row ``r`` equals what the ``r``-th of ``size`` successive ``rrs`` calls
    on the same generator would return.
    """
    p = validate_selection_vector(p, n_plays)
    arms, bad = _round_many(p, _uniforms(len(p), rng, size), n_plays)
    if bad >= 0:
        raise SimulationError(f"rounding did not produce {n_plays} arms from {p.tolist()}")
    return arms
