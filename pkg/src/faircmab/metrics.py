"""Reward regret, fairness regret and selection bookkeeping.

Per round, against the optimal fair policy ``p*``::

    rr_t = max(<p*, mu> - <p_t, mu>, 0)
    fr_t = || p* - p_t ||_1

Both are computed on the selection vector, never on the realised arm set;
realised sets only feed the selection counts.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def step_regrets(p_star, p_t, mu) -> tuple[float, float]:
    p_star, p_t, mu = np.asarray(p_star), np.asarray(p_t), np.asarray(mu)
    if not p_star.shape == p_t.shape == mu.shape:
        raise ValidationError("p*, p_t and mu must have the same length")
    rr = max(float(np.dot(p_star, mu) - np.dot(p_t, mu)), 0.0)
    fr = float(np.abs(p_star - p_t).sum())
    return rr, fr


class RegretTrace:
    """Append-only record of one replication."""

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self._rr: list[float] = []
        self._fr: list[float] = []
        self.prob_mass = np.zeros(n_arms)
        self.selection_counts = np.zeros(n_arms, dtype=np.int64)
        self.total_rr = 0.0
        self.total_fr = 0.0

    def __len__(self) -> int:
        return len(self._rr)

    def accumulate(self, rr: float, fr: float, p_t, arms) -> None:
        if rr < 0 or fr < 0:
            raise ValidationError(f"regrets must be nonnegative, got rr={rr}, fr={fr}")
        self._rr.append(rr)
        self._fr.append(fr)
        self.total_rr += rr
        self.total_fr += fr
        self.prob_mass += p_t
        self.selection_counts[arms] += 1

    @property
    def rr(self) -> np.ndarray:
        return np.asarray(self._rr)

    @property
    def fr(self) -> np.ndarray:
        return np.asarray(self._fr)

    @property
    def cum_rr(self) -> np.ndarray:
        return np.cumsum(self._rr)

    @property
    def cum_fr(self) -> np.ndarray:
        return np.cumsum(self._fr)

    def selection_fractions(self) -> np.ndarray:
        return selection_fractions(self, len(self))


def accumulate(trace: RegretTrace, rr: float, fr: float, p_t, arms) -> RegretTrace:
    trace.accumulate(rr, fr, p_t, arms)
    return trace


def selection_fractions(trace: RegretTrace, rounds: int) -> np.ndarray:
    """Fraction of the ``rounds`` recorded rounds in which each arm was actually played."""
    if len(trace) == 0 or rounds < 1:
        raise ValidationError("selection fractions need at least one recorded round")
    if rounds != len(trace):
        raise ValidationError(f"trace holds {len(trace)} rounds, not {rounds}")
    return trace.selection_counts / rounds
