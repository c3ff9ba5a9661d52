"""Bernoulli arms with delayed feedback and a pending-delivery queue."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np

from ..core import DeliveryBatch
from ..delay import DelayModel
from ..exceptions import ValidationError

BLOCK_ROUNDS = 4096


class Environment:
    """Draws a reward and a delay for every arm in every round.

    Draws for all K arms are made whether or not an arm is played, in blocks
    of rounds, so the realisation of round ``t`` does not depend on what a
    policy selected earlier.  A pull at round ``s`` with finite delay ``D``
    is delivered by ``deliver(s + D)``, i.e. at the end of that round.
    Pulls whose arrival lies beyond ``horizon`` are dropped at emission, as
    are infinite delays.
    """

    def __init__(
        self,
        means: Sequence[float],
        delays: Sequence[DelayModel],
        rng: np.random.Generator,
        horizon: int | None = None,
    ):
        self.means = np.asarray(means, dtype=float)
        if self.means.ndim != 1 or len(self.means) == 0:
            raise ValidationError("means must be a nonempty vector")
        if np.any(self.means < 0) or np.any(self.means > 1):
            raise ValidationError("Bernoulli means must lie in [0, 1]")
        if len(delays) != len(self.means):
            raise ValidationError(f"need one delay model per arm ({len(self.means)}), got {len(delays)}")
        self.delays = list(delays)
        self.rng = rng
        self.horizon = horizon
        self.n_arms = len(self.means)
        self._pending: dict[int, list[tuple[int, float]]] = defaultdict(list)
        self._block_start = 1
        self._rewards = np.empty((0, self.n_arms))
        self._delays = np.empty((0, self.n_arms))
        self.pulls = 0
        self.scheduled = 0

    def _fill(self, t: int) -> None:
        self._block_start = t
        rewards = (self.rng.random((BLOCK_ROUNDS, self.n_arms)) < self.means).astype(float)
        delays = np.empty_like(rewards)
        for a, model in enumerate(self.delays):
            delays[:, a] = model.sample_many(rewards[:, a], self.rng)
        self._rewards, self._delays = rewards, delays

    def draw(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Rewards and delays of all arms at round ``t`` (rounds must be visited in order)."""
        i = t - self._block_start
        if not 0 <= i < len(self._rewards):
            if t < self._block_start:
                raise ValidationError("rounds must be drawn in increasing order")
            self._fill(t)
            i = 0
        return self._rewards[i], self._delays[i]

    def pull(self, t: int, arms) -> np.ndarray:
        """Play ``arms`` at round ``t``; returns their rewards and queues their feedback."""
        rewards, delays = self.draw(t)
        for a in arms:
            a = int(a)
            self.pulls += 1
            d = delays[a]
            if d == np.inf:
                continue
            arrival = t + int(d)
            if self.horizon is not None and arrival > self.horizon:
                continue
            self._pending[arrival].append((a, rewards[a]))
            self.scheduled += 1
        return rewards[np.asarray(arms, dtype=int)]

    def deliver(self, t: int) -> DeliveryBatch:
        """Everything whose arrival round is ``t``."""
        counts = np.zeros(self.n_arms, dtype=np.int64)
        sums = np.zeros(self.n_arms)
        for a, r in self._pending.pop(t, ()):
            counts[a] += 1
            sums[a] += r
        return DeliveryBatch(t, counts, sums)

    @property
    def pending(self) -> int:
        return sum(len(v) for v in self._pending.values())
