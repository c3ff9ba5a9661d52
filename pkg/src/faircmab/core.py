"""Learner-side bookkeeping of pulls and delayed feedback.

The ledger is the entire observable state of a learner: how often each arm
was pulled (``N``), how many of those pulls have reported back (``M``) and
the sum of the rewards that did report back (``S``).  Emission rounds and
individual delays never reach this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SimulationError, ValidationError


@dataclass
class DeliveryBatch:
    """Feedback arriving at the end of round ``t``.

    ``counts[a]`` is the number of earlier pulls of arm ``a`` whose reward
    arrives now and ``reward_sums[a]`` the sum of those rewards.
    """

    t: int
    counts: np.ndarray
    reward_sums: np.ndarray

    @classmethod
    def empty(cls, t: int, n_arms: int) -> "DeliveryBatch":
        return cls(t, np.zeros(n_arms, dtype=np.int64), np.zeros(n_arms))

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.reward_sums = np.asarray(self.reward_sums, dtype=float)
        if self.counts.shape != self.reward_sums.shape:
            raise ValidationError("counts and reward_sums must have the same length")
        if np.any(self.counts < 0):
            raise ValidationError("arrived counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def bernoulli_split(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(ones, zeros)`` per arm for 0/1 rewards.

        Raises
        ------
        ValidationError
            If a reward sum is not an integer in ``[0, count]``.
        """
        ones = np.rint(self.reward_sums)
        if np.any(np.abs(ones - self.reward_sums) > 1e-9):
            raise ValidationError("non-integer reward sum in a Bernoulli delivery")
        ones = ones.astype(np.int64)
        zeros = self.counts - ones
        if np.any(ones < 0) or np.any(zeros < 0):
            raise ValidationError("Bernoulli reward sum outside [0, count]")
        return ones, zeros


@dataclass
class FeedbackLedger:
    """Per-arm pull counts, received-feedback counts and observed reward sums."""

    pulls: np.ndarray
    received: np.ndarray
    observed_sum: np.ndarray
    n_arms: int = field(init=False)

    def __post_init__(self) -> None:
        self.n_arms = len(self.pulls)

    @classmethod
    def new(cls, n_arms: int) -> "FeedbackLedger":
        if n_arms < 1:
            raise ValidationError(f"need at least one arm, got K={n_arms}")
        return cls(
            np.zeros(n_arms, dtype=np.int64),
            np.zeros(n_arms, dtype=np.int64),
            np.zeros(n_arms, dtype=float),
        )

    def copy(self) -> "FeedbackLedger":
        return FeedbackLedger(self.pulls.copy(), self.received.copy(), self.observed_sum.copy())

    def _check_arm(self, arm: int) -> None:
        if not 0 <= arm < self.n_arms:
            raise ValidationError(f"arm {arm} out of range for K={self.n_arms}")

    def register_pull(self, arm: int) -> None:
        self._check_arm(arm)
        self.pulls[arm] += 1

    def register_pulls(self, arms) -> None:
        for arm in arms:
            self.register_pull(int(arm))

    def apply_delivery(self, batch: DeliveryBatch) -> None:
        if len(batch.counts) != self.n_arms:
            raise ValidationError("delivery batch has the wrong number of arms")
        received = self.received + batch.counts
        if np.any(received > self.pulls):
            bad = int(np.argmax(received > self.pulls))
            raise SimulationError(
                f"round {batch.t}: {batch.counts[bad]} deliveries for arm {bad} exceed "
                f"its {self.pulls[bad] - self.received[bad]} outstanding pulls"
            )
        self.received = received
        self.observed_sum = self.observed_sum + batch.reward_sums

    def empirical_mean(self, arm: int) -> float:
        """Observed mean ``S / max(M, 1)``; zero for an arm with no feedback yet."""
        self._check_arm(arm)
        return float(self.observed_sum[arm] / max(int(self.received[arm]), 1))

    def empirical_means(self) -> np.ndarray:
        return self.observed_sum / np.maximum(self.received, 1)

    @property
    def outstanding(self) -> np.ndarray:
        return self.pulls - self.received


def new_ledger(n_arms: int) -> FeedbackLedger:
    return FeedbackLedger.new(n_arms)
