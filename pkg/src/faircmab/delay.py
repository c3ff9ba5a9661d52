"""Feedback-delay laws over the naturals extended with an infinite delay.

A delay of ``d`` rounds for a pull at round ``s`` means the reward is revealed
at the end of round ``s + d``.  ``INFINITE`` marks a reward that never
arrives; it compares greater than every finite delay and is the only
non-integer value a model may return.

Every model supports scalar and vectorised sampling, a CDF on the naturals
and the quantile ``d(q) = min{z : P[D <= z] >= q}``.  Models whose law
depends on the realised reward (``reward_dependent``) need the arm's reward
mean to define a marginal CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .exceptions import ValidationError

INFINITE = math.inf

# a natural number of rounds, or INFINITE
ExtendedDelay = Union[int, float]


def is_infinite(d) -> bool:
    return d == INFINITE


def _as_extended(value) -> int | float:
    """Parse an int, ``inf`` or the string ``"inf"`` into an extended delay."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        try:
            value = int(value)
        except ValueError:
            raise ValidationError(f"delay {value!r} is neither an integer nor 'inf'") from None
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return INFINITE
        if not value.is_integer():
            raise ValidationError(f"delay {value} is not an integer")
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"delay {value!r} is neither an integer nor 'inf'")
    if value < 0:
        raise ValidationError(f"delay {value} is negative")
    return int(value)


def _spec_delay(d) -> int | str:
    return "inf" if is_infinite(d) else int(d)


def _check_q(q: float) -> None:
    if not 0.0 < q <= 1.0:
        raise ValidationError(f"quantile level must lie in (0, 1], got {q}")


class DelayModel:
    """Base class; subclasses provide ``sample_many`` and ``cdf``."""

    reward_dependent = False

    def sample(self, reward: float, rng: np.random.Generator) -> int | float:
        d = self.sample_many(np.array([reward], dtype=float), rng)[0]
        return INFINITE if math.isinf(d) else int(d)

    def sample_many(self, rewards: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one delay per reward; returned as floats with ``inf`` for INFINITE."""
        raise NotImplementedError

    def cdf(self, zeta: int, reward_mean: float | None = None) -> float:
        """``P[D <= zeta]`` for a natural ``zeta``."""
        raise NotImplementedError

    def quantile(self, q: float, reward_mean: float | None = None) -> int | float:
        _check_q(q)
        return self._quantile(q, reward_mean)

    def _quantile(self, q: float, reward_mean: float | None) -> int | float:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def _need_mean(self, reward_mean: float | None) -> float:
        if reward_mean is None:
            raise ValidationError(
                f"{type(self).__name__} is reward-dependent; its marginal law needs the reward mean"
            )
        if not 0.0 <= reward_mean <= 1.0:
            raise ValidationError(f"reward mean {reward_mean} outside [0, 1]")
        return reward_mean


@dataclass(frozen=True)
class Fixed(DelayModel):
    d: int

    def __post_init__(self):
        v = _as_extended(self.d)
        if is_infinite(v):
            raise ValidationError("Fixed delay must be finite; use PacketLoss for lost feedback")
        object.__setattr__(self, "d", v)

    def sample_many(self, rewards, rng):
        return np.full(len(rewards), float(self.d))

    def cdf(self, zeta, reward_mean=None):
        return 1.0 if zeta >= self.d else 0.0

    def _quantile(self, q, reward_mean):
        return self.d

    def to_spec(self):
        return {"type": "fixed", "d": self.d}


@dataclass(frozen=True)
class Geometric(DelayModel):
    """``P[D = z] = p (1 - p)^z`` on ``{0, 1, 2, ...}``."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"geometric success probability must lie in (0, 1], got {self.p}")

    def sample_many(self, rewards, rng):
        # numpy's geometric counts trials, i.e. starts at 1
        return (rng.geometric(self.p, size=len(rewards)) - 1).astype(float)

    def cdf(self, zeta, reward_mean=None):
        if zeta < 0:
            return 0.0
        return 1.0 - (1.0 - self.p) ** (zeta + 1)

    def _quantile(self, q, reward_mean):
        if self.p == 1.0:
            return 0
        if q == 1.0:
            return INFINITE
        z = max(math.ceil(math.log1p(-q) / math.log1p(-self.p)) - 1, 0)
        # the log ratio can land one off at exact boundaries
        while z > 0 and self.cdf(z - 1) >= q:
            z -= 1
        while self.cdf(z) < q:
            z += 1
        return z

    def to_spec(self):
        return {"type": "geometric", "p": self.p}


@dataclass(frozen=True)
class ParetoTypeI(DelayModel):
    """Floor of a Pareto Type I draw with scale 1, so the support is ``{1, 2, ...}``.

    Draws too large for a float are reported as INFINITE.
    """

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValidationError(f"Pareto tail index must be positive, got {self.alpha}")

    def sample_many(self, rewards, rng):
        with np.errstate(over="ignore"):
            return np.floor(1.0 + rng.pareto(self.alpha, size=len(rewards)))

    def cdf(self, zeta, reward_mean=None):
        if zeta < 1:
            return 0.0
        return 1.0 - (zeta + 1.0) ** (-self.alpha)

    def _quantile(self, q, reward_mean):
        if q == 1.0:
            return INFINITE
        log_x = -math.log1p(-q) / self.alpha
        if log_x > 700.0:
            return INFINITE
        z = max(math.ceil(math.exp(log_x) - 1.0), 1)
        while z > 1 and self.cdf(z - 1) >= q:
            z -= 1
        while self.cdf(z) < q:
            z += 1
        return z

    def to_spec(self):
        return {"type": "pareto", "alpha": self.alpha}


@dataclass(frozen=True)
class PacketLoss(DelayModel):
    """Zero delay with probability ``p``, lost forever otherwise."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"arrival probability must lie in (0, 1], got {self.p}")

    def sample_many(self, rewards, rng):
        arrived = rng.random(len(rewards)) < self.p
        return np.where(arrived, 0.0, np.inf)

    def cdf(self, zeta, reward_mean=None):
        return self.p if zeta >= 0 else 0.0

    def _quantile(self, q, reward_mean):
        return 0 if q <= self.p else INFINITE

    def to_spec(self):
        return {"type": "packet_loss", "p": self.p}


@dataclass(frozen=True)
class BiasedFixed(DelayModel):
    """Deterministic delay chosen by the realised 0/1 reward."""

    delay_reward1: int | float
    delay_reward0: int | float
    reward_dependent = True

    def __post_init__(self):
        object.__setattr__(self, "delay_reward1", _as_extended(self.delay_reward1))
        object.__setattr__(self, "delay_reward0", _as_extended(self.delay_reward0))

    def sample(self, reward, rng):
        return self.delay_reward1 if reward == 1 else self.delay_reward0

    def sample_many(self, rewards, rng):
        return np.where(np.asarray(rewards) == 1, float(self.delay_reward1), float(self.delay_reward0))

    def cdf(self, zeta, reward_mean=None):
        m = self._need_mean(reward_mean)
        return m * (self.delay_reward1 <= zeta) + (1.0 - m) * (self.delay_reward0 <= zeta)

    def _quantile(self, q, reward_mean):
        m = self._need_mean(reward_mean)
        points = sorted([(self.delay_reward1, m), (self.delay_reward0, 1.0 - m)])
        mass = 0.0
        for d, w in points:
            mass += w
            if w > 0 and mass >= q:
                return d
        return INFINITE

    def to_spec(self):
        return {
            "type": "biased_fixed",
            "delay_reward1": _spec_delay(self.delay_reward1),
            "delay_reward0": _spec_delay(self.delay_reward0),
        }


class _Histogram:
    """Finite-support law over extended delays given by nonnegative weights."""

    def __init__(self, values: Sequence, weights: Sequence[float] | None = None):
        vals = [_as_extended(v) for v in values]
        if not vals:
            raise ValidationError("empirical delay histogram is empty")
        w = np.ones(len(vals)) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (len(vals),):
            raise ValidationError("histogram values and weights differ in length")
        if np.any(w < 0) or not w.sum() > 0:
            raise ValidationError("histogram weights must be nonnegative with positive total")
        merged: dict = {}
        for v, wi in zip(vals, w):
            merged[v] = merged.get(v, 0.0) + float(wi)
        self.values = sorted(merged)
        total = sum(merged.values())
        self.probs = np.array([merged[v] / total for v in self.values])
        self._cum = np.cumsum(self.probs)
        self._draw_values = np.array([float(v) for v in self.values])

    def sample_many(self, n: int, rng) -> np.ndarray:
        idx = np.searchsorted(self._cum, rng.random(n) * self._cum[-1], side="right")
        return self._draw_values[np.minimum(idx, len(self.values) - 1)]

    def cdf(self, zeta) -> float:
        return float(sum(p for v, p in zip(self.values, self.probs) if v <= zeta))

    def to_spec(self) -> dict:
        return {"values": [_spec_delay(v) for v in self.values], "weights": self.probs.tolist()}

    def __eq__(self, other):
        return (
            isinstance(other, _Histogram)
            and self.values == other.values
            and np.array_equal(self.probs, other.probs)
        )


class Empirical(DelayModel):
    """Tabulated delay law, optionally tabulated separately per reward value.

    With ``by_reward`` the delay is drawn from the histogram of the realised
    reward; a reward value without its own histogram falls back to the pooled
    one (``values``/``weights``), which is then required.
    """

    def __init__(
        self,
        values: Sequence | None = None,
        weights: Sequence[float] | None = None,
        by_reward: Mapping[int, tuple[Sequence, Sequence[float] | None]] | None = None,
    ):
        self.pooled = _Histogram(values, weights) if values is not None else None
        self.by_reward = {int(r): _Histogram(v, w) for r, (v, w) in (by_reward or {}).items()}
        if self.pooled is None and not self.by_reward:
            raise ValidationError("empirical delay model needs a histogram")
        self.reward_dependent = bool(self.by_reward)

    def _hist(self, reward: int) -> _Histogram:
        h = self.by_reward.get(reward, self.pooled)
        if h is None:
            raise ValidationError(f"no delay histogram for reward {reward}")
        return h

    def sample_many(self, rewards, rng):
        rewards = np.asarray(rewards)
        if not self.by_reward:
            return self.pooled.sample_many(len(rewards), rng)
        out = np.empty(len(rewards))
        keys = np.rint(rewards).astype(int)
        for r in np.unique(keys):
            mask = keys == r
            out[mask] = self._hist(int(r)).sample_many(int(mask.sum()), rng)
        return out

    def cdf(self, zeta, reward_mean=None):
        if not self.by_reward:
            return self.pooled.cdf(zeta)
        m = self._need_mean(reward_mean)
        c1 = self._hist(1).cdf(zeta) if m > 0 else 0.0
        c0 = self._hist(0).cdf(zeta) if m < 1 else 0.0
        return m * c1 + (1.0 - m) * c0

    def _support(self) -> list:
        hists = ([self.pooled] if self.pooled else []) + list(self.by_reward.values())
        return sorted({v for h in hists for v in h.values if not is_infinite(v)})

    def _quantile(self, q, reward_mean):
        for v in self._support():
            if self.cdf(v, reward_mean) >= q:
                return v
        return INFINITE

    def to_spec(self):
        spec: dict = {"type": "empirical"}
        if self.pooled is not None:
            spec.update(self.pooled.to_spec())
        if self.by_reward:
            spec["by_reward"] = {str(r): h.to_spec() for r, h in sorted(self.by_reward.items())}
        return spec

    def __eq__(self, other):
        return (
            isinstance(other, Empirical)
            and self.pooled == other.pooled
            and self.by_reward == other.by_reward
        )

    def __repr__(self):
        return f"Empirical({self.to_spec()!r})"


def sample_delay(model: DelayModel, reward: float, rng: np.random.Generator) -> int | float:
    if not 0.0 <= reward <= 1.0:
        raise ValidationError(f"reward {reward} outside [0, 1]")
    return model.sample(reward, rng)


def quantile(model: DelayModel, q: float, reward_mean: float | None = None) -> int | float:
    return model.quantile(q, reward_mean)


def max_quantile(
    models: Sequence[DelayModel], q: float, reward_means: Sequence[float] | None = None
) -> int | float:
    """Largest per-arm quantile, INFINITE dominating every finite value."""
    if not models:
        raise ValidationError("max_quantile needs at least one delay model")
    means = list(reward_means) if reward_means is not None else [None] * len(models)
    if len(means) != len(models):
        raise ValidationError("one reward mean per delay model is required")
    return max(m.quantile(q, mu) for m, mu in zip(models, means))


def delay_from_spec(spec: Mapping) -> DelayModel:
    """Build a model from a tagged record such as ``{"type": "geometric", "p": 0.05}``."""
    if not isinstance(spec, Mapping) or "type" not in spec:
        raise ValidationError("delay spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "fixed":
            return Fixed(spec["d"])
        if kind == "geometric":
            return Geometric(float(spec["p"]))
        if kind == "pareto":
            return ParetoTypeI(float(spec["alpha"]))
        if kind == "packet_loss":
            return PacketLoss(float(spec["p"]))
        if kind == "biased_fixed":
            return BiasedFixed(spec["delay_reward1"], spec["delay_reward0"])
        if kind == "empirical":
            by_reward = {
                int(r): (h["values"], h.get("weights")) for r, h in spec.get("by_reward", {}).items()
            }
            return Empirical(spec.get("values"), spec.get("weights"), by_reward or None)
    except KeyError as exc:
        raise ValidationError(f"delay spec of type {kind!r} is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad delay spec {dict(spec)!r}: {exc}") from None
    raise ValidationError(
        f"unknown delay type {kind!r}; expected one of "
        "fixed, geometric, pareto, packet_loss, biased_fixed, empirical"
    )
