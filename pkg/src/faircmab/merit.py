"""Merit functions and the closed-form optimal fair policy.

A merit function maps an expected reward in ``[0, 1]`` to a positive merit.
Fairness asks that each arm is selected with probability proportional to
its merit, which for ``L`` plays per round pins the policy down to

    p*_a = L f(mu_a) / sum_b f(mu_b).

Each merit function declares its minimum ``lam`` and Lipschitz constant
``lipschitz``; both declarations are checked on a dense grid when the
object is built.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .exceptions import MeritAssumptionError, ValidationError

GRID_SIZE = 10_001
_GRID = np.linspace(0.0, 1.0, GRID_SIZE)


class MeritFunction:
    """Base class.  Subclasses implement ``_evaluate`` on arrays."""

    lam: float
    lipschitz: float

    def __call__(self, mu):
        return self._evaluate(np.asarray(mu, dtype=float))

    def _evaluate(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def merit(self, mu: float) -> float:
        if not 0.0 <= mu <= 1.0:
            raise ValidationError(f"expected reward {mu} outside [0, 1]")
        return float(self._evaluate(np.asarray(mu, dtype=float)))

    def _verify_declarations(self) -> None:
        values = self._evaluate(_GRID)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(values))))
        if np.min(values) < self.lam - tol:
            raise ValidationError(
                f"declared minimum merit {self.lam} exceeds the observed minimum {np.min(values)}"
            )
        slopes = np.abs(np.diff(values)) / np.diff(_GRID)
        if np.max(slopes) > self.lipschitz * (1 + 1e-9) + tol:
            raise ValidationError(
                f"declared Lipschitz constant {self.lipschitz} is below the observed slope {np.max(slopes)}"
            )

    def range_on_unit_interval(self) -> tuple[float, float]:
        """(min, max) of f over the verification grid plus endpoints."""
        values = np.concatenate([self._evaluate(_GRID), self._evaluate(np.array([0.0, 1.0]))])
        return float(values.min()), float(values.max())

    def solver_params(self) -> tuple[int, float, float, float, np.ndarray, np.ndarray]:
        """Flat parameters for the compiled argmax kernels: ``(kind, beta, w, c, xs, ys)``.

        ``kind`` 0 is ``beta + w * mu**c``; kind 1 is linear interpolation of ``(xs, ys)``.
        """
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError


class PowerPlus(MeritFunction):
    """``f(mu) = beta + w * mu**c`` with ``beta > 0``, ``w >= 0``, ``c >= 1``."""

    def __init__(self, beta: float = 1.0, w: float = 2.0, c: float = 4.0, *, lam=None, lipschitz=None):
        if not beta > 0:
            raise ValidationError(f"offset beta must be positive, got {beta}")
        if w < 0:
            raise ValidationError(f"weight w must be nonnegative, got {w}")
        if c < 1:
            raise ValidationError(f"exponent c must be at least 1, got {c}")
        self.beta, self.w, self.c = float(beta), float(w), float(c)
        # increasing on [0, 1]; steepest at mu = 1
        self.lam = self.beta if lam is None else float(lam)
        self.lipschitz = self.w * self.c if lipschitz is None else float(lipschitz)
        self._verify_declarations()

    def _evaluate(self, mu):
        return self.beta + self.w * mu**self.c

    def solver_params(self):
        empty = np.zeros(1)
        return 0, self.beta, self.w, self.c, empty, empty

    def to_spec(self):
        return {"type": "power_plus", "beta": self.beta, "w": self.w, "c": self.c}

    def __repr__(self):
        return f"PowerPlus(beta={self.beta}, w={self.w}, c={self.c})"


class Identity(MeritFunction):
    """``f(mu) = mu``.  Its minimum merit is 0, so it fails positivity by design."""

    lam = 0.0
    lipschitz = 1.0

    def _evaluate(self, mu):
        return mu + 0.0

    def solver_params(self):
        empty = np.zeros(1)
        return 0, 0.0, 1.0, 1.0, empty, empty

    def to_spec(self):
        return {"type": "identity"}

    def __repr__(self):
        return "Identity()"


class Custom(MeritFunction):
    """Piecewise-linear merit through tabulated points ``(mu_i, value_i)``.

    The table must cover ``[0, 1]`` with strictly increasing knots.
    """

    def __init__(self, mu: Sequence[float], values: Sequence[float], *, lam=None, lipschitz=None):
        xs = np.asarray(mu, dtype=float)
        ys = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValidationError("custom merit needs at least two (mu, value) pairs of equal length")
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise ValidationError("custom merit knots must increase strictly from 0 to 1")
        self.xs, self.ys = xs, ys
        self.lam = float(ys.min()) if lam is None else float(lam)
        slopes = np.abs(np.diff(ys)) / np.diff(xs)
        self.lipschitz = float(slopes.max()) if lipschitz is None else float(lipschitz)
        self._verify_declarations()

    def _evaluate(self, mu):
        return np.interp(mu, self.xs, self.ys)

    def solver_params(self):
        return 1, 0.0, 0.0, 0.0, self.xs, self.ys

    def to_spec(self):
        return {"type": "custom", "mu": self.xs.tolist(), "values": self.ys.tolist()}

    def __repr__(self):
        return f"Custom(mu={self.xs.tolist()}, values={self.ys.tolist()})"


def merit(f: MeritFunction, mu: float) -> float:
    return f.merit(mu)


def merit_from_spec(spec: Mapping) -> MeritFunction:
    if not isinstance(spec, Mapping) or "type" not in spec:
        raise ValidationError("merit spec must be an object with a 'type' field")
    kind = spec["type"]
    extra = {k: spec[k] for k in ("lam", "lipschitz") if k in spec}
    if kind == "power_plus":
        return PowerPlus(spec.get("beta", 1.0), spec.get("w", 2.0), spec.get("c", 4.0), **extra)
    if kind == "identity":
        return Identity()
    if kind == "custom":
        try:
            return Custom(spec["mu"], spec["values"], **extra)
        except KeyError as exc:
            raise ValidationError(f"custom merit spec is missing {exc.args[0]!r}") from None
    raise ValidationError(f"unknown merit type {kind!r}; expected power_plus, identity or custom")


def check_positive_merit(f: MeritFunction) -> None:
    lo, _ = f.range_on_unit_interval()
    if f.lam <= 0 or lo <= 0:
        raise MeritAssumptionError(f"{f!r} has minimum merit {min(lo, f.lam)}; a positive minimum is required")


def check_ratio_assumption(f: MeritFunction, n_arms: int, n_plays: int) -> bool:
    """Whether ``max f / min f <= (K - 1) / (L - 1)`` on ``[0, 1]``.

    Vacuously true for a single play.  Otherwise a merit whose minimum is
    not positive raises, since the ratio is then unbounded.
    """
    if not 1 <= n_plays <= n_arms:
        raise ValidationError(f"need 1 <= L <= K, got K={n_arms}, L={n_plays}")
    if n_plays == 1:
        return True
    check_positive_merit(f)
    lo, hi = f.range_on_unit_interval()
    return hi / lo <= (n_arms - 1) / (n_plays - 1) * (1 + 1e-12)


def validate_assumptions(f: MeritFunction, n_arms: int, n_plays: int) -> None:
    """Raise unless ``f`` has a positive minimum and a small enough merit ratio."""
    check_positive_merit(f)
    if not check_ratio_assumption(f, n_arms, n_plays):
        lo, hi = f.range_on_unit_interval()
        raise MeritAssumptionError(
            f"merit ratio {hi / lo:.6g} exceeds (K-1)/(L-1) = {(n_arms - 1) / (n_plays - 1):.6g}"
        )


def fair_vector(f: MeritFunction, mu, n_plays: int) -> np.ndarray:
    """``L f(mu_a) / sum_b f(mu_b)`` without any validation."""
    m = f(mu)
    return n_plays * m / m.sum()


def optimal_policy(f: MeritFunction, mu, n_plays: int) -> np.ndarray:
    """The unique selection vector proportional to merit that sums to ``L``.

    Validation is per instance: every merit at ``mu`` must be positive and
    the resulting probabilities must not exceed one.  This admits instances
    such as an identity merit at strictly positive means, which a global
    check on ``[0, 1]`` would reject.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or len(mu) == 0:
        raise ValidationError("mu must be a nonempty vector")
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValidationError("expected rewards must lie in [0, 1]")
    if not 1 <= n_plays <= len(mu):
        raise ValidationError(f"need 1 <= L <= K, got K={len(mu)}, L={n_plays}")
    m = f(mu)
    if np.any(m <= 0):
        raise MeritAssumptionError("merit must be positive at every arm's expected reward")
    p = n_plays * m / m.sum()
    if np.any(p > 1 + 1e-12):
        raise MeritAssumptionError(
            f"merit ratios too large for L={n_plays}: fair probabilities {p.round(6).tolist()} exceed 1"
        )
    return p
