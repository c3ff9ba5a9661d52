"""Fair combinatorial bandit policies under delayed feedback, plus baselines.

Every policy produces a selection vector ``p_t`` (length K, entries in
``[0, 1]``, summing to L) and an arm set of exactly L arms each round, and
consumes delivery batches.  Regret is always measured on ``p_t``.

Fair policies
    FCUCB-D      optimistic argmax over a confidence box built from observed feedback
    FCTS-D       Beta posterior sampling on observed feedback
    OP-FCUCB-D   box widened by imputing outstanding rewards as 1 (upper) and 0 (lower)
    OP-FCTS-D    optimistic and pessimistic posteriors, merit of the averaged draw
Baselines
    CUCB-D       top-L by upper confidence bound
    MP-TS-D      top-L by posterior sample
    FGreedy-D    uniform exploration with probability epsilon, else the fair
                 vector of the empirical means
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DeliveryBatch, FeedbackLedger
from .exceptions import ValidationError
from .merit import MeritFunction, fair_vector, validate_assumptions
from .optimize import ConfidenceRegion, SolverOptions, maximize_over_region
from .rounding import rrs

FCUCB = "FCUCB-D"
FCTS = "FCTS-D"
OP_FCUCB = "OP-FCUCB-D"
OP_FCTS = "OP-FCTS-D"
CUCB = "CUCB-D"
MPTS = "MP-TS-D"
FGREEDY = "FGreedy-D"

POLICY_KINDS = (FCUCB, FCTS, OP_FCUCB, OP_FCTS, CUCB, MPTS, FGREEDY)
FAIR_KINDS = (FCUCB, FCTS, OP_FCUCB, OP_FCTS)
BASELINE_KINDS = (CUCB, MPTS, FGREEDY)
# kinds that play every arm once before their index is defined
INIT_KINDS = (FCUCB, OP_FCUCB, CUCB)
RADIUS_VARIANTS = ("horizon", "delta")

OBSERVED = "observed"
FULL = "full"


def _check_kind(kind: str) -> None:
    if kind not in POLICY_KINDS:
        raise ValidationError(f"unknown policy {kind!r}; valid kinds: {', '.join(POLICY_KINDS)}")


@dataclass
class BetaPosterior:
    """Beta(u, v); the fields may be scalars or per-arm arrays."""

    u: float | np.ndarray = 1.0
    v: float | np.ndarray = 1.0

    def sample(self, rng: np.random.Generator):
        return rng.beta(self.u, self.v)

    @property
    def mean(self):
        return self.u / (self.u + self.v)


def posterior_update(posterior: BetaPosterior, ones, zeros) -> BetaPosterior:
    if np.any(np.asarray(ones) < 0) or np.any(np.asarray(zeros) < 0):
        raise ValidationError("posterior counts must be nonnegative")
    return BetaPosterior(posterior.u + ones, posterior.v + zeros)


def op_posteriors(pulls, received, ones, zeros) -> tuple[BetaPosterior, BetaPosterior]:
    """Optimistic and pessimistic Beta posteriors from uniform priors.

    Outstanding pulls ``N - M`` count as successes in the optimistic one and
    as failures in the pessimistic one; both have ``u + v = N + 2``.
    """
    pulls, received = np.asarray(pulls), np.asarray(received)
    ones, zeros = np.asarray(ones), np.asarray(zeros)
    if np.any(ones + zeros != received) or np.any(received > pulls):
        raise ValidationError("need ones + zeros == M <= N")
    missing = pulls - received
    optimistic = BetaPosterior(1 + ones + missing, 1 + zeros)
    pessimistic = BetaPosterior(1 + ones, 1 + zeros + missing)
    if optimistic.u.ndim == 0:
        optimistic = BetaPosterior(optimistic.u.item(), optimistic.v.item())
        pessimistic = BetaPosterior(pessimistic.u.item(), pessimistic.v.item())
    return optimistic, pessimistic


def init_schedule(n_arms: int, n_plays: int) -> list[np.ndarray]:
    """``ceil(K / L)`` sorted arm sets covering every arm; the last is padded with the lowest arms."""
    if not 1 <= n_plays <= n_arms:
        raise ValidationError(f"need 1 <= L <= K, got K={n_arms}, L={n_plays}")
    order = list(range(n_arms))
    rounds = math.ceil(n_arms / n_plays)
    order += list(range(rounds * n_plays - n_arms))
    return [np.array(sorted(order[r * n_plays : (r + 1) * n_plays])) for r in range(rounds)]


def confidence_radius(
    kind: str, pulls, received, n_arms: int, n_plays: int, horizon: int,
    variant: str = "horizon", delta: float | None = None,
):
    """Per-arm confidence radius.

    ``observed`` divides by ``max(M, 1)``; ``full`` divides by ``N`` and needs
    N >= 1.  The ``horizon`` variant uses ``log(4LKT)`` / ``log(6LKT)``; the
    ``delta`` variant uses ``log(4KT/delta) / 2`` / ``log(6KT/delta) / 2`` with
    ``delta`` defaulting to ``1 / (L T)``.
    """
    if variant not in RADIUS_VARIANTS:
        raise ValidationError(f"radius variant must be one of {RADIUS_VARIANTS}, got {variant!r}")
    if delta is None:
        delta = 1.0 / (n_plays * horizon)
    if kind == OBSERVED:
        denom = np.maximum(np.asarray(received, dtype=float), 1.0)
        if variant == "horizon":
            num = math.log(4 * n_plays * n_arms * horizon)
        else:
            num = math.log(4 * n_arms * horizon / delta) / 2.0
    elif kind == FULL:
        denom = np.asarray(pulls, dtype=float)
        if np.any(denom < 1):
            raise ValidationError("full-feedback radius needs every arm pulled at least once")
        if variant == "horizon":
            num = math.log(6 * n_plays * n_arms * horizon)
        else:
            num = math.log(6 * n_arms * horizon / delta) / 2.0
    else:
        raise ValidationError(f"radius kind must be {OBSERVED!r} or {FULL!r}, got {kind!r}")
    return np.sqrt(num / denom)


@dataclass
class PolicyState:
    kind: str
    n_arms: int
    n_plays: int
    horizon: int
    merit: MeritFunction
    ledger: FeedbackLedger = None
    radius_variant: str = "horizon"
    delta: float | None = None
    epsilon: float = 0.1
    solver: SolverOptions = field(default_factory=SolverOptions)
    posterior: BetaPosterior = None
    schedule: list = field(default_factory=list)
    rounds_played: int = 0
    last_region: ConfidenceRegion | None = None
    last_mu_tilde: np.ndarray | None = None

    def __post_init__(self):
        _check_kind(self.kind)
        if not 1 <= self.n_plays <= self.n_arms:
            raise ValidationError(f"need 1 <= L <= K, got K={self.n_arms}, L={self.n_plays}")
        if self.ledger is None:
            self.ledger = FeedbackLedger.new(self.n_arms)
        if self.posterior is None:
            self.posterior = BetaPosterior(np.ones(self.n_arms), np.ones(self.n_arms))
        if self.kind in INIT_KINDS and not self.schedule:
            self.schedule = init_schedule(self.n_arms, self.n_plays)
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"exploration probability must lie in [0, 1], got {self.epsilon}")
        if self.radius_variant not in RADIUS_VARIANTS:
            raise ValidationError(f"radius variant must be one of {RADIUS_VARIANTS}, got {self.radius_variant!r}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def in_init_phase(self) -> bool:
        return self.rounds_played < len(self.schedule)

    def radius(self, kind: str) -> np.ndarray:
        led = self.ledger
        return confidence_radius(
            kind, led.pulls, led.received, self.n_arms, self.n_plays, self.horizon,
            self.radius_variant, self.delta,
        )


def _indicator(arms, n_arms: int) -> np.ndarray:
    p = np.zeros(n_arms)
    p[arms] = 1.0
    return p


def _top_l(scores: np.ndarray, n_plays: int) -> np.ndarray:
    # stable sort keeps the lower index first among equal scores
    return np.sort(np.argsort(-scores, kind="stable")[:n_plays])


def fcucb_region(state: PolicyState) -> ConfidenceRegion:
    mu_hat = state.ledger.empirical_means()
    c = state.radius(OBSERVED)
    return ConfidenceRegion(np.maximum(mu_hat - c, 0.0), np.minimum(mu_hat + c, 1.0))


def op_estimates(ledger: FeedbackLedger) -> tuple[np.ndarray, np.ndarray]:
    """Means with every outstanding reward imputed as 1 (optimistic) and as 0 (pessimistic)."""
    n = ledger.pulls.astype(float)
    if np.any(n < 1):
        raise ValidationError("optimistic-pessimistic estimates need every arm pulled at least once")
    pessimistic = ledger.observed_sum / n
    optimistic = (n - ledger.received) / n + pessimistic
    return optimistic, pessimistic


def opfcucb_region(state: PolicyState) -> ConfidenceRegion:
    optimistic, pessimistic = op_estimates(state.ledger)
    c = state.radius(FULL)
    return ConfidenceRegion(np.maximum(pessimistic - c, 0.0), np.minimum(optimistic + c, 1.0))


def _region_select(state: PolicyState, region: ConfidenceRegion) -> np.ndarray:
    mu_tilde = maximize_over_region(state.merit, region, state.n_plays, state.solver)
    state.last_region = region
    state.last_mu_tilde = mu_tilde
    return fair_vector(state.merit, mu_tilde, state.n_plays)


def fcucb_select_vector(state: PolicyState) -> np.ndarray:
    return _region_select(state, fcucb_region(state))


def opfcucb_select_vector(state: PolicyState) -> np.ndarray:
    return _region_select(state, opfcucb_region(state))


def fcts_select_vector(state: PolicyState, rng: np.random.Generator) -> np.ndarray:
    mu_tilde = state.posterior.sample(rng)
    state.last_mu_tilde = mu_tilde
    return fair_vector(state.merit, mu_tilde, state.n_plays)


def op_sample(ledger: FeedbackLedger, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Joint draw of ``(mu+, mu-)`` with the marginals of :func:`op_posteriors`.

    Both coordinates share Gamma variates for the observed ones, the observed
    zeros and the outstanding pulls::

        mu+ = (G1 + Gm) / (G1 + Gm + G0),   mu- = G1 / (G1 + Gm + G0)

    so ``mu+ ~ Beta(1 + ones + N - M, 1 + zeros)`` and
    ``mu- ~ Beta(1 + ones, 1 + zeros + N - M)``.  With no outstanding pulls the
    two coincide and equal a single FCTS-D posterior draw.
    """
    ones, zeros = _observed_split(ledger)
    op_posteriors(ledger.pulls, ledger.received, ones, zeros)  # count validation
    missing = ledger.pulls - ledger.received
    g1 = rng.standard_gamma(1.0 + ones)
    g0 = rng.standard_gamma(1.0 + zeros)
    gm = np.where(missing > 0, rng.standard_gamma(np.maximum(missing, 1).astype(float)), 0.0)
    total = g1 + g0 + gm
    return (g1 + gm) / total, g1 / total


def opfcts_select_vector(state: PolicyState, rng: np.random.Generator) -> np.ndarray:
    mu_plus, mu_minus = op_sample(state.ledger, rng)
    mu_tilde = 0.5 * (mu_plus + mu_minus)
    state.last_mu_tilde = mu_tilde
    return fair_vector(state.merit, mu_tilde, state.n_plays)


def _observed_split(ledger: FeedbackLedger) -> tuple[np.ndarray, np.ndarray]:
    ones = np.rint(ledger.observed_sum).astype(np.int64)
    return ones, ledger.received - ones


def baseline_select(kind: str, state: PolicyState, t: int, rng: np.random.Generator):
    """Selection vector and arm set for the unfair / naive baselines (after any init phase)."""
    n_arms, n_plays = state.n_arms, state.n_plays
    if kind == CUCB:
        scores = state.ledger.empirical_means() + state.radius(OBSERVED)
        arms = _top_l(scores, n_plays)
        return _indicator(arms, n_arms), arms
    if kind == MPTS:
        arms = _top_l(state.posterior.sample(rng), n_plays)
        return _indicator(arms, n_arms), arms
    if kind == FGREEDY:
        if rng.random() < state.epsilon:
            arms = np.sort(rng.choice(n_arms, size=n_plays, replace=False))
            return np.full(n_arms, n_plays / n_arms), arms
        p = fair_vector(state.merit, state.ledger.empirical_means(), n_plays)
        return p, rrs(p, n_plays, rng)
    raise ValidationError(f"{kind!r} is not a baseline policy")


class Policy:
    """A policy kind bound to its state and its own random stream.

    ``select`` returns ``(p_t, A_t)`` and records the pulls of ``A_t`` in the
    ledger, so deliveries for the same round may be applied right after.
    """

    def __init__(self, state: PolicyState, rng: np.random.Generator):
        self.state = state
        self.rng = rng

    @property
    def kind(self) -> str:
        return self.state.kind

    @property
    def ledger(self) -> FeedbackLedger:
        return self.state.ledger

    def select(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        st = self.state
        if st.in_init_phase:
            arms = st.schedule[st.rounds_played]
            p = _indicator(arms, st.n_arms)
        elif st.kind in BASELINE_KINDS:
            p, arms = baseline_select(st.kind, st, t, self.rng)
        else:
            if st.kind == FCUCB:
                p = fcucb_select_vector(st)
            elif st.kind == FCTS:
                p = fcts_select_vector(st, self.rng)
            elif st.kind == OP_FCUCB:
                p = opfcucb_select_vector(st)
            else:
                p = opfcts_select_vector(st, self.rng)
            arms = rrs(p, st.n_plays, self.rng)
        st.rounds_played += 1
        st.ledger.pulls[arms] += 1
        return p, arms

    def update(self, batch: DeliveryBatch) -> None:
        if batch.total == 0:
            return
        ones, zeros = batch.bernoulli_split()
        self.state.ledger.apply_delivery(batch)
        self.state.posterior = posterior_update(self.state.posterior, ones, zeros)


def make_policy(
    kind: str,
    n_arms: int,
    n_plays: int,
    horizon: int,
    merit: MeritFunction,
    rng: np.random.Generator,
    *,
    radius_variant: str = "horizon",
    delta: float | None = None,
    epsilon: float = 0.1,
    solver: SolverOptions | None = None,
) -> Policy:
    _check_kind(kind)
    validate_assumptions(merit, n_arms, n_plays)
    state = PolicyState(
        kind, n_arms, n_plays, horizon, merit,
        radius_variant=radius_variant, delta=delta, epsilon=epsilon,
        solver=solver or SolverOptions(),
    )
    return Policy(state, rng)
