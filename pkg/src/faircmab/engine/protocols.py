"""Ready-made experiment documents for the two synthetic benchmark setups."""

from __future__ import annotations

SYNTHETIC_MEANS = [0.3, 0.5, 0.7, 0.9, 0.8, 0.6, 0.4]
SYNTHETIC_MERIT = {"type": "power_plus", "beta": 1.0, "w": 2.0, "c": 4}
# arms (0-indexed) whose reward-1 feedback is delayed in the biased setup
GOOD_ARMS = (2, 3, 4)
BIASED_BASE_DELAY = 6000
BIASED_BASE_HORIZON = 100_000


def biased_delay_magnitude(horizon: int) -> int:
    """Biased delay rescaled with the horizon: ``6000 * T / 1e5``, rounded."""
    return int(round(BIASED_BASE_DELAY * horizon / BIASED_BASE_HORIZON))


def biased_delay_specs(horizon: int, n_arms: int = 7, good_arms=GOOD_ARMS) -> list[dict]:
    """Good arms delay their successes, the others delay their failures."""
    d = biased_delay_magnitude(horizon)
    return [
        {"type": "biased_fixed", "delay_reward1": d, "delay_reward0": 0}
        if a in good_arms
        else {"type": "biased_fixed", "delay_reward1": 0, "delay_reward0": d}
        for a in range(n_arms)
    ]


def synthetic_document(horizon: int, policies: list[str], runs: int = 100, seed: int = 0, p: float = 0.05) -> dict:
    """K=7, L=3 instance with geometric(p) delays and merit 1 + 2 mu^4."""
    return {
        "K": 7, "L": 3, "T": horizon, "runs": runs, "seed": seed,
        "means": list(SYNTHETIC_MEANS),
        "delay": {"type": "geometric", "p": p},
        "merit": dict(SYNTHETIC_MERIT),
        "policies": list(policies),
    }


def biased_document(horizon: int, policies: list[str], runs: int = 100, seed: int = 0) -> dict:
    """Same instance with the reward-dependent fixed delays of the biased setup."""
    doc = synthetic_document(horizon, policies, runs, seed)
    doc["delay"] = biased_delay_specs(horizon)
    return doc
