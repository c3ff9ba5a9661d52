"""Experiment configuration: JSON schema, defaults and validation.

A minimal document::

    {"K": 7, "L": 3, "T": 40000,
     "means": [0.3, 0.5, 0.7, 0.9, 0.8, 0.6, 0.4],
     "delay": {"type": "geometric", "p": 0.05},
     "merit": {"type": "power_plus", "beta": 1.0, "w": 2.0, "c": 4},
     "policies": ["FCUCB-D", "FCTS-D", "CUCB-D"]}

``delay`` is either one record shared by all arms or a list of K records.
A shared ``pareto`` record may give ``alpha_range: [lo, hi]`` and a shared
``packet_loss`` record ``p_range: [lo, hi]`` instead of a fixed parameter;
one value per arm is then drawn uniformly from ``(lo, hi]`` with a stream
derived from ``seed``, so the draw is part of the configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..delay import DelayModel, PacketLoss, ParetoTypeI, delay_from_spec
from ..exceptions import ConfigError, ValidationError
from ..merit import MeritFunction, merit_from_spec, validate_assumptions
from ..optimize import SolverOptions
from ..policies import POLICY_KINDS, RADIUS_VARIANTS

DEFAULT_RUNS = 100
_REQUIRED = ("K", "L", "T", "means", "delay", "merit", "policies")
_OPTIONAL = (
    "runs", "seed", "radius_variant", "delta", "epsilon", "solver", "out",
    "trace_stride", "workers", "arm_labels",
)
# stream label for parameters drawn at configuration time
_CONFIG_STREAM = 0xC0F1


@dataclass
class ExperimentConfig:
    n_arms: int
    n_plays: int
    horizon: int
    means: list[float]
    delay_specs: list[dict]
    merit_spec: dict
    policies: list[str]
    runs: int = DEFAULT_RUNS
    seed: int = 0
    radius_variant: str = "horizon"
    delta: float | None = None
    epsilon: float = 0.1
    solver: SolverOptions = field(default_factory=SolverOptions)
    out: str = "results"
    trace_stride: int = 1
    workers: int = 1
    arm_labels: list[str] | None = None

    def __post_init__(self):
        self.validate()

    @property
    def merit(self) -> MeritFunction:
        return merit_from_spec(self.merit_spec)

    @property
    def delay_models(self) -> list[DelayModel]:
        return [delay_from_spec(s) for s in self.delay_specs]

    def validate(self) -> None:
        if not isinstance(self.n_arms, int) or self.n_arms < 1:
            raise ConfigError("K", "must be a positive integer")
        if not isinstance(self.n_plays, int) or self.n_plays < 1:
            raise ConfigError("L", "must be a positive integer")
        if self.n_plays > self.n_arms:
            raise ConfigError("L", "L must not exceed K")
        if not isinstance(self.horizon, int) or self.horizon < math.ceil(self.n_arms / self.n_plays):
            raise ConfigError("T", f"must be an integer of at least ceil(K/L) = {math.ceil(self.n_arms / self.n_plays)}")
        if len(self.means) != self.n_arms:
            raise ConfigError("means", f"expected {self.n_arms} values, got {len(self.means)}")
        for i, m in enumerate(self.means):
            if not isinstance(m, (int, float)) or not 0.0 <= m <= 1.0:
                raise ConfigError(f"means[{i}]", f"must lie in [0, 1], got {m!r}")
        if len(self.delay_specs) != self.n_arms:
            raise ConfigError("delay", f"expected one record or {self.n_arms} records")
        for i, spec in enumerate(self.delay_specs):
            try:
                delay_from_spec(spec)
            except ValidationError as exc:
                raise ConfigError(f"delay[{i}]", str(exc)) from None
        try:
            validate_assumptions(self.merit, self.n_arms, self.n_plays)
        except ValidationError as exc:
            raise ConfigError("merit", str(exc)) from None
        if not self.policies:
            raise ConfigError("policies", "at least one policy is required")
        for i, kind in enumerate(self.policies):
            if kind not in POLICY_KINDS:
                raise ConfigError(f"policies[{i}]", f"unknown policy {kind!r}; valid kinds: {', '.join(POLICY_KINDS)}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("policies", "duplicate policy names")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigError("runs", "must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if self.radius_variant not in RADIUS_VARIANTS:
            raise ConfigError("radius_variant", f"must be one of {', '.join(RADIUS_VARIANTS)}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ConfigError("delta", "must lie in (0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon", "must lie in [0, 1]")
        if not isinstance(self.trace_stride, int) or self.trace_stride < 1:
            raise ConfigError("trace_stride", "must be a positive integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be a positive integer")
        if self.arm_labels is not None and len(self.arm_labels) != self.n_arms:
            raise ConfigError("arm_labels", f"expected {self.n_arms} labels")

    def to_dict(self) -> dict:
        doc = {
            "K": self.n_arms, "L": self.n_plays, "T": self.horizon,
            "means": list(self.means), "delay": self.delay_specs, "merit": self.merit_spec,
            "policies": list(self.policies), "runs": self.runs, "seed": self.seed,
            "radius_variant": self.radius_variant, "delta": self.delta, "epsilon": self.epsilon,
            "solver": asdict(self.solver), "out": self.out, "trace_stride": self.trace_stride,
            "workers": self.workers,
        }
        if self.arm_labels is not None:
            doc["arm_labels"] = list(self.arm_labels)
        return doc


def _draw_range(path: str, bounds, n: int, rng: np.random.Generator) -> list[float]:
    try:
        lo, hi = (float(b) for b in bounds)
    except (TypeError, ValueError):
        raise ConfigError(path, "must be a pair [lo, hi]") from None
    if not 0.0 <= lo < hi:
        raise ConfigError(path, "need 0 <= lo < hi")
    # U lies in [0, 1), so hi - U (hi - lo) lies in (lo, hi]
    return [float(hi - u * (hi - lo)) for u in rng.random(n)]


def _resolve_delays(raw: Any, n_arms: int, seed: int) -> list[dict]:
    if isinstance(raw, Mapping):
        raw = dict(raw)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_CONFIG_STREAM,)))
        if raw.get("type") == "pareto" and "alpha_range" in raw:
            alphas = _draw_range("delay.alpha_range", raw["alpha_range"], n_arms, rng)
            return [ParetoTypeI(a).to_spec() for a in alphas]
        if raw.get("type") == "packet_loss" and "p_range" in raw:
            ps = _draw_range("delay.p_range", raw["p_range"], n_arms, rng)
            return [PacketLoss(p).to_spec() for p in ps]
        return [dict(raw) for _ in range(n_arms)]
    if isinstance(raw, list):
        if not all(isinstance(r, Mapping) for r in raw):
            raise ConfigError("delay", "list entries must be delay records")
        return [dict(r) for r in raw]
    raise ConfigError("delay", "must be a delay record or a list of records")


def _solver_options(raw: Any) -> SolverOptions:
    if raw is None:
        return SolverOptions()
    if not isinstance(raw, Mapping):
        raise ConfigError("solver", "must be an object")
    allowed = SolverOptions.__dataclass_fields__
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"solver.{key}", f"unknown option; expected one of {', '.join(allowed)}")
    return SolverOptions(**raw)


def config_from_dict(doc: Mapping) -> ExperimentConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("", "configuration must be a JSON object")
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, "required field is missing")
    for key in doc:
        if key not in _REQUIRED and key not in _OPTIONAL:
            raise ConfigError(key, "unknown field")
    n_arms = doc["K"]
    if not isinstance(n_arms, int) or n_arms < 1:
        raise ConfigError("K", "must be a positive integer")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    if not isinstance(doc["means"], list):
        raise ConfigError("means", "must be a list")
    if not isinstance(doc["policies"], list):
        raise ConfigError("policies", "must be a list of policy names")
    if not isinstance(doc["merit"], Mapping):
        raise ConfigError("merit", "must be a merit record")
    return ExperimentConfig(
        n_arms=n_arms,
        n_plays=doc["L"],
        horizon=doc["T"],
        means=list(doc["means"]),
        delay_specs=_resolve_delays(doc["delay"], n_arms, seed),
        merit_spec=dict(doc["merit"]),
        policies=list(doc["policies"]),
        runs=doc.get("runs", DEFAULT_RUNS),
        seed=seed,
        radius_variant=doc.get("radius_variant", "horizon"),
        delta=doc.get("delta"),
        epsilon=doc.get("epsilon", 0.1),
        solver=_solver_options(doc.get("solver")),
        out=doc.get("out", "results"),
        trace_stride=doc.get("trace_stride", 1),
        workers=doc.get("workers", 1),
        arm_labels=doc.get("arm_labels"),
    )


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc)
