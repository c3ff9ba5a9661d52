"""Replication loop, cross-run aggregation and CSV output.

One round of a replication::

    p_t, A_t = policy.select(t)      # RRS realisation happens inside select
    env.pull(t, A_t)                 # draws (reward, delay), queues finite arrivals
    policy.update(env.deliver(t))    # end-of-round delivery of everything due at t
    trace.accumulate(step_regrets(p*, p_t, mu), ...)

Random streams: replication ``i`` uses seed ``base + i``.  The environment
stream is keyed by the seed alone and the policy stream by the seed and the
policy kind.  Every policy therefore faces the same reward and delay
realisations in a given replication.
"""

from __future__ import annotations

import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..core import DeliveryBatch
from ..exceptions import SimulationError
from ..merit import optimal_policy
from ..metrics import RegretTrace, step_regrets
from ..policies import Policy, make_policy
from .config import ExperimentConfig, config_from_dict
from .env import Environment

TRACE_COLUMNS = ("policy", "run", "t", "rr", "fr", "cum_rr", "cum_fr")
AGGREGATE_COLUMNS = ("policy", "t", "mean_cum_rr", "std_cum_rr", "mean_cum_fr", "std_cum_fr")
SUMMARY_COLUMNS = ("policy", "arm", "selection_fraction", "p_star")

Observer = Callable[[int, Policy, np.ndarray, np.ndarray, DeliveryBatch, Environment], None]


def environment_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def policy_rng(seed: int, kind: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, zlib.crc32(kind.encode()))))


def run_replication(
    config: ExperimentConfig, kind: str, seed: int, observer: Observer | None = None
) -> tuple[RegretTrace, np.ndarray]:
    """Play ``config.horizon`` rounds of ``kind``; returns the trace and realised selection fractions.

    ``observer``, if given, is called after each round's update with
    ``(t, policy, p_t, arms, batch, env)``.
    """
    mu = np.asarray(config.means, dtype=float)
    merit = config.merit
    p_star = optimal_policy(merit, mu, config.n_plays)
    env = Environment(mu, config.delay_models, environment_rng(seed), horizon=config.horizon)
    policy = make_policy(
        kind, config.n_arms, config.n_plays, config.horizon, merit, policy_rng(seed, kind),
        radius_variant=config.radius_variant, delta=config.delta,
        epsilon=config.epsilon, solver=config.solver,
    )
    trace = RegretTrace(config.n_arms)
    for t in range(1, config.horizon + 1):
        p, arms = policy.select(t)
        if len(arms) != config.n_plays:
            raise SimulationError(f"{kind} played {len(arms)} arms at round {t}")
        env.pull(t, arms)
        batch = env.deliver(t)
        policy.update(batch)
        rr, fr = step_regrets(p_star, p, mu)
        trace.accumulate(rr, fr, p, arms)
        if observer is not None:
            observer(t, policy, p, arms, batch, env)
    return trace, trace.selection_fractions()


@dataclass
class ReplicationResult:
    policy: str
    run: int
    rr: np.ndarray
    fr: np.ndarray
    selection_fractions: np.ndarray

    @property
    def cum_rr(self) -> np.ndarray:
        return np.cumsum(self.rr)

    @property
    def cum_fr(self) -> np.ndarray:
        return np.cumsum(self.fr)


def _replicate(args) -> ReplicationResult:
    doc, kind, run, seed = args
    config = config_from_dict(doc) if isinstance(doc, dict) else doc
    trace, frac = run_replication(config, kind, seed)
    return ReplicationResult(kind, run, trace.rr, trace.fr, frac)


class Welford:
    """Running mean and sample variance of equally shaped arrays."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self._m2 = None

    def add(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        self.n += 1
        if self.mean is None:
            self.mean = x.copy()
            self._m2 = np.zeros_like(x)
            return
        d = x - self.mean
        self.mean += d / self.n
        self._m2 += d * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(np.maximum(self._m2 / (self.n - 1), 0.0))


@dataclass
class PolicyAggregate:
    policy: str
    runs: int
    mean_cum_rr: np.ndarray
    std_cum_rr: np.ndarray
    mean_cum_fr: np.ndarray
    std_cum_fr: np.ndarray
    selection_fractions: np.ndarray
    final_cum_rr: np.ndarray
    final_cum_fr: np.ndarray


def aggregate(results: list[ReplicationResult]) -> PolicyAggregate:
    """Fold replications of one policy in run order."""
    if not results:
        raise SimulationError("nothing to aggregate")
    results = sorted(results, key=lambda r: r.run)
    rr, fr, frac = Welford(), Welford(), Welford()
    for r in results:
        rr.add(r.cum_rr)
        fr.add(r.cum_fr)
        frac.add(r.selection_fractions)
    return PolicyAggregate(
        results[0].policy, len(results), rr.mean, rr.std, fr.mean, fr.std, frac.mean,
        np.array([r.cum_rr[-1] for r in results]), np.array([r.cum_fr[-1] for r in results]),
    )


def replicate(config: ExperimentConfig, kind: str, workers: int | None = None) -> list[ReplicationResult]:
    jobs = [(config, kind, i, config.seed + i) for i in range(config.runs)]
    workers = config.workers if workers is None else workers
    if workers <= 1 or config.runs == 1:
        return [_replicate(j) for j in jobs]
    doc = config.to_dict()
    with ProcessPoolExecutor(max_workers=min(workers, config.runs)) as pool:
        return list(pool.map(_replicate, [(doc, k, i, s) for _, k, i, s in jobs]))


def _fmt(x: float) -> str:
    return repr(float(x))


def _trace_rounds(horizon: int, stride: int) -> np.ndarray:
    ts = np.arange(stride, horizon + 1, stride)
    if len(ts) == 0 or ts[-1] != horizon:
        ts = np.append(ts, horizon)
    return ts


def _write_lines(path: Path, header, lines) -> None:
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for line in lines:
                fh.write(line)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _trace_lines(results: list[ReplicationResult], ts: np.ndarray):
    idx = ts - 1
    for r in results:
        cr, cf = r.cum_rr, r.cum_fr
        for t, i in zip(ts, idx):
            yield f"{r.policy},{r.run},{t},{_fmt(r.rr[i])},{_fmt(r.fr[i])},{_fmt(cr[i])},{_fmt(cf[i])}\n"


def _aggregate_lines(aggs: list[PolicyAggregate], ts: np.ndarray):
    idx = ts - 1
    for a in aggs:
        for t, i in zip(ts, idx):
            yield (
                f"{a.policy},{t},{_fmt(a.mean_cum_rr[i])},{_fmt(a.std_cum_rr[i])},"
                f"{_fmt(a.mean_cum_fr[i])},{_fmt(a.std_cum_fr[i])}\n"
            )


def _summary_lines(aggs: list[PolicyAggregate], p_star: np.ndarray, labels: list[str]):
    for a in aggs:
        for label, frac, ps in zip(labels, a.selection_fractions, p_star):
            yield f"{a.policy},{label},{_fmt(frac)},{_fmt(ps)}\n"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    p_star: np.ndarray
    aggregates: dict[str, PolicyAggregate]
    out_dir: Path | None


def run_experiment(config: ExperimentConfig, out_dir: str | os.PathLike | None = None, write: bool = True) -> ExperimentResult:
    """Run every configured policy and write ``traces.csv``, ``aggregate.csv`` and ``summary.csv``.

    Files go to ``out_dir`` (default ``config.out``) together with the fully
    resolved ``config.json``.  Set ``write=False`` to only compute.
    """
    p_star = optimal_policy(config.merit, config.means, config.n_plays)
    per_policy = {kind: replicate(config, kind) for kind in config.policies}
    aggs = {kind: aggregate(res) for kind, res in per_policy.items()}
    out = None
    if write:
        out = Path(out_dir if out_dir is not None else config.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
        ts = _trace_rounds(config.horizon, config.trace_stride)
        all_results = [r for kind in config.policies for r in per_policy[kind]]
        _write_lines(out / "traces.csv", TRACE_COLUMNS, _trace_lines(all_results, ts))
        ordered = [aggs[k] for k in config.policies]
        _write_lines(out / "aggregate.csv", AGGREGATE_COLUMNS, _aggregate_lines(ordered, ts))
        labels = config.arm_labels or [str(a + 1) for a in range(config.n_arms)]
        _write_lines(out / "summary.csv", SUMMARY_COLUMNS, _summary_lines(ordered, p_star, labels))
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ExperimentResult(config, p_star, aggs, out)
