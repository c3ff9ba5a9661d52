"""Ingest a (reward, delay) log and turn it into a simulation environment.

The log is a CSV file with header ``arm,reward,delay``.  Rewards are 0 or 1,
delays are nonnegative integers or ``inf``.  Arms are numbered 1..K in order
of first appearance of their id.  Each arm's rows define an empirical joint
law over (reward, delay): the reward mean is the fraction of ones and the
delay is drawn from the rows that share the realised reward, which
reproduces the joint law exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..delay import Empirical
from ..exceptions import LogFormatError
from .env import Environment

HEADER = ["arm", "reward", "delay"]


@dataclass
class EmpiricalLog:
    arm_ids: list[str]
    pairs: list[list[tuple[int, int | float]]]

    @property
    def n_arms(self) -> int:
        return len(self.arm_ids)

    def means(self) -> np.ndarray:
        return np.array([np.mean([r for r, _ in rows]) for rows in self.pairs])

    def delay_model(self, arm: int) -> Empirical:
        rows = self.pairs[arm]
        by_reward = {}
        for r in (0, 1):
            ds = [d for rr, d in rows if rr == r]
            if ds:
                by_reward[r] = (ds, None)
        return Empirical([d for _, d in rows], None, by_reward)

    def delay_models(self) -> list[Empirical]:
        return [self.delay_model(a) for a in range(self.n_arms)]

    def sample_pairs(self, arm: int, n: int, rng: np.random.Generator) -> list[tuple[int, int | float]]:
        """Draw ``n`` (reward, delay) pairs uniformly from the arm's rows."""
        rows = self.pairs[arm]
        return [rows[i] for i in rng.integers(0, len(rows), size=n)]

    def environment(self, rng: np.random.Generator, horizon: int | None = None) -> Environment:
        return Environment(self.means(), self.delay_models(), rng, horizon)

    def config_fragment(self) -> dict:
        """The ``K``, ``means``, ``delay`` and ``arm_labels`` fields of a config."""
        return {
            "K": self.n_arms,
            "means": self.means().tolist(),
            "delay": [m.to_spec() for m in self.delay_models()],
            "arm_labels": list(self.arm_ids),
        }


def _parse_delay(text: str, line: int) -> int | float:
    s = text.strip()
    if s.lower() == "inf":
        return math.inf
    try:
        d = int(s)
    except ValueError:
        raise LogFormatError(f"line {line}: delay must be a nonnegative integer or 'inf', got {text!r}") from None
    if d < 0:
        raise LogFormatError(f"line {line}: delay must be nonnegative, got {d}")
    return d


def read_log(path: str | Path) -> EmpiricalLog:
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LogFormatError(f"cannot read log {path}: {exc.strerror}") from None
    ids: list[str] = []
    index: dict[str, int] = {}
    pairs: list[list] = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise LogFormatError(f"{path}: log file is empty")
        if [h.strip() for h in header] != HEADER:
            raise LogFormatError(f"line 1: expected header {','.join(HEADER)}, got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise LogFormatError(f"line {line}: expected 3 fields, got {len(row)}")
            arm, reward, delay = (c.strip() for c in row)
            if not arm:
                raise LogFormatError(f"line {line}: empty arm id")
            if reward not in ("0", "1"):
                raise LogFormatError(f"line {line}: reward must be 0 or 1, got {reward!r}")
            d = _parse_delay(delay, line)
            if arm not in index:
                index[arm] = len(ids)
                ids.append(arm)
                pairs.append([])
            pairs[index[arm]].append((int(reward), d))
    if not ids:
        raise LogFormatError(f"{path}: log has no data rows")
    return EmpiricalLog(ids, pairs)


def ingest_log(path: str | Path, rng: np.random.Generator | None = None, horizon: int | None = None):
    """Parse ``path`` and return ``(EmpiricalLog, Environment)``."""
    log = read_log(path)
    return log, log.environment(rng if rng is not None else np.random.default_rng(0), horizon)


__all__ = ["EmpiricalLog", "HEADER", "ingest_log", "read_log"]
