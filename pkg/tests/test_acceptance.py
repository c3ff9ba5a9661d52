"""Acceptance suite: ten end-to-end criteria with their stated tolerances.

Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are also
collected and repeated in the terminal summary.  Criteria 5-7 share one set
of simulations and criterion 8 another, both cached for the session.

Run on its own with ``pytest tests/test_acceptance.py -v``; ``-m "not slow"`` skips
the simulation criteria.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from faircmab.core import FeedbackLedger
from faircmab.delay import Fixed, Geometric, PacketLoss, quantile
from faircmab.engine.config import config_from_dict
from faircmab.engine.protocols import biased_document, synthetic_document
from faircmab.engine.runner import run_replication
from faircmab.merit import Identity, PowerPlus, optimal_policy
from faircmab.optimize import ConfidenceRegion, fair_reward_objective, grid_oracle, maximize_over_region
from faircmab.policies import (
    FCTS, OP_FCTS, BetaPosterior, PolicyState, fcts_select_vector, op_posteriors, op_sample, opfcts_select_vector,
)
from faircmab.rounding import rrs_many
from oracles import fair_policy_linear_system, quantile_by_scan

RESULTS: dict[int, str] = {}

SYNTH_RUNS = 20
SYNTH_T = 40_000
SYNTH_HALF = 20_000
BIASED_T = 20_000
BIASED_RUNS = 20


def report(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print("\n" + line, flush=True)


def _se(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(len(x)))


def _separated(low, high) -> tuple[bool, float, float]:
    """Whether mean(high) - mean(low) >= 2 standard errors of the difference."""
    gap = float(np.mean(high) - np.mean(low))
    se = math.sqrt(_se(low) ** 2 + _se(high) ** 2)
    return gap >= 2 * se, gap, se


@lru_cache(maxsize=None)
def synthetic_runs():
    """FCUCB-D, FCTS-D and CUCB-D on the K=7, L=3 geometric(0.05) instance."""
    cfg = config_from_dict(synthetic_document(SYNTH_T, ["FCUCB-D", "FCTS-D", "CUCB-D"], runs=SYNTH_RUNS))
    out = {}
    for kind in cfg.policies:
        fr_t, rr_t, fr_h, rr_h, frac = [], [], [], [], []
        for i in range(cfg.runs):
            trace, fractions = run_replication(cfg, kind, cfg.seed + i)
            cr, cf = trace.cum_rr, trace.cum_fr
            rr_t.append(cr[-1])
            fr_t.append(cf[-1])
            rr_h.append(cr[SYNTH_HALF - 1])
            fr_h.append(cf[SYNTH_HALF - 1])
            frac.append(fractions)
        out[kind] = dict(
            rr=np.array(rr_t), fr=np.array(fr_t), rr_half=np.array(rr_h), fr_half=np.array(fr_h),
            fractions=np.mean(frac, axis=0),
        )
    p_star = optimal_policy(cfg.merit, cfg.means, cfg.n_plays)
    return out, p_star


@lru_cache(maxsize=None)
def biased_runs():
    kinds = ["FCUCB-D", "FCTS-D", "OP-FCUCB-D", "OP-FCTS-D"]
    cfg = config_from_dict(biased_document(BIASED_T, kinds, runs=BIASED_RUNS))
    out = {}
    for kind in kinds:
        rr, fr = [], []
        for i in range(cfg.runs):
            trace, _ = run_replication(cfg, kind, cfg.seed + i)
            rr.append(trace.total_rr)
            fr.append(trace.total_fr)
        out[kind] = dict(rr=np.array(rr), fr=np.array(fr))
    return out


def test_criterion_01_exact_fixtures():
    start = time.perf_counter()
    a = optimal_policy(Identity(), [0.3, 0.2, 0.2], 2)
    b = optimal_policy(Identity(), [0.4, 0.4, 0.4], 2)
    err_fixture = max(np.max(np.abs(a - [6 / 7, 4 / 7, 4 / 7])), np.max(np.abs(b - 2 / 3)))
    rng = np.random.default_rng(2024)
    err_system = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 9))
        l = int(rng.integers(1, k + 1))
        w = 2.0 if l == 1 else min(2.0, (k - 1) / (l - 1) - 1.0)
        f = PowerPlus(1.0, w, float(rng.integers(1, 6)))
        mu = rng.random(k)
        p = optimal_policy(f, mu, l)
        err_system = max(err_system, float(np.max(np.abs(p - fair_policy_linear_system(f(mu), l)))))
    elapsed = time.perf_counter() - start
    ok = err_fixture <= 1e-12 and err_system <= 1e-10 and elapsed < 1.0
    report(1, ok, f"fixture err {err_fixture:.1e} (<=1e-12), linear-system err {err_system:.1e} (<=1e-10), {elapsed:.2f}s (<1s)")
    assert ok


def test_criterion_02_rounding_marginals():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, bad_card = 0.0, 0
    for _ in range(50):
        # random fair vector: merits in [1, 3] keep every coordinate at most 1 for K=7, L=3
        m = 1.0 + 2.0 * rng.random(7)
        p = 3 * m / m.sum()
        draws = rrs_many(p, 3, rng, 200_000)
        # rows have exactly L entries; distinct and in range means exactly 3 arms
        bad_card += int(np.sum(np.any(np.diff(np.sort(draws, axis=1), axis=1) == 0, axis=1)))
        bad_card += int(np.sum((draws < 0) | (draws >= 7)))
        freq = np.bincount(draws.ravel(), minlength=7) / len(draws)
        worst = max(worst, float(np.max(np.abs(freq - p))))
    elapsed = time.perf_counter() - start
    ok = bad_card == 0 and worst <= 0.005 and elapsed < 30
    report(2, ok, f"max |freq-p| {worst:.4f} (<=0.005), cardinality violations {bad_card}, {elapsed:.1f}s (<30s)")
    assert ok


def test_criterion_03_quantiles():
    levels = [round(0.05 * i, 2) for i in range(1, 20)]
    models = [Fixed(0), Fixed(7), Fixed(6000), Geometric(0.05), Geometric(0.3), Geometric(0.9), Geometric(1.0),
              PacketLoss(0.3), PacketLoss(0.75), PacketLoss(1.0)]
    start = time.perf_counter()
    closed = {(i, q): quantile(m, q) for i, m in enumerate(models) for q in levels}
    median = quantile(Geometric(0.05), 0.5)
    elapsed = time.perf_counter() - start
    mismatches = [
        (models[i], q) for (i, q), d in closed.items() if d != quantile_by_scan(models[i].cdf, q, limit=10_000)
    ]
    ok = not mismatches and median == 13 and elapsed < 1.0
    report(3, ok, f"{len(mismatches)} mismatches over {len(models) * len(levels)} cases, geometric(0.05) median {median}, {elapsed:.2f}s (<1s)")
    assert ok


def test_criterion_04_argmax_solver():
    start = time.perf_counter()
    f = PowerPlus(1, 2, 4)
    rng = np.random.default_rng(11)
    worst = math.inf
    for _ in range(50):
        a, b = rng.random(3), rng.random(3)
        region = ConfidenceRegion(np.minimum(a, b), np.maximum(a, b))
        x = maximize_over_region(f, region, 2)
        g = grid_oracle(f, region, 2, 1e-3)
        worst = min(worst, fair_reward_objective(f, x, 2) - fair_reward_objective(f, g, 2))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-4 and elapsed < 60
    report(4, ok, f"min objective(solver) - objective(grid) {worst:+.2e} (>=-1e-4), {elapsed:.1f}s (<60s)")
    assert ok


@pytest.mark.slow
def test_criterion_05_fairness_convergence():
    runs, p_star = synthetic_runs()
    dev = {k: float(np.max(np.abs(v["fractions"] - p_star))) for k, v in runs.items()}
    ok = dev["FCUCB-D"] < 0.05 and dev["FCTS-D"] < 0.05 and dev["CUCB-D"] >= 0.10
    report(5, ok, "max |fraction - p*|: " + ", ".join(f"{k} {v:.4f}" for k, v in dev.items()) + " (fair <0.05, CUCB-D >=0.10)")
    assert ok


@pytest.mark.slow
def test_criterion_06_regret_orderings():
    runs, _ = synthetic_runs()
    fr_ok, fr_gap, fr_se = _separated(runs["FCUCB-D"]["fr"], runs["CUCB-D"]["fr"])
    rr_ok, rr_gap, rr_se = _separated(runs["CUCB-D"]["rr"], runs["FCUCB-D"]["rr"])
    ok = fr_ok and rr_ok
    report(
        6, ok,
        f"FR_T(CUCB-D)-FR_T(FCUCB-D) {fr_gap:.1f} vs 2SE {2 * fr_se:.1f}; "
        f"RR_T(FCUCB-D)-RR_T(CUCB-D) {rr_gap:.1f} vs 2SE {2 * rr_se:.1f}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_07_sublinear_growth():
    runs, _ = synthetic_runs()
    ratios = {}
    for kind in ("FCUCB-D", "FCTS-D"):
        r = runs[kind]
        ratios[f"{kind} FR"] = float(np.mean(r["fr"]) / np.mean(r["fr_half"]))
        ratios[f"{kind} RR"] = float(np.mean(r["rr"]) / np.mean(r["rr_half"]))
    ok = all(v < 1.9 for v in ratios.values())
    report(7, ok, "T=4e4 / T=2e4 ratios: " + ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()) + " (<1.9)")
    assert ok


@pytest.mark.slow
def test_criterion_08_reward_dependent_ordering():
    runs = biased_runs()
    parts, ok = [], True
    for plain, op in (("FCUCB-D", "OP-FCUCB-D"), ("FCTS-D", "OP-FCTS-D")):
        for metric in ("fr", "rr"):
            sep, gap, se = _separated(runs[op][metric], runs[plain][metric])
            ok &= sep
            parts.append(f"{metric.upper()} {plain}-{op} {gap:.1f} vs 2SE {2 * se:.1f}")
    report(8, ok, "; ".join(parts))
    assert ok


def test_criterion_09_posterior_algebra():
    exact = True
    for n in range(0, 25):
        for m in range(0, n + 1):
            for ones in range(0, m + 1):
                plus, minus = op_posteriors(n, m, ones, m - ones)
                exact &= plus.u + plus.v == n + 2 and minus.u + minus.v == n + 2
    plus, minus = op_posteriors(4, 1, 1, 0)
    fixture = (plus.u, plus.v, minus.u, minus.v) == (5, 1, 2, 4)
    # small counts so that posterior spread is large
    led = FeedbackLedger(np.array([20, 9, 40, 3, 14]), np.array([20, 9, 40, 3, 14]), np.array([5.0, 7.0, 30.0, 1.0, 7.0]))
    plus, minus = op_sample(led, np.random.default_rng(0))
    exact &= bool(np.array_equal(plus, minus))
    f = PowerPlus(1, 2, 4)
    a = PolicyState(FCTS, 5, 2, 1000, f, ledger=led.copy())
    a.posterior = BetaPosterior(1 + led.observed_sum, 1 + led.received - led.observed_sum)
    b = PolicyState(OP_FCTS, 5, 2, 1000, f, ledger=led.copy())
    ra, rb = np.random.default_rng(1), np.random.default_rng(2)
    n = 100_000
    pa = np.array([fcts_select_vector(a, ra) for _ in range(n)])
    pb = np.array([opfcts_select_vector(b, rb) for _ in range(n)])
    d1 = float(np.max(np.abs(pa.mean(0) - pb.mean(0))))
    d2 = float(np.max(np.abs((pa**2).mean(0) - (pb**2).mean(0))))
    ok = exact and fixture and d1 < 0.01 and d2 < 0.01
    report(9, ok, f"u+v=N+2 and mu+=mu- when N=M {exact}, fixture (Beta(5,1), Beta(2,4)) {fixture}, moment gaps {d1:.4f}/{d2:.4f} (<0.01)")
    assert ok


def test_criterion_10_cli_determinism(tmp_path):
    doc = synthetic_document(2_000, ["FCUCB-D", "FCTS-D", "OP-FCTS-D", "CUCB-D", "MP-TS-D", "FGreedy-D"], runs=2, seed=17)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    outputs = []
    for name in ("first", "second"):
        proc = subprocess.run(
            [sys.executable, "-m", "faircmab", "simulate", "--config", str(cfg), "--out", str(tmp_path / name)],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append({f: (tmp_path / name / f).read_bytes() for f in ("traces.csv", "aggregate.csv", "summary.csv")})
    same = outputs[0] == outputs[1]
    size = sum(len(v) for v in outputs[0].values())
    report(10, same, f"two simulate invocations byte-identical: {same} ({size} bytes of CSV)")
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
