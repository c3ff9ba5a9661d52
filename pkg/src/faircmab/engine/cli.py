"""Command line entry point: ``simulate``, ``ingest`` and ``policy``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ..exceptions import ValidationError
from ..merit import merit_from_spec, optimal_policy
from .config import config_from_dict, parse_config
from .logs import read_log
from .runner import run_experiment

EXIT_OK = 0
EXIT_INVALID = 2


def _merit_arg(text: str) -> dict:
    """Accept a JSON record or the shorthand ``type[:key=value,...]``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--merit: invalid JSON: {exc.msg}") from None
        return spec
    kind, _, rest = text.partition(":")
    spec: dict = {"type": kind}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--merit: expected key=value, got {item!r}")
        try:
            spec[key.strip()] = float(value)
        except ValueError:
            raise ValidationError(f"--merit: {key.strip()} must be a number") from None
    return spec


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"{name}: expected comma-separated numbers") from None


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    changes = {}
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.policies is not None:
        changes["policies"] = [p.strip() for p in args.policies.split(",") if p.strip()]
    if changes:
        # rebuild through the dict form so overrides are validated like file values
        doc = config.to_dict()
        doc.update(changes)
        config = config_from_dict(doc)
    if args.out is not None:
        config = replace(config, out=args.out)
    result = run_experiment(config)
    for kind, agg in result.aggregates.items():
        print(
            f"{kind}: runs={agg.runs} mean RR_T={agg.mean_cum_rr[-1]:.4f} "
            f"mean FR_T={agg.mean_cum_fr[-1]:.4f}"
        )
    print(f"wrote {result.out_dir}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    log = read_log(args.log)
    out = Path(args.out)
    out.write_text(json.dumps(log.config_fragment(), indent=2) + "\n", encoding="utf-8")
    print(f"K={log.n_arms} arms, {sum(len(p) for p in log.pairs)} rows -> {out}")
    return EXIT_OK


def cmd_policy(args) -> int:
    f = merit_from_spec(_merit_arg(args.merit))
    p = optimal_policy(f, _floats(args.means, "--means"), args.L)
    print(",".join(repr(float(x)) for x in p))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faircmab", description="Fair combinatorial semi-bandits with delayed feedback.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the experiment described by a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--runs", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.add_argument("--policies", help="comma-separated policy kinds")
    sim.set_defaults(func=cmd_simulate)

    ing = sub.add_parser("ingest", help="turn an arm,reward,delay log into a config fragment")
    ing.add_argument("--log", required=True)
    ing.add_argument("--out", required=True)
    ing.set_defaults(func=cmd_ingest)

    pol = sub.add_parser("policy", help="print the optimal fair selection vector")
    pol.add_argument("--means", required=True, help="comma-separated reward means")
    pol.add_argument("--merit", required=True, help='JSON record or shorthand, e.g. "power_plus:beta=1,w=2,c=4"')
    pol.add_argument("-L", type=int, required=True)
    pol.set_defaults(func=cmd_policy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
