"""Command-line front end: simulate / sweep / generate / validate.

Exit codes: 0 success, 2 config error, 3 data error, 4 runtime error
(e.g. the value-iteration non-convergence guard).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import data as data_mod
from . import simulate as sim_mod
from .errors import ConfigError, DataError
from .metrics import write_report_csv, write_traces_json, write_weights_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return payload


def _load_dataset(args) -> data_mod.Dataset:
    if not args.dataset or not args.stations:
        raise ConfigError("--dataset and --stations are both required")
    try:
        return data_mod.load_dataset(args.dataset, args.stations)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from None


def _with_overrides(cfg: data_mod.RunConfig, args) -> data_mod.RunConfig:
    if args.seed is None:
        return cfg
    return dataclasses.replace(cfg, seed=args.seed)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = data_mod.run_config_from_dict(_load_json(args.config), where=args.config)
    cfg = _with_overrides(cfg, args)
    dataset = _load_dataset(args)
    repeats = args.repeats if args.repeats is not None else 1
    report = sim_mod.run_experiment(cfg, dataset, repeats=repeats,
                                    literal_bellman=args.literal_bellman)
    out = _outdir(args)
    write_report_csv(report, out / "report.csv")
    write_traces_json(report, out / "traces.json")
    for run in report.runs:
        write_weights_csv(run, out / f"weights_r{run.repeat}.csv")
    row = report.rows[0]
    print(f"{row.scheme}/{row.inference} P={row.participants} A={row.attributes}: "
          f"epsilon={row.epsilon:.6f} phi_km={row.phi_km:.6f} (repeats={row.repeats})")
    print(f"wrote {out / 'report.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sweep = sim_mod.sweep_config_from_dict(_load_json(args.config), where=args.config)
    if args.seed is not None:
        sweep = dataclasses.replace(sweep, seed=args.seed)
    if args.repeats is not None:
        sweep = dataclasses.replace(sweep, repeats=args.repeats)
    dataset = _load_dataset(args)
    report = sim_mod.run_sweep(sweep, dataset, literal_bellman=args.literal_bellman)
    out = _outdir(args)
    write_report_csv(report, out / "report.csv")
    write_traces_json(report, out / "traces.json")
    print(f"{len(report.rows)} configurations -> {out / 'report.csv'}")
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = data_mod.synthetic_config_from_dict(_load_json(args.config), where=args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    dataset = data_mod.generate_synthetic(cfg)
    out = _outdir(args)
    data_mod.write_dataset(dataset, out / "measurements.csv", out / "stations.csv")
    print(f"generated X={dataset.n_cells} A={dataset.n_attributes} Y={dataset.n_cycles} "
          f"-> {out / 'measurements.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    checked = []
    if args.config:
        payload = _load_json(args.config)
        if "schemes" in payload:
            sim_mod.sweep_config_from_dict(payload, where=args.config)
            checked.append(f"{args.config}: valid sweep config")
        elif "scheme" in payload:
            data_mod.run_config_from_dict(payload, where=args.config)
            checked.append(f"{args.config}: valid run config")
        else:
            data_mod.synthetic_config_from_dict(payload, where=args.config)
            checked.append(f"{args.config}: valid synthetic config")
    if args.dataset or args.stations:
        dataset = _load_dataset(args)
        checked.append(
            f"{args.dataset}: valid dataset "
            f"(X={dataset.n_cells}, A={dataset.n_attributes}, Y={dataset.n_cycles})"
        )
    if not checked:
        raise ConfigError("nothing to validate: pass --config and/or --dataset/--stations")
    for line in checked:
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcota",
        description="Quality-cost-aware online task allocation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_out=True):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--dataset", help="measurements CSV")
        p.add_argument("--stations", help="stations CSV")
        if need_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--repeats", type=int, default=None, help="override the repeat count")
        p.add_argument("--literal-bellman", action="store_true",
                       help="use the bare gamma/distance reward in value iteration")

    p_sim = sub.add_parser("simulate", help="run one configuration")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a configuration grid")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("generate", help="write a synthetic dataset")
    p_gen.add_argument("--config", required=True, help="synthetic config JSON")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_gen.set_defaults(func=cmd_generate)

    p_val = sub.add_parser("validate", help="schema-check config and dataset files")
    p_val.add_argument("--config", help="JSON configuration file")
    p_val.add_argument("--dataset", help="measurements CSV")
    p_val.add_argument("--stations", help="stations CSV")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
