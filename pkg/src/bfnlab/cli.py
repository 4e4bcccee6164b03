"""Command-line entry point: ``bfnlab list | run | validate | oracle``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig, parse_config
from .experiment import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, run_experiment, write_outputs
from .scenarios import SCENARIOS, list_scenarios, scenario_text

__all__ = ["main", "build_parser", "load_target", "OUT_DIR_ENV"]

OUT_DIR_ENV = "BFNLAB_OUT_DIR"
LINEAR_KINDS = ("heat", "transport")


def load_target(target: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Resolve a registry name or a config-file path into a validated config."""
    if target in SCENARIOS:
        text = scenario_text(target)
    else:
        path = Path(target)
        if not path.is_file():
            raise ConfigError([f"{target!r} is neither a registered scenario nor a readable file"])
        text = path.read_text(encoding="utf-8")
    return parse_config(text, overrides)


def _default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "bfnlab-results"))


def _run_one(target: str, overrides: list[str], out_dir: str) -> tuple[str, int, str]:
    try:
        cfg = load_target(target, overrides)
    except ConfigError as exc:
        return target, EXIT_CONFIG, str(exc)
    result = run_experiment(cfg)
    dest = Path(out_dir) / cfg.name
    manifest = write_outputs(result, dest)
    lines = [f"{cfg.name}: {manifest['status']} -> {dest}"]
    for entry in manifest["variants"]:
        label = entry["variant"]
        if entry.get("final_boundary_errors"):
            errs = entry["final_boundary_errors"]
            shown = ", ".join(f"{k}={v:.6g}" for k, v in errs.items() if not k.endswith("h1"))
            lines.append(f"  {label}: {shown}")
        for k, v in entry["metrics"].items():
            lines.append(f"  {label}: {k} = {v}")
        if entry["blowup"]:
            lines.append(f"  {label}: blow-up {entry['blowup']['kind']} on leg {entry['blowup']['leg']}")
    return cfg.name, result.exit_code, "\n".join(lines)


def _cmd_list(_args) -> int:
    for name, figure, description, subs in list_scenarios():
        print(f"{name}\n    figure: {figure}\n    {description}")
        for s in subs:
            print(f"    substitution: {s}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    status = EXIT_OK
    for target in args.targets:
        try:
            cfg = load_target(target, args.override)
        except ConfigError as exc:
            print(f"{target}: invalid\n{exc}", file=sys.stderr)
            status = EXIT_CONFIG
        else:
            print(f"{target}: ok ({cfg.model.kind}, {cfg.n_steps} steps per leg)")
    return status


def _cmd_run(args) -> int:
    out_dir = str(args.out_dir or _default_out_dir())
    jobs = [(t, args.override, out_dir) for t in args.targets]
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            outcomes = list(pool.map(_run_one, *zip(*jobs)))
    else:
        outcomes = [_run_one(*job) for job in jobs]
    codes = []
    for _name, code, text in outcomes:
        print(text, file=sys.stderr if code == EXIT_CONFIG else sys.stdout)
        codes.append(code)
    if EXIT_CONFIG in codes:
        return EXIT_CONFIG
    return EXIT_BLOWUP if EXIT_BLOWUP in codes else EXIT_OK


def _cmd_oracle(args) -> int:
    try:
        cfg = load_target(args.target, args.override)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    if cfg.model.kind not in LINEAR_KINDS or cfg.bfn.method != "bfn":
        print(f"oracle comparison needs a heat or transport BFN scenario, got {cfg.model.kind!r}",
              file=sys.stderr)
        return EXIT_CONFIG
    result = run_experiment(cfg)
    code = result.exit_code
    for vr in result.variants:
        dev = vr.metrics.get("oracle_max_relative_deviation")
        print(f"{cfg.name} [{vr.variant}]: max relative deviation from closed-form recursion = "
              f"{dev if dev is not None else 'n/a'}")
    if args.out_dir:
        write_outputs(result, Path(args.out_dir) / cfg.name)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfnlab", description="Back-and-forth nudging experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a config value; repeatable")

    sub.add_parser("list", help="list registered scenarios").set_defaults(func=_cmd_list)

    p = sub.add_parser("run", help="run scenarios or config files")
    p.add_argument("targets", nargs="+", help="scenario names or config-file paths")
    p.add_argument("--out-dir", help=f"output root (default ${OUT_DIR_ENV} or ./bfnlab-results)")
    p.add_argument("--threads", type=int, default=1, help="number of scenarios run in parallel")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="parse and validate configs")
    p.add_argument("targets", nargs="+")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("oracle", help="compare a linear scenario with the closed-form error recursion")
    p.add_argument("target")
    p.add_argument("--out-dir", help="also write result files under this directory")
    common(p)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("--threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
