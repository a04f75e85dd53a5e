"""Command-line entry point: ``treeirl run | sweep | check``.

Exit codes: 0 success, 1 configuration error (or a failed check), 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from treeirl import checks
from treeirl.config import (
    PRESETS,
    ConfigError,
    expand,
    grid,
    merge,
    preset_grid,
    read_config_file,
    split_grid,
)
from treeirl.sweep import emit_csv, emit_thresholds, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

log = logging.getLogger("treeirl")


def _add_experiment_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="file of 'key = value' lines; flags override it")
    g.add_argument("--branching", type=int)
    g.add_argument("--levels", type=int)
    g.add_argument("--shaky", action="store_const", const=True)
    g.add_argument("--p-random", type=float)
    g.add_argument("--method", choices=["baseline", "erb", "erb-eqb", "erb_eqb", "bc"])
    g.add_argument("--expert-ratio", type=float)
    g.add_argument("--eta-q", type=float)
    g.add_argument("--eta-pi", type=float)
    g.add_argument("--eta-r", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--alpha-eqb", help="float, or 'auto' to match the policy's entropy scale")
    g.add_argument("--gamma", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--inner-steps", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--seeds", type=int, help="number of seeds per config")
    g.add_argument("--master-seed", type=int)
    g.add_argument("--out-dir", default="results")
    g.add_argument("--workers", type=int, default=1)


FLAG_KEYS = ("branching", "levels", "shaky", "p_random", "method", "expert_ratio", "eta_q",
             "eta_pi", "eta_r", "alpha", "alpha_eqb", "gamma", "epochs", "inner_steps",
             "batch_size", "seeds", "master_seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeirl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_flags(sub.add_parser("run", help="train one config over its seeds"))
    sweep = sub.add_parser("sweep", help="run a preset study or a config-file grid")
    sweep.add_argument("--preset", choices=PRESETS)
    _add_experiment_flags(sweep)
    sub.add_parser("check", help="closed-form vs oracle checks")
    return parser


def _flag_layer(args) -> dict:
    return {k: getattr(args, k) for k in FLAG_KEYS if getattr(args, k, None) is not None}


def _flat_configs(args) -> list:
    is_sweep = args.command == "sweep"
    file_layer = read_config_file(args.config, allow_lists=is_sweep) if args.config else {}
    flags = _flag_layer(args)
    if is_sweep and args.preset:
        return preset_grid(args.preset, flags, file_layer)
    scalars, axes = split_grid(file_layer)
    if is_sweep and not args.config:
        raise ConfigError("sweep needs --preset or --config")
    axes = {k: v for k, v in axes.items() if k not in flags}
    return grid(merge(scalars, flags), axes)


def write_outputs(result, out_dir: str) -> dict:
    from treeirl.plotting import emit_svg

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "curves.csv"),
        "thresholds": os.path.join(out_dir, "thresholds.csv"),
        "svg": os.path.join(out_dir, "curves.svg"),
    }
    emit_csv(result, paths["csv"])
    emit_thresholds(result, paths["thresholds"])
    emit_svg(result, paths["svg"])
    return paths


def _summary(result) -> str:
    by_cfg: dict = {}
    for r in result.thresholds():
        by_cfg.setdefault(r["config_id"], {})[r["fraction"]] = r
    width = max([len("config")] + [len(c) for c in by_cfg])
    lines = [f"{'config':<{width}} {'to50%':>8} {'to70%':>8} {'to90%':>8}"]
    for cid, fr in by_cfg.items():
        cells = [f"{fr[f]['mean_iterations']:8.1f}" for f in (0.5, 0.7, 0.9)]
        lines.append(f"{cid:<{width}} " + " ".join(cells))
    return "\n".join(lines)


def cmd_experiment(args) -> int:
    try:
        flats = _flat_configs(args)
        configs = expand(flats)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("%d runs (%d configs)", len(configs), len(flats))
    result = run_sweep(configs, parallelism=args.workers)
    try:
        paths = write_outputs(result, args.out_dir)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary(result))
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = checks.run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.command == "check":
        return cmd_check(args)
    return cmd_experiment(args)


if __name__ == "__main__":
    sys.exit(main())
