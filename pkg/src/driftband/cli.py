"""Command-line front end: episode runs, grid sweeps, and property checks.

Exit codes are a stable contract: 0 success, 1 runtime or check failure,
2 usage or configuration error.  Every flag has an environment-variable
mirror with the DRIFTBAND_ prefix (for example DRIFTBAND_SEEDS); explicit
flags win over environment values, which win over config-file values.
"""

import argparse
import os
import sys
from pathlib import Path

from .checks import CHECK_SUITES, run_suite
from .config import PRESETS, load_config, load_preset
from .errors import ConfigurationError, DriftbandError
from .harness import (
    run_episode,
    sweep,
    write_summary_json,
    write_sweep_csv,
    write_trace_csv,
)

ENV_PREFIX = "DRIFTBAND_"


def _env_override(name: str, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return None
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(
            f"cannot parse {ENV_PREFIX}{name}={raw!r}") from exc


def _pick(flag_value, env_name: str, cast):
    if flag_value is not None:
        return flag_value
    return _env_override(env_name, cast)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftband",
        description="Simulators and property checks for drifting linear bandits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH",
                       help="experiment config file (JSON)")
        p.add_argument("--preset", choices=PRESETS,
                       help="bundled experiment config")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seeds", type=int, metavar="N",
                       help="episodes per grid cell")
        p.add_argument("--master-seed", type=int, metavar="U64",
                       help="top-level stream seed")
        p.add_argument("--workers", type=int, metavar="N",
                       help="process pool size (default: machine parallelism)")

    common(sub.add_parser("run", help="one trace file per (policy, seed)"))
    common(sub.add_parser("sweep", help="full grid with summary files"))
    check = sub.add_parser("check", help="estimator property suites")
    check.add_argument("suite", nargs="?",
                       choices=CHECK_SUITES + ("all",),
                       help="suite to run (default: config toggles, else all)")
    check.add_argument("--config", metavar="PATH",
                       help="config whose check toggles select suites")
    check.add_argument("--preset", choices=PRESETS,
                       help="bundled experiment config")
    return parser


def _resolve_config(args):
    config_path = _pick(getattr(args, "config", None), "CONFIG", str)
    preset = _pick(getattr(args, "preset", None), "PRESET", str)
    if config_path and preset:
        raise ConfigurationError("--config and --preset are mutually exclusive")
    if preset:
        cfg = load_preset(preset)
    elif config_path:
        cfg = load_config(config_path)
    else:
        raise ConfigurationError("one of --config or --preset is required")
    return cfg.with_overrides(
        seeds=_pick(getattr(args, "seeds", None), "SEEDS", int),
        master_seed=_pick(getattr(args, "master_seed", None), "MASTER_SEED", int),
        out=_pick(getattr(args, "out", None), "OUT", str),
    )


def _workers(args) -> int:
    value = _pick(getattr(args, "workers", None), "WORKERS", int)
    if value is None:
        value = os.cpu_count() or 1
    if value < 1:
        raise ConfigurationError("workers must be positive")
    return int(value)


def cmd_run(cfg) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for env_spec in cfg.env_specs():
        env = env_spec.build()
        for pol in cfg.policies:
            for seed in range(cfg.seeds):
                policy = pol.build(default_budget=env_spec.budget)
                trace = run_episode(env, policy, seed,
                                    master_seed=cfg.master_seed)
                name = f"trace_{trace.policy}_T{env.horizon}_seed{seed}.csv"
                write_trace_csv(trace, out / name)
                written += 1
    print(f"wrote {written} trace files to {out}")
    return 0


def cmd_sweep(cfg, workers: int) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    result = sweep(cfg.env_specs(), list(cfg.policies), cfg.seeds,
                   master_seed=cfg.master_seed, workers=workers)
    write_sweep_csv(result, out / "sweep.csv")
    write_summary_json(result, out / "summary.json")
    for name in result.policies():
        finals = ", ".join(f"{v:.1f}" for v in result.means(name))
        line = f"{name}: mean final regret [{finals}]"
        if len(result.horizons(name)) >= 2:
            line += f", log-log slope {result.slope(name).slope:.4f}"
        print(line)
    print(f"wrote sweep.csv and summary.json to {out}")
    return 0


def cmd_check(args) -> int:
    suite = args.suite
    names = None
    if suite == "all":
        names = CHECK_SUITES
    elif suite is not None:
        names = (suite,)
    else:
        config_path = _pick(getattr(args, "config", None), "CONFIG", str)
        preset = _pick(getattr(args, "preset", None), "PRESET", str)
        if config_path or preset:
            cfg = load_preset(preset) if preset else load_config(config_path)
            names = cfg.checks or CHECK_SUITES
        else:
            names = CHECK_SUITES
    ok = True
    for name in names:
        report = run_suite(name)
        print(report.summary_line())
        ok = ok and report.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        cfg = _resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_sweep(cfg, _workers(args))
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DriftbandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
