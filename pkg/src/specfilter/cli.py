"""Command-line harness.

    specfilter run   [--config cfg.json] [--strategy benchmark|cold|spec]
                     [--horizon-n INT] [--hysteresis INT|auto] [--noise-seed INT]
                     [--executor lockstep|concurrent] [--out DIR] [--sample-rate HZ]
    specfilter suite [--config cfg.json] --out DIR [--executor lockstep|concurrent]
                     [--horizons N,N,...] [--no-noise] [--render] [--sample-rate HZ]

`run` executes a single strategy and writes its trace CSV.  `suite` runs the
full experiment matrix (benchmark, cold, every speculative horizon, and the
full-horizon degenerate case), the noisy hysteresis comparison, the metric
tables, and plot-ready data files.  Exit code 0 on success, nonzero with a
diagnostic on stderr for any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import SpecFilterError
from .experiment import (
    DEFAULT_SUITE_HORIZONS,
    NoiseConfig,
    StrategyConfig,
    compute_metrics,
    emit_plots,
    run_scenario,
    run_suite,
)

__all__ = ["main", "build_parser"]


def _hysteresis_value(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"hysteresis must be an integer or 'auto', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("hysteresis must be non-negative")
    return value


def _horizon_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"horizons must be comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("horizons must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specfilter",
        description="Speculative-thread transient management for switched digital filters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="JSON config (defaults built in)")
        p.add_argument(
            "--executor",
            choices=("lockstep", "concurrent"),
            default="lockstep",
            help="deterministic single-thread simulation or real worker threads",
        )
        p.add_argument("--noise-seed", type=int, default=None, help="override the noise seed")
        p.add_argument(
            "--sample-rate", type=float, default=None, help="optional Hz, plot axis labeling only"
        )

    run_p = sub.add_parser("run", help="run one switching strategy and write its trace")
    common(run_p)
    run_p.add_argument("--strategy", choices=("benchmark", "cold", "spec"), default=None)
    run_p.add_argument("--horizon-n", type=int, default=None, help="speculation horizon in samples")
    run_p.add_argument("--hysteresis", type=_hysteresis_value, default=None, help="samples or 'auto'")
    run_p.add_argument("--out", type=Path, default=Path("specfilter_out"))

    suite_p = sub.add_parser("suite", help="run the full experiment matrix")
    common(suite_p)
    suite_p.add_argument("--out", type=Path, required=True)
    suite_p.add_argument(
        "--horizons",
        type=_horizon_list,
        default=DEFAULT_SUITE_HORIZONS,
        help="speculative horizons to sweep (comma separated)",
    )
    suite_p.add_argument("--no-noise", action="store_true", help="skip the noisy hysteresis study")
    suite_p.add_argument("--render", action="store_true", help="also render PNGs when matplotlib exists")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    scenario = cfg.scenario
    if getattr(args, "strategy", None) is not None:
        kind = "speculative" if args.strategy == "spec" else args.strategy
        horizon = args.horizon_n if args.horizon_n is not None else (
            scenario.strategy.horizon_n if scenario.strategy.kind == "speculative" else 30
        )
        scenario = replace(scenario, strategy=StrategyConfig(kind, horizon if kind == "speculative" else 0))
    elif getattr(args, "horizon_n", None) is not None:
        scenario = replace(scenario, strategy=StrategyConfig("speculative", args.horizon_n))
    if getattr(args, "hysteresis", None) is not None:
        scenario = replace(scenario, hysteresis=args.hysteresis)
    if args.noise_seed is not None:
        noise = scenario.noise if scenario.noise is not None else NoiseConfig()
        scenario = replace(scenario, noise=replace(noise, seed=args.noise_seed))
    cfg.scenario = scenario
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    trace = run_scenario(cfg.scenario, cfg.scenario.strategy, cfg.filters, executor=args.executor)
    args.out.mkdir(parents=True, exist_ok=True)
    label = cfg.scenario.strategy.label.replace("(", "_").rstrip(")")
    path = args.out / f"trace_{label}.csv"
    trace.to_csv(path)
    switches = trace.switch_samples()
    print(
        f"{cfg.scenario.strategy.label}: {len(trace)} samples, "
        f"{len(switches)} activation(s) at {switches[:8]}, "
        f"overlap {trace.overlap_samples()}/{len(trace)}"
    )
    print(f"wrote {path}")
    return 0


def _cmd_suite(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    scenario = cfg.scenario
    base = replace(scenario, noise=None)

    strategies = [StrategyConfig("benchmark"), StrategyConfig("cold")]
    strategies += [StrategyConfig("speculative", n) for n in args.horizons]
    strategies.append(StrategyConfig("speculative", scenario.length))

    result = run_suite(base, strategies, cfg.filters, executor=args.executor)
    args.out.mkdir(parents=True, exist_ok=True)
    for label, trace in result.traces.items():
        trace.to_csv(args.out / f"trace_{label.replace('(', '_').rstrip(')')}.csv")
    emit_plots(result.traces, args.out, sample_rate=args.sample_rate, render=args.render)

    summary = ["== noiseless matrix ==", result.summary_table()]
    payload = {"noiseless": result.to_json_dict()}

    if not args.no_noise:
        noise = scenario.noise if scenario.noise is not None else NoiseConfig()
        spec30 = StrategyConfig("speculative", 30)
        noisy_off = replace(base, noise=noise, hysteresis=0)
        noisy_on = replace(base, noise=noise, hysteresis="auto")
        bench_trace = run_scenario(noisy_off, StrategyConfig("benchmark"), cfg.filters, args.executor)
        off_trace = run_scenario(noisy_off, spec30, cfg.filters, args.executor)
        on_trace = run_scenario(noisy_on, spec30, cfg.filters, args.executor)
        noisy_traces = {
            "benchmark": bench_trace,
            "spec(30)-h0": off_trace,
            "spec(30)-auto": on_trace,
        }
        noisy_dir = args.out / "noisy"
        noisy_dir.mkdir(parents=True, exist_ok=True)
        for label, trace in noisy_traces.items():
            trace.to_csv(noisy_dir / f"trace_{label.replace('(', '_').replace(')', '')}.csv")
        emit_plots(noisy_traces, noisy_dir, sample_rate=args.sample_rate, render=args.render)

        rows = ["== noisy hysteresis study (spec(30)) =="]
        noisy_json = {}
        for label, trace in (("hysteresis off", off_trace), ("hysteresis auto", on_trace)):
            m = compute_metrics(trace, bench_trace)
            spawns = trace.event_count("RUN_THREAD")
            rows.append(
                f"{label:<16} rms_error={m.rms_error:.6g} max_abs_error={m.max_abs_error:.6g} "
                f"respawns={spawns}"
            )
            noisy_json[label] = {**m.as_dict(), "respawns": spawns}
        summary += rows
        payload["noisy"] = {"seed": noise.seed, "results": noisy_json}

    text = "\n".join(summary) + "\n"
    (args.out / "summary.txt").write_text(text, encoding="utf-8")
    (args.out / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(text, end="")
    print(f"wrote {args.out}/summary.txt, summary.json, traces and plot data")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_suite(args)
    except SpecFilterError as exc:
        print(f"specfilter: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"specfilter: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
