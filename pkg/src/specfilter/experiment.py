"""Experiment harness: scenario signals, switching strategies, error metrics.

The canonical scenario drives the filter pair with a fast input sinusoid
while a slow sinusoidal load crosses a 50% threshold twice per run.  The
switching function is g[n] = threshold - load[n], so the higher-order filter
serves while the simulated load is below the threshold.  Three strategies are
compared against the always-on benchmark:

* benchmark: both filters run constantly, outputs multiplexed (error reference)
* cold: the incoming filter starts from zeroed state at each crossing
* speculative(N): the incoming filter is pre-warmed on live input once a
  crossing is predicted within N samples

Error metrics are computed per strategy against the benchmark trace, and the
suite reports reduction percentages versus cold switching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigInvalid, InputMismatch, LengthMismatch, MissingBenchmark
from .filters import DigitalFilter, default_filter_pair, time_constant_samples
from .runtime import (
    AlwaysOnPolicy,
    SampleTrace,
    SupervisedPolicy,
    run_concurrent,
    run_lockstep,
)
from .switching import PredictorConfig, auto_hysteresis

__all__ = [
    "NoiseConfig",
    "StrategyConfig",
    "ScenarioConfig",
    "ErrorMetrics",
    "SuiteResult",
    "default_scenario",
    "gen_load",
    "gen_input",
    "make_policy",
    "run_scenario",
    "compute_metrics",
    "run_suite",
    "emit_plots",
    "DEFAULT_SUITE_HORIZONS",
    "PRNG_NAME",
]

# Gaussian noise comes from numpy's seeded PCG64 generator; the algorithm name
# and 64-bit seed are recorded in every trace header for reproducibility.
PRNG_NAME = "pcg64"

DEFAULT_SUITE_HORIZONS = (10, 30, 100)


@dataclass(frozen=True)
class NoiseConfig:
    """Additive Gaussian noise on the load signal."""

    mean: float = 0.1
    stddev: float = 0.5
    seed: int = 20817

    def __post_init__(self) -> None:
        if self.stddev < 0:
            raise ConfigInvalid(f"noise stddev must be non-negative, got {self.stddev!r}")


@dataclass(frozen=True)
class StrategyConfig:
    """One switching strategy: benchmark, cold, or speculative(N)."""

    kind: str
    horizon_n: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("benchmark", "cold", "speculative"):
            raise ConfigInvalid(f"unknown strategy kind {self.kind!r}")
        if self.kind == "speculative" and self.horizon_n < 1:
            raise ConfigInvalid("speculative strategy needs horizon_n >= 1")

    @property
    def label(self) -> str:
        if self.kind == "speculative":
            return f"spec({self.horizon_n})"
        return self.kind


@dataclass(frozen=True)
class ScenarioConfig:
    """Signal generation and supervisor settings for one run.

    load_phase is a fraction of a period added inside the load sinusoid:
    phase 0 starts the load exactly at the threshold, while the canonical
    experiment (see default_scenario) uses -0.25 so the run starts at zero
    load and crosses the threshold twice mid-run.  hysteresis is a sample
    count or "auto" for the 10%-of-horizon rule.
    """

    length: int = 1000
    load_periods: float = 1.0
    load_phase: float = 0.0
    threshold: float = 0.5
    input_cycles: float = 25.0
    noise: NoiseConfig | None = None
    hysteresis: int | str = 0
    strategy: StrategyConfig = field(default_factory=lambda: StrategyConfig("speculative", 30))

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ConfigInvalid(f"length must be >= 1, got {self.length!r}")
        if not (0.0 < self.threshold < 1.0):
            raise ConfigInvalid(f"threshold must lie in (0, 1), got {self.threshold!r}")
        if isinstance(self.hysteresis, str):
            if self.hysteresis != "auto":
                raise ConfigInvalid(f"hysteresis must be a sample count or 'auto', got {self.hysteresis!r}")
        elif self.hysteresis < 0:
            raise ConfigInvalid(f"hysteresis must be non-negative, got {self.hysteresis!r}")

    def hysteresis_for(self, horizon_n: int) -> int:
        if self.hysteresis == "auto":
            return auto_hysteresis(horizon_n)
        return int(self.hysteresis)


def default_scenario(
    strategy: StrategyConfig | None = None,
    noise: NoiseConfig | None = None,
    hysteresis: int | str = 0,
) -> ScenarioConfig:
    """The canonical 1000-sample scenario with two predictable switches.

    The load sinusoid is shifted back a quarter period so it starts at zero,
    reaches 100% mid-run, and crosses the 50% threshold around samples 251
    and 751, leaving room for the predictor to fire before each switch.
    """
    return ScenarioConfig(
        load_phase=-0.25,
        noise=noise,
        hysteresis=hysteresis,
        strategy=strategy if strategy is not None else StrategyConfig("speculative", 30),
    )


def gen_load(cfg: ScenarioConfig) -> np.ndarray:
    """Simulated load sequence: half-raised sinusoid plus optional seeded noise."""
    n = np.arange(cfg.length, dtype=np.float64)
    s = 0.5 * (1.0 + np.sin(2.0 * np.pi * (cfg.load_periods * n / cfg.length + cfg.load_phase)))
    if cfg.noise is not None:
        rng = np.random.default_rng(cfg.noise.seed)
        s = s + rng.normal(cfg.noise.mean, cfg.noise.stddev, size=cfg.length)
    return s


def gen_input(cfg: ScenarioConfig) -> np.ndarray:
    """Filter input: a sinusoid completing `input_cycles` cycles over the run."""
    n = np.arange(cfg.length, dtype=np.float64)
    return np.sin(2.0 * np.pi * cfg.input_cycles * n / cfg.length)


def make_policy(
    scenario: ScenarioConfig,
    strategy: StrategyConfig,
    f1: int = 1,
    f2: int = 2,
):
    """Build the single-run policy realizing a strategy on this scenario.

    A speculative horizon covering the whole run degenerates to the always-on
    policy: the linear extrapolation cannot fire before the first sample, but
    a worker that would be warmed for the entire run is simply a second
    always-running filter.
    """
    if strategy.kind == "benchmark":
        return AlwaysOnPolicy(f1, f2)
    if strategy.kind == "cold":
        cfg = PredictorConfig(horizon_n=0, hysteresis_samples=scenario.hysteresis_for(0))
        return SupervisedPolicy(cfg, f1, f2)
    if strategy.horizon_n >= scenario.length:
        return AlwaysOnPolicy(f1, f2)
    cfg = PredictorConfig(
        horizon_n=strategy.horizon_n,
        hysteresis_samples=scenario.hysteresis_for(strategy.horizon_n),
    )
    return SupervisedPolicy(cfg, f1, f2)


def _trace_meta(scenario: ScenarioConfig, strategy: StrategyConfig) -> dict[str, str]:
    meta = {
        "strategy": strategy.label,
        "length": str(scenario.length),
        "threshold": f"{scenario.threshold:.17g}",
        "load_periods": f"{scenario.load_periods:.17g}",
        "load_phase": f"{scenario.load_phase:.17g}",
        "input_cycles": f"{scenario.input_cycles:.17g}",
        "hysteresis": str(scenario.hysteresis),
    }
    if strategy.kind == "speculative":
        meta["horizon_n"] = str(strategy.horizon_n)
    if scenario.noise is not None:
        meta["prng"] = PRNG_NAME
        meta["noise_seed"] = str(scenario.noise.seed)
        meta["noise_mean"] = f"{scenario.noise.mean:.17g}"
        meta["noise_stddev"] = f"{scenario.noise.stddev:.17g}"
    return meta


def run_scenario(
    scenario: ScenarioConfig,
    strategy: StrategyConfig | None = None,
    filters: tuple[DigitalFilter, DigitalFilter] | None = None,
    executor: str = "lockstep",
) -> SampleTrace:
    """Generate the scenario signals and run one strategy over them."""
    if filters is None:
        filters = default_filter_pair()
    if strategy is None:
        strategy = scenario.strategy
    tau_max = max(time_constant_samples(f) for f in filters)
    if scenario.length < 10.0 * tau_max:
        raise ConfigInvalid(
            f"length {scenario.length} is shorter than 10 filter time constants ({10 * tau_max:.0f})"
        )
    u = gen_input(scenario)
    load = gen_load(scenario)
    policy = make_policy(scenario, strategy, filters[0].id, filters[1].id)
    runner = {"lockstep": run_lockstep, "concurrent": run_concurrent}.get(executor)
    if runner is None:
        raise ConfigInvalid(f"executor must be 'lockstep' or 'concurrent', got {executor!r}")
    return runner(
        filters, u, load, scenario.threshold, policy, trace_meta=_trace_meta(scenario, strategy)
    )


@dataclass(frozen=True)
class ErrorMetrics:
    """Per-strategy error against the always-on benchmark.

    reduction_*_pct are filled by run_suite relative to the cold strategy and
    stay None for standalone comparisons.
    """

    max_abs_error: float
    rms_error: float
    overlap_fraction: float
    reduction_max_pct: float | None = None
    reduction_rms_pct: float | None = None

    def as_dict(self) -> dict:
        d = {
            "max_abs_error": self.max_abs_error,
            "rms_error": self.rms_error,
            "overlap_fraction": self.overlap_fraction,
        }
        if self.reduction_max_pct is not None:
            d["reduction_vs_cold"] = {"max": self.reduction_max_pct, "rms": self.reduction_rms_pct}
        return d


def compute_metrics(trace: SampleTrace, benchmark_trace: SampleTrace) -> ErrorMetrics:
    """Maximum and RMS error of a trace against the benchmark, plus overlap.

    Both traces must come from the same signals; mismatched inputs raise
    rather than produce a meaningless comparison.
    """
    if len(trace) != len(benchmark_trace):
        raise LengthMismatch(f"trace lengths differ: {len(trace)} vs {len(benchmark_trace)}")
    if not np.array_equal(trace.u, benchmark_trace.u) or not np.array_equal(
        trace.load, benchmark_trace.load
    ):
        raise InputMismatch("traces were not driven by identical input and load signals")
    delta = trace.y_primary - benchmark_trace.y_primary
    return ErrorMetrics(
        max_abs_error=float(np.max(np.abs(delta))),
        rms_error=float(np.sqrt(np.mean(delta * delta))),
        overlap_fraction=trace.overlap_samples() / len(trace),
    )


@dataclass
class SuiteResult:
    scenario: ScenarioConfig
    traces: dict[str, SampleTrace]
    metrics: dict[str, ErrorMetrics]
    skip_samples: int

    def summary_table(self) -> str:
        rows = [
            f"{'strategy':<12} {'max_abs_error':>15} {'rms_error':>15} "
            f"{'overlap':>9} {'red_max%':>9} {'red_rms%':>9}"
        ]
        for label, m in self.metrics.items():
            red_max = f"{m.reduction_max_pct:9.2f}" if m.reduction_max_pct is not None else "        -"
            red_rms = f"{m.reduction_rms_pct:9.2f}" if m.reduction_rms_pct is not None else "        -"
            rows.append(
                f"{label:<12} {m.max_abs_error:15.6g} {m.rms_error:15.6g} "
                f"{m.overlap_fraction:9.4f} {red_max} {red_rms}"
            )
        return "\n".join(rows)

    def to_json_dict(self) -> dict:
        return {
            "skip_samples": self.skip_samples,
            "strategies": {label: m.as_dict() for label, m in self.metrics.items()},
        }


def run_suite(
    scenario: ScenarioConfig,
    strategies: Sequence[StrategyConfig],
    filters: tuple[DigitalFilter, DigitalFilter] | None = None,
    executor: str = "lockstep",
) -> SuiteResult:
    """Run a list of strategies on one scenario and compare each to the benchmark.

    The benchmark strategy must be present since it defines the error
    reference.  Reduction percentages versus cold skip the first five time
    constants, which both strategies share as plain startup.
    """
    if not any(s.kind == "benchmark" for s in strategies):
        raise MissingBenchmark("the suite needs the benchmark strategy as error reference")
    if filters is None:
        filters = default_filter_pair()

    traces: dict[str, SampleTrace] = {}
    for strat in strategies:
        traces[strat.label] = run_scenario(scenario, strat, filters, executor)
    benchmark = traces["benchmark"]

    tau_max = max(time_constant_samples(f) for f in filters)
    skip = min(int(math.ceil(5.0 * tau_max)), scenario.length - 1)

    metrics = {label: compute_metrics(trace, benchmark) for label, trace in traces.items()}

    cold = next((s.label for s in strategies if s.kind == "cold"), None)
    if cold is not None:
        yb = benchmark.y_primary[skip:]
        ref = traces[cold].y_primary[skip:] - yb
        ref_max = float(np.max(np.abs(ref)))
        ref_rms = float(np.sqrt(np.mean(ref * ref)))
        for label, trace in traces.items():
            delta = trace.y_primary[skip:] - yb
            m_max = float(np.max(np.abs(delta)))
            m_rms = float(np.sqrt(np.mean(delta * delta)))
            metrics[label] = replace(
                metrics[label],
                reduction_max_pct=100.0 * (1.0 - m_max / ref_max) if ref_max > 0 else 0.0,
                reduction_rms_pct=100.0 * (1.0 - m_rms / ref_rms) if ref_rms > 0 else 0.0,
            )
    return SuiteResult(scenario=scenario, traces=traces, metrics=metrics, skip_samples=skip)


def _plot_header(meta: Mapping[str, str]) -> list[str]:
    return [f"# {k}={meta[k]}" for k in sorted(meta)]


def emit_plots(
    traces: Mapping[str, SampleTrace],
    out_dir,
    sample_rate: float | None = None,
    render: bool = False,
) -> list[Path]:
    """Write plot-ready columnar data files for a set of traces.

    Emits three CSV files: the output time series per strategy, the error
    magnitude per strategy versus the benchmark (when present), and the
    switch instants.  A `t` column in seconds is added when sample_rate is
    given; it is labeling only.  With render=True, PNG renderings are also
    written if matplotlib is importable; the data files remain the contract.
    """
    if not traces:
        raise ValueError("at least one trace is required")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = list(traces)
    length = len(next(iter(traces.values())))
    written: list[Path] = []

    def timecols(n: int) -> str:
        return f"{n},{n / sample_rate:.17g}" if sample_rate else str(n)

    meta = {"series": ";".join(labels)}
    if sample_rate:
        meta["sample_rate"] = f"{sample_rate:.17g}"

    tcol = "n,t" if sample_rate else "n"
    outputs = out_dir / "fig_outputs.csv"
    with open(outputs, "w", encoding="utf-8") as fh:
        fh.write("\n".join(_plot_header(meta)) + "\n")
        fh.write(f"{tcol},u," + ",".join(f"y_{lab}" for lab in labels) + "\n")
        u = next(iter(traces.values())).u
        ys = {lab: tr.y_primary for lab, tr in traces.items()}
        for i in range(length):
            row = [timecols(i), f"{u[i]:.17g}"] + [f"{ys[lab][i]:.17g}" for lab in labels]
            fh.write(",".join(row) + "\n")
    written.append(outputs)

    switches = out_dir / "fig_switches.csv"
    with open(switches, "w", encoding="utf-8") as fh:
        fh.write("\n".join(_plot_header(meta)) + "\n")
        fh.write("strategy,n,to_filter\n")
        for lab, tr in traces.items():
            for rec in tr.records:
                if any(e.startswith("ACTIVATE_THREAD") for e in rec.events):
                    fh.write(f"{lab},{rec.n},{rec.primary_id}\n")
    written.append(switches)

    if "benchmark" in traces:
        errors = out_dir / "fig_errors.csv"
        yb = traces["benchmark"].y_primary
        err_labels = [lab for lab in labels if lab != "benchmark"]
        with open(errors, "w", encoding="utf-8") as fh:
            fh.write("\n".join(_plot_header(meta)) + "\n")
            fh.write(f"{tcol}," + ",".join(f"abs_err_{lab}" for lab in err_labels) + "\n")
            errs = {lab: np.abs(traces[lab].y_primary - yb) for lab in err_labels}
            for i in range(length):
                row = [timecols(i)] + [f"{errs[lab][i]:.17g}" for lab in err_labels]
                fh.write(",".join(row) + "\n")
        written.append(errors)

    if render:
        written.extend(_render_pngs(traces, out_dir, sample_rate))
    return written


def _render_pngs(traces, out_dir: Path, sample_rate: float | None) -> list[Path]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return []
    written = []
    x0 = next(iter(traces.values())).n
    x = x0 / sample_rate if sample_rate else x0
    xlabel = "time [s]" if sample_rate else "sample"

    fig, ax = plt.subplots(figsize=(10, 4))
    for lab, tr in traces.items():
        ax.plot(x, tr.y_primary, label=lab, linewidth=0.9)
        for s in tr.switch_samples():
            ax.axvline(x[s], color="grey", linestyle="--", linewidth=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("output")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "fig_outputs.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if "benchmark" in traces:
        yb = traces["benchmark"].y_primary
        fig, ax = plt.subplots(figsize=(10, 4))
        for lab, tr in traces.items():
            if lab == "benchmark":
                continue
            ax.plot(x, np.abs(tr.y_primary - yb), label=lab, linewidth=0.9)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("|error| vs benchmark")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "fig_errors.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
