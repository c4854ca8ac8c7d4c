"""JSON experiment configuration.

Schema (all top-level keys optional; defaults reproduce the canonical
experiment):

    {
      "length": 1000,
      "threshold": 0.5,
      "load":   {"kind": "sinusoid", "periods": 1.0, "phase": -0.25},
      "input":  {"kind": "sinusoid", "cycles": 25.0},
      "noise":  {"mean": 0.1, "stddev": 0.5, "seed": 20817},
      "hysteresis": 0,
      "strategy": {"kind": "speculative", "horizon_n": 30},
      "filters": [
        {"id": 1, "design": {"type": "cheby1_lowpass",
                             "order": 3, "ripple_db": 2.0, "cutoff": 0.0578}},
        {"id": 2, "b": [1.0], "a": [1.0, -0.5]}
      ]
    }

A filter entry is either explicit coefficients {"id", "b", "a"} or a design
request; "id" defaults to the 1-based position in the list.  The environment
variable SPECFILTER_SEED overrides the configured noise seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigInvalid
from .experiment import NoiseConfig, ScenarioConfig, StrategyConfig
from .filters import DigitalFilter, default_filter_pair, design_cheby1_lowpass, make_filter

__all__ = ["ExperimentConfig", "load_config", "config_from_dict", "default_config_dict"]

SEED_ENV_VAR = "SPECFILTER_SEED"


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig
    filters: tuple[DigitalFilter, DigitalFilter]


def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_filter(entry: dict, position: int) -> DigitalFilter:
    if not isinstance(entry, dict):
        raise ConfigInvalid(f"filter entry {position} must be an object")
    fid = int(entry.get("id", position))
    if "design" in entry:
        _require_keys(entry, {"id", "design"}, f"filter {position}")
        design = entry["design"]
        _require_keys(design, {"type", "order", "ripple_db", "cutoff"}, f"filter {position} design")
        if design.get("type") != "cheby1_lowpass":
            raise ConfigInvalid(f"unsupported design type {design.get('type')!r}")
        return design_cheby1_lowpass(
            order=int(design["order"]),
            ripple_db=float(design["ripple_db"]),
            cutoff=float(design["cutoff"]),
            filter_id=fid,
        )
    _require_keys(entry, {"id", "b", "a"}, f"filter {position}")
    if "b" not in entry or "a" not in entry:
        raise ConfigInvalid(f"filter {position} needs either 'design' or both 'b' and 'a'")
    return make_filter(fid, entry["b"], entry["a"])


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    _require_keys(
        data,
        {"length", "threshold", "load", "input", "noise", "hysteresis", "strategy", "filters"},
        "configuration",
    )
    try:
        load = data.get("load", {})
        _require_keys(load, {"kind", "periods", "phase"}, "load")
        if load.get("kind", "sinusoid") != "sinusoid":
            raise ConfigInvalid(f"unsupported load kind {load.get('kind')!r}")
        inp = data.get("input", {})
        _require_keys(inp, {"kind", "cycles"}, "input")
        if inp.get("kind", "sinusoid") != "sinusoid":
            raise ConfigInvalid(f"unsupported input kind {inp.get('kind')!r}")

        noise = None
        if data.get("noise") is not None:
            nd = data["noise"]
            _require_keys(nd, {"mean", "stddev", "seed"}, "noise")
            noise = NoiseConfig(
                mean=float(nd.get("mean", 0.1)),
                stddev=float(nd.get("stddev", 0.5)),
                seed=int(nd.get("seed", NoiseConfig().seed)),
            )

        sd = data.get("strategy", {"kind": "speculative", "horizon_n": 30})
        _require_keys(sd, {"kind", "horizon_n"}, "strategy")
        kind = sd.get("kind", "speculative")
        if kind == "spec":
            kind = "speculative"
        strategy = StrategyConfig(kind=kind, horizon_n=int(sd.get("horizon_n", 30)))

        hysteresis = data.get("hysteresis", 0)
        if not isinstance(hysteresis, str):
            hysteresis = int(hysteresis)

        scenario = ScenarioConfig(
            length=int(data.get("length", 1000)),
            load_periods=float(load.get("periods", 1.0)),
            load_phase=float(load.get("phase", -0.25)),
            threshold=float(data.get("threshold", 0.5)),
            input_cycles=float(inp.get("cycles", 25.0)),
            noise=noise,
            hysteresis=hysteresis,
            strategy=strategy,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed configuration value: {exc}") from exc

    if "filters" in data:
        entries = data["filters"]
        if not isinstance(entries, list) or len(entries) != 2:
            raise ConfigInvalid("'filters' must be a list of exactly two entries")
        filters = tuple(_parse_filter(e, i + 1) for i, e in enumerate(entries))
        if filters[0].id == filters[1].id:
            raise ConfigInvalid("filter ids must be distinct")
    else:
        filters = default_filter_pair()
    return ExperimentConfig(scenario=scenario, filters=filters)


def load_config(path: str | Path | None, env: dict | None = None) -> ExperimentConfig:
    """Load a config file (or the built-in defaults) and apply the seed override."""
    if path is None:
        cfg = config_from_dict({})
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: invalid JSON: {exc}") from exc
        cfg = config_from_dict(data)

    env = os.environ if env is None else env
    seed_override = env.get(SEED_ENV_VAR)
    if seed_override is not None and cfg.scenario.noise is not None:
        try:
            seed = int(seed_override)
        except ValueError as exc:
            raise ConfigInvalid(f"{SEED_ENV_VAR} must be an integer, got {seed_override!r}") from exc
        cfg.scenario = replace(cfg.scenario, noise=replace(cfg.scenario.noise, seed=seed))
    return cfg


def default_config_dict() -> dict:
    """A complete example configuration reproducing the canonical experiment."""
    return {
        "length": 1000,
        "threshold": 0.5,
        "load": {"kind": "sinusoid", "periods": 1.0, "phase": -0.25},
        "input": {"kind": "sinusoid", "cycles": 25.0},
        "noise": None,
        "hysteresis": 0,
        "strategy": {"kind": "speculative", "horizon_n": 30},
        "filters": [
            {"id": 1, "design": {"type": "cheby1_lowpass", "order": 3, "ripple_db": 2.0, "cutoff": 0.0578}},
            {"id": 2, "design": {"type": "cheby1_lowpass", "order": 2, "ripple_db": 3.0, "cutoff": 0.0329}},
        ],
    }
