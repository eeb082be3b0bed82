"""Command-line front-end: config loading, experiment execution, CSV export.

The configuration file is INI-style text with explicit unit suffixes so the
infrastructure parameter tables translate one-to-one:

    [run]
    experiments = CloudOnly, Fog4
    duration_s = 86400
    seed = 42

    [scenario]
    fog_static_w = 100
    wifi_mesh_sigma_nj_per_bit = 100

Unknown sections or keys are rejected. Command-line flags override file
values. Exit codes: 0 success, 1 simulation error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .power import ATTRIBUTION_MODES, FULL
from .reporting import summarize
from .scenario import (EXPERIMENT_ORDER, EXPERIMENTS, ScenarioParams,
                       TaxiProfile, run_experiment)


class ConfigError(Exception):
    pass


# config key -> (ScenarioParams field, factor converting file units to SI)
_SCENARIO_KEYS = {
    "cloud_sigma_uw_per_mips": ("cloud_sigma_w_per_mips", 1e-6),
    "fog_capacity_mips": ("fog_capacity_mips", 1.0),
    "fog_static_w": ("fog_static_w", 1.0),
    "fog_sigma_uw_per_mips": ("fog_sigma_w_per_mips", 1e-6),
    "wan_up_bandwidth_mbps": ("wan_up_bandwidth_bps", 1e6),
    "wan_down_bandwidth_mbps": ("wan_down_bandwidth_bps", 1e6),
    "wan_up_sigma_nj_per_bit": ("wan_up_sigma_j_per_bit", 1e-9),
    "wan_down_sigma_nj_per_bit": ("wan_down_sigma_j_per_bit", 1e-9),
    "wifi_taxi_bandwidth_gbps": ("wifi_taxi_bandwidth_bps", 1e9),
    "wifi_mesh_bandwidth_gbps": ("wifi_mesh_bandwidth_bps", 1e9),
    "wifi_taxi_sigma_nj_per_bit": ("wifi_taxi_sigma_j_per_bit", 1e-9),
    "wifi_mesh_sigma_nj_per_bit": ("wifi_mesh_sigma_j_per_bit", 1e-9),
    "utilization_cap": ("utilization_cap", 1.0),
    "idle_timeout_s": ("idle_timeout_s", 1.0),
    "cctv_video_mbps": ("cctv_video_bps", 1e6),
    "cctv_mips": ("cctv_mips", 1.0),
    "cctv_result_kbps": ("cctv_result_bps", 1e3),
    "v2i_sensor_kbps": ("v2i_sensor_bps", 1e3),
    "v2i_mips": ("v2i_mips", 1.0),
    "v2i_output_kbps": ("v2i_output_bps", 1e3),
}

_RUN_KEYS = ("experiments", "duration_s", "probe_period_s", "seed",
             "out_dir", "attribution", "taxi_profile")


@dataclass
class RunConfig:
    experiments: list[str] = field(default_factory=lambda: list(EXPERIMENT_ORDER))
    duration_s: float = 86400.0
    probe_period_s: float = 1.0
    seed: int = 42
    out_dir: str = "runs"
    attribution: str = FULL
    taxi_profile: Optional[str] = None
    params: ScenarioParams = field(default_factory=ScenarioParams)

    def validate(self) -> None:
        for name in self.experiments:
            if name not in EXPERIMENTS:
                known = ", ".join(EXPERIMENT_ORDER)
                raise ConfigError(f"unknown experiment '{name}' (known: {known}, or 'all')")
        if self.duration_s < 0:
            raise ConfigError("duration_s must not be negative")
        if self.probe_period_s <= 0:
            raise ConfigError("probe_period_s must be positive")
        if self.attribution not in ATTRIBUTION_MODES:
            raise ConfigError(f"attribution must be one of {'/'.join(ATTRIBUTION_MODES)}")


def _resolve_experiments(value: str) -> list[str]:
    names = [part.strip() for part in value.replace(",", " ").split() if part.strip()]
    if any(name.lower() == "all" for name in names):
        return list(EXPERIMENT_ORDER)
    return names


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file '{path}' not found")
    unknown_sections = set(parser.sections()) - {"run", "scenario"}
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")

    config = RunConfig()
    if parser.has_section("run"):
        section = parser["run"]
        unknown = set(section) - set(_RUN_KEYS)
        if unknown:
            raise ConfigError(f"unknown [run] keys: {sorted(unknown)}")
        try:
            if "experiments" in section:
                config.experiments = _resolve_experiments(section["experiments"])
            if "duration_s" in section:
                config.duration_s = float(section["duration_s"])
            if "probe_period_s" in section:
                config.probe_period_s = float(section["probe_period_s"])
            if "seed" in section:
                config.seed = int(section["seed"])
            if "out_dir" in section:
                config.out_dir = section["out_dir"]
            if "attribution" in section:
                config.attribution = section["attribution"].strip()
            if "taxi_profile" in section:
                profile_path = section["taxi_profile"].strip()
                if not os.path.isabs(profile_path):
                    profile_path = os.path.join(os.path.dirname(os.path.abspath(path)),
                                                profile_path)
                config.taxi_profile = profile_path
        except ValueError as exc:
            raise ConfigError(f"bad [run] value: {exc}") from exc

    if parser.has_section("scenario"):
        section = parser["scenario"]
        unknown = set(section) - set(_SCENARIO_KEYS)
        if unknown:
            raise ConfigError(f"unknown [scenario] keys: {sorted(unknown)}")
        overrides = {}
        for key, raw in section.items():
            field_name, factor = _SCENARIO_KEYS[key]
            try:
                overrides[field_name] = float(raw) * factor
            except ValueError as exc:
                raise ConfigError(f"bad [scenario] value for '{key}': {raw}") from exc
        config.params = replace(config.params, **overrides)

    config.validate()
    return config


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogsim",
        description="Simulate the power usage of fog computing experiments "
                    "in a smart-city traffic scenario.")
    parser.add_argument("--config", metavar="PATH", help="INI configuration file")
    parser.add_argument("--experiment", metavar="NAME|all",
                        help="experiment to run (default: all)")
    parser.add_argument("--duration", metavar="SECS", type=float,
                        help="simulated seconds (default 86400)")
    parser.add_argument("--probe-period", metavar="SECS", type=float,
                        help="measurement interval (default 1)")
    parser.add_argument("--seed", metavar="N", type=int, help="RNG seed (default 42)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default runs)")
    parser.add_argument("--attribution", choices=list(ATTRIBUTION_MODES),
                        help="application power attribution mode (default full)")
    return parser


def run(config: RunConfig, profile: Optional[TaxiProfile] = None) -> list:
    """Run the configured experiments sequentially; returns their RunResults."""
    if profile is None and config.taxi_profile is not None:
        profile = TaxiProfile.from_csv(config.taxi_profile)
    results = []
    for name in config.experiments:
        out_dir = os.path.join(config.out_dir, name)
        result = run_experiment(
            EXPERIMENTS[name],
            params=config.params,
            profile=profile,
            duration_s=config.duration_s,
            probe_period_s=config.probe_period_s,
            seed=config.seed,
            attribution=config.attribution,
            out_dir=out_dir,
        )
        results.append(result)
    return results


def _print_report(result) -> None:
    print(f"== {result.experiment}: {result.duration_s:.6g} s simulated "
          f"in {result.runtime_s:.2f} s wall clock")
    print(f"   taxis spawned {result.taxis_spawned}, despawned {result.taxis_despawned}, "
          f"placements skipped {result.placements_skipped}, "
          f"dropped {result.placements_dropped}")
    for cls, wh, share in summarize(result):
        print(f"   {cls:<12} {wh:12.6g} Wh  {share:6.2f} %")


def main(argv=None) -> int:
    args = _build_arg_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.experiment is not None:
            config.experiments = _resolve_experiments(args.experiment)
        if args.duration is not None:
            config.duration_s = args.duration
        if args.probe_period is not None:
            config.probe_period_s = args.probe_period
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out_dir = args.out
        if args.attribution is not None:
            config.attribution = args.attribution
        config.validate()
        profile = None
        if config.taxi_profile is not None:
            try:
                profile = TaxiProfile.from_csv(config.taxi_profile)
            except OSError as exc:
                raise ConfigError(f"cannot read taxi profile: {exc}") from exc
            except ValueError as exc:
                raise ConfigError(f"bad taxi profile: {exc}") from exc
    except ConfigError as exc:
        print(f"fogsim: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        for result in run(config, profile):
            _print_report(result)
    except Exception as exc:
        print(f"fogsim: simulation failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
