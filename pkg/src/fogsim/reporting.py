"""Run artifacts: class-aggregated CSV time series, energy totals, summary.

Three files per run, all with 6-significant-digit floats, '.' decimal
separator and LF line endings:

  infrastructure.csv  time_s,entity_id,entity_class,static_w,dynamic_w
  applications.csv    time_s,app_id,app_class,attributed_w
  summary.csv         class,energy_wh,share_pct

Rows are one per entity class (and one per application class) per probe, so
file sizes grow with the probe count, not with the number of taxis. Energy
is accumulated in joules with left Riemann sums over the probe intervals
(power is constant within a step) and converted to watt-hours only when
read; with 1-second probes and integer wattages the totals are exact. The
summary always comes from these double-precision accumulators, never from
the rounded CSV values.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .accounting import PowerAccountant

INFRA_HEADER = "time_s,entity_id,entity_class,static_w,dynamic_w"
APPS_HEADER = "time_s,app_id,app_class,attributed_w"
SUMMARY_HEADER = "class,energy_wh,share_pct"

# (granular class written as entity_id, summary bucket written as entity_class)
ENTITY_ROWS = (
    ("cloud", "cloud"),
    ("fog", "fog"),
    ("stl", "stl"),
    ("taxi", "taxi"),
    ("wan_up", "wan"),
    ("wan_down", "wan"),
    ("wifi_taxi", "wifi"),
    ("wifi_mesh", "wifi"),
    ("local", "local"),
)
APP_ROWS = ("cctv", "v2i")
SUMMARY_ROWS = ("cloud", "fog_static", "fog_dynamic", "wan", "wifi", "cctv", "v2i")


def fmt(value: float) -> str:
    return f"{value:.6g}"


@dataclass
class RunResult:
    """Everything a finished experiment run produced besides the CSV files."""

    experiment: str
    duration_s: float
    probe_period_s: float
    seed: int
    attribution: str
    out_dir: Optional[str]
    probes: int = 0
    # per granular entity class, joules
    entity_static_j: dict[str, float] = field(default_factory=dict)
    entity_dynamic_j: dict[str, float] = field(default_factory=dict)
    app_j: dict[str, float] = field(default_factory=dict)
    min_power_w: float = math.inf  # total infrastructure power extremes
    max_power_w: float = -math.inf
    taxis_spawned: int = 0
    taxis_despawned: int = 0
    placements_skipped: int = 0
    placements_dropped: int = 0
    max_conservation_error: float = 0.0
    runtime_s: float = 0.0

    def static_wh(self, granular_class: str) -> float:
        return self.entity_static_j.get(granular_class, 0.0) / 3600.0

    def dynamic_wh(self, granular_class: str) -> float:
        return self.entity_dynamic_j.get(granular_class, 0.0) / 3600.0

    def class_wh(self, granular_class: str) -> float:
        return self.static_wh(granular_class) + self.dynamic_wh(granular_class)

    def app_wh(self, app_class: str) -> float:
        return self.app_j.get(app_class, 0.0) / 3600.0

    @property
    def total_infrastructure_wh(self) -> float:
        return (sum(self.entity_static_j.values())
                + sum(self.entity_dynamic_j.values())) / 3600.0


class RunCollector:
    """Probe collector: streams class rows to CSV and integrates energy.

    Reads the aggregated sums straight off the accountant the probe has just
    refreshed; the per-entity/per-app maps passed by the probe stay available
    to other consumers but are not re-aggregated here.
    """

    def __init__(self, accountant: PowerAccountant, result: RunResult,
                 out_dir: Optional[str] = None):
        self.accountant = accountant
        self.result = result
        self._infra_file = None
        self._apps_file = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            self._infra_file = open(os.path.join(out_dir, "infrastructure.csv"),
                                    "w", newline="\n")
            self._apps_file = open(os.path.join(out_dir, "applications.csv"),
                                   "w", newline="\n")
            self._infra_file.write(INFRA_HEADER + "\n")
            self._apps_file.write(APPS_HEADER + "\n")
        self._prev_t: Optional[float] = None
        self._prev_static: dict[str, float] = {}
        self._prev_dynamic: dict[str, float] = {}
        self._prev_app: dict[str, float] = {}

    def collect(self, t: float, entities, apps) -> None:
        acc = self.accountant
        res = self.result
        res.probes += 1

        static = {cls: acc.class_static.get(cls, 0.0) for cls, _ in ENTITY_ROWS}
        dynamic = {cls: acc.class_dynamic.get(cls, 0.0) for cls, _ in ENTITY_ROWS}
        app_power = {
            cls: acc.app_class_static.get(cls, 0.0) + acc.app_class_dynamic.get(cls, 0.0)
            for cls in APP_ROWS
        }

        if self._prev_t is not None:
            dt = t - self._prev_t
            for cls in static:
                res.entity_static_j[cls] = (res.entity_static_j.get(cls, 0.0)
                                            + self._prev_static[cls] * dt)
                res.entity_dynamic_j[cls] = (res.entity_dynamic_j.get(cls, 0.0)
                                             + self._prev_dynamic[cls] * dt)
            for cls in app_power:
                res.app_j[cls] = res.app_j.get(cls, 0.0) + self._prev_app[cls] * dt
        self._prev_t = t
        self._prev_static = static
        self._prev_dynamic = dynamic
        self._prev_app = app_power

        total_power = sum(static.values()) + sum(dynamic.values())
        if total_power < res.min_power_w:
            res.min_power_w = total_power
        if total_power > res.max_power_w:
            res.max_power_w = total_power

        entity_dyn = acc.total_entity_dynamic
        app_dyn = acc.total_app_dynamic
        denom = max(abs(entity_dyn), 1e-12)
        conservation = abs(entity_dyn - app_dyn) / denom
        if conservation > res.max_conservation_error:
            res.max_conservation_error = conservation

        if self._infra_file is not None:
            ts = fmt(t)
            self._infra_file.write("".join(
                f"{ts},{cls},{bucket},{fmt(static[cls])},{fmt(dynamic[cls])}\n"
                for cls, bucket in ENTITY_ROWS))
            self._apps_file.write("".join(
                f"{ts},{cls},{cls},{fmt(app_power[cls])}\n" for cls in APP_ROWS))

    def close(self) -> None:
        for handle in (self._infra_file, self._apps_file):
            if handle is not None:
                handle.close()
        self._infra_file = self._apps_file = None


def summarize(result: RunResult) -> list[tuple[str, float, float]]:
    """Per-class energy table: (class, energy_wh, share_pct).

    Infrastructure rows are shares of the total infrastructure energy,
    application rows shares of the total attributed application energy.
    """
    values = {
        "cloud": result.class_wh("cloud"),
        "fog_static": result.static_wh("fog"),
        "fog_dynamic": result.dynamic_wh("fog"),
        "wan": result.class_wh("wan_up") + result.class_wh("wan_down"),
        "wifi": (result.class_wh("wifi_taxi") + result.class_wh("wifi_mesh")
                 + result.class_wh("local")),
        "cctv": result.app_wh("cctv"),
        "v2i": result.app_wh("v2i"),
    }
    infra_total = result.total_infrastructure_wh
    app_total = values["cctv"] + values["v2i"]
    rows = []
    for cls in SUMMARY_ROWS:
        total = app_total if cls in APP_ROWS else infra_total
        share = 100.0 * values[cls] / total if total > 0 else 0.0
        rows.append((cls, values[cls], share))
    return rows


def write_summary(out_dir: str, rows: list[tuple[str, float, float]]) -> str:
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="\n") as handle:
        handle.write(SUMMARY_HEADER + "\n")
        for cls, wh, share in rows:
            handle.write(f"{cls},{fmt(wh)},{fmt(share)}\n")
    return path
