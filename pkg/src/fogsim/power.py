"""Power models for compute nodes and network links.

Every model reports a pair of watt figures: the load-independent static
draw and the load-dependent dynamic draw. Node models receive the node's
reserved MIPS as load, link models the reserved bit/s. Stateful node models
additionally keep a sleep state that is advanced ("ticked") once per
measurement instant.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, NamedTuple, Optional, Sequence

DYNAMIC = "dynamic"  # attribute only load-dependent power to applications
FULL = "full"  # additionally attribute static power of sleep-capable nodes
ATTRIBUTION_MODES = (DYNAMIC, FULL)


class PowerModelError(Exception):
    pass


class AttributionError(PowerModelError):
    """Placement reservations do not match the infrastructure's bookkeeping."""


class PowerMeasurement(NamedTuple):
    static_w: float
    dynamic_w: float

    @property
    def total(self) -> float:
        return self.static_w + self.dynamic_w

    def __add__(self, other: "PowerMeasurement") -> "PowerMeasurement":
        return PowerMeasurement(self.static_w + other.static_w,
                                self.dynamic_w + other.dynamic_w)


ZERO_POWER = PowerMeasurement(0.0, 0.0)


def sum_measurements(measurements: Iterable[PowerMeasurement]) -> PowerMeasurement:
    static = dynamic = 0.0
    for m in measurements:
        static += m.static_w
        dynamic += m.dynamic_w
    return PowerMeasurement(static, dynamic)


def derive_sigma(p_max: float, p_static: float, c_max: float) -> float:
    """Incremental energy per load unit from the two endpoints of a linear model."""
    if c_max <= 0:
        raise PowerModelError(f"c_max must be positive, got {c_max:g}")
    if p_static < 0:
        raise PowerModelError(f"p_static must be non-negative, got {p_static:g}")
    if p_max < p_static:
        raise PowerModelError(f"p_max ({p_max:g} W) is below p_static ({p_static:g} W)")
    return (p_max - p_static) / c_max


class NodePowerModel:
    """Interface for node power models.

    `measure` may advance internal state (see StatefulPowerModel) and must be
    called with non-decreasing timestamps; `peek` is a pure read of the power
    the model currently reports for a given load.
    """

    attributable_static = False  # static draw charged to placed tasks?

    def measure(self, load: float, now: float = 0.0) -> PowerMeasurement:
        raise NotImplementedError

    def peek(self, load: float) -> PowerMeasurement:
        return self.measure(load)

    @property
    def dynamic_sigma(self) -> Optional[float]:
        """Sigma if dynamic power is exactly sigma * load, else None."""
        return None


class LinearPowerModel(NodePowerModel):
    """P = p_static + load * sigma, optionally bounded by a maximum load."""

    def __init__(self, p_static: float = 0.0, sigma: Optional[float] = None,
                 c_max: Optional[float] = None, p_max: Optional[float] = None):
        if p_static < 0:
            raise PowerModelError(f"p_static must be non-negative, got {p_static:g}")
        if sigma is None:
            if p_max is None or c_max is None:
                raise PowerModelError("either sigma or the (p_max, c_max) pair is required")
            sigma = derive_sigma(p_max, p_static, c_max)
        elif sigma < 0:
            raise PowerModelError(f"sigma must be non-negative, got {sigma:g}")
        elif p_max is not None and c_max is not None:
            if not math.isclose(p_static + sigma * c_max, p_max, rel_tol=1e-9, abs_tol=1e-9):
                raise PowerModelError(
                    f"inconsistent parameters: p_static + sigma * c_max = "
                    f"{p_static + sigma * c_max:g} W but p_max = {p_max:g} W"
                )
        self.p_static = p_static
        self.sigma = sigma
        self.c_max = c_max
        self.p_max = p_max

    @classmethod
    def from_endpoints(cls, p_static: float, p_max: float, c_max: float) -> "LinearPowerModel":
        return cls(p_static=p_static, c_max=c_max, p_max=p_max)

    def measure(self, load: float, now: float = 0.0) -> PowerMeasurement:
        if load < 0 or (self.c_max is not None and load > self.c_max):
            limit = "inf" if self.c_max is None else f"{self.c_max:g}"
            raise PowerModelError(f"load {load:g} outside [0, {limit}]")
        return PowerMeasurement(self.p_static, load * self.sigma)

    @property
    def dynamic_sigma(self) -> Optional[float]:
        return self.sigma


class SharedPowerModel(NodePowerModel):
    """Energy-proportional model for shared infrastructure (cloud, base stations).

    Shared resources report no static power of their own; over-provisioning
    can be expressed through the staircase term: every started block of
    u * unit_capacity load powers one sub-component of unit_static watts.
    """

    def __init__(self, sigma: float, u: float = 1.0,
                 unit_capacity: float = math.inf, unit_static: float = 0.0):
        if sigma < 0:
            raise PowerModelError(f"sigma must be non-negative, got {sigma:g}")
        if not 0 < u <= 1:
            raise PowerModelError(f"operational capacity fraction must be in (0, 1], got {u:g}")
        if unit_capacity <= 0:
            raise PowerModelError(f"unit_capacity must be positive, got {unit_capacity:g}")
        if unit_static < 0:
            raise PowerModelError(f"unit_static must be non-negative, got {unit_static:g}")
        self.sigma = sigma
        self.u = u
        self.unit_capacity = unit_capacity
        self.unit_static = unit_static

    def measure(self, load: float, now: float = 0.0) -> PowerMeasurement:
        if load < 0:
            raise PowerModelError(f"load must be non-negative, got {load:g}")
        dynamic = load * self.sigma
        if self.unit_static:
            step = self.u * self.unit_capacity
            dynamic += math.ceil(load / step) * self.unit_static
        return PowerMeasurement(0.0, dynamic)

    @property
    def dynamic_sigma(self) -> Optional[float]:
        return self.sigma if self.unit_static == 0 else None


class DataCenterPowerModel:
    """Aggregates per-host models and scales the sum by the PUE."""

    def __init__(self, hosts: Sequence[NodePowerModel], pue: float = 1.0):
        if pue < 1:
            raise PowerModelError(f"PUE must be >= 1, got {pue:g}")
        self.hosts = list(hosts)
        self.pue = pue

    def measure_hosts(self, loads: Sequence[float], now: float = 0.0) -> PowerMeasurement:
        if len(loads) != len(self.hosts):
            raise PowerModelError(
                f"got {len(loads)} loads for {len(self.hosts)} hosts"
            )
        static = dynamic = 0.0
        for host, load in zip(self.hosts, loads):
            m = host.measure(load, now)
            static += m.static_w
            dynamic += m.dynamic_w
        return PowerMeasurement(self.pue * static, self.pue * dynamic)


class StatefulPowerModel(NodePowerModel):
    """Wraps a node model with an idle-shutdown state machine.

    A node that stays at zero load for `idle_timeout` seconds falls asleep
    and reports (0, 0) until load returns or `wake()` is called. Because the
    node can be powered off, its static draw counts as caused by whatever is
    placed on it (attributable_static).
    """

    attributable_static = True

    def __init__(self, inner: NodePowerModel, idle_timeout: float, history_size: int = 60):
        if idle_timeout < 0:
            raise PowerModelError(f"idle_timeout must be non-negative, got {idle_timeout:g}")
        self.inner = inner
        self.idle_timeout = idle_timeout
        self.asleep = False
        self.idle_since: Optional[float] = None
        self.history: deque[float] = deque(maxlen=history_size)
        self._last_tick: Optional[float] = None

    def measure(self, load: float, now: float = 0.0) -> PowerMeasurement:
        if self._last_tick is not None and now < self._last_tick:
            raise PowerModelError(f"time went backwards: {now:g} < {self._last_tick:g}")
        self._last_tick = now
        self.history.append(load)
        if load > 0:
            self.asleep = False
            self.idle_since = None
            return self.inner.measure(load, now)
        if self.asleep:
            return ZERO_POWER
        if self.idle_since is None:
            self.idle_since = now
        if now - self.idle_since >= self.idle_timeout:
            self.asleep = True
            self.idle_since = None
            return ZERO_POWER
        return self.inner.measure(0.0, now)

    def peek(self, load: float) -> PowerMeasurement:
        if self.asleep:
            return ZERO_POWER
        return self.inner.peek(load)

    def wake(self) -> None:
        self.asleep = False
        self.idle_since = None

    @property
    def dynamic_sigma(self) -> Optional[float]:
        return self.inner.dynamic_sigma


class LinkPowerModel:
    """Incremental energy per transferred bit; links never report static power.

    Static draw of transceivers belongs to the adjacent compute nodes, and
    intermediate routing equipment is shared infrastructure folded into sigma.
    """

    def __init__(self, sigma: float):
        if sigma < 0:
            raise PowerModelError(f"sigma must be non-negative, got {sigma:g}")
        self.sigma = sigma  # J/bit

    def measure(self, rate: float) -> PowerMeasurement:
        if rate < 0:
            raise PowerModelError(f"rate must be non-negative, got {rate:g}")
        return PowerMeasurement(0.0, rate * self.sigma)


def compose_link_sigma(components: Iterable[float]) -> float:
    """Sum per-hop energies per bit into one end-to-end link sigma.

    Uses exactly rounded summation so that a composed value matches its
    published total bit for bit.
    """
    parts = list(components)
    for value in parts:
        if value < 0:
            raise PowerModelError(f"per-hop energy must be non-negative, got {value:g}")
    return math.fsum(parts)


# -- infrastructure-wide measurement -----------------------------------------


def measure_infrastructure(infra, now: float = 0.0) -> dict[str, PowerMeasurement]:
    """One measurement per node and link from the current reserved loads.

    Stateful node models are ticked; everything else is a pure read.
    Entities without a power model report (0, 0).
    """
    out: dict[str, PowerMeasurement] = {}
    for node in infra.sorted_nodes():
        pm = node.power_model
        out[node.id] = pm.measure(node.used, now) if pm is not None else ZERO_POWER
    for link in infra.sorted_links():
        pm = link.power_model
        out[link.id] = pm.measure(link.used) if pm is not None else ZERO_POWER
    return out


def peek_infrastructure(infra) -> dict[str, PowerMeasurement]:
    """Like measure_infrastructure but without advancing any model state."""
    out: dict[str, PowerMeasurement] = {}
    for node in infra.sorted_nodes():
        pm = node.power_model
        out[node.id] = pm.peek(node.used) if pm is not None else ZERO_POWER
    for link in infra.sorted_links():
        pm = link.power_model
        out[link.id] = pm.measure(link.used) if pm is not None else ZERO_POWER
    return out


def _check_reservations(infra, placements) -> None:
    node_load: dict[str, float] = {}
    link_load: dict[str, float] = {}
    for p in placements:
        for task in p.app.tasks.values():
            if task.mips:
                nid = p.task_map[task.id]
                node_load[nid] = node_load.get(nid, 0.0) + task.mips
        for flow in p.app.flows.values():
            if flow.rate:
                for lid in p.flow_map.get(flow.id, ()):
                    link_load[lid] = link_load.get(lid, 0.0) + flow.rate
    for nid, implied in node_load.items():
        used = infra.node(nid).used
        if abs(used - implied) > 1e-9 * max(used, implied) + 1e-9:
            raise AttributionError(
                f"node '{nid}' has {used:g} MIPS reserved but placements imply {implied:g}"
            )
    for lid, implied in link_load.items():
        used = infra.link(lid).used
        if abs(used - implied) > 1e-9 * max(used, implied) + 1e-9:
            raise AttributionError(
                f"link '{lid}' has {used:g} bit/s reserved but placements imply {implied:g}"
            )


def attribute_to_applications(infra, placements, mode: str = DYNAMIC,
                              measurements: Optional[dict[str, PowerMeasurement]] = None,
                              ) -> dict[str, PowerMeasurement]:
    """Trace infrastructure power usage back to the applications causing it.

    Dynamic node power is split between co-hosted tasks by their share of the
    node's load; flow power is the flow rate times each traversed link's
    sigma. In FULL mode, the static draw of sleep-capable nodes is split the
    same way, since their placed tasks are what keeps them powered on.
    """
    if mode not in ATTRIBUTION_MODES:
        raise ValueError(f"unknown attribution mode '{mode}'")
    plist = list(placements.values()) if isinstance(placements, dict) else list(placements)
    if measurements is None:
        measurements = peek_infrastructure(infra)
    _check_reservations(infra, plist)

    out: dict[str, PowerMeasurement] = {}
    for p in sorted(plist, key=lambda pl: pl.app.id):
        static = dynamic = 0.0
        for task in p.app.sorted_tasks():
            if task.mips <= 0:
                continue
            nid = p.task_map[task.id]
            node = infra.node(nid)
            m = measurements[nid]
            fraction = task.mips / node.used
            dynamic += fraction * m.dynamic_w
            if mode == FULL and getattr(node.power_model, "attributable_static", False):
                static += fraction * m.static_w
        for flow in p.app.sorted_flows():
            if flow.rate <= 0:
                continue
            for lid in p.flow_map.get(flow.id, ()):
                pm = infra.link(lid).power_model
                if pm is not None:
                    dynamic += flow.rate * pm.sigma
        out[p.app.id] = PowerMeasurement(static, dynamic)
    return out
