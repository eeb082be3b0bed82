"""Discrete-event core: a time-ordered queue of read and update events.

The complete simulation state (time, infrastructure, applications and their
placements, power-model states) lives in a Configuration that every event
handler operates on. Update handlers receive the live configuration; read
handlers only get an immutable view of it. At equal timestamps updates run
before reads, and events of the same phase run in insertion order.
"""

from __future__ import annotations

import copy
from heapq import heappop, heappush
from types import MappingProxyType
from typing import Callable, Optional

from . import power as power_mod
from .infrastructure import Infrastructure

UPDATE = "update"
READ = "read"
_PHASE = {UPDATE: 0, READ: 1}


class EngineError(RuntimeError):
    pass


class Configuration:
    """Self-contained snapshot of the simulation at one instant."""

    def __init__(self, infrastructure: Optional[Infrastructure] = None, time: float = 0.0):
        self.time = time
        self.infrastructure = infrastructure if infrastructure is not None else Infrastructure()
        self.applications: dict[str, object] = {}
        self.placements: dict[str, object] = {}


class ConfigurationView:
    """Read-only facade over a configuration for read-event handlers."""

    __slots__ = ("_config",)

    def __init__(self, config: Configuration):
        self._config = config

    @property
    def time(self) -> float:
        return self._config.time

    @property
    def applications(self):
        return MappingProxyType(self._config.applications)

    @property
    def placements(self):
        return MappingProxyType(self._config.placements)

    def node(self, node_id: str):
        return self._config.infrastructure.node(node_id)

    def link(self, link_id: str):
        return self._config.infrastructure.link(link_id)

    def nodes(self):
        return self._config.infrastructure.sorted_nodes()

    def links(self):
        return self._config.infrastructure.sorted_links()

    def measure_power(self) -> dict[str, power_mod.PowerMeasurement]:
        """Current per-entity power without advancing any model state."""
        return power_mod.peek_infrastructure(self._config.infrastructure)

    def application_power(self, mode: str = power_mod.DYNAMIC):
        return power_mod.attribute_to_applications(
            self._config.infrastructure, self._config.placements, mode)


class Probe:
    """Periodic read event collecting per-entity and per-application power.

    Fires at start, start + period, start + 2 * period, ... The collector is
    called as collector(time, entity_measurements, app_measurements). Probes
    are where stateful power models get ticked, so measurement and sleep
    transitions stay aligned.
    """

    def __init__(self, period: float, collector: Callable,
                 mode: str = power_mod.DYNAMIC,
                 measurer: Optional[Callable] = None):
        if period <= 0:
            raise ValueError(f"probe period must be positive, got {period:g}")
        self.period = period
        self.collector = collector
        self.mode = mode
        self.measurer = measurer
        self.start = 0.0
        self.fired = 0

    def _fire(self, sim: "Simulator") -> None:
        config = sim.configuration
        t = config.time
        if self.measurer is not None:
            entities, apps = self.measurer(config, t)
        else:
            entities = power_mod.measure_infrastructure(config.infrastructure, t)
            apps = power_mod.attribute_to_applications(
                config.infrastructure, config.placements, self.mode, measurements=entities)
        self.collector(t, entities, apps)
        self.fired += 1
        sim.schedule(self.start + self.fired * self.period,
                     lambda view: self._fire(sim), kind=READ, name=f"probe@{self.period:g}s")


class _Event:
    __slots__ = ("time", "phase", "seq", "handler", "name")

    def __init__(self, time, phase, seq, handler, name):
        self.time = time
        self.phase = phase
        self.seq = seq
        self.handler = handler
        self.name = name

    def __lt__(self, other):
        return (self.time, self.phase, self.seq) < (other.time, other.phase, other.seq)


class Simulator:
    """Single-threaded deterministic event loop over a configuration."""

    def __init__(self, infrastructure: Optional[Infrastructure] = None,
                 configuration: Optional[Configuration] = None):
        if configuration is not None and infrastructure is not None:
            raise ValueError("pass either an infrastructure or a configuration, not both")
        self.configuration = configuration if configuration is not None else Configuration(infrastructure)
        self._queue: list[_Event] = []
        self._seq = 0

    @property
    def now(self) -> float:
        return self.configuration.time

    def schedule(self, time: float, handler: Callable, kind: str = UPDATE,
                 name: Optional[str] = None) -> None:
        """Queue a handler; update handlers get the live configuration,
        read handlers an immutable view."""
        if kind not in _PHASE:
            raise ValueError(f"unknown event kind '{kind}'")
        if time < self.configuration.time:
            raise EngineError(
                f"cannot schedule event at t={time:g}s: simulation is already at "
                f"t={self.configuration.time:g}s"
            )
        self._seq += 1
        heappush(self._queue, _Event(time, _PHASE[kind], self._seq, handler,
                                     name or getattr(handler, "__name__", "event")))

    def add_probe(self, period: float, collector: Callable,
                  mode: str = power_mod.DYNAMIC,
                  measurer: Optional[Callable] = None,
                  start: Optional[float] = None) -> Probe:
        probe = Probe(period, collector, mode, measurer)
        probe.start = self.now if start is None else start
        self.schedule(probe.start, lambda view: probe._fire(self), kind=READ,
                      name=f"probe@{period:g}s")
        return probe

    def run_until(self, t_end: float) -> Configuration:
        """Execute all events with time <= t_end in order; returns the final
        configuration with its clock advanced to t_end."""
        config = self.configuration
        if t_end < config.time:
            raise EngineError(f"cannot run to t={t_end:g}s: already at t={config.time:g}s")
        queue = self._queue
        while queue and queue[0].time <= t_end:
            event = heappop(queue)
            config.time = event.time
            target = config if event.phase == _PHASE[UPDATE] else ConfigurationView(config)
            try:
                event.handler(target)
            except Exception as exc:
                raise EngineError(
                    f"event '{event.name}' at t={event.time:g}s failed: {exc}"
                ) from exc
        config.time = t_end
        return config

    def snapshot(self) -> Configuration:
        """Deep, detached copy of the current configuration.

        The copy shares nothing with the live state; it can be serialized and
        later used to seed a new Simulator (checkpoint/resume).
        """
        return copy.deepcopy(self.configuration)

    def view(self) -> ConfigurationView:
        return ConfigurationView(self.configuration)
