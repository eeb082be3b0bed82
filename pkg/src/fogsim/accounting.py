"""Incremental power accounting for long measurement-heavy runs.

Recomputing every entity and application measurement on every probe is
wasteful: loads only change when placements change, and built-in models are
linear in load. The accountant keeps a persistent per-entity measurement
map, per-class power sums, and per-application attribution, updating only
what an infrastructure change or a stateful model's tick can have affected.

Its figures are exactly the ones the generic operations in `power` produce
(the equivalence is covered by tests); it is an optimization layer, not a
second source of truth.
"""

from __future__ import annotations

from typing import Callable, Optional

from .application import Placement
from .power import (DYNAMIC, FULL, ATTRIBUTION_MODES, PowerMeasurement,
                    ZERO_POWER)


class _AppRecord:
    __slots__ = ("cls", "cached_dynamic", "var_nodes", "value")

    def __init__(self, cls, cached_dynamic, var_nodes, value):
        self.cls = cls
        self.cached_dynamic = cached_dynamic  # load-independent attribution terms
        self.var_nodes = var_nodes  # [(node_id, mips)] needing per-probe shares
        self.value = value


class PowerAccountant:
    """Maintains class-aggregated power sums and per-app attribution.

    node_class / link_class / app_class map entities and applications to the
    aggregate names under which their power is reported.
    """

    def __init__(self, mode: str = DYNAMIC,
                 node_class: Callable = lambda node: "node",
                 link_class: Callable = lambda link: "link",
                 app_class: Callable = lambda app_id: "app"):
        if mode not in ATTRIBUTION_MODES:
            raise ValueError(f"unknown attribution mode '{mode}'")
        self.mode = mode
        self._node_class = node_class
        self._link_class = link_class
        self._app_class = app_class

        self.measurements: dict[str, PowerMeasurement] = {}
        self.app_measurements: dict[str, PowerMeasurement] = {}
        self.class_static: dict[str, float] = {}
        self.class_dynamic: dict[str, float] = {}
        self.app_class_static: dict[str, float] = {}
        self.app_class_dynamic: dict[str, float] = {}

        self._entity_class: dict[str, str] = {}
        self._stateful: set[str] = set()
        self._apps: dict[str, _AppRecord] = {}
        # node id -> app id -> mips placed there by that app (variable nodes only)
        self._node_apps: dict[str, dict[str, float]] = {}

    # -- entity side -----------------------------------------------------------

    def _account_entity(self, entity_id: str, cls: str, m: PowerMeasurement) -> None:
        old = self.measurements.get(entity_id, ZERO_POWER)
        self.class_static[cls] = self.class_static.get(cls, 0.0) + m.static_w - old.static_w
        self.class_dynamic[cls] = self.class_dynamic.get(cls, 0.0) + m.dynamic_w - old.dynamic_w
        self.measurements[entity_id] = m

    def _drop_entity(self, entity_id: str) -> None:
        old = self.measurements.pop(entity_id, None)
        if old is None:
            return
        cls = self._entity_class.pop(entity_id)
        self.class_static[cls] -= old.static_w
        self.class_dynamic[cls] -= old.dynamic_w
        self._stateful.discard(entity_id)

    def _refresh_node(self, infra, node_id: str, now: float) -> None:
        node = infra.nodes.get(node_id)
        if node is None:
            self._drop_entity(node_id)
            return
        model = node.power_model
        m = model.measure(node.used, now) if model is not None else ZERO_POWER
        cls = self._entity_class.get(node_id)
        if cls is None:
            cls = self._entity_class[node_id] = self._node_class(node)
        if getattr(model, "attributable_static", False) or (
                model is not None and model.dynamic_sigma is None):
            self._stateful.add(node_id)
        else:
            self._stateful.discard(node_id)
        self._account_entity(node_id, cls, m)

    def _refresh_link(self, infra, link_id: str) -> None:
        link = infra.links.get(link_id)
        if link is None:
            self._drop_entity(link_id)
            return
        model = link.power_model
        m = model.measure(link.used) if model is not None else ZERO_POWER
        cls = self._entity_class.get(link_id)
        if cls is None:
            cls = self._entity_class[link_id] = self._link_class(link)
        self._account_entity(link_id, cls, m)

    # -- application side ---------------------------------------------------------

    def _needs_per_probe_share(self, model) -> bool:
        if model is None:
            return False
        if model.dynamic_sigma is None:
            return True
        return self.mode == FULL and getattr(model, "attributable_static", False)

    def register(self, infra, placement: Placement) -> None:
        """Start accounting for a freshly committed placement."""
        app = placement.app
        cached = 0.0
        var_nodes: list[tuple[str, float]] = []
        for task in app.sorted_tasks():
            if task.mips <= 0:
                continue
            node = infra.node(placement.task_map[task.id])
            model = node.power_model
            if self._needs_per_probe_share(model):
                var_nodes.append((node.id, task.mips))
                bucket = self._node_apps.setdefault(node.id, {})
                bucket[app.id] = bucket.get(app.id, 0.0) + task.mips
                if model.dynamic_sigma is not None:
                    cached += task.mips * model.dynamic_sigma
            elif model is not None:
                cached += task.mips * model.dynamic_sigma
        for flow in app.sorted_flows():
            if flow.rate <= 0:
                continue
            for link_id in placement.flow_map.get(flow.id, ()):
                pm = infra.link(link_id).power_model
                if pm is not None:
                    cached += flow.rate * pm.sigma
        cls = self._app_class(app.id)
        value = PowerMeasurement(0.0, cached)
        self._apps[app.id] = _AppRecord(cls, cached, var_nodes, value)
        self.app_measurements[app.id] = value
        self.app_class_static[cls] = self.app_class_static.get(cls, 0.0)
        self.app_class_dynamic[cls] = self.app_class_dynamic.get(cls, 0.0) + cached

    def unregister(self, placement: Placement) -> None:
        rec = self._apps.pop(placement.app.id, None)
        if rec is None:
            raise KeyError(f"app '{placement.app.id}' is not being accounted")
        del self.app_measurements[placement.app.id]
        self.app_class_static[rec.cls] -= rec.value.static_w
        self.app_class_dynamic[rec.cls] -= rec.value.dynamic_w
        for node_id, mips in rec.var_nodes:
            bucket = self._node_apps.get(node_id)
            if bucket is not None:
                left = bucket.get(placement.app.id, 0.0) - mips
                if left <= 0:
                    bucket.pop(placement.app.id, None)
                    if not bucket:
                        del self._node_apps[node_id]
                else:
                    bucket[placement.app.id] = left

    def replaced(self, infra, placement: Placement) -> None:
        """Re-derive an app's cached terms after a reroute or rate change."""
        self.unregister(placement)
        self.register(infra, placement)

    # -- probe entry point -----------------------------------------------------------

    def refresh(self, configuration, now: float):
        """Bring all sums up to date for measurement instant `now`.

        Recomputes entities whose load changed plus every stateful node
        (their tick is what advances sleep states), then the per-probe
        attribution shares. Returns (entity_measurements, app_measurements);
        both are the accountant's persistent dicts.
        """
        infra = configuration.infrastructure
        dirty_nodes, dirty_links = infra.consume_dirty()
        for node_id in sorted(dirty_nodes | self._stateful):
            self._refresh_node(infra, node_id, now)
        for link_id in sorted(dirty_links):
            self._refresh_link(infra, link_id)

        if self._node_apps:
            self._refresh_shares(infra)
        return self.measurements, self.app_measurements

    def _refresh_shares(self, infra) -> None:
        mode_full = self.mode == FULL
        var: dict[str, list[float]] = {}
        for node_id in sorted(self._node_apps):
            bucket = self._node_apps[node_id]
            if not bucket:
                continue
            node = infra.node(node_id)
            if node.used <= 0:
                continue
            m = self.measurements[node_id]
            model = node.power_model
            share_static = mode_full and getattr(model, "attributable_static", False)
            share_dynamic = model.dynamic_sigma is None
            if not (share_static or share_dynamic):
                continue
            inv = 1.0 / node.used
            for app_id, mips in bucket.items():
                fraction = mips * inv
                entry = var.setdefault(app_id, [0.0, 0.0])
                if share_static:
                    entry[0] += fraction * m.static_w
                if share_dynamic:
                    entry[1] += fraction * m.dynamic_w
        # apps indexed under a variable node must be re-valued every probe,
        # including those whose share just dropped to zero
        touched = {app_id for bucket in self._node_apps.values() for app_id in bucket}
        for app_id in sorted(touched):
            rec = self._apps[app_id]
            static, dynamic = var.get(app_id, (0.0, 0.0))
            new = PowerMeasurement(static, rec.cached_dynamic + dynamic)
            old = rec.value
            if new != old:
                self.app_class_static[rec.cls] += new.static_w - old.static_w
                self.app_class_dynamic[rec.cls] += new.dynamic_w - old.dynamic_w
                rec.value = new
                self.app_measurements[app_id] = new

    # -- conservation figures ---------------------------------------------------------

    @property
    def total_entity_dynamic(self) -> float:
        return sum(self.class_dynamic.values())

    @property
    def total_app_dynamic(self) -> float:
        return sum(self.app_class_dynamic.values())
