"""Task placement and flow routing with atomic commit/rollback.

Placing an application maps its bound source/sink tasks to their nodes,
lets a strategy choose nodes for the processing tasks, then routes every
flow over links with sufficient headroom. Either everything is reserved or,
on the first infeasibility, all reservations taken so far are rolled back.
"""

from __future__ import annotations

import itertools
import math
from heapq import heappop, heappush
from typing import Callable, Iterable, Optional

from .application import PROCESSING, Application, Placement, Task
from .infrastructure import Infrastructure, NetworkLink

DEFAULT_UTILIZATION_CAP = 0.85


class PlacementError(Exception):
    pass


class NoFeasibleNode(PlacementError):
    def __init__(self, task_id: str, detail: str = ""):
        self.task_id = task_id
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"no feasible node for task '{task_id}'{suffix}")


class NoFeasiblePath(PlacementError):
    def __init__(self, flow_id: str, src: str, dst: str):
        self.flow_id = flow_id
        super().__init__(f"no feasible path for flow '{flow_id}' from '{src}' to '{dst}'")


class RoutingPolicy:
    """Weights links for the path search; lower total weight wins.

    Ties are broken by hop count, then by the lexicographic sequence of link
    ids, making routes fully deterministic.
    """

    def __init__(self, weight: Callable[[NetworkLink], float] = None, name: str = "latency"):
        self.weight = weight if weight is not None else (lambda link: link.latency)
        self.name = name


DEFAULT_ROUTING = RoutingPolicy()


def shortest_path(infra: Infrastructure, src: str, dst: str, rate: float,
                  routing: RoutingPolicy = DEFAULT_ROUTING,
                  forbidden: Optional[set[str]] = None) -> Optional[list[str]]:
    """Minimal-weight simple path as a list of link ids, or None.

    Links whose remaining bandwidth is below `rate` (or whose id is in
    `forbidden`) are excluded up front. src == dst yields the empty path.
    """
    infra.node(src)
    infra.node(dst)
    if src == dst:
        return []
    weight_of = routing.weight
    links = infra.links
    out_ids = infra._out
    done: set[str] = set()
    heap: list[tuple[float, int, tuple[str, ...], str]] = [(0.0, 0, (), src)]
    while heap:
        weight, hops, path, here = heappop(heap)
        if here == dst:
            return list(path)
        if here in done:
            continue
        done.add(here)
        for link_id in out_ids[here]:
            link = links[link_id]
            if link.dst in done:
                continue
            if link.bandwidth - link.used < rate:
                continue
            if forbidden and link_id in forbidden:
                continue
            w = weight_of(link)
            if w < 0:
                raise PlacementError(f"routing weight of link '{link_id}' is negative")
            heappush(heap, (weight + w, hops + 1, path + (link_id,), link.dst))
    return None


# -- placement strategies -----------------------------------------------------


def _is_asleep(node) -> bool:
    return bool(getattr(node.power_model, "asleep", False))


class PlacementStrategy:
    """Chooses nodes for processing tasks.

    Nodes with finite capacity ("fog" tier) are only filled up to
    cap * capacity; nodes with unbounded capacity ("cloud" tier) are never
    constrained by the cap.
    """

    def __init__(self, cap: float = DEFAULT_UTILIZATION_CAP):
        if not 0 < cap <= 1:
            raise ValueError(f"utilization cap must be in (0, 1], got {cap:g}")
        self.cap = cap

    def assign(self, infra: Infrastructure, tasks: list[Task]) -> dict[str, str]:
        """Map each processing task to a node id, accounting for the loads
        the earlier tasks of this very call would add."""
        pending: dict[str, float] = {}
        mapping: dict[str, str] = {}
        for task in tasks:
            node_id = self._pick(infra, task.mips, pending)
            if node_id is None:
                raise NoFeasibleNode(task.id, f"requires {task.mips:g} MIPS")
            mapping[task.id] = node_id
            pending[node_id] = pending.get(node_id, 0.0) + task.mips
        return mapping

    def _pick(self, infra, mips, pending) -> Optional[str]:
        raise NotImplementedError

    def _cloud(self, infra) -> Optional[str]:
        for node in infra.sorted_nodes():
            if math.isinf(node.capacity):
                return node.id
        return None

    def _fog_candidates(self, infra, mips, pending):
        """(utilization, id, asleep) of finite-capacity nodes that can take `mips`."""
        out = []
        for node in infra.sorted_nodes():
            if math.isinf(node.capacity) or node.capacity <= 0:
                continue
            load = node.used + pending.get(node.id, 0.0)
            if load + mips > self.cap * node.capacity:
                continue
            out.append((load / node.capacity, node.id, _is_asleep(node)))
        return out


class CloudOnlyStrategy(PlacementStrategy):
    """Every processing task goes to the unbounded-capacity node."""

    def _pick(self, infra, mips, pending):
        return self._cloud(infra)


class EvenSpreadStrategy(PlacementStrategy):
    """Fill the least-utilized feasible fog node; offload to cloud past the cap.

    Ties on utilization go to the lexicographically smaller node id. Asleep
    nodes are only considered when no awake fog node fits.
    """

    def _pick(self, infra, mips, pending):
        candidates = self._fog_candidates(infra, mips, pending)
        awake = [(u, i) for u, i, asleep in candidates if not asleep]
        if awake:
            return min(awake)[1]
        asleep = [(u, i) for u, i, is_asleep in candidates if is_asleep]
        if asleep:
            return min(asleep)[1]
        return self._cloud(infra)


class ConsolidateStrategy(PlacementStrategy):
    """Pack work onto as few fog nodes as possible to maximize idle nodes.

    A single task goes to the awake feasible fog node with the highest
    utilization (ties to the smaller id); a sleeping node is only woken when
    nothing awake fits, and the cloud is used past the cap. Multi-task
    applications are assigned jointly so the number of nodes that have to
    leave the idle state is minimal.
    """

    _SEARCH_LIMIT = 20000  # max joint-assignment combinations to enumerate

    def assign(self, infra, tasks):
        if len(tasks) > 1:
            joint = self._assign_jointly(infra, tasks)
            if joint is not None:
                return joint
        return super().assign(infra, tasks)

    def _pick(self, infra, mips, pending):
        candidates = self._fog_candidates(infra, mips, pending)
        awake = [(-u, i) for u, i, asleep in candidates if not asleep]
        if awake:
            return min(awake)[1]
        asleep = [(u, i) for u, i, is_asleep in candidates if is_asleep]
        if asleep:
            return min(asleep)[1]
        return self._cloud(infra)

    def _assign_jointly(self, infra, tasks) -> Optional[dict[str, str]]:
        fogs = [n for n in infra.sorted_nodes()
                if not math.isinf(n.capacity) and n.capacity > 0]
        if not fogs or (len(fogs) + 1) ** len(tasks) > self._SEARCH_LIMIT:
            return None
        per_task = []
        for task in tasks:
            ok = [n.id for n in fogs if n.used + task.mips <= self.cap * n.capacity]
            if not ok:
                return None  # at least one task needs the cloud: fall back to greedy
            per_task.append(ok)
        capacity = {n.id: self.cap * n.capacity for n in fogs}
        base = {n.id: n.used for n in fogs}
        idle = {n.id for n in fogs if n.used == 0 or _is_asleep(n)}

        best = None
        best_key = None
        for combo in itertools.product(*per_task):
            extra: dict[str, float] = {}
            for task, node_id in zip(tasks, combo):
                extra[node_id] = extra.get(node_id, 0.0) + task.mips
            if any(base[nid] + add > capacity[nid] for nid, add in extra.items()):
                continue
            newly_active = sum(1 for nid in extra if nid in idle)
            active_after = sum(1 for nid in base if base[nid] > 0 or nid in extra)
            key = (newly_active, active_after, combo)
            if best_key is None or key < best_key:
                best_key = key
                best = {task.id: nid for task, nid in zip(tasks, combo)}
        return best


def make_strategy(kind: str, cap: float = DEFAULT_UTILIZATION_CAP) -> PlacementStrategy:
    strategies = {
        "cloud-only": CloudOnlyStrategy,
        "even-spread": EvenSpreadStrategy,
        "consolidate": ConsolidateStrategy,
    }
    try:
        return strategies[kind](cap)
    except KeyError:
        raise ValueError(f"unknown placement strategy '{kind}'") from None


# -- placement lifecycle -------------------------------------------------------


class _Rollback:
    """Records reservations so a failed placement can be undone exactly."""

    def __init__(self, infra: Infrastructure, claim: str):
        self.infra = infra
        self.claim = claim
        self.node_amounts: list[tuple[str, float]] = []
        self.link_amounts: list[tuple[str, float]] = []

    def reserve_node(self, node_id: str, mips: float):
        self.infra.reserve_node(node_id, mips, claim=self.claim)
        self.node_amounts.append((node_id, mips))

    def reserve_link(self, link_id: str, rate: float):
        self.infra.reserve_link(link_id, rate, claim=self.claim)
        self.link_amounts.append((link_id, rate))

    def undo(self):
        for link_id, rate in reversed(self.link_amounts):
            self.infra.release_link(link_id, rate, claim=self.claim)
        for node_id, mips in reversed(self.node_amounts):
            self.infra.release_node(node_id, mips, claim=self.claim)


def _wake_if_asleep(infra: Infrastructure, node_id: str) -> None:
    model = infra.node(node_id).power_model
    if getattr(model, "asleep", False):
        model.wake()


def place(app: Application, infra: Infrastructure, strategy: PlacementStrategy,
          routing: RoutingPolicy = DEFAULT_ROUTING) -> Placement:
    """Place an application; on any failure the infrastructure is untouched."""
    problems = app.validate()
    if problems:
        raise PlacementError(f"app '{app.id}' is invalid: " + "; ".join(problems))

    task_map: dict[str, str] = {}
    for task in app.sorted_tasks():
        if task.kind != PROCESSING:
            infra.node(task.bound_node)  # bound nodes must exist
            task_map[task.id] = task.bound_node
    task_map.update(strategy.assign(infra, app.processing_tasks()))

    rollback = _Rollback(infra, claim=app.id)
    flow_map: dict[str, list[str]] = {}
    try:
        for task in app.sorted_tasks():
            node_id = task_map[task.id]
            _wake_if_asleep(infra, node_id)
            rollback.reserve_node(node_id, task.mips)
        for flow in app.sorted_flows():
            src_node = task_map[flow.src_task]
            dst_node = task_map[flow.dst_task]
            path = shortest_path(infra, src_node, dst_node, flow.rate, routing)
            if path is None:
                raise NoFeasiblePath(flow.id, src_node, dst_node)
            for link_id in path:
                rollback.reserve_link(link_id, flow.rate)
            flow_map[flow.id] = path
    except Exception:
        rollback.undo()
        raise
    return Placement(app=app, task_map=task_map, flow_map=flow_map)


def unplace(placement: Placement, infra: Infrastructure) -> None:
    """Release every reservation held by the placement."""
    if not placement.active:
        raise PlacementError(f"app '{placement.app.id}' is not currently placed")
    app = placement.app
    for flow in app.sorted_flows():
        for link_id in placement.flow_map.get(flow.id, ()):
            infra.release_link(link_id, flow.rate, claim=app.id)
    for task in app.sorted_tasks():
        infra.release_node(placement.task_map[task.id], task.mips, claim=app.id)
    placement.active = False


def reroute(placement: Placement, infra: Infrastructure,
            routing: RoutingPolicy = DEFAULT_ROUTING,
            flow_ids: Optional[Iterable[str]] = None,
            forbidden: Optional[set[str]] = None) -> Placement:
    """Recompute flow paths while keeping the task mapping fixed.

    Old reservations are released and new ones acquired atomically; if any
    flow becomes unroutable the previous paths are restored and the error is
    raised. `flow_ids` restricts rerouting to the given flows (for callers
    that know which paths a topology change invalidated); `forbidden` links
    are excluded from the new paths.
    """
    if not placement.active:
        raise PlacementError(f"app '{placement.app.id}' is not currently placed")
    app = placement.app
    selected = sorted(flow_ids) if flow_ids is not None else sorted(placement.flow_map)
    for fid in selected:
        if fid not in placement.flow_map:
            raise PlacementError(f"flow '{fid}' is not part of app '{app.id}'s placement")

    old_paths = {fid: placement.flow_map[fid] for fid in selected}
    for fid in selected:
        for link_id in old_paths[fid]:
            infra.release_link(link_id, app.flows[fid].rate, claim=app.id)

    new_paths: dict[str, list[str]] = {}
    done: list[str] = []
    try:
        for fid in selected:
            flow = app.flows[fid]
            src_node = placement.task_map[flow.src_task]
            dst_node = placement.task_map[flow.dst_task]
            path = shortest_path(infra, src_node, dst_node, flow.rate, routing, forbidden)
            if path is None:
                raise NoFeasiblePath(fid, src_node, dst_node)
            for link_id in path:
                infra.reserve_link(link_id, flow.rate, claim=app.id)
            new_paths[fid] = path
            done.append(fid)
    except Exception:
        for fid in reversed(done):
            for link_id in new_paths[fid]:
                infra.release_link(link_id, app.flows[fid].rate, claim=app.id)
        for fid in selected:
            for link_id in old_paths[fid]:
                infra.reserve_link(link_id, app.flows[fid].rate, claim=app.id)
        raise

    placement.flow_map.update(new_paths)
    placement.revision += 1
    return placement


def verify_reservations(infra: Infrastructure, placements) -> None:
    """Assert that reserved amounts equal what the placements imply."""
    from .power import _check_reservations

    plist = list(placements.values()) if isinstance(placements, dict) else list(placements)
    _check_reservations(infra, plist)
