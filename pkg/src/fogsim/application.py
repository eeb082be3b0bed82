"""Streaming applications: DAGs of tasks connected by continuous data flows.

Applications are immutable in shape once built; only flow rates may change
at runtime. Source and sink tasks are pinned to a node, processing tasks are
assigned by a placement strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

SOURCE = "source"
PROCESSING = "processing"
SINK = "sink"
_KINDS = (SOURCE, PROCESSING, SINK)


class ApplicationError(Exception):
    pass


@dataclass(slots=True)
class Task:
    id: str
    kind: str
    mips: float = 0.0
    bound_node: Optional[str] = None


@dataclass(slots=True)
class DataFlow:
    id: str
    src_task: str
    dst_task: str
    rate: float  # bit/s


class Application:
    """A connected DAG of tasks and flows with per-kind degree rules."""

    def __init__(self, app_id: str):
        self.id = app_id
        self.tasks: dict[str, Task] = {}
        self.flows: dict[str, DataFlow] = {}

    # -- construction ------------------------------------------------------

    def add_task(self, task: Task) -> Task:
        if task.id in self.tasks:
            raise ApplicationError(f"task '{task.id}' already exists in app '{self.id}'")
        if task.kind not in _KINDS:
            raise ApplicationError(f"task '{task.id}' has unknown kind '{task.kind}'")
        self.tasks[task.id] = task
        return task

    def add_source(self, task_id: str, bound_node: str, mips: float = 0.0) -> Task:
        return self.add_task(Task(task_id, SOURCE, mips, bound_node))

    def add_processing(self, task_id: str, mips: float) -> Task:
        return self.add_task(Task(task_id, PROCESSING, mips))

    def add_sink(self, task_id: str, bound_node: str, mips: float = 0.0) -> Task:
        return self.add_task(Task(task_id, SINK, mips, bound_node))

    def connect(self, src_task: str, dst_task: str, rate: float,
                flow_id: Optional[str] = None) -> DataFlow:
        for tid in (src_task, dst_task):
            if tid not in self.tasks:
                raise ApplicationError(f"flow endpoint '{tid}' not in app '{self.id}'")
        fid = flow_id if flow_id is not None else f"{src_task}->{dst_task}"
        if fid in self.flows:
            raise ApplicationError(f"flow '{fid}' already exists in app '{self.id}'")
        flow = DataFlow(fid, src_task, dst_task, rate)
        self.flows[fid] = flow
        return flow

    # -- queries -----------------------------------------------------------

    def sorted_tasks(self) -> list[Task]:
        return [self.tasks[i] for i in sorted(self.tasks)]

    def sorted_flows(self) -> list[DataFlow]:
        return [self.flows[i] for i in sorted(self.flows)]

    def processing_tasks(self) -> list[Task]:
        return [t for t in self.sorted_tasks() if t.kind == PROCESSING]

    def total_mips(self) -> float:
        return sum(t.mips for t in self.tasks.values())

    # -- validation ----------------------------------------------------------

    def validate(self) -> list[str]:
        """Return every violated shape rule; an empty list means the app is valid."""
        problems = []
        if not self.tasks:
            return [f"app '{self.id}' has no tasks"]

        outgoing: dict[str, int] = {tid: 0 for tid in self.tasks}
        incoming: dict[str, int] = {tid: 0 for tid in self.tasks}
        for flow in self.sorted_flows():
            if flow.rate < 0:
                problems.append(f"flow '{flow.id}' has negative rate")
            outgoing[flow.src_task] += 1
            incoming[flow.dst_task] += 1

        for task in self.sorted_tasks():
            if task.mips < 0:
                problems.append(f"task '{task.id}' has negative mips")
            if task.kind == SOURCE:
                if task.bound_node is None:
                    problems.append(f"source task '{task.id}' has no bound node")
                if incoming[task.id]:
                    problems.append(f"source task '{task.id}' has incoming flows")
                if not outgoing[task.id]:
                    problems.append(f"source task '{task.id}' has no outgoing flow")
            elif task.kind == SINK:
                if task.bound_node is None:
                    problems.append(f"sink task '{task.id}' has no bound node")
                if outgoing[task.id]:
                    problems.append(f"sink task '{task.id}' has outgoing flows")
                if not incoming[task.id]:
                    problems.append(f"sink task '{task.id}' has no incoming flow")
            else:
                if task.bound_node is not None:
                    problems.append(f"processing task '{task.id}' must not be pre-bound to a node")
                if not incoming[task.id]:
                    problems.append(f"processing task '{task.id}' has no incoming flow")
                if not outgoing[task.id]:
                    problems.append(f"processing task '{task.id}' has no outgoing flow")

        if self._has_cycle():
            problems.append(f"app '{self.id}' contains a cycle")
        if not self._is_connected():
            problems.append(f"app '{self.id}' is not connected")
        return problems

    def _has_cycle(self) -> bool:
        indegree = {tid: 0 for tid in self.tasks}
        succ: dict[str, list[str]] = {tid: [] for tid in self.tasks}
        for flow in self.flows.values():
            indegree[flow.dst_task] += 1
            succ[flow.src_task].append(flow.dst_task)
        frontier = [tid for tid, d in indegree.items() if d == 0]
        seen = 0
        while frontier:
            tid = frontier.pop()
            seen += 1
            for nxt in succ[tid]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    frontier.append(nxt)
        return seen != len(self.tasks)

    def _is_connected(self) -> bool:
        if len(self.tasks) == 1:
            return True
        neighbours: dict[str, set[str]] = {tid: set() for tid in self.tasks}
        for flow in self.flows.values():
            neighbours[flow.src_task].add(flow.dst_task)
            neighbours[flow.dst_task].add(flow.src_task)
        start = next(iter(self.tasks))
        seen = {start}
        stack = [start]
        while stack:
            for nxt in neighbours[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.tasks)


@dataclass(slots=True)
class Placement:
    """Where an application currently lives: task -> node, flow -> link path.

    A flow mapped to an empty path connects two tasks on the same node and
    consumes no network resources. `revision` increments whenever paths or
    rates change, so cached per-application power figures can be invalidated.
    """

    app: Application
    task_map: dict[str, str] = field(default_factory=dict)
    flow_map: dict[str, list[str]] = field(default_factory=dict)
    active: bool = True
    revision: int = 0


def set_flow_rate(app: Application, flow_id: str, rate: float,
                  infra=None, placement: Optional[Placement] = None) -> None:
    """Change a flow's data rate, adjusting link reservations atomically.

    For a placed flow the delta must fit every link on its path; otherwise
    nothing changes and an error is raised.
    """
    if rate < 0:
        raise ApplicationError(f"flow '{flow_id}' cannot have a negative rate")
    try:
        flow = app.flows[flow_id]
    except KeyError:
        raise ApplicationError(f"unknown flow '{flow_id}' in app '{app.id}'") from None

    delta = rate - flow.rate
    if placement is None or infra is None or delta == 0:
        flow.rate = rate
        return

    path = placement.flow_map.get(flow_id, [])
    if delta > 0:
        for link_id in path:
            link = infra.link(link_id)
            if link.used + delta > link.bandwidth:
                raise ApplicationError(
                    f"cannot raise flow '{flow_id}' to {rate:g} bit/s: "
                    f"link '{link_id}' has only {link.headroom:g} bit/s left"
                )
        for link_id in path:
            infra.reserve_link(link_id, delta, claim=app.id)
    else:
        for link_id in path:
            infra.release_link(link_id, -delta, claim=app.id)
    flow.rate = rate
    placement.revision += 1
