"""Smart-city traffic scenario: a street grid of smart traffic lights (STLs)
with optional fog nodes, a cloud, camera analytics per crossing, and
vehicle-to-infrastructure streams from taxis driving across the grid.

Eight experiments vary the number of fog nodes, the placement strategy and
whether idle fog nodes are put to sleep.
"""

from __future__ import annotations

import math
import random
import time as _time
from dataclasses import dataclass, field
from typing import Optional

from .accounting import PowerAccountant
from .application import Application, Placement
from .engine import Configuration, Simulator
from .infrastructure import ComputeNode, Infrastructure, NetworkLink
from .orchestration import (DEFAULT_ROUTING, NoFeasiblePath, PlacementError,
                            RoutingPolicy, make_strategy, place, reroute, unplace)
from .power import (FULL, LinearPowerModel, LinkPowerModel, SharedPowerModel,
                    StatefulPowerModel, compose_link_sigma)
from .reporting import RunCollector, RunResult, summarize, write_summary

GRID_COLS = 4
GRID_ROWS = 4
BLOCK_WIDTH_M = 274.0
BLOCK_HEIGHT_M = 80.0

# Routing weights in seconds; compared by the path search, never simulated.
WAN_LATENCY_S = 0.020
MESH_LATENCY_S = 0.005
WIFI_LATENCY_S = 0.005
LOCAL_LATENCY_S = 0.0

# Energy per bit (nJ) of the equipment chain behind one WAN hop: cellular
# module, access network, edge router, core routers, data-center switches.
WAN_UP_EQUIPMENT_NJ = (438.4, 6200.0, 5.9, 13.5, 0.4)
WAN_DOWN_EQUIPMENT_NJ = (52.0, 20500.0, 5.9, 13.5, 0.4)


@dataclass(frozen=True)
class ScenarioParams:
    """Infrastructure and application parameterization (SI units)."""

    cloud_sigma_w_per_mips: float = 700e-6
    fog_capacity_mips: float = 400000.0
    fog_static_w: float = 100.0
    fog_sigma_w_per_mips: float = 350e-6
    wan_up_bandwidth_bps: float = 50e6
    wan_down_bandwidth_bps: float = 100e6
    wan_up_sigma_j_per_bit: float = compose_link_sigma(WAN_UP_EQUIPMENT_NJ) * 1e-9
    wan_down_sigma_j_per_bit: float = compose_link_sigma(WAN_DOWN_EQUIPMENT_NJ) * 1e-9
    wifi_taxi_bandwidth_bps: float = 1.3e9
    wifi_mesh_bandwidth_bps: float = 1.3e9
    wifi_taxi_sigma_j_per_bit: float = 300e-9
    wifi_mesh_sigma_j_per_bit: float = 100e-9
    utilization_cap: float = 0.85
    idle_timeout_s: float = 5.0
    cctv_video_bps: float = 10e6
    cctv_mips: float = 30000.0
    cctv_result_bps: float = 200e3
    v2i_sensor_bps: float = 100e3
    v2i_mips: float = 7000.0
    v2i_output_bps: float = 50e3


# Fog sites per fog-node count, chosen once to spread coverage over the grid.
FOG_SITES: dict[int, tuple[tuple[int, int], ...]] = {
    1: ((1, 1),),
    2: ((0, 0), (3, 3)),
    3: ((0, 0), (3, 1), (1, 3)),
    4: ((0, 0), (3, 0), (0, 3), (3, 3)),
    5: ((0, 0), (3, 0), (0, 3), (3, 3), (1, 1)),
    6: ((0, 0), (3, 0), (0, 3), (3, 3), (1, 1), (2, 2)),
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    fog_sites: tuple[tuple[int, int], ...]
    strategy: str
    sleep_enabled: bool = False


EXPERIMENTS: dict[str, ExperimentSpec] = {
    "CloudOnly": ExperimentSpec("CloudOnly", (), "cloud-only"),
    "Fog1": ExperimentSpec("Fog1", FOG_SITES[1], "even-spread"),
    "Fog2": ExperimentSpec("Fog2", FOG_SITES[2], "even-spread"),
    "Fog3": ExperimentSpec("Fog3", FOG_SITES[3], "even-spread"),
    "Fog4": ExperimentSpec("Fog4", FOG_SITES[4], "even-spread"),
    "Fog5": ExperimentSpec("Fog5", FOG_SITES[5], "even-spread"),
    "Fog6": ExperimentSpec("Fog6", FOG_SITES[6], "even-spread"),
    "Fog6s": ExperimentSpec("Fog6s", FOG_SITES[6], "consolidate", sleep_enabled=True),
}
EXPERIMENT_ORDER = ("CloudOnly", "Fog1", "Fog2", "Fog3", "Fog4", "Fog5", "Fog6", "Fog6s")

CLOUD_ID = "cloud"
MINUTES_PER_DAY = 1440


class CityGrid:
    """Rectangular street grid; crossings are indexed (col, row)."""

    def __init__(self, cols: int = GRID_COLS, rows: int = GRID_ROWS,
                 block_w: float = BLOCK_WIDTH_M, block_h: float = BLOCK_HEIGHT_M):
        self.cols = cols
        self.rows = rows
        self.block_w = block_w
        self.block_h = block_h

    def crossings(self) -> list[tuple[int, int]]:
        return [(c, r) for c in range(self.cols) for r in range(self.rows)]

    def border_crossings(self) -> list[tuple[int, int]]:
        return [(c, r) for c, r in self.crossings()
                if c in (0, self.cols - 1) or r in (0, self.rows - 1)]

    def position(self, col: int, row: int) -> tuple[float, float]:
        return (col * self.block_w, row * self.block_h)

    def stl_id(self, col: int, row: int) -> str:
        return f"stl_{col}{row}"

    def _nearest_index(self, coord: float, block: float, count: int) -> int:
        lo = min(max(int(coord // block), 0), count - 1)
        hi = min(lo + 1, count - 1)
        # tie at the exact midpoint goes to the smaller index (smaller STL id)
        if abs(coord - hi * block) < abs(coord - lo * block):
            return hi
        return lo

    def nearest_crossing(self, x: float, y: float) -> tuple[int, int]:
        return (self._nearest_index(x, self.block_w, self.cols),
                self._nearest_index(y, self.block_h, self.rows))

    def route(self, entry: tuple[int, int], exit_: tuple[int, int]
              ) -> tuple[list[tuple[float, float]], list[tuple[int, int]]]:
        """Column-first rectilinear path: (polyline points, crossings visited)."""
        (c0, r0), (c1, r1) = entry, exit_
        points = [self.position(c0, r0)]
        if c1 != c0:
            points.append(self.position(c1, r0))
        if r1 != r0:
            points.append(self.position(c1, r1))
        crossings = []
        step_c = 1 if c1 >= c0 else -1
        for c in range(c0, c1 + step_c, step_c):
            crossings.append((c, r0))
        step_r = 1 if r1 >= r0 else -1
        for r in range(r0, r1 + step_r, step_r):
            if (c1, r) != crossings[-1]:
                crossings.append((c1, r))
        return points, crossings


@dataclass
class TaxiProfile:
    """Per-minute arrival counts and driving speeds over 24 hours."""

    counts: list[int]
    speeds_mps: list[float]

    def __post_init__(self):
        if len(self.counts) != MINUTES_PER_DAY or len(self.speeds_mps) != MINUTES_PER_DAY:
            raise ValueError(f"profile needs {MINUTES_PER_DAY} minute entries")
        if any(c < 0 for c in self.counts):
            raise ValueError("arrival counts must be non-negative")
        if any(s <= 0 for s in self.speeds_mps):
            raise ValueError("speeds must be positive")

    @classmethod
    def two_peak_day(cls, total_spawns: int = 46500) -> "TaxiProfile":
        """Synthetic demand curve: night minimum, morning and evening peaks."""
        shape = [0.22
                 + 0.95 * math.exp(-(((m - 510) / 110.0) ** 2))
                 + 1.00 * math.exp(-(((m - 1080) / 140.0) ** 2))
                 for m in range(MINUTES_PER_DAY)]
        scale = total_spawns / sum(shape)
        counts = [round(scale * s) for s in shape]
        lo, hi = min(shape), max(shape)
        speeds = [8.0 - 4.2 * (s - lo) / (hi - lo) for s in shape]
        return cls(counts, speeds)

    @classmethod
    def zero(cls) -> "TaxiProfile":
        return cls([0] * MINUTES_PER_DAY, [5.0] * MINUTES_PER_DAY)

    def scaled(self, factor: float) -> "TaxiProfile":
        return TaxiProfile([round(c * factor) for c in self.counts],
                           list(self.speeds_mps))

    @property
    def total_spawns(self) -> int:
        return sum(self.counts)

    @classmethod
    def from_csv(cls, path) -> "TaxiProfile":
        counts = [0] * MINUTES_PER_DAY
        speeds = [5.0] * MINUTES_PER_DAY
        with open(path, newline="") as handle:
            header = handle.readline().strip()
            if header != "minute,count,speed_mps":
                raise ValueError(f"unexpected taxi-profile header: '{header}'")
            rows = 0
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                minute_s, count_s, speed_s = line.split(",")
                minute = int(minute_s)
                if not 0 <= minute < MINUTES_PER_DAY:
                    raise ValueError(f"minute {minute} out of range")
                counts[minute] = int(count_s)
                speeds[minute] = float(speed_s)
                rows += 1
        if rows != MINUTES_PER_DAY:
            raise ValueError(f"taxi profile has {rows} rows, expected {MINUTES_PER_DAY}")
        return cls(counts, speeds)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as handle:
            handle.write("minute,count,speed_mps\n")
            for minute in range(MINUTES_PER_DAY):
                handle.write(f"{minute},{self.counts[minute]},{self.speeds_mps[minute]:.6g}\n")


# -- infrastructure -------------------------------------------------------------


def fog_id(col: int, row: int) -> str:
    return f"fog_{col}{row}"


def build_infrastructure(spec: ExperimentSpec,
                         params: ScenarioParams = ScenarioParams(),
                         grid: Optional[CityGrid] = None) -> Infrastructure:
    """Cloud + STL mesh + WAN up/downlinks + the experiment's fog nodes.

    STL and taxi nodes carry no power model: their load is identical across
    experiments. Fog nodes attach to their crossing's STL through free local
    links.
    """
    grid = grid or CityGrid()
    infra = Infrastructure()
    infra.add_node(ComputeNode(CLOUD_ID, capacity=math.inf,
                               power_model=SharedPowerModel(params.cloud_sigma_w_per_mips)))
    for col, row in grid.crossings():
        stl = grid.stl_id(col, row)
        infra.add_node(ComputeNode(stl, capacity=0.0, location=grid.position(col, row)))
        infra.add_link(NetworkLink(
            f"wan_up_{stl}", stl, CLOUD_ID,
            bandwidth=params.wan_up_bandwidth_bps, latency=WAN_LATENCY_S,
            power_model=LinkPowerModel(params.wan_up_sigma_j_per_bit)))
        infra.add_link(NetworkLink(
            f"wan_down_{stl}", CLOUD_ID, stl,
            bandwidth=params.wan_down_bandwidth_bps, latency=WAN_LATENCY_S,
            power_model=LinkPowerModel(params.wan_down_sigma_j_per_bit)))
    for col, row in grid.crossings():
        stl = grid.stl_id(col, row)
        for dc, dr in ((1, 0), (0, 1)):
            nc, nr = col + dc, row + dr
            if nc >= grid.cols or nr >= grid.rows:
                continue
            other = grid.stl_id(nc, nr)
            for a, b in ((stl, other), (other, stl)):
                infra.add_link(NetworkLink(
                    f"mesh_{a}__{b}", a, b,
                    bandwidth=params.wifi_mesh_bandwidth_bps, latency=MESH_LATENCY_S,
                    power_model=LinkPowerModel(params.wifi_mesh_sigma_j_per_bit)))
    for col, row in spec.fog_sites:
        stl = grid.stl_id(col, row)
        node_id = fog_id(col, row)
        model = LinearPowerModel(p_static=params.fog_static_w,
                                 sigma=params.fog_sigma_w_per_mips,
                                 c_max=params.fog_capacity_mips)
        if spec.sleep_enabled:
            model = StatefulPowerModel(model, idle_timeout=params.idle_timeout_s)
        infra.add_node(ComputeNode(node_id, capacity=params.fog_capacity_mips,
                                   location=grid.position(col, row), power_model=model))
        infra.add_link(NetworkLink(f"local_{stl}__{node_id}", stl, node_id,
                                   latency=LOCAL_LATENCY_S))
        infra.add_link(NetworkLink(f"local_{node_id}__{stl}", node_id, stl,
                                   latency=LOCAL_LATENCY_S))
    return infra


def classify_node(node: ComputeNode) -> str:
    nid = node.id
    if nid == CLOUD_ID:
        return "cloud"
    if nid.startswith("fog_"):
        return "fog"
    if nid.startswith("stl_"):
        return "stl"
    if nid.startswith("taxi_"):
        return "taxi"
    return "node"


def classify_link(link: NetworkLink) -> str:
    lid = link.id
    if lid.startswith("wan_up_"):
        return "wan_up"
    if lid.startswith("wan_down_"):
        return "wan_down"
    if lid.startswith("mesh_"):
        return "wifi_mesh"
    if lid.startswith("wifi_"):
        return "wifi_taxi"
    if lid.startswith("local_"):
        return "local"
    return "link"


def classify_app(app_id: str) -> str:
    if app_id.startswith("cctv_"):
        return "cctv"
    if app_id.startswith("v2i_"):
        return "v2i"
    return "app"


# -- applications ----------------------------------------------------------------


def build_cctv_app(stl_id: str, params: ScenarioParams = ScenarioParams()) -> Application:
    """Camera feed at an STL, analytics on a strategy-chosen node, results
    archived in the cloud."""
    app = Application(f"cctv_{stl_id}")
    app.add_source(f"{app.id}.src", bound_node=stl_id)
    app.add_processing(f"{app.id}.proc", mips=params.cctv_mips)
    app.add_sink(f"{app.id}.sink", bound_node=CLOUD_ID)
    app.connect(f"{app.id}.src", f"{app.id}.proc", params.cctv_video_bps,
                flow_id=f"{app.id}.video")
    app.connect(f"{app.id}.proc", f"{app.id}.sink", params.cctv_result_bps,
                flow_id=f"{app.id}.result")
    return app


def build_v2i_app(taxi_id: str, route_stls: list[str],
                  params: ScenarioParams = ScenarioParams()) -> Application:
    """Sensor stream from a taxi to a processing task that feeds every STL on
    the taxi's route."""
    app = Application(f"v2i_{taxi_id}")
    app.add_source(f"{app.id}.src", bound_node=taxi_id)
    app.add_processing(f"{app.id}.proc", mips=params.v2i_mips)
    app.connect(f"{app.id}.src", f"{app.id}.proc", params.v2i_sensor_bps,
                flow_id=f"{app.id}.sensor")
    for stl in route_stls:
        app.add_sink(f"{app.id}.to_{stl}", bound_node=stl)
        app.connect(f"{app.id}.proc", f"{app.id}.to_{stl}", params.v2i_output_bps,
                    flow_id=f"{app.id}.out_{stl}")
    return app


def spawn_cctv_apps(config: Configuration, strategy, routing: RoutingPolicy = DEFAULT_ROUTING,
                    params: ScenarioParams = ScenarioParams(),
                    grid: Optional[CityGrid] = None,
                    accountant: Optional[PowerAccountant] = None) -> list[Placement]:
    """Build and place one camera-analytics app per STL."""
    grid = grid or CityGrid()
    placements = []
    for col, row in grid.crossings():
        app = build_cctv_app(grid.stl_id(col, row), params)
        placement = place(app, config.infrastructure, strategy, routing)
        config.applications[app.id] = app
        config.placements[app.id] = placement
        if accountant is not None:
            accountant.register(config.infrastructure, placement)
        placements.append(placement)
    return placements


# -- taxis ------------------------------------------------------------------------


@dataclass
class Taxi:
    id: str
    spawn_s: int
    speed_mps: float
    points: list[tuple[float, float]]
    route_stls: list[str]
    despawn_s: int
    transitions: list[tuple[int, str]]  # (second, new nearest STL)
    nearest_stl: str
    link_id: str = ""
    app_id: Optional[str] = None

    def position(self, t: float) -> tuple[float, float]:
        dist = max(0.0, (t - self.spawn_s) * self.speed_mps)
        points = self.points
        for a, b in zip(points, points[1:]):
            seg = math.hypot(b[0] - a[0], b[1] - a[1])
            if dist <= seg:
                frac = dist / seg if seg else 0.0
                return (a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1]))
            dist -= seg
        return points[-1]


def _nearest_stl_transitions(grid: CityGrid, taxi: Taxi) -> list[tuple[int, str]]:
    """Integer seconds at which a per-second scan of the taxi position first
    sees a new nearest STL.

    Candidate times come from the route's midline crossings; each is then
    snapped to the first integer second at which `nearest_crossing` actually
    reports the new STL, so the result is identical to scanning every second.
    """
    out = []
    travelled = 0.0
    for a, b in zip(taxi.points, taxi.points[1:]):
        horizontal = a[1] == b[1]
        if horizontal:
            block, count = grid.block_w, grid.cols
            p_from, p_to = a[0], b[0]
            fixed = grid._nearest_index(a[1], grid.block_h, grid.rows)
        else:
            block, count = grid.block_h, grid.rows
            p_from, p_to = a[1], b[1]
            fixed = grid._nearest_index(a[0], grid.block_w, grid.cols)
        i_from = grid._nearest_index(p_from, block, count)
        i_to = grid._nearest_index(p_to, block, count)
        step = 1 if i_to >= i_from else -1
        for idx in range(i_from + step, i_to + step, step):
            want = (idx, fixed) if horizontal else (fixed, idx)
            boundary = (idx + idx - step) / 2.0 * block
            t_cross = taxi.spawn_s + (travelled + abs(boundary - p_from)) / taxi.speed_mps
            sec = math.floor(t_cross)
            while (sec <= taxi.despawn_s
                   and grid.nearest_crossing(*taxi.position(sec)) != want):
                sec += 1
            if sec < taxi.despawn_s:
                out.append((sec, grid.stl_id(*want)))
        travelled += abs(p_to - p_from)
    return out


class TrafficManager:
    """Spawns, moves and despawns taxis and their streaming apps.

    Movement is processed at 1-second steps: per-taxi action seconds
    (nearest-STL handover, route end) are precomputed at spawn time and kept
    in per-second buckets, which is equivalent to scanning every taxi every
    second but linear in the number of actual changes.
    """

    def __init__(self, grid: CityGrid, profile: TaxiProfile, params: ScenarioParams,
                 strategy, routing: RoutingPolicy, seed,
                 accountant: Optional[PowerAccountant] = None):
        self.grid = grid
        self.profile = profile
        self.params = params
        self.strategy = strategy
        self.routing = routing
        self.accountant = accountant
        self.rng = random.Random(seed)
        self.taxis: dict[str, Taxi] = {}
        self.buckets: dict[int, list[tuple[str, str, str]]] = {}
        self.spawned = 0
        self.despawned = 0
        self.skipped = 0  # V2I placements that failed at spawn
        self.dropped = 0  # V2I apps unplaced after losing their route
        self._minute_spawn_seconds: dict[int, dict[int, int]] = {}

    # bucket actions: ("move", taxi_id, new_stl) and ("end", taxi_id, "")

    def step(self, config: Configuration, t: float) -> None:
        sec = int(t)
        for action, taxi_id, arg in self.buckets.pop(sec, ()):
            taxi = self.taxis.get(taxi_id)
            if taxi is None:
                continue
            if action == "move":
                self._handover(config, taxi, arg, sec)
            else:
                self._despawn(config, taxi)
        minute = sec // 60
        if minute < MINUTES_PER_DAY:
            for _ in range(self._spawns_at(minute, sec - minute * 60)):
                self._spawn(config, sec, minute)

    def _spawns_at(self, minute: int, second_in_minute: int) -> int:
        sched = self._minute_spawn_seconds.get(minute)
        if sched is None:
            count = self.profile.counts[minute]
            sched = {}
            for i in range(count):
                s = (i * 60) // count
                sched[s] = sched.get(s, 0) + 1
            self._minute_spawn_seconds[minute] = sched
        return sched.get(second_in_minute, 0)

    def _spawn(self, config: Configuration, sec: int, minute: int) -> None:
        grid = self.grid
        infra = config.infrastructure
        entry, exit_ = self.rng.sample(grid.border_crossings(), 2)
        speed = self.profile.speeds_mps[minute]
        points, crossings = grid.route(entry, exit_)
        route_stls = [grid.stl_id(c, r) for c, r in crossings]
        length = sum(math.hypot(b[0] - a[0], b[1] - a[1])
                     for a, b in zip(points, points[1:]))
        taxi_id = f"taxi_{self.spawned:06d}"
        taxi = Taxi(id=taxi_id, spawn_s=sec, speed_mps=speed, points=points,
                    route_stls=route_stls,
                    despawn_s=sec + math.ceil(length / speed),
                    transitions=[], nearest_stl=route_stls[0])
        taxi.transitions = _nearest_stl_transitions(grid, taxi)
        self.spawned += 1

        infra.add_node(ComputeNode(taxi_id, capacity=0.0, location=points[0], mobile=True))
        taxi.link_id = self._wifi_link(infra, taxi_id, taxi.nearest_stl)

        app = build_v2i_app(taxi_id, route_stls, self.params)
        try:
            placement = place(app, infra, self.strategy, self.routing)
        except PlacementError:
            self.skipped += 1
        else:
            taxi.app_id = app.id
            config.applications[app.id] = app
            config.placements[app.id] = placement
            if self.accountant is not None:
                self.accountant.register(infra, placement)

        for when, stl in taxi.transitions:
            self.buckets.setdefault(when, []).append(("move", taxi_id, stl))
        self.buckets.setdefault(taxi.despawn_s, []).append(("end", taxi_id, ""))
        self.taxis[taxi_id] = taxi

    def _wifi_link(self, infra: Infrastructure, taxi_id: str, stl: str) -> str:
        link_id = f"wifi_{taxi_id}__{stl}"
        infra.add_link(NetworkLink(
            link_id, taxi_id, stl,
            bandwidth=self.params.wifi_taxi_bandwidth_bps, latency=WIFI_LATENCY_S,
            power_model=LinkPowerModel(self.params.wifi_taxi_sigma_j_per_bit)))
        return link_id

    def _handover(self, config: Configuration, taxi: Taxi, new_stl: str, sec: int) -> None:
        if new_stl == taxi.nearest_stl:
            return
        infra = config.infrastructure
        old_link = taxi.link_id
        taxi.link_id = self._wifi_link(infra, taxi.id, new_stl)
        taxi.nearest_stl = new_stl
        infra.update_node(taxi.id, location=taxi.position(sec))
        if taxi.app_id is not None:
            placement = config.placements[taxi.app_id]
            sensor_flow = f"{taxi.app_id}.sensor"
            try:
                reroute(placement, infra, self.routing,
                        flow_ids=[sensor_flow], forbidden={old_link})
            except NoFeasiblePath:
                self._drop_app(config, taxi)
            else:
                if self.accountant is not None:
                    self.accountant.replaced(infra, placement)
        infra.remove_link(old_link)

    def _drop_app(self, config: Configuration, taxi: Taxi) -> None:
        placement = config.placements.pop(taxi.app_id)
        if self.accountant is not None:
            self.accountant.unregister(placement)
        unplace(placement, config.infrastructure)
        del config.applications[taxi.app_id]
        taxi.app_id = None
        self.dropped += 1

    def _despawn(self, config: Configuration, taxi: Taxi) -> None:
        infra = config.infrastructure
        if taxi.app_id is not None:
            placement = config.placements.pop(taxi.app_id)
            if self.accountant is not None:
                self.accountant.unregister(placement)
            unplace(placement, infra)
            del config.applications[taxi.app_id]
        infra.remove_link(taxi.link_id)
        infra.remove_node(taxi.id)
        del self.taxis[taxi.id]
        self.despawned += 1


# -- experiment runner ---------------------------------------------------------------


def run_experiment(spec: ExperimentSpec, *,
                   params: ScenarioParams = ScenarioParams(),
                   profile: Optional[TaxiProfile] = None,
                   duration_s: float = 86400.0,
                   probe_period_s: float = 1.0,
                   seed: int = 42,
                   attribution: str = FULL,
                   out_dir: Optional[str] = None) -> RunResult:
    """Simulate one experiment and stream its artifacts.

    24 hours at 1-second steps by default; CSV files are only written when
    out_dir is given. Deterministic for a fixed (spec, params, profile, seed).
    """
    if profile is None:
        profile = TaxiProfile.two_peak_day()
    grid = CityGrid()
    infra = build_infrastructure(spec, params, grid)
    config = Configuration(infra)
    sim = Simulator(configuration=config)
    strategy = make_strategy(spec.strategy, params.utilization_cap)
    routing = DEFAULT_ROUTING
    accountant = PowerAccountant(mode=attribution, node_class=classify_node,
                                 link_class=classify_link, app_class=classify_app)
    spawn_cctv_apps(config, strategy, routing, params, grid, accountant)

    traffic = TrafficManager(grid, profile, params, strategy, routing,
                             seed=f"{seed}:{spec.name}", accountant=accountant)

    def traffic_step(live_config, t=0.0):
        traffic.step(live_config, t)
        if t + 1.0 <= duration_s:
            sim.schedule(t + 1.0, lambda cfg: traffic_step(cfg, t + 1.0), name="traffic")

    sim.schedule(0.0, lambda cfg: traffic_step(cfg, 0.0), name="traffic")

    result = RunResult(experiment=spec.name, duration_s=duration_s,
                       probe_period_s=probe_period_s, seed=seed,
                       attribution=attribution, out_dir=out_dir)
    collector = RunCollector(accountant, result, out_dir)
    sim.add_probe(probe_period_s, collector.collect, mode=attribution,
                  measurer=accountant.refresh)

    started = _time.perf_counter()
    sim.run_until(duration_s)
    result.runtime_s = _time.perf_counter() - started

    collector.close()
    result.taxis_spawned = traffic.spawned
    result.taxis_despawned = traffic.despawned
    result.placements_skipped = traffic.skipped
    result.placements_dropped = traffic.dropped
    if out_dir is not None:
        write_summary(out_dir, summarize(result))
    return result
