import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from fogsim.application import Application
from fogsim.infrastructure import ComputeNode, Infrastructure, NetworkLink
from fogsim.orchestration import (CloudOnlyStrategy, ConsolidateStrategy,
                                  DEFAULT_ROUTING, EvenSpreadStrategy,
                                  NoFeasibleNode, NoFeasiblePath,
                                  PlacementError, RoutingPolicy, make_strategy,
                                  place, reroute, shortest_path, unplace)
from fogsim.power import StatefulPowerModel, LinearPowerModel
from fogsim.scenario import CityGrid, ExperimentSpec, build_infrastructure


def brute_force_shortest(infra, src, dst, rate, weight=lambda l: l.latency):
    """Oracle: enumerate all simple paths and apply the same tie-breaks."""
    best = None
    def walk(node, visited, path, total):
        nonlocal best
        if node == dst:
            key = (total, len(path), tuple(path))
            if best is None or key < best:
                best = key
            return
        for link in infra.out_links(node):
            if link.dst in visited or link.bandwidth - link.used < rate:
                continue
            walk(link.dst, visited | {link.dst}, path + [link.id], total + weight(link))
    walk(src, {src}, [], 0.0)
    return None if best is None else list(best[2])


def simple_app(mips=10.0, rate=5.0, n_proc=1, src_node="s", dst_node="t"):
    app = Application("app")
    app.add_source("app.src", bound_node=src_node)
    previous = "app.src"
    for i in range(n_proc):
        app.add_processing(f"app.p{i}", mips=mips)
        app.connect(previous, f"app.p{i}", rate, flow_id=f"app.f{i}")
        previous = f"app.p{i}"
    app.add_sink("app.zz_sink", bound_node=dst_node)
    app.connect(previous, "app.zz_sink", rate, flow_id="app.f_last")
    return app


def star_infra(n_fogs, fog_capacity=100.0, cloud=True, bandwidth=1e9):
    """Endpoints s and t plus fog nodes, all interconnected through a hub."""
    infra = Infrastructure()
    infra.add_node(ComputeNode("s", capacity=0.0))
    infra.add_node(ComputeNode("t", capacity=0.0))
    infra.add_node(ComputeNode("hub", capacity=0.0))
    names = []
    for i in range(n_fogs):
        name = f"fog{i}"
        infra.add_node(ComputeNode(name, capacity=fog_capacity))
        names.append(name)
    if cloud:
        infra.add_node(ComputeNode("cloud", capacity=math.inf))
        names.append("cloud")
    for name in ["s", "t"] + names:
        infra.add_link(NetworkLink(f"{name}_out", name, "hub", bandwidth=bandwidth, latency=1.0))
        infra.add_link(NetworkLink(f"{name}_in", "hub", name, bandwidth=bandwidth, latency=1.0))
    return infra


class TestShortestPath:
    def test_same_node_is_empty_path(self):
        infra = star_infra(1)
        assert shortest_path(infra, "s", "s", 1.0) == []

    def test_three_node_line(self):
        infra = Infrastructure()
        for n in ("a", "b", "c"):
            infra.add_node(ComputeNode(n))
        infra.add_link(NetworkLink("ab", "a", "b", latency=1.0))
        infra.add_link(NetworkLink("bc", "b", "c", latency=1.0))
        assert shortest_path(infra, "a", "c", 0.0) == ["ab", "bc"]

    def test_no_route(self):
        infra = Infrastructure()
        infra.add_node(ComputeNode("a"))
        infra.add_node(ComputeNode("b"))
        assert shortest_path(infra, "a", "b", 1.0) is None

    def test_headroom_filtering(self):
        infra = Infrastructure()
        for n in ("a", "b"):
            infra.add_node(ComputeNode(n))
        infra.add_link(NetworkLink("narrow", "a", "b", bandwidth=5.0, latency=1.0))
        infra.add_link(NetworkLink("wide", "a", "b", bandwidth=50.0, latency=2.0))
        assert shortest_path(infra, "a", "b", 1.0) == ["narrow"]
        assert shortest_path(infra, "a", "b", 10.0) == ["wide"]
        assert shortest_path(infra, "a", "b", 100.0) is None

    def test_deterministic_tie_break_on_parallel_links(self):
        infra = Infrastructure()
        for n in ("a", "b"):
            infra.add_node(ComputeNode(n))
        infra.add_link(NetworkLink("zebra", "a", "b", latency=1.0))
        infra.add_link(NetworkLink("alpha", "a", "b", latency=1.0))
        assert shortest_path(infra, "a", "b", 0.0) == ["alpha"]

    def test_fewer_hops_wins_at_equal_weight(self):
        infra = Infrastructure()
        for n in ("a", "m", "b"):
            infra.add_node(ComputeNode(n))
        infra.add_link(NetworkLink("direct", "a", "b", latency=2.0))
        infra.add_link(NetworkLink("via1", "a", "m", latency=1.0))
        infra.add_link(NetworkLink("via2", "m", "b", latency=1.0))
        assert shortest_path(infra, "a", "b", 0.0) == ["direct"]

    def test_forbidden_links_excluded(self):
        infra = Infrastructure()
        for n in ("a", "b"):
            infra.add_node(ComputeNode(n))
        infra.add_link(NetworkLink("l1", "a", "b", latency=1.0))
        infra.add_link(NetworkLink("l2", "a", "b", latency=2.0))
        assert shortest_path(infra, "a", "b", 0.0, forbidden={"l1"}) == ["l2"]

    def test_city_grid_against_brute_force(self):
        """Taxi at a corner: one Wi-Fi hop then the WAN uplink must win."""
        spec = ExperimentSpec("probe", (), "cloud-only")
        infra = build_infrastructure(spec)
        grid = CityGrid()
        infra.add_node(ComputeNode("taxi_000000", capacity=0.0,
                                   location=grid.position(0, 0), mobile=True))
        infra.add_link(NetworkLink("wifi_taxi_000000__stl_00", "taxi_000000", "stl_00",
                                   bandwidth=1.3e9, latency=0.005))
        got = shortest_path(infra, "taxi_000000", "cloud", 100e3)
        oracle = brute_force_shortest(infra, "taxi_000000", "cloud", 100e3)
        assert got == oracle == ["wifi_taxi_000000__stl_00", "wan_up_stl_00"]

    def test_random_graphs_against_brute_force(self):
        rng = random.Random(7)
        for trial in range(30):
            infra = Infrastructure()
            n = rng.randint(2, 6)
            for i in range(n):
                infra.add_node(ComputeNode(f"n{i}"))
            for i in range(n):
                for j in range(n):
                    if i != j and rng.random() < 0.5:
                        infra.add_link(NetworkLink(
                            f"e{i}_{j}", f"n{i}", f"n{j}",
                            bandwidth=rng.choice([1.0, 10.0]),
                            latency=rng.choice([1.0, 2.0, 3.0])))
            rate = rng.choice([0.5, 5.0])
            got = shortest_path(infra, "n0", f"n{n - 1}", rate)
            oracle = brute_force_shortest(infra, "n0", f"n{n - 1}", rate)
            assert got == oracle, f"trial {trial}"


class TestStrategies:
    def test_cloud_only_picks_unbounded_node(self):
        infra = star_infra(3)
        placement = place(simple_app(), infra, CloudOnlyStrategy())
        assert placement.task_map["app.p0"] == "cloud"

    def test_even_spread_tie_breaks_lexicographically(self):
        infra = star_infra(2)
        placement = place(simple_app(), infra, EvenSpreadStrategy())
        assert placement.task_map["app.p0"] == "fog0"

    def test_even_spread_prefers_least_utilized(self):
        infra = star_infra(2)
        infra.reserve_node("fog0", 50.0)
        placement = place(simple_app(), infra, EvenSpreadStrategy())
        assert placement.task_map["app.p0"] == "fog1"

    def test_even_spread_offloads_past_cap(self):
        infra = star_infra(1, fog_capacity=100.0)
        infra.reserve_node("fog0", 80.0)
        placement = place(simple_app(mips=10.0), infra, EvenSpreadStrategy(cap=0.85))
        assert placement.task_map["app.p0"] == "cloud"  # 90 > 85

    def test_no_feasible_node_without_cloud(self):
        infra = star_infra(2, fog_capacity=100.0, cloud=False)
        infra.reserve_node("fog0", 85.0)
        infra.reserve_node("fog1", 85.0)
        with pytest.raises(NoFeasibleNode, match="app.p0"):
            place(simple_app(mips=30.0), infra, EvenSpreadStrategy(cap=0.85))

    def test_consolidate_packs_fullest_first(self):
        infra = star_infra(2)
        infra.reserve_node("fog1", 50.0)
        placement = place(simple_app(mips=10.0), infra, ConsolidateStrategy())
        assert placement.task_map["app.p0"] == "fog1"

    def test_consolidate_wakes_sleeping_node_only_when_needed(self):
        infra = star_infra(2, fog_capacity=100.0)
        sleeper = StatefulPowerModel(LinearPowerModel(p_static=10.0, sigma=0.1), 5.0)
        sleeper.measure(0.0, 0.0)
        sleeper.measure(0.0, 5.0)
        assert sleeper.asleep
        infra.update_node("fog1", power_model=sleeper)
        infra.reserve_node("fog0", 80.0)
        p1 = place(simple_app(mips=5.0), infra, ConsolidateStrategy(cap=0.85))
        assert p1.task_map["app.p0"] == "fog0"  # fits on the awake node
        assert sleeper.asleep
        app2 = simple_app(mips=30.0)
        app2.id = "app2"
        p2 = place(app2, infra, ConsolidateStrategy(cap=0.85))
        assert p2.task_map["app.p0"] == "fog1"
        assert not sleeper.asleep  # placement woke it

    def test_make_strategy(self):
        assert isinstance(make_strategy("cloud-only"), CloudOnlyStrategy)
        assert isinstance(make_strategy("even-spread", 0.5), EvenSpreadStrategy)
        assert isinstance(make_strategy("consolidate"), ConsolidateStrategy)
        with pytest.raises(ValueError):
            make_strategy("optimal")


class TestPlaceLifecycle:
    def test_invalid_app_rejected(self):
        app = Application("broken")
        app.add_source("s", bound_node="s")
        infra = star_infra(1)
        with pytest.raises(PlacementError, match="invalid"):
            place(app, infra, CloudOnlyStrategy())

    def test_placement_reserves_everything(self):
        infra = star_infra(1)
        placement = place(simple_app(mips=10.0, rate=5.0), infra, EvenSpreadStrategy())
        assert infra.node("fog0").used == 10.0
        for path in placement.flow_map.values():
            for link_id in path:
                assert infra.link(link_id).used >= 5.0

    def test_unplace_round_trip_bit_identical(self):
        infra = star_infra(2)
        before_nodes = {nid: n.used for nid, n in infra.nodes.items()}
        before_links = {lid: l.used for lid, l in infra.links.items()}
        placement = place(simple_app(), infra, EvenSpreadStrategy())
        unplace(placement, infra)
        assert {nid: n.used for nid, n in infra.nodes.items()} == before_nodes
        assert {lid: l.used for lid, l in infra.links.items()} == before_links

    def test_unplace_twice_fails(self):
        infra = star_infra(1)
        placement = place(simple_app(), infra, EvenSpreadStrategy())
        unplace(placement, infra)
        with pytest.raises(PlacementError):
            unplace(placement, infra)

    def test_failed_route_rolls_back_node_reservations(self):
        infra = star_infra(1, bandwidth=1.0)  # links too narrow for rate 5
        with pytest.raises(NoFeasiblePath):
            place(simple_app(mips=10.0, rate=5.0), infra, EvenSpreadStrategy())
        assert infra.node("fog0").used == 0.0
        assert all(l.used == 0.0 for l in infra.links.values())


class TestReroute:
    def grid_with_taxi(self, stl="stl_00"):
        infra = build_infrastructure(ExperimentSpec("t", ((0, 0),), "even-spread"))
        infra.add_node(ComputeNode("taxi_000000", capacity=0.0, mobile=True))
        infra.add_link(NetworkLink(f"wifi_taxi_000000__{stl}", "taxi_000000", stl,
                                   bandwidth=1.3e9, latency=0.005))
        return infra

    def v2i_like_app(self):
        app = Application("v2i_taxi_000000")
        app.add_source(f"{app.id}.src", bound_node="taxi_000000")
        app.add_processing(f"{app.id}.proc", mips=7000.0)
        app.add_sink(f"{app.id}.to_stl_10", bound_node="stl_10")
        app.connect(f"{app.id}.src", f"{app.id}.proc", 100e3, flow_id=f"{app.id}.sensor")
        app.connect(f"{app.id}.proc", f"{app.id}.to_stl_10", 50e3, flow_id=f"{app.id}.out")
        return app

    def test_handover_changes_first_hop(self):
        infra = self.grid_with_taxi()
        app = self.v2i_like_app()
        placement = place(app, infra, EvenSpreadStrategy())
        sensor = f"{app.id}.sensor"
        assert placement.flow_map[sensor][0] == "wifi_taxi_000000__stl_00"
        old_link = "wifi_taxi_000000__stl_00"
        infra.add_link(NetworkLink("wifi_taxi_000000__stl_10", "taxi_000000", "stl_10",
                                   bandwidth=1.3e9, latency=0.005))
        reroute(placement, infra, flow_ids=[sensor], forbidden={old_link})
        assert placement.flow_map[sensor][0] == "wifi_taxi_000000__stl_10"
        assert infra.link(old_link).used == 0.0
        infra.remove_link(old_link)

    def test_no_topology_change_is_idempotent(self):
        infra = self.grid_with_taxi()
        app = self.v2i_like_app()
        placement = place(app, infra, EvenSpreadStrategy())
        paths_before = {fid: list(p) for fid, p in placement.flow_map.items()}
        usage_before = {lid: l.used for lid, l in infra.links.items()}
        reroute(placement, infra)
        assert placement.flow_map == paths_before
        assert {lid: l.used for lid, l in infra.links.items()} == usage_before

    def test_isolated_taxi_reverts_and_raises(self):
        infra = self.grid_with_taxi()
        app = self.v2i_like_app()
        placement = place(app, infra, EvenSpreadStrategy())
        sensor = f"{app.id}.sensor"
        old_paths = {fid: list(p) for fid, p in placement.flow_map.items()}
        usage = {lid: l.used for lid, l in infra.links.items()}
        with pytest.raises(NoFeasiblePath):
            reroute(placement, infra, flow_ids=[sensor],
                    forbidden={"wifi_taxi_000000__stl_00"})
        assert placement.flow_map == old_paths
        assert {lid: l.used for lid, l in infra.links.items()} == usage

    def test_reroute_unknown_flow(self):
        infra = self.grid_with_taxi()
        placement = place(self.v2i_like_app(), infra, EvenSpreadStrategy())
        with pytest.raises(PlacementError):
            reroute(placement, infra, flow_ids=["ghost"])


class TestDeterminism:
    def test_identical_inputs_identical_placements(self):
        outcomes = []
        for _ in range(2):
            infra = star_infra(3)
            infra.reserve_node("fog1", 40.0)
            placement = place(simple_app(n_proc=2), infra, EvenSpreadStrategy())
            outcomes.append((dict(placement.task_map),
                             {f: list(p) for f, p in placement.flow_map.items()}))
        assert outcomes[0] == outcomes[1]


class TestConsolidationOptimality:
    def brute_force_min_nodes(self, capacities, cap, tasks):
        """Smallest number of nodes over all feasible assignments."""
        best = None
        for combo in itertools.product(range(len(capacities)), repeat=len(tasks)):
            load = [0.0] * len(capacities)
            for task, node in zip(tasks, combo):
                load[node] += task
            if any(l > cap * c for l, c in zip(load, capacities)):
                continue
            used = sum(1 for l in load if l > 0)
            best = used if best is None else min(best, used)
        return best

    def test_matches_exhaustive_search_at_desk_scale(self):
        rng = random.Random(11)
        cap = 0.85
        for trial in range(40):
            n_nodes = rng.randint(1, 3)
            n_tasks = rng.randint(1, 6)
            capacities = [rng.choice([50.0, 100.0, 150.0]) for _ in range(n_nodes)]
            tasks = [rng.choice([10.0, 20.0, 30.0, 40.0]) for _ in range(n_tasks)]
            oracle = self.brute_force_min_nodes(capacities, cap, tasks)

            infra = Infrastructure()
            infra.add_node(ComputeNode("s", capacity=0.0))
            infra.add_node(ComputeNode("t", capacity=0.0))
            infra.add_node(ComputeNode("hub", capacity=0.0))
            for i, capacity in enumerate(capacities):
                infra.add_node(ComputeNode(f"fog{i}", capacity=capacity))
            for name in ["s", "t"] + [f"fog{i}" for i in range(n_nodes)]:
                infra.add_link(NetworkLink(f"{name}_out", name, "hub", latency=1.0))
                infra.add_link(NetworkLink(f"{name}_in", "hub", name, latency=1.0))

            app = Application("batch")
            app.add_source("batch.src", bound_node="s")
            app.add_sink("batch.zz", bound_node="t")
            for i, mips in enumerate(tasks):
                app.add_processing(f"batch.p{i}", mips=mips)
                app.connect("batch.src", f"batch.p{i}", 1.0)
                app.connect(f"batch.p{i}", "batch.zz", 1.0)

            try:
                placement = place(app, infra, ConsolidateStrategy(cap=cap))
                used_nodes = {placement.task_map[f"batch.p{i}"] for i in range(n_tasks)}
                achieved = len(used_nodes)
            except NoFeasibleNode:
                achieved = None
            assert achieved == oracle, (
                f"trial {trial}: capacities={capacities} tasks={tasks} "
                f"oracle={oracle} achieved={achieved}")


# -- properties -----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(1.0, 60.0), st.floats(0.5, 8.0)),
                min_size=1, max_size=8),
       st.integers(1, 3))
def test_failed_placements_leave_state_unchanged(specs, n_fogs):
    """Adversarial near-capacity graphs: place until failure; any failure
    must leave every used value exactly as it was before the attempt."""
    infra = star_infra(n_fogs, fog_capacity=100.0, cloud=False, bandwidth=10.0)
    strategy = EvenSpreadStrategy(cap=0.85)
    for i, (mips, rate) in enumerate(specs):
        app = simple_app(mips=mips, rate=rate)
        app.id = f"app{i}"
        before_nodes = {nid: n.used for nid, n in infra.nodes.items()}
        before_links = {lid: l.used for lid, l in infra.links.items()}
        try:
            place(app, infra, strategy)
        except PlacementError:
            assert {nid: n.used for nid, n in infra.nodes.items()} == before_nodes
            assert {lid: l.used for lid, l in infra.links.items()} == before_links


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1.0, 50.0), min_size=1, max_size=12))
def test_cap_respected_after_any_sequence(mips_list):
    infra = star_infra(2, fog_capacity=100.0)
    strategy = EvenSpreadStrategy(cap=0.85)
    for i, mips in enumerate(mips_list):
        app = simple_app(mips=mips)
        app.id = f"app{i}"
        try:
            place(app, infra, strategy)
        except PlacementError:
            pass
    for fog in ("fog0", "fog1"):
        assert infra.node(fog).used <= 0.85 * 100.0 + 1e-9
