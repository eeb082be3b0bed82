"""Mutable weighted directed multigraph of compute nodes and network links.

Nodes carry a compute capacity in MIPS, links a bandwidth in bit/s. Both
track the currently reserved amount (`used`) plus an optional per-claim
breakdown so that errors can name who is blocking an operation. Multiple
links between the same ordered node pair are allowed; (a -> b) and (b -> a)
are distinct links with independent properties.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field
from typing import Optional


class InfrastructureError(Exception):
    """Base class for infrastructure bookkeeping errors."""


class DuplicateEntityError(InfrastructureError):
    pass


class UnknownEntityError(InfrastructureError, KeyError):
    def __str__(self):  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class CapacityError(InfrastructureError):
    """A reservation does not fit into the remaining headroom."""


class EntityInUseError(InfrastructureError):
    """The entity still carries reservations and cannot be removed."""


class ConsistencyError(InfrastructureError):
    """A release would drive the reserved amount below zero."""


@dataclass(slots=True)
class ComputeNode:
    """A compute node with capacity in MIPS; capacity may be math.inf."""

    id: str
    capacity: float = math.inf
    used: float = 0.0
    location: Optional[tuple[float, float]] = None
    mobile: bool = False
    power_model: object = None
    claims: dict[Optional[str], float] = field(default_factory=dict)

    @property
    def headroom(self) -> float:
        return self.capacity - self.used

    @property
    def utilization(self) -> float:
        """Used fraction of capacity; 0.0 for unbounded nodes."""
        if math.isinf(self.capacity):
            return 0.0
        if self.capacity <= 0:
            return 0.0 if self.used <= 0 else math.inf
        return self.used / self.capacity


@dataclass(slots=True)
class NetworkLink:
    """A directed link; `latency` is a routing weight, never a simulated delay."""

    id: str
    src: str
    dst: str
    bandwidth: float = math.inf
    used: float = 0.0
    latency: float = 0.0
    power_model: object = None
    claims: dict[Optional[str], float] = field(default_factory=dict)

    @property
    def headroom(self) -> float:
        return self.bandwidth - self.used


def _reserve(entity, amount: float, claim: Optional[str], capacity: float, what: str):
    """Reservations are kept per claim; `used` is the exactly rounded sum of
    the claim amounts (math.fsum), which makes reserve/release round trips
    restore the previous value bit for bit, in any order."""
    if amount < 0:
        raise ValueError(f"cannot reserve a negative amount on {what} '{entity.id}'")
    if entity.used + amount > capacity:
        raise CapacityError(
            f"{what} '{entity.id}' cannot fit {amount:g}: "
            f"only {max(capacity - entity.used, 0.0):g} of {capacity:g} left"
        )
    entity.claims[claim] = entity.claims.get(claim, 0.0) + amount
    entity.used = math.fsum(entity.claims.values())


def _release(entity, amount: float, claim: Optional[str], what: str):
    if amount < 0:
        raise ValueError(f"cannot release a negative amount on {what} '{entity.id}'")
    have = entity.claims.get(claim, 0.0)
    left = have - amount
    if left < -1e-9 * max(1.0, amount):
        owner = "anonymous reservations" if claim is None else f"claim '{claim}'"
        raise ConsistencyError(
            f"release of {amount:g} exceeds the {have:g} reserved by {owner} "
            f"on {what} '{entity.id}'"
        )
    if abs(left) <= 1e-12 * max(1.0, amount):
        entity.claims.pop(claim, None)
    else:
        entity.claims[claim] = left
    entity.used = math.fsum(entity.claims.values())


def _owners(entity) -> str:
    names = sorted(claim for claim in entity.claims if claim is not None)
    return str(names) if names else "anonymous reservations"


class Infrastructure:
    """Id-keyed node/link collections with a per-node outgoing-link index.

    All iteration helpers return entities sorted by id so that simulations
    are reproducible regardless of insertion history.
    """

    def __init__(self):
        self.nodes: dict[str, ComputeNode] = {}
        self.links: dict[str, NetworkLink] = {}
        self._out: dict[str, list[str]] = {}  # node id -> sorted outgoing link ids
        self._in: dict[str, set[str]] = {}  # node id -> incoming link ids
        self._dirty_nodes: set[str] = set()
        self._dirty_links: set[str] = set()

    # -- construction ----------------------------------------------------

    def add_node(self, node: ComputeNode) -> str:
        if node.id in self.nodes or node.id in self.links:
            raise DuplicateEntityError(f"entity id '{node.id}' already exists")
        if node.used != 0.0:
            raise ValueError(f"node '{node.id}' must be added with used == 0")
        self.nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = set()
        self._dirty_nodes.add(node.id)
        return node.id

    def add_link(self, link: NetworkLink) -> str:
        if link.id in self.links or link.id in self.nodes:
            raise DuplicateEntityError(f"entity id '{link.id}' already exists")
        for endpoint in (link.src, link.dst):
            if endpoint not in self.nodes:
                raise UnknownEntityError(f"link '{link.id}' references unknown node '{endpoint}'")
        if link.used != 0.0:
            raise ValueError(f"link '{link.id}' must be added with used == 0")
        self.links[link.id] = link
        insort(self._out[link.src], link.id)
        self._in[link.dst].add(link.id)
        self._dirty_links.add(link.id)
        return link.id

    def remove_node(self, node_id: str) -> ComputeNode:
        node = self.node(node_id)
        blockers = []
        if node.used > 0:
            blockers.append(f"node '{node_id}' used by {_owners(node)}")
        incident = sorted(set(self._out[node_id]) | self._in[node_id])
        for link_id in incident:
            link = self.links[link_id]
            if link.used > 0:
                blockers.append(f"link '{link_id}' used by {_owners(link)}")
        if blockers:
            raise EntityInUseError(f"cannot remove node '{node_id}': " + "; ".join(blockers))
        for link_id in incident:
            self.remove_link(link_id)
        del self.nodes[node_id]
        del self._out[node_id]
        del self._in[node_id]
        self._dirty_nodes.add(node_id)
        return node

    def remove_link(self, link_id: str) -> NetworkLink:
        link = self.link(link_id)
        if link.used > 0:
            raise EntityInUseError(
                f"cannot remove link '{link_id}': used by {_owners(link)}"
            )
        del self.links[link_id]
        self._out[link.src].remove(link_id)
        self._in[link.dst].discard(link_id)
        self._dirty_links.add(link_id)
        return link

    # -- lookup ----------------------------------------------------------

    def node(self, node_id: str) -> ComputeNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownEntityError(f"unknown node '{node_id}'") from None

    def link(self, link_id: str) -> NetworkLink:
        try:
            return self.links[link_id]
        except KeyError:
            raise UnknownEntityError(f"unknown link '{link_id}'") from None

    def sorted_nodes(self) -> list[ComputeNode]:
        return [self.nodes[i] for i in sorted(self.nodes)]

    def sorted_links(self) -> list[NetworkLink]:
        return [self.links[i] for i in sorted(self.links)]

    def out_links(self, node_id: str) -> list[NetworkLink]:
        """Outgoing links of a node, sorted by link id."""
        if node_id not in self.nodes:
            raise UnknownEntityError(f"unknown node '{node_id}'")
        return [self.links[i] for i in self._out[node_id]]

    def in_link_ids(self, node_id: str) -> set[str]:
        if node_id not in self.nodes:
            raise UnknownEntityError(f"unknown node '{node_id}'")
        return set(self._in[node_id])

    # -- capacity accounting ----------------------------------------------

    def reserve_node(self, node_id: str, mips: float, claim: Optional[str] = None) -> None:
        node = self.node(node_id)
        _reserve(node, mips, claim, node.capacity, "node")
        self._dirty_nodes.add(node_id)

    def release_node(self, node_id: str, mips: float, claim: Optional[str] = None) -> None:
        node = self.node(node_id)
        _release(node, mips, claim, "node")
        self._dirty_nodes.add(node_id)

    def reserve_link(self, link_id: str, rate: float, claim: Optional[str] = None) -> None:
        link = self.link(link_id)
        _reserve(link, rate, claim, link.bandwidth, "link")
        self._dirty_links.add(link_id)

    def release_link(self, link_id: str, rate: float, claim: Optional[str] = None) -> None:
        link = self.link(link_id)
        _release(link, rate, claim, "link")
        self._dirty_links.add(link_id)

    # -- property mutation -------------------------------------------------

    def update_node(self, node_id: str, *, capacity: float = None,
                    location: tuple[float, float] = None, power_model: object = None) -> None:
        """Mutate node properties; takes effect from the current step onward.

        Location changes do not touch the power-dirty set: built-in power
        models are load-driven only.
        """
        node = self.node(node_id)
        if capacity is not None:
            if capacity < node.used:
                raise CapacityError(
                    f"cannot lower capacity of node '{node_id}' to {capacity:g}: {node.used:g} in use"
                )
            node.capacity = capacity
            self._dirty_nodes.add(node_id)
        if location is not None:
            node.location = location
        if power_model is not None:
            node.power_model = power_model
            self._dirty_nodes.add(node_id)

    def update_link(self, link_id: str, *, bandwidth: float = None,
                    latency: float = None, power_model: object = None) -> None:
        link = self.link(link_id)
        if bandwidth is not None:
            if bandwidth < link.used:
                raise CapacityError(
                    f"cannot lower bandwidth of link '{link_id}' to {bandwidth:g}: {link.used:g} in use"
                )
            link.bandwidth = bandwidth
            self._dirty_links.add(link_id)
        if latency is not None:
            link.latency = latency
        if power_model is not None:
            link.power_model = power_model
            self._dirty_links.add(link_id)

    # -- change tracking ----------------------------------------------------

    def consume_dirty(self) -> tuple[set[str], set[str]]:
        """Entities whose power-relevant state changed since the last call."""
        nodes, links = self._dirty_nodes, self._dirty_links
        self._dirty_nodes, self._dirty_links = set(), set()
        return nodes, links

    # -- geometry -----------------------------------------------------------

    def distance(self, a: str, b: str) -> float:
        """Euclidean distance between two located nodes."""
        pa, pb = self.node(a).location, self.node(b).location
        if pa is None or pb is None:
            missing = a if pa is None else b
            raise InfrastructureError(f"node '{missing}' has no location")
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])
