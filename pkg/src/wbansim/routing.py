"""Neighbor discovery, route selection and per-packet traffic control.

Discovery models the Hello flood: alive nodes that are not cooling learn
their in-range neighbors, a breadth-first hop count to the sink over
class-legal links, and up to K concrete candidate routes. The dispatch
decision implements the single-hop/multi-hop traffic control rules: nodes
in sink range talk to it directly, critical and on-demand data bursts to
the sink at boosted range, everything else follows the selected route and
reroutes or waits when links are hot.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from . import thermal
from .energy import receive_energy, spend, transmit_energy
from .model import (LEGAL_NEXT_HOP, SINK_ID, NodeClass, Packet, PacketKind,
                    Protocol, Route, SensorNode, World)


class NoRouteError(ValueError):
    """select_route was handed an empty candidate list."""


@dataclass
class NeighborTable:
    owner: int
    neighbors: list = field(default_factory=list)   # [(node id, distance)]
    hop_count: int | None = None                    # None when disconnected
    candidate_routes: list = field(default_factory=list)


def legal_hop(from_class: NodeClass, to_class: NodeClass) -> bool:
    return to_class in LEGAL_NEXT_HOP[from_class]


@lru_cache(maxsize=8192)
def _route_energy(distances, n_hops, e_elec, e_amp, bits, exp) -> float:
    total = sum(bits * e_elec + bits * e_amp * d ** exp for d in distances)
    return total + (n_hops - 1) * bits * e_elec


def route_energy(route: Route, radio) -> float:
    """Total delivery energy along a route: every hop transmits once and
    every intermediate node receives once. Routes are immutable, so the
    figure is cached across dispatches."""
    return _route_energy(route.distances, len(route), radio.e_elec,
                         radio.e_amp, radio.packet_bits, radio.path_loss_exp)


def select_route(candidates: list, radio) -> Route:
    """Fewest hops wins; ties fall to delivery energy, then to the smaller
    first-hop id. The full hop tuple is the last resort so the choice is a
    total order, invariant under permutation of the candidate list."""
    if not candidates:
        raise NoRouteError("no candidate routes")
    return min(candidates,
               key=lambda r: (len(r), route_energy(r, radio), r.hops[0], r.hops))


def bfs_hop_counts(world: World, usable_ids: set) -> dict:
    """Breadth-first hop counts to the sink over class-legal in-range links
    restricted to `usable_ids`; the sink itself is hop 0."""
    hops = {SINK_ID: 0}
    frontier = deque([SINK_ID])
    while frontier:
        v = frontier.popleft()
        vn = world.nodes[v]
        for u in sorted(usable_ids):
            if u in hops:
                continue
            un = world.nodes[u]
            if legal_hop(un.node_class, vn.node_class) \
                    and un.distance_to(vn) <= un.tx_range:
                hops[u] = hops[v] + 1
                frontier.append(u)
    return hops


def _has_capacity(world: World, upstream: SensorNode) -> bool:
    if upstream.node_class is NodeClass.SINK:
        return True   # the sink is unconstrained
    return len(upstream.children) < world.cfg.mu_max


def unlink(world: World, child: SensorNode) -> None:
    if child.parent is not None:
        old = world.nodes.get(child.parent)
        if old is not None and child.id in old.children:
            old.children.remove(child.id)
        child.parent = None


def link(world: World, child: SensorNode, parent: SensorNode) -> None:
    unlink(world, child)
    child.parent = parent.id
    parent.children.append(child.id)


def adoption_candidates(world: World, child: SensorNode) -> list:
    """Alive, non-cooling, in-range class-legal upstream nodes ordered by
    distance (sink first when eligible)."""
    out = []
    for other in world.nodes.values():
        if other.id == child.id or not other.alive or other.cooloff_remaining > 0:
            continue
        if not legal_hop(child.node_class, other.node_class):
            continue
        d = child.distance_to(other)
        if d <= child.tx_range:
            out.append((d, other.id))
    return [world.nodes[i] for _, i in sorted(out)]


def refresh_tree(world: World) -> None:
    """Re-establish parent links where broken: dead or out-of-range parents
    are dropped and a reachable upstream with spare child capacity adopts
    the node, preferring the least loaded (then the nearest) so the tree
    stays balanced. Runs tier by tier so first level children settle
    before second level children compete for slots."""
    order = [NodeClass.PARENT, NodeClass.LEVEL1_CHILD, NodeClass.LEVEL2_CHILD]
    for tier in order:
        for node in sorted(world.sensors(), key=lambda n: n.id):
            if node.node_class is not tier or not node.alive:
                continue
            if node.parent is not None:
                current = world.nodes[node.parent]
                if current.alive and node.distance_to(current) <= node.tx_range:
                    continue
                unlink(world, node)
            ranked = sorted(
                adoption_candidates(world, node),
                key=lambda c: (len(c.children), node.distance_to(c), c.id))
            for candidate in ranked:
                if _has_capacity(world, candidate):
                    link(world, node, candidate)
                    break


def tree_path(world: World, start: int):
    """Follow parent links from `start` (inclusive) to the sink.

    Returns (node ids, consecutive gap distances) or None when the chain
    is broken by a dead node or a missing parent.
    """
    ids = []
    gaps = []
    current = world.nodes[start]
    prev = None
    while True:
        if not current.alive:
            return None
        ids.append(current.id)
        if prev is not None:
            gaps.append(prev.distance_to(current))
        if current.id == SINK_ID:
            return tuple(ids), tuple(gaps)
        if current.parent is None or len(ids) > len(world.nodes):
            return None
        prev = current
        current = world.nodes[current.parent]


def candidate_routes_for(world: World, node: SensorNode) -> list:
    """Up to K loop-free routes with distinct first hops, best first."""
    routes = []
    for other in world.nodes.values():
        if other.id == node.id or not other.alive:
            continue
        if not legal_hop(node.node_class, other.node_class):
            continue
        d = node.distance_to(other)
        if d > node.tx_range:
            continue
        if other.id == SINK_ID:
            routes.append(Route(hops=(SINK_ID,), distances=(d,)))
            continue
        tail = tree_path(world, other.id)
        if tail is None or node.id in tail[0]:
            continue
        routes.append(Route(hops=tail[0], distances=(d,) + tail[1]))
    radio = world.cfg.radio
    routes.sort(key=lambda r: (len(r), route_energy(r, radio), r.hops[0]))
    return routes[:world.cfg.candidate_routes]


def discover(world: World) -> dict:
    """Run one Hello flood and rebuild routing state.

    Only alive nodes outside cool-off take part: each pays one broadcast
    transmit at full range plus one receive per neighbor heard. Cooling
    nodes keep their previous table so their routes can resume afterwards.
    Returns the updated owner -> NeighborTable map (also kept on world).
    """
    cfg = world.cfg
    participants = [n for n in world.sensors()
                    if n.alive and n.cooloff_remaining == 0]
    participant_ids = {n.id for n in participants}
    alive_ids = {n.id for n in world.sensors() if n.alive}

    refresh_tree(world)
    hops = bfs_hop_counts(world, alive_ids)

    tables = {SINK_ID: NeighborTable(owner=SINK_ID, hop_count=0)}
    broadcasters = participant_ids | {SINK_ID}
    for node in participants:
        neighbors = []
        for other_id in sorted(broadcasters):
            if other_id == node.id:
                continue
            d = node.distance_to(world.nodes[other_id])
            if d <= node.tx_range:
                neighbors.append((other_id, d))
        tables[node.id] = NeighborTable(
            owner=node.id,
            neighbors=neighbors,
            hop_count=hops.get(node.id),
            candidate_routes=candidate_routes_for(world, node),
        )

    # Hello accounting: broadcast at full range, one reception per neighbor.
    b = cfg.radio.packet_bits
    hello_tx = transmit_energy(b, cfg.tx_range, cfg.radio)
    hello_rx = receive_energy(b, cfg.radio)
    for node in participants:
        spend(world, node, hello_tx, "hello_tx")
        for _ in tables[node.id].neighbors:
            spend(world, node, hello_rx, "hello_rx")

    # Cooling nodes keep their previous table; everyone refreshed gets the
    # new one. Tables of dead nodes are dropped.
    for owner, table in tables.items():
        world.tables[owner] = table
    for owner in list(world.tables):
        if owner != SINK_ID and not world.nodes[owner].alive:
            del world.tables[owner]
    return world.tables


class Action(Enum):
    DIRECT = "direct"
    FORWARD = "forward"
    HOLD = "hold"
    DROP = "drop"


@dataclass(frozen=True)
class Decision:
    action: Action
    next_hop: int | None = None
    distance: float = 0.0          # geometric distance of the hop
    charge_distance: float = 0.0   # distance the radio is driven at
    boosted: bool = False
    route: Route | None = None
    reason: str | None = None      # drop reason
    blockers: frozenset = frozenset()


def classify_and_dispatch(node: SensorNode, packet: Packet, table, world: World,
                          excluded=frozenset()) -> Decision:
    """Decide how `node` moves `packet` this round.

    Order of rules: own cool-off parks normal traffic; a sink inside radio
    range is addressed directly; critical/on-demand data bursts at boosted
    range; everything else takes the best non-hot candidate route, waits
    while all of them are blocked, and is dropped once nothing can work.
    The plain multi-hop protocol runs with both direct rules disabled.
    `excluded` is any container of first hops that bounced the packet back
    this round.
    """
    cfg = world.cfg
    direct_allowed = cfg.protocol is not Protocol.MULTIHOP
    aware = thermal.thermal_aware(world)

    if node.cooloff_remaining > 0:
        # the node broke its links. With delay tolerance normal packets
        # wait and emergencies still burst out; the plain baseline has
        # neither and loses the packet.
        if not aware:
            return Decision(action=Action.DROP, reason="all_links_hot")
        if packet.kind is PacketKind.NORMAL:
            return Decision(action=Action.HOLD, blockers=frozenset({"hot"}))

    d_sink = node.distance_to(world.sink)
    if direct_allowed and d_sink <= node.tx_range:
        return Decision(action=Action.DIRECT, next_hop=SINK_ID,
                        distance=d_sink, charge_distance=d_sink)
    if direct_allowed and packet.kind is not PacketKind.NORMAL:
        if d_sink <= node.boosted_range:
            # emergency burst at full boosted power
            return Decision(action=Action.DIRECT, next_hop=SINK_ID,
                            distance=d_sink, charge_distance=node.boosted_range,
                            boosted=True)
        return Decision(action=Action.DROP, reason="range_exceeded")

    candidates = table.candidate_routes if table is not None else []
    if not candidates:
        return Decision(action=Action.DROP, reason="no_route")

    usable = []
    blockers = set()
    for route in candidates:
        first = route.hops[0]
        if first in excluded:
            blockers.add("hot")
            continue
        first_node = world.nodes[first]
        if not first_node.alive:
            blockers.add("dead")
            continue
        if aware and packet.kind is PacketKind.NORMAL \
                and thermal.link_is_hot(world, node.id, first):
            blockers.add("hot")
            continue
        usable.append(route)

    if not usable:
        return Decision(action=Action.HOLD, blockers=frozenset(blockers))

    best = select_route(usable, cfg.radio)
    return Decision(action=Action.FORWARD, next_hop=best.hops[0],
                    distance=best.distances[0],
                    charge_distance=best.distances[0], route=best)
