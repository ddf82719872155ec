"""Routing tests: hop-count discovery against an independent BFS oracle,
route selection rules, and the dispatch state machine on toy topologies."""

from collections import deque
from fractions import Fraction as F

import pytest

from conftest import cfg_with, make_node, make_world
from wbansim import engine
from wbansim.model import (SINK_ID, NodeClass, Packet, PacketKind, Protocol,
                           RadioParams, Route, build_topology, clone_config)
from wbansim.routing import (Action, NoRouteError, classify_and_dispatch,
                             discover, route_energy, select_route)

# The oracle keeps its own statement of which hops are legal so a bug in
# the production table cannot hide.
ORACLE_LEGAL = {
    "parent": {"sink"},
    "level1": {"parent"},
    "level2": {"level1", "parent"},
    "sink": set(),
}


def bfs_oracle(world):
    """Hop counts to the sink by breadth-first search over an adjacency
    built from scratch out of positions, classes and ranges."""
    alive = [n for n in world.nodes.values() if n.alive]
    edges = {}
    for u in alive:
        edges[u.id] = set()
        for v in alive:
            if u.id == v.id:
                continue
            if v.node_class.value in ORACLE_LEGAL[u.node_class.value] \
                    and u.distance_to(v) <= u.tx_range:
                edges[u.id].add(v.id)
    hops = {SINK_ID: 0}
    frontier = deque([SINK_ID])
    while frontier:
        v = frontier.popleft()
        for u in edges:
            if u not in hops and v in edges[u]:
                hops[u] = hops[v] + 1
                frontier.append(u)
    return hops


def enumerate_paths(world, start):
    """All loop-free class-legal paths from start to the sink."""
    out = []

    def walk(node_id, path):
        node = world.nodes[node_id]
        for v in world.nodes.values():
            if v.id in path or not v.alive:
                continue
            if v.node_class.value not in ORACLE_LEGAL[node.node_class.value]:
                continue
            if node.distance_to(v) > node.tx_range:
                continue
            if v.id == SINK_ID:
                out.append(path + [SINK_ID])
            else:
                walk(v.id, path + [v.id])

    walk(start, [])
    return out


def chain_world(spacing=1.5, tx_range=2.0):
    cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=tx_range,
                   protocol=Protocol.ATTEMPT)
    return make_world(cfg, [
        make_node(1, NodeClass.PARENT, spacing, 0.0, tx_range=tx_range),
        make_node(2, NodeClass.LEVEL1_CHILD, 2 * spacing, 0.0, tx_range=tx_range),
        make_node(3, NodeClass.LEVEL2_CHILD, 3 * spacing, 0.0, tx_range=tx_range),
    ])


class TestDiscovery:
    def test_chain_hop_counts(self):
        world = chain_world()
        tables = discover(world)
        assert tables[SINK_ID].hop_count == 0
        assert tables[SINK_ID].candidate_routes == []
        assert tables[1].hop_count == 1
        assert tables[2].hop_count == 2
        assert tables[3].hop_count == 3
        assert bfs_oracle(world) == {SINK_ID: 0, 1: 1, 2: 2, 3: 3}

    def test_node_near_sink_single_hop_route(self):
        world = chain_world()
        tables = discover(world)
        assert tables[1].candidate_routes[0].hops == (SINK_ID,)

    def test_random_topologies_match_oracle(self):
        for seed in range(25):
            world = build_topology(cfg_with(protocol=Protocol.ATTEMPT), seed=seed)
            tables = discover(world)
            oracle = bfs_oracle(world)
            for node in world.sensors():
                assert tables[node.id].hop_count == oracle.get(node.id), \
                    f"seed {seed} node {node.id}"

    def test_disconnected_node_has_no_candidates(self):
        cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=1.0,
                       protocol=Protocol.ATTEMPT)
        world = make_world(cfg, [
            make_node(1, NodeClass.PARENT, 0.5, 0.0, tx_range=1.0),
            make_node(2, NodeClass.LEVEL2_CHILD, 4.5, 4.5, tx_range=1.0),
        ])
        tables = discover(world)
        assert tables[2].hop_count is None
        assert tables[2].candidate_routes == []

    def test_candidate_length_at_least_hop_count(self):
        for seed in range(10):
            world = build_topology(cfg_with(protocol=Protocol.ATTEMPT), seed=seed)
            tables = discover(world)
            for table in tables.values():
                if table.hop_count is None:
                    assert table.candidate_routes == []
                    continue
                for route in table.candidate_routes:
                    assert len(route) >= table.hop_count

    def test_neighbors_within_range(self):
        world = build_topology(cfg_with(protocol=Protocol.ATTEMPT), seed=4)
        tables = discover(world)
        for table in tables.values():
            if table.owner == SINK_ID:
                continue
            node = world.nodes[table.owner]
            for other_id, dist in table.neighbors:
                assert dist <= node.tx_range
                assert node.distance_to(world.nodes[other_id]) == dist

    def test_hello_charges_applied(self):
        world = chain_world()
        charges = []
        world.listener = lambda ev, rnd, f: charges.append(f) if ev == "charge" else None
        before = {n.id: n.energy for n in world.sensors()}
        discover(world)
        kinds = {c["kind"] for c in charges}
        assert kinds == {"hello_tx", "hello_rx"}
        for node in world.sensors():
            assert node.energy < before[node.id]


class TestSelectRoute:
    def r(self, *hops, d=1.0):
        return Route(hops=tuple(hops), distances=tuple(d for _ in hops))

    def test_fewer_hops_wins(self):
        radio = RadioParams()
        two = self.r(7, SINK_ID)
        three = self.r(5, 6, SINK_ID)
        assert select_route([three, two], radio) is two

    def test_energy_breaks_hop_ties(self):
        radio = RadioParams()
        cheap = Route(hops=(4, SINK_ID), distances=(1.0, 1.0))
        dear = Route(hops=(9, SINK_ID), distances=(2.0, 2.0))
        assert select_route([dear, cheap], radio) is cheap

    def test_first_hop_id_breaks_full_ties(self):
        radio = RadioParams()
        a = Route(hops=(7, SINK_ID), distances=(1.0, 1.0))
        b = Route(hops=(3, SINK_ID), distances=(1.0, 1.0))
        assert select_route([a, b], radio).hops[0] == 3

    def test_permutation_invariant(self):
        import itertools
        radio = RadioParams()
        routes = [
            Route(hops=(3, SINK_ID), distances=(1.0, 1.0)),
            Route(hops=(7, SINK_ID), distances=(1.0, 1.0)),
            Route(hops=(5, 6, SINK_ID), distances=(0.5, 0.5, 0.5)),
        ]
        picks = {select_route(list(p), radio).hops
                 for p in itertools.permutations(routes)}
        assert len(picks) == 1

    def test_empty_candidates_raise(self):
        with pytest.raises(NoRouteError):
            select_route([], RadioParams())

    def test_route_energy_matches_exact_oracle(self):
        radio = RadioParams()
        route = Route(hops=(2, 5, SINK_ID), distances=(1.0, 2.0, 0.5))
        e_elec, e_amp, b = F(50, 10**9), F(100, 10**12), 512
        expected = sum(b * e_elec + b * e_amp * F(d) ** 2
                       for d in (1, 2, F(1, 2))) + 2 * b * e_elec
        assert route_energy(route, radio) == pytest.approx(float(expected), rel=1e-12)


def packet(kind=PacketKind.NORMAL, source=3):
    return Packet(id=0, source=source, kind=kind, size_bits=512, created_round=1)


class TestDispatch:
    def test_parent_in_range_goes_direct(self):
        world = chain_world(spacing=1.0, tx_range=1.3)
        discover(world)
        node = world.nodes[1]
        decision = classify_and_dispatch(node, packet(source=1),
                                         world.tables[1], world)
        assert decision.action is Action.DIRECT
        assert decision.next_hop == SINK_ID
        assert decision.charge_distance == pytest.approx(1.0)
        assert not decision.boosted

    def test_critical_bursts_at_boosted_range(self):
        world = chain_world(spacing=1.2, tx_range=1.3)
        discover(world)
        node = world.nodes[3]   # 3.6 m out, beyond tx_range
        decision = classify_and_dispatch(node, packet(PacketKind.CRITICAL),
                                         world.tables[3], world)
        assert decision.action is Action.DIRECT
        assert decision.boosted
        assert decision.charge_distance == node.boosted_range

    def test_critical_beyond_boosted_range_dropped(self):
        cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=1.3,
                       boosted_range=3.0, protocol=Protocol.ATTEMPT)
        world = make_world(cfg, [
            make_node(3, NodeClass.LEVEL2_CHILD, 4.0, 0.0,
                      tx_range=1.3, boosted=3.0),
        ])
        discover(world)
        decision = classify_and_dispatch(world.nodes[3],
                                         packet(PacketKind.CRITICAL),
                                         world.tables.get(3), world)
        assert decision.action is Action.DROP
        assert decision.reason == "range_exceeded"

    def test_normal_without_routes_dropped(self):
        cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=1.0,
                       protocol=Protocol.ATTEMPT)
        world = make_world(cfg, [
            make_node(3, NodeClass.LEVEL2_CHILD, 4.0, 4.0, tx_range=1.0),
        ])
        discover(world)
        decision = classify_and_dispatch(world.nodes[3], packet(),
                                         world.tables.get(3), world)
        assert decision.action is Action.DROP
        assert decision.reason == "no_route"

    def test_multihop_disables_direct(self):
        world = chain_world(spacing=1.0, tx_range=1.3)
        world.cfg = clone_config(world.cfg, protocol=Protocol.MULTIHOP)
        discover(world)
        decision = classify_and_dispatch(world.nodes[1], packet(source=1),
                                         world.tables[1], world)
        assert decision.action is Action.FORWARD
        assert decision.next_hop == SINK_ID
        crit = classify_and_dispatch(world.nodes[3],
                                     packet(PacketKind.CRITICAL),
                                     world.tables[3], world)
        assert crit.action is Action.FORWARD   # routed, not boosted

    def test_cooling_node_holds_normal_and_bursts_critical(self):
        world = chain_world(spacing=1.0, tx_range=1.3)
        discover(world)
        node = world.nodes[2]
        node.cooloff_remaining = 1
        held = classify_and_dispatch(node, packet(source=2),
                                     world.tables[2], world)
        assert held.action is Action.HOLD
        crit = classify_and_dispatch(node, packet(PacketKind.CRITICAL, source=2),
                                     world.tables[2], world)
        assert crit.action is Action.DIRECT and crit.boosted

    def test_cooling_node_drops_in_unaware_baseline(self):
        world = chain_world(spacing=1.0, tx_range=1.3)
        world.cfg = clone_config(world.cfg, protocol=Protocol.MULTIHOP)
        discover(world)
        node = world.nodes[2]
        node.cooloff_remaining = 1
        decision = classify_and_dispatch(node, packet(source=2),
                                         world.tables[2], world)
        assert decision.action is Action.DROP
        assert decision.reason == "all_links_hot"

    def test_hot_first_hop_reroutes_same_round(self):
        # two relays; the preferred one sits above the hot threshold, so
        # the packet must take the alternate and still arrive this round
        cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=1.3,
                       p_critical=0.0, p_ondemand=0.0,
                       protocol=Protocol.ATTEMPT)
        world = make_world(cfg, [
            make_node(1, NodeClass.PARENT, 1.0, 0.0, tx_range=1.3),
            make_node(2, NodeClass.LEVEL1_CHILD, 2.0, 0.1, tx_range=1.3),
            make_node(3, NodeClass.LEVEL1_CHILD, 2.0, -0.4, tx_range=1.3),
            make_node(4, NodeClass.LEVEL2_CHILD, 3.0, 0.0, tx_range=1.3),
        ])
        # exhaustive enumeration: node 4 has exactly two legal paths
        paths = {tuple(p) for p in enumerate_paths(world, 4)}
        assert paths == {(2, 1, SINK_ID), (3, 1, SINK_ID)}

        world.nodes[2].temperature = 4.9   # above the default C_T of 4.8
        deliveries = []
        transmits = []

        def listener(ev, rnd, f):
            if ev == "deliver":
                deliveries.append(f)
            elif ev == "transmit":
                transmits.append(f)

        world.listener = listener
        world.stats = engine.RunStats()
        engine.step_round(world, 1)
        mine = [t for t in transmits if t["frm"] == 4]
        assert mine and mine[0]["to"] == 3
        assert any(d["source"] == 4 for d in deliveries)

    def test_held_packet_delivered_after_cooloff(self):
        # relay enters cool-off before round 2; the upstream packet waits
        # one round and goes through right after the window ends
        cfg = cfg_with(sink_position=(0.0, 0.0), tx_range=1.3,
                       p_critical=0.0, p_ondemand=0.0,
                       protocol=Protocol.ATTEMPT)
        world = make_world(cfg, [
            make_node(1, NodeClass.LEVEL2_CHILD, 3.4, 0.0, tx_range=1.3),
            make_node(2, NodeClass.LEVEL1_CHILD, 2.2, 0.0, tx_range=1.3),
            make_node(3, NodeClass.PARENT, 1.0, 0.0, tx_range=1.3),
        ])
        world.stats = engine.RunStats()
        deliveries = []
        world.listener = lambda ev, rnd, f: deliveries.append((rnd, f)) \
            if ev == "deliver" else None

        _, row1 = engine.step_round(world, 1)
        assert row1.received == 3
        world.nodes[2].temperature = 3.0
        world.nodes[2].cooloff_remaining = 1
        _, row2 = engine.step_round(world, 2)
        assert row2.received == 1           # only the parent's own packet
        _, row3 = engine.step_round(world, 3)
        assert row3.received == 5           # two held plus three fresh
        held_delivery = [rnd for rnd, f in deliveries
                         if f["source"] == 1 and rnd == 3]
        assert held_delivery
        assert row3.dropped == {}


class TestProtocolInvariants:
    def test_critical_path_length_one_in_attempt(self):
        hops_seen = []

        def listener(ev, rnd, f):
            if ev == "deliver" and f["kind"] in ("critical", "on-demand"):
                hops_seen.append(f["hops"])

        cfg = cfg_with(protocol=Protocol.ATTEMPT, rounds=300, p_critical=0.3,
                       seed=5)
        engine.run(cfg, listener=listener)
        assert hops_seen and all(h == 1 for h in hops_seen)

    def test_multihop_never_direct(self):
        directs = []

        def listener(ev, rnd, f):
            if ev == "deliver" and f["direct"]:
                directs.append(f)

        cfg = cfg_with(protocol=Protocol.MULTIHOP, rounds=200, seed=5)
        engine.run(cfg, listener=listener)
        assert directs == []

    def test_forward_links_are_class_legal(self):
        classes = {}
        bad = []

        def listener(ev, rnd, f):
            if ev == "init":
                classes.update(f["classes"])
                classes[SINK_ID] = "sink"
            elif ev == "transmit" and f["to"] != SINK_ID:
                if classes[f["to"]] not in ORACLE_LEGAL[classes[f["frm"]]]:
                    bad.append(f)

        for proto in (Protocol.MULTIHOP, Protocol.ATTEMPT, Protocol.M_ATTEMPT):
            cfg = cfg_with(protocol=proto, rounds=200, seed=9)
            engine.run(cfg, listener=listener)
        assert bad == []
