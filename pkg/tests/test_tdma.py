from conftest import cfg_with, make_node, make_world
from wbansim import engine
from wbansim.model import NodeClass, Protocol
from wbansim.routing import discover
from wbansim.tdma import assign_slots


def parents_world():
    cfg = cfg_with(sink_position=(2.5, 2.5), tx_range=2.0,
                   protocol=Protocol.ATTEMPT)
    return make_world(cfg, [
        make_node(5, NodeClass.PARENT, 2.0, 2.5, tx_range=2.0),
        make_node(2, NodeClass.PARENT, 3.0, 2.5, tx_range=2.0),
        make_node(9, NodeClass.PARENT, 2.5, 3.0, tx_range=2.0),
        make_node(7, NodeClass.LEVEL1_CHILD, 1.0, 2.0, tx_range=2.0),
    ])


def test_slots_ordered_by_node_id():
    world = parents_world()
    schedule = assign_slots(world)
    assert schedule.slots == ((0, 2), (1, 5), (2, 9))


def test_dead_parent_renumbers_contiguously():
    world = parents_world()
    world.nodes[5].alive = False
    schedule = assign_slots(world)
    assert schedule.slots == ((0, 2), (1, 9))
    assert schedule.slot_of(9) == 1
    assert schedule.slot_of(5) is None


def test_no_alive_parents_yields_empty_schedule():
    world = parents_world()
    for nid in (2, 5, 9):
        world.nodes[nid].alive = False
    assert assign_slots(world).slots == ()


def test_children_never_own_slots():
    world = parents_world()
    schedule = assign_slots(world)
    assert 7 not in schedule.owners


def test_critical_bypasses_schedule_same_round():
    # a critical packet from a child arrives this round even though the
    # child owns no slot
    world = parents_world()
    world.cfg = cfg_with(sink_position=(2.5, 2.5), tx_range=2.0,
                         protocol=Protocol.ATTEMPT,
                         p_critical=1.0, p_ondemand=0.0)
    world.stats = engine.RunStats()
    deliveries = []
    world.listener = lambda ev, rnd, f: deliveries.append(f) \
        if ev == "deliver" else None
    engine.step_round(world, 1)
    from_child = [f for f in deliveries if f["source"] == 7]
    assert from_child and from_child[0]["kind"] == "critical"


def test_tree_deliveries_attributed_to_slot_owner():
    cfg = cfg_with(protocol=Protocol.ATTEMPT, rounds=150, seed=8, tx_range=2.0)
    schedule_owners = set()
    bad = []

    def listener(ev, rnd, f):
        if ev == "schedule":
            schedule_owners.clear()
            schedule_owners.update(owner for _, owner in f["slots"])
        elif ev == "deliver" and f["kind"] == "normal" and not f["direct"]:
            if f["slot_owner"] != f["final_hop"] \
                    or f["slot_owner"] not in schedule_owners:
                bad.append(f)

    engine.run(cfg, listener=listener)
    assert bad == []


def test_schedule_regenerated_after_parent_death():
    world = parents_world()
    world.stats = engine.RunStats()
    discover(world)
    first = assign_slots(world)
    world.nodes[2].alive = False
    second = assign_slots(world)
    assert first.owners == (2, 5, 9)
    assert second.owners == (5, 9)
