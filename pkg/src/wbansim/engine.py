"""Round loop: traffic generation, per-protocol orchestration and metrics.

Each round runs the phases in a fixed order: mobility (M-ATTEMPT only),
discovery and TDMA scheduling when the epoch is dirty, traffic generation,
dispatch with energy and heat charging per hop, idle cooling and cool-off
countdown, death bookkeeping, and one metrics row.

Protocol variants share this loop. Plain multi-hop disables the direct
transmission rules and all thermal behaviour but re-floods Hello messages
every round, the conventional baseline the proposed scheme argues against.
ATTEMPT keeps discovery event-driven (first round, after a death) and adds
thermal awareness; M-ATTEMPT adds the mobility phase on its period.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import mobility, routing, tdma, thermal
from .energy import EnergyReport, receive_energy, spend, transmit_energy
from .model import (SINK_ID, NodeClass, Packet, PacketKind, Protocol,
                    SimConfig, World, build_topology, validate_config)
from .routing import Action, classify_and_dispatch

MAX_HOPS_PER_PACKET = 32   # safety bound; class tiers keep real paths short


@dataclass
class MetricsRow:
    round: int
    alive: int
    dead: int
    total_energy: float
    generated: int                  # packets created this round
    received: int                   # packets that reached the sink this round
    dropped: dict                   # reason -> count, this round
    pdr: float                      # cumulative received / generated
    hot_links: int                  # hot marks active at end of round
    handovers: int                  # parent handovers this round

    @property
    def dropped_total(self) -> int:
        return sum(self.dropped.values())


@dataclass
class RunSummary:
    protocol: str
    stability_period: int    # round of the first node death, rounds if none
    lifetime: int            # round of the last observed death, rounds if none
    instability_period: int
    final_pdr: float


@dataclass
class RunStats:
    cum_generated: int = 0
    cum_received: int = 0
    cum_dropped: Counter = field(default_factory=Counter)
    first_death: int | None = None
    last_death: int | None = None
    delivered_hops: int = 0
    tx_joules: float = 0.0
    rx_joules: float = 0.0
    r_generated: int = 0
    r_received: int = 0
    r_dropped: Counter = field(default_factory=Counter)
    r_handovers: int = 0

    def reset_round(self):
        self.r_generated = 0
        self.r_received = 0
        self.r_dropped = Counter()
        self.r_handovers = 0


@dataclass
class HeldPacket:
    packet: Packet
    rounds_held: int
    blockers: frozenset


def hello_every_round(cfg: SimConfig) -> bool:
    if cfg.hello_mode == "every-round":
        return True
    if cfg.hello_mode == "event":
        return False
    return cfg.protocol is Protocol.MULTIHOP


def _data_heat(world: World, node, event) -> None:
    """Data-plane heat plus threshold check; control traffic does not heat.
    Runs under every protocol: heating is physics, not routing."""
    if not node.alive:
        return
    was_cooling = node.cooloff_remaining > 0
    thermal.heat_on_event(node, event, world.cfg.thermal)
    thermal.check_threshold(node, world.cfg.thermal)
    if not was_cooling and node.cooloff_remaining > 0:
        world.emit("cooloff_start", node=node.id, temperature=node.temperature)


def _drop(world: World, packet: Packet, reason: str, at: int) -> None:
    stats = world.stats
    stats.r_dropped[reason] += 1
    stats.cum_dropped[reason] += 1
    world.emit("drop", packet=packet.id, kind=packet.kind.value,
               reason=reason, node=at)


def _deliver(world: World, packet: Packet, final_hop: int, direct: bool,
             boosted: bool, hops: int, att: float) -> None:
    stats = world.stats
    stats.r_received += 1
    stats.cum_received += 1
    stats.delivered_hops += hops
    final = world.nodes[final_hop]
    slot_owner = final_hop if final.node_class is NodeClass.PARENT else None
    world.emit("deliver", packet=packet.id, kind=packet.kind.value,
               source=packet.source, final_hop=final_hop, direct=direct,
               boosted=boosted, slot_owner=slot_owner, hops=hops,
               attenuation=att)


def _hold(world: World, packet: Packet, node_id: int, blockers,
          rounds_held: int) -> None:
    count = rounds_held + 1
    if count > world.cfg.hold_limit:
        reason = "all_links_hot" if "hot" in blockers or not blockers \
            else "dead_next_hop"
        _drop(world, packet, reason, at=node_id)
        return
    world.held.setdefault(node_id, []).append(
        HeldPacket(packet=packet, rounds_held=count, blockers=frozenset(blockers)))
    world.emit("hold", packet=packet.id, node=node_id, rounds_held=count)


def _transport(world: World, packet: Packet, origin: int,
               rounds_held: int = 0) -> None:
    """Move one packet as far as it goes this round, charging every hop.

    The packet travels relay by relay within the round; each holder makes
    its own dispatch decision, so a relay inside sink range shortcuts
    directly. A relay that crosses its temperature threshold on reception
    bounces the packet back, the link is marked hot and the sender retries
    its other candidates before buffering the packet.
    """
    cfg = world.cfg
    radio = cfg.radio
    b = packet.size_bits
    current = world.nodes[origin]
    excluded: set = set()
    hops_taken = 0
    att = 0.0

    for _ in range(MAX_HOPS_PER_PACKET):
        if not current.alive:
            _drop(world, packet, "dead_next_hop", at=current.id)
            return
        table = world.tables.get(current.id)
        decision = classify_and_dispatch(current, packet, table, world,
                                         excluded)

        if decision.action is Action.DROP:
            _drop(world, packet, decision.reason, at=current.id)
            return
        if decision.action is Action.HOLD:
            _hold(world, packet, current.id, decision.blockers, rounds_held)
            return

        spend(world, current,
              transmit_energy(b, decision.charge_distance, radio), "data_tx")
        world.data_active.add(current.id)
        world.emit("transmit", frm=current.id, to=decision.next_hop,
                   packet=packet.id, kind=packet.kind.value,
                   dist=decision.distance, boosted=decision.boosted)
        _data_heat(world, current, thermal.HeatEvent.TRANSMIT)
        hops_taken += 1
        att += decision.distance ** 2

        if decision.next_hop == SINK_ID:
            _deliver(world, packet, final_hop=current.id,
                     direct=decision.action is Action.DIRECT,
                     boosted=decision.boosted, hops=hops_taken, att=att)
            return

        nxt = world.nodes[decision.next_hop]
        if nxt.cooloff_remaining > 0:
            # only reachable in the unaware baseline: the relay broke its
            # links, the radio is off, the transmission is simply lost
            _drop(world, packet, "all_links_hot", at=nxt.id)
            return
        spend(world, nxt, receive_energy(b, radio), "data_rx")
        world.data_active.add(nxt.id)
        world.emit("receive", node=nxt.id, frm=current.id, packet=packet.id,
                   kind=packet.kind.value,
                   while_cooling=False)
        if not nxt.alive:
            _drop(world, packet, "dead_next_hop", at=nxt.id)
            return
        _data_heat(world, nxt, thermal.HeatEvent.RECEIVE)

        if nxt.cooloff_remaining > 0:
            # reception pushed the relay over its threshold
            if thermal.thermal_aware(world):
                # bounce the packet back and blacklist the link for the
                # cool-off window; the sender retries its other candidates
                thermal.mark_hot(world, current.id, nxt.id)
                spend(world, nxt,
                      transmit_energy(b, decision.distance, radio), "return_tx")
                _data_heat(world, nxt, thermal.HeatEvent.TRANSMIT)
                world.emit("return", frm=nxt.id, to=current.id,
                           packet=packet.id)
                excluded.add(nxt.id)
                continue
            _drop(world, packet, "all_links_hot", at=nxt.id)
            return

        excluded = set()
        current = nxt

    _drop(world, packet, "no_route", at=current.id)


def generate_traffic(world: World, rng) -> list:
    """One normal packet per alive node (constant bit rate), upgraded to
    critical with probability p_critical; with probability p_ondemand the
    sink polls one random alive node, which emits an extra on-demand
    packet."""
    cfg = world.cfg
    alive = sorted(n.id for n in world.alive_sensors())
    if not alive:
        return []
    packets = []
    for nid in alive:
        kind = PacketKind.CRITICAL if rng.random() < cfg.p_critical \
            else PacketKind.NORMAL
        packets.append(Packet(id=world.next_packet_id, source=nid, kind=kind,
                              size_bits=cfg.radio.packet_bits,
                              created_round=world.round))
        world.next_packet_id += 1
    if rng.random() < cfg.p_ondemand:
        target = rng.choice(alive)
        packets.append(Packet(id=world.next_packet_id, source=target,
                              kind=PacketKind.ON_DEMAND,
                              size_bits=cfg.radio.packet_bits,
                              created_round=world.round))
        world.next_packet_id += 1
    return packets


def held_count(world: World) -> int:
    return sum(len(v) for v in world.held.values())


def step_round(world: World, round_index: int):
    """Execute one round and return (world, MetricsRow)."""
    cfg = world.cfg
    if world.stats is None:
        world.stats = RunStats()
    stats = world.stats
    stats.reset_round()
    world.round = round_index
    world.data_active = set()
    thermal.expire_marks(world)

    # (1) mobility
    if cfg.protocol is Protocol.M_ATTEMPT and round_index > 0 \
            and round_index % cfg.mobility_period == 0:
        event = mobility.mobility_phase(world, world.rng_mobility)
        stats.r_handovers += len(event.handovers)

    # (2) discovery, (3) scheduling. Every node listens for the schedule
    # broadcast whenever the sink reassigns slots.
    if hello_every_round(cfg):
        world.epoch_dirty = True
    if world.epoch_dirty:
        routing.discover(world)
        tdma.assign_slots(world)
        sched_rx = receive_energy(cfg.radio.packet_bits, cfg.radio)
        for node in world.alive_sensors():
            spend(world, node, sched_rx, "sched_rx")
        world.epoch_dirty = False

    # (4) traffic generation
    new_packets = generate_traffic(world, world.rng_traffic)
    stats.r_generated += len(new_packets)
    stats.cum_generated += len(new_packets)

    # (5) dispatch: buffered packets first, then this round's
    pending = {nid: world.held.pop(nid) for nid in sorted(world.held)}
    for nid, items in pending.items():
        for item in items:
            if not world.nodes[nid].alive:
                _drop(world, item.packet, "dead_next_hop", at=nid)
                continue
            _transport(world, item.packet, nid, rounds_held=item.rounds_held)
    for packet in new_packets:
        _transport(world, packet, packet.source)

    # (6) cooling and cool-off countdown. Heat decays continuously: every
    # node sheds dt_cool per round on top of whatever events added.
    for node in world.alive_sensors():
        thermal.heat_on_event(node, thermal.HeatEvent.IDLE, cfg.thermal)
    for node in world.alive_sensors():
        before = node.cooloff_remaining
        thermal.tick_cooloff(node, cfg.thermal)
        if before == 1:
            if node.cooloff_remaining == 0:
                world.emit("cooloff_end", node=node.id)
            else:
                # still above threshold, the window re-armed
                world.emit("cooloff_start", node=node.id,
                           temperature=node.temperature)

    # (7) death bookkeeping
    for nid in list(world.held):
        if not world.nodes[nid].alive:
            for item in world.held.pop(nid):
                _drop(world, item.packet, "dead_next_hop", at=nid)
    died_now = sorted(n.id for n in world.sensors()
                      if n.died_round == round_index)
    if died_now:
        if stats.first_death is None:
            stats.first_death = round_index
        stats.last_death = round_index
        world.epoch_dirty = True

    # (8) metrics
    alive = sum(1 for n in world.sensors() if n.alive)
    row = MetricsRow(
        round=round_index,
        alive=alive,
        dead=cfg.node_count - alive,
        total_energy=sum(n.energy for n in world.sensors()),
        generated=stats.r_generated,
        received=stats.r_received,
        dropped=dict(stats.r_dropped),
        pdr=(stats.cum_received / stats.cum_generated
             if stats.cum_generated else 0.0),
        hot_links=thermal.active_marks(world),
        handovers=stats.r_handovers,
    )
    in_flight = held_count(world)
    if stats.cum_generated != stats.cum_received \
            + sum(stats.cum_dropped.values()) + in_flight:
        raise RuntimeError("packet conservation violated "
                           f"at round {round_index}")
    if world.listener is not None:
        world.emit(
            "round_end", row=row, held=in_flight,
            energies={n.id: n.energy for n in world.sensors()},
            tree={n.id: (n.parent, tuple(n.children))
                  for n in world.sensors()},
            cooling={n.id: n.cooloff_remaining for n in world.sensors()},
            schedule=world.schedule.owners if world.schedule else (),
        )
    return world, row


def run(cfg: SimConfig, listener=None):
    """Run cfg.rounds rounds and return (rows, RunSummary).

    Deterministic for a fixed (cfg, seed). The optional listener receives
    every engine event as listener(event_name, round, fields).
    """
    validate_config(cfg)
    world = build_topology(cfg)
    world.listener = listener
    world.stats = RunStats()
    if listener is not None:
        world.emit(
            "init",
            energies={n.id: n.energy for n in world.sensors()},
            classes={n.id: n.node_class.value for n in world.sensors()},
            positions={n.id: n.position for n in world.sensors()},
            sink=world.sink.position,
        )
    rows = []
    for r in range(1, cfg.rounds + 1):
        rows.append(step_round(world, r)[1])

    stats = world.stats
    stability = stats.first_death if stats.first_death is not None else cfg.rounds
    lifetime = stats.last_death if stats.last_death is not None else cfg.rounds
    summary = RunSummary(
        protocol=cfg.protocol.value,
        stability_period=stability,
        lifetime=lifetime,
        instability_period=lifetime - stability,
        final_pdr=rows[-1].pdr if rows else 0.0,
    )
    return rows, summary


def mean_delivered_hops(stats: RunStats) -> float:
    """Average hop count per delivered packet, the delay proxy."""
    if stats.cum_received == 0:
        return 0.0
    return stats.delivered_hops / stats.cum_received


def energy_report(stats: RunStats) -> EnergyReport:
    """Whole-run transmit/receive energy breakdown."""
    return EnergyReport(tx_joules=stats.tx_joules, rx_joules=stats.rx_joules)
