"""Body-movement repositioning, join-request handover and mobility cost.

Only child nodes move; parents sit at the least mobile spots and keep
their positions. A child whose parent went out of range asks the nearest
eligible upstream node to adopt it, which succeeds while the adopter has
fewer than mu_max registered children. Parents additionally pay a small
per-event energy cost proportional to their drift from the centroid of
their children.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .energy import DomainError, receive_energy, spend, transmit_energy
from .model import NodeClass, Route, SensorNode, World
from .routing import adoption_candidates, link, unlink


@dataclass
class MobilityEvent:
    round: int
    moved: list = field(default_factory=list)       # (id, old pos, new pos)
    handovers: list = field(default_factory=list)   # (child, old parent, new parent)
    rejections: list = field(default_factory=list)  # (child, rejecting node)
    orphans: list = field(default_factory=list)     # child ids left unlinked


def attenuation(route: Route) -> float:
    """Sum of squared per-hop distances, the path attenuation figure."""
    return sum(d * d for d in route.distances)


def parent_centroid(children_positions: list) -> tuple:
    """Arithmetic mean of the attached children's coordinates."""
    if not children_positions:
        raise DomainError("centroid of an empty set")
    n = len(children_positions)
    return (sum(p[0] for p in children_positions) / n,
            sum(p[1] for p in children_positions) / n)


def mobility_cost(v: float, node_pos: tuple, centroid: tuple,
                  v_t: float) -> float:
    """Velocity-scaled distance between a node and its children centroid.

    The effective velocity is clamped at the threshold v_t; the result is
    a dimensionless cost converted to joules by the configured factor.
    """
    if v < 0:
        raise DomainError("velocity must be non-negative")
    v_eff = v if v < v_t else v_t
    return v_eff * math.hypot(node_pos[0] - centroid[0],
                              node_pos[1] - centroid[1])


def _clamp(value, low, high):
    return min(high, max(low, value))


def reposition(world: World, rng) -> MobilityEvent:
    """Move every alive child node by a random displacement of magnitude
    at most velocity * 1 round, clamped to the area. Parents and the sink
    stay put."""
    cfg = world.cfg
    event = MobilityEvent(round=world.round)
    w, h = cfg.area
    movers = [n for n in world.sensors() if n.alive and n.node_class in
              (NodeClass.LEVEL1_CHILD, NodeClass.LEVEL2_CHILD)]
    for node in sorted(movers, key=lambda n: n.id):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        magnitude = rng.uniform(0.0, cfg.velocity)
        old = node.position
        node.x = _clamp(node.x + magnitude * math.cos(angle), 0.0, w)
        node.y = _clamp(node.y + magnitude * math.sin(angle), 0.0, h)
        event.moved.append((node.id, old, node.position))
        world.emit("move", node=node.id, old=old, new=node.position)
    return event


def invitation(child: SensorNode, world: World,
               event: MobilityEvent | None = None) -> int | None:
    """Handover attempt for a child that lost its parent.

    Join requests go to candidates from nearest to farthest; each request
    costs one transmit at the child and one receive at the candidate, an
    acceptance costs the reverse pair. Returns the new parent id, or None
    when every candidate is full and the child is orphaned.
    """
    b = world.cfg.radio.packet_bits
    old_parent = child.parent
    for candidate in adoption_candidates(world, child):
        d = child.distance_to(candidate)
        spend(world, child, transmit_energy(b, d, world.cfg.radio), "join_tx")
        spend(world, candidate, receive_energy(b, world.cfg.radio), "join_rx")
        if not child.alive:
            break
        if len(candidate.children) < world.cfg.mu_max:
            spend(world, candidate, transmit_energy(b, d, world.cfg.radio), "join_tx")
            spend(world, child, receive_energy(b, world.cfg.radio), "join_rx")
            link(world, child, candidate)
            world.emit("handover", child=child.id, old=old_parent,
                       new=candidate.id)
            if event is not None:
                event.handovers.append((child.id, old_parent, candidate.id))
            return candidate.id
        world.emit("rejection", child=child.id, parent=candidate.id)
        if event is not None:
            event.rejections.append((child.id, candidate.id))

    unlink(world, child)
    world.emit("orphan", child=child.id)
    if event is not None:
        event.orphans.append(child.id)
    return None


def mobility_phase(world: World, rng) -> MobilityEvent:
    """One full mobility event: reposition children, run the invitation
    phase for every child whose parent fell out of range, then charge each
    parent its drift cost. Marks the routing epoch dirty."""
    cfg = world.cfg
    event = reposition(world, rng)

    moved_ids = [nid for nid, _, _ in event.moved]
    for nid in moved_ids:
        node = world.nodes[nid]
        if not node.alive:
            continue   # may have died paying an earlier join in this event
        if node.parent is not None:
            parent = world.nodes[node.parent]
            if parent.alive and node.distance_to(parent) <= node.tx_range:
                continue
        invitation(node, world, event)

    for parent in sorted(world.sensors(), key=lambda n: n.id):
        if parent.node_class is not NodeClass.PARENT or not parent.alive:
            continue
        child_positions = [world.nodes[c].position for c in parent.children
                           if world.nodes[c].alive]
        if not child_positions:
            continue
        cost = mobility_cost(cfg.velocity, parent.position,
                             parent_centroid(child_positions),
                             cfg.velocity_threshold)
        spend(world, parent, cost * cfg.mobility_cost_factor, "mobility")

    world.epoch_dirty = True
    return event
