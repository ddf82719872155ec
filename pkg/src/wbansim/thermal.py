"""Per-node temperature tracking, cool-off and link hot-spot marks.

Heat accumulates linearly per communication event and decays on idle
rounds. A node crossing its threshold breaks its links for a fixed number
of rounds; a link over which a packet was bounced back is marked hot for
the same duration. Temperatures are kept in dimensionless heat units.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Protocol, SensorNode, ThermalParams, World


def thermal_aware(world: World) -> bool:
    """Heating and self-protective link breakage are node physics and run
    under every protocol. Awareness, meaning hot-link avoidance, packet
    bounce-back and delay-tolerant buffering, belongs to the proposed
    protocols; the plain multi-hop baseline keeps sending into broken
    links and loses those packets."""
    return world.cfg.protocol is not Protocol.MULTIHOP


class HeatEvent(Enum):
    TRANSMIT = "transmit"
    RECEIVE = "receive"
    IDLE = "idle"


@dataclass(frozen=True)
class LinkHeatState:
    """Snapshot of one directed link's heat status."""

    link: tuple                  # (from_id, to_id)
    heat: float                  # receiver temperature, the L_{i,j} value
    hot: bool
    marked_round: int | None     # round of the hot mark, if any


def heat_on_event(node: SensorNode, event: HeatEvent, thermal: ThermalParams) -> SensorNode:
    """Apply one event's temperature change; idle cooling floors at zero."""
    if event is HeatEvent.TRANSMIT:
        node.temperature += thermal.dt_tx
    elif event is HeatEvent.RECEIVE:
        node.temperature += thermal.dt_rx
    else:
        node.temperature = max(0.0, node.temperature - thermal.dt_cool)
    return node


def check_threshold(node: SensorNode, thermal: ThermalParams) -> SensorNode:
    """Put a node that reached its threshold into cool-off.

    While cooling the node carries no normal traffic; its previous routes
    come back once the counter runs out and the temperature is back below
    the threshold (the counter is re-armed otherwise).
    """
    if node.cooloff_remaining == 0 and node.temperature >= thermal.t_max:
        node.cooloff_remaining = thermal.cooloff_rounds
    return node


def tick_cooloff(node: SensorNode, thermal: ThermalParams) -> SensorNode:
    """End-of-round cool-off countdown, re-arming if still too hot."""
    if node.cooloff_remaining > 0:
        node.cooloff_remaining -= 1
        if node.cooloff_remaining == 0 and node.temperature >= thermal.t_max:
            node.cooloff_remaining = thermal.cooloff_rounds
    return node


def mark_hot(world: World, sender: int, hot_node: int) -> None:
    """Mark the sender->hot_node link unusable for cooloff_rounds rounds,
    counting the current round as the first."""
    expires = world.round + world.cfg.thermal.cooloff_rounds - 1
    world.hot_marks[(sender, hot_node)] = expires
    world.emit("hot_mark", link=(sender, hot_node), expires=expires)


def is_marked_hot(world: World, sender: int, to: int) -> bool:
    expires = world.hot_marks.get((sender, to))
    return expires is not None and world.round <= expires


def link_is_hot(world: World, sender: int, to: int) -> bool:
    """A link is hot when explicitly marked, when its receiver sits above
    the C_T threshold, or when the receiver is in cool-off."""
    if is_marked_hot(world, sender, to):
        return True
    receiver = world.nodes[to]
    if receiver.temperature > world.cfg.thermal.link_hot_threshold:
        return True
    return receiver.cooloff_remaining > 0


def expire_marks(world: World) -> None:
    """Drop hot marks whose blocking window has passed."""
    stale = [k for k, expires in world.hot_marks.items() if world.round > expires]
    for k in stale:
        del world.hot_marks[k]


def active_marks(world: World) -> int:
    return sum(1 for expires in world.hot_marks.values() if world.round <= expires)


def hot_link_states(world: World) -> list:
    """Heat snapshots for all currently marked links."""
    states = []
    for (frm, to), expires in sorted(world.hot_marks.items()):
        if world.round > expires:
            continue
        receiver = world.nodes[to]
        states.append(LinkHeatState(
            link=(frm, to),
            heat=receiver.temperature,
            hot=True,
            marked_round=expires - world.cfg.thermal.cooloff_rounds + 1,
        ))
    return states
