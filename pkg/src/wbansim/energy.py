"""Closed-form single-hop and multi-hop energy equations.

Per-hop cost is ``b*e_elec + b*e_amp*d**exp`` with the path-loss exponent
fixed at 2 by default; only the amplifier term carries the distance. The
multi-hop closed form assumes the equidistant-hop linear network and must
agree exactly with the hop-by-hop sum.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import RadioParams, SensorNode, World


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


@dataclass(frozen=True)
class EnergyReport:
    """Transmit/receive breakdown of one accounted event group."""

    tx_joules: float
    rx_joules: float

    @property
    def total_joules(self) -> float:
        return self.tx_joules + self.rx_joules


def transmit_energy(b: float, d: float, radio: RadioParams) -> float:
    """Energy to transmit b bits over distance d metres."""
    if b < 0 or d < 0:
        raise DomainError("bits and distance must be non-negative")
    return b * radio.e_elec + b * radio.e_amp * d ** radio.path_loss_exp


def receive_energy(b: float, radio: RadioParams) -> float:
    """Energy for the receiver electronics to take in b bits."""
    if b < 0:
        raise DomainError("bits must be non-negative")
    return b * radio.e_elec


def single_hop_energy(b: float, d: float, radio: RadioParams) -> float:
    """Single-hop delivery cost; identical to one transmission."""
    return transmit_energy(b, d, radio)


def multi_hop_energy(b: float, n: int, d: float, radio: RadioParams) -> float:
    """Delivery cost of b bits over n equidistant hops of length d.

    Closed form ``2*n*b*e_elec + n*b*e_amp*d^2 - b*e_elec``, which equals
    n transmissions plus n-1 intermediate receptions.
    """
    if n < 1:
        raise DomainError("hop count must be at least 1")
    if b < 0 or d < 0:
        raise DomainError("bits and distance must be non-negative")
    amp = b * radio.e_amp * d ** radio.path_loss_exp
    return 2 * n * b * radio.e_elec + n * amp - b * radio.e_elec


def charge_node(node: SensorNode, joules: float, round_index: int | None = None) -> SensorNode:
    """Deduct joules from a node, flooring at zero.

    A node whose energy reaches zero is marked dead and remembers the round
    it died in; dead nodes are never charged again.
    """
    if joules < 0:
        raise DomainError("charge must be non-negative")
    if not node.alive or joules == 0:
        return node
    node.energy = max(0.0, node.energy - joules)
    if node.energy <= 0.0:
        node.energy = 0.0
        node.alive = False
        if node.died_round is None:
            node.died_round = round_index
    return node


def spend(world: World, node: SensorNode, joules: float, kind: str) -> None:
    """Charge a node inside a run, logging the event and any death.

    The sink is never charged (it is mains-fed in this model) and charges
    against already dead nodes are ignored rather than an error.
    """
    if node.id == 0 or not node.alive or joules == 0:
        return
    before = node.energy
    charge_node(node, joules, world.round)
    if world.stats is not None:
        drawn = before - node.energy
        if kind.endswith("_tx"):
            world.stats.tx_joules += drawn
        elif kind.endswith("_rx"):
            world.stats.rx_joules += drawn
    world.emit("charge", node=node.id, kind=kind, joules=joules)
    if not node.alive:
        world.emit("death", node=node.id)
