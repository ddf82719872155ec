"""Sink-assigned TDMA schedule for normal data delivery.

One slot per alive parent node, ordered by node id. A round always holds
the full schedule; slot timing is not modelled. Critical and on-demand
traffic bypasses the schedule entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import NodeClass, World


@dataclass(frozen=True)
class Schedule:
    round: int
    slots: tuple = ()   # ((slot index, node id), ...)

    def slot_of(self, node_id: int) -> int | None:
        for index, owner in self.slots:
            if owner == node_id:
                return index
        return None

    @property
    def owners(self) -> tuple:
        return tuple(owner for _, owner in self.slots)


def assign_slots(world: World) -> Schedule:
    """Build the round's schedule: contiguous slots 0..n-1 over the alive
    parents in ascending id order. Zero alive parents yields an empty
    schedule and normal traffic simply cannot be delivered."""
    parents = sorted(n.id for n in world.sensors()
                     if n.alive and n.node_class is NodeClass.PARENT)
    slots = tuple((index, nid) for index, nid in enumerate(parents))
    schedule = Schedule(round=world.round, slots=slots)
    world.schedule = schedule
    world.emit("schedule", slots=slots)
    return schedule
