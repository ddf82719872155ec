"""Shared domain types, world state and configuration for the simulator.

Everything here is plain data plus constructors and validation. Behaviour
(energy charging, routing, the round loop) lives in the sibling modules.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum


class NodeClass(Enum):
    SINK = "sink"
    PARENT = "parent"
    LEVEL1_CHILD = "level1"
    LEVEL2_CHILD = "level2"


class PacketKind(Enum):
    NORMAL = "normal"
    CRITICAL = "critical"
    ON_DEMAND = "on-demand"


class Protocol(Enum):
    MULTIHOP = "multihop"
    ATTEMPT = "attempt"
    M_ATTEMPT = "m-attempt"


#: Legal next-hop classes for a data transmission towards the sink. Second
#: level children may attach to either first level children or parents;
#: first level children attach to parents; parents talk to the sink only.
LEGAL_NEXT_HOP = {
    NodeClass.PARENT: (NodeClass.SINK,),
    NodeClass.LEVEL1_CHILD: (NodeClass.PARENT,),
    NodeClass.LEVEL2_CHILD: (NodeClass.LEVEL1_CHILD, NodeClass.PARENT),
    NodeClass.SINK: (),
}

DROP_REASONS = ("no_route", "all_links_hot", "range_exceeded", "dead_next_hop")


class ConfigError(ValueError):
    """A configuration field violates an invariant. `field` names it."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NegativeEnergy(ConfigError):
    pass


class SinkOutsideArea(ConfigError):
    pass


class ZeroNodes(ConfigError):
    pass


class BadProbability(ConfigError):
    pass


@dataclass
class RadioParams:
    """First-order radio model constants and the fixed packet size."""

    e_elec: float = 50e-9      # J/bit spent by TX/RX electronics
    e_amp: float = 100e-12     # J/bit/m^2 spent by the transmit amplifier
    packet_bits: int = 512     # 64 byte packets
    path_loss_exp: float = 2.0


@dataclass
class ThermalParams:
    """Linear heat accumulation/decay constants driving hot-spot detection.

    The defaults make relaying the heating activity: a node sending only
    its own packet sheds more per round than it gains, while forwarding
    even one extra packet adds net heat until the threshold trips.
    """

    t_max: float = 5.0             # node temperature threshold
    dt_tx: float = 0.3             # heat added per packet transmitted
    dt_rx: float = 0.2             # heat added per packet received
    dt_cool: float = 0.4           # heat shed per round of cooling
    cooloff_rounds: int = 2        # rounds a node stays unlinked after t_max
    link_hot_threshold: float = 4.8  # C_T: link considered hot above this


@dataclass
class SensorNode:
    id: int
    node_class: NodeClass
    x: float
    y: float
    energy: float
    tx_range: float
    boosted_range: float
    temperature: float = 0.0
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    alive: bool = True
    cooloff_remaining: int = 0
    died_round: int | None = None

    @property
    def position(self):
        return (self.x, self.y)

    def distance_to(self, other: "SensorNode") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def to_jsonable(self):
        return {
            "id": self.id,
            "class": self.node_class.value,
            "x": self.x,
            "y": self.y,
            "energy": self.energy,
            "temperature": self.temperature,
            "tx_range": self.tx_range,
            "boosted_range": self.boosted_range,
            "parent": self.parent,
            "children": list(self.children),
            "alive": self.alive,
            "cooloff_remaining": self.cooloff_remaining,
            "died_round": self.died_round,
        }


@dataclass(frozen=True)
class Packet:
    id: int
    source: int
    kind: PacketKind
    size_bits: int
    created_round: int


@dataclass(frozen=True)
class Route:
    """Ordered hop sequence ending at the sink, with per-hop distances.

    ``distances[0]`` is the distance from the route owner to ``hops[0]``,
    ``distances[i]`` the distance between ``hops[i-1]`` and ``hops[i]``.
    """

    hops: tuple
    distances: tuple

    def __post_init__(self):
        if len(self.hops) != len(self.distances):
            raise ValueError("hops and distances must have the same length")
        if len(set(self.hops)) != len(self.hops):
            raise ValueError("route contains a loop")

    def __len__(self):
        return len(self.hops)


@dataclass
class SimConfig:
    """Full simulation configuration. Defaults follow the reference desk
    scale setup: 5x5 m field, 10 randomly deployed nodes, central sink,
    0.5 J per node and 5000 rounds."""

    area: tuple = (5.0, 5.0)
    node_count: int = 10
    sink_position: tuple = (2.5, 2.5)
    initial_energy: float | dict = 0.5     # scalar J, or {class: J} map
    rounds: int = 5000
    mobility_period: int = 5
    radio: RadioParams = field(default_factory=RadioParams)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    mu_max: int = 3
    p_critical: float = 0.05
    p_ondemand: float = 0.02
    velocity: float = 1.5              # v_i, m/s of a mobile child node
    velocity_threshold: float = 2.0    # v_t clamp for the mobility cost
    seed: int = 1
    protocol: Protocol = Protocol.M_ATTEMPT
    tx_range: float = 2.75             # T_r, must stay <= 10 m
    boosted_range: float = 10.0        # range for critical/on-demand bursts
    tier_split: tuple | None = None    # parents/level1/level2, default 3/3/4
    candidate_routes: int = 2          # K routes kept per node
    hold_limit: int = 3                # rounds a blocked packet is buffered
    mobility_cost_factor: float = 1e-6  # joules per unit of mobility cost
    hello_mode: str = "auto"           # auto | event | every-round

    def energy_for(self, node_class: NodeClass) -> float:
        if isinstance(self.initial_energy, dict):
            return float(self.initial_energy[node_class.value])
        return float(self.initial_energy)

    def split(self) -> tuple:
        """Tier sizes (parents, level1, level2); derived 30/30/40 when unset."""
        if self.tier_split is not None:
            return tuple(self.tier_split)
        n = self.node_count
        parents = min(n, max(1, round(0.3 * n)))
        level1 = min(n - parents, max(1, round(0.3 * n))) if n > parents else 0
        return (parents, level1, n - parents - level1)


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return cfg unchanged iff every invariant holds, else raise a
    ConfigError subtype naming the offending field."""

    if cfg.node_count <= 0:
        raise ZeroNodes("node_count", "must be at least 1")

    if isinstance(cfg.initial_energy, dict):
        wanted = {NodeClass.PARENT.value, NodeClass.LEVEL1_CHILD.value,
                  NodeClass.LEVEL2_CHILD.value}
        if set(cfg.initial_energy) != wanted:
            raise ConfigError("initial_energy",
                              f"per-class map must have keys {sorted(wanted)}")
        if any(v < 0 for v in cfg.initial_energy.values()):
            raise NegativeEnergy("initial_energy", "must be >= 0")
    elif cfg.initial_energy < 0:
        raise NegativeEnergy("initial_energy", "must be >= 0")

    w, h = cfg.area
    if w <= 0 or h <= 0:
        raise ConfigError("area", "dimensions must be positive")
    sx, sy = cfg.sink_position
    if not (0 <= sx <= w and 0 <= sy <= h):
        raise SinkOutsideArea("sink_position", "must lie inside the area")

    for name, p in (("p_critical", cfg.p_critical),
                    ("p_ondemand", cfg.p_ondemand)):
        if not (0.0 <= p <= 1.0):
            raise BadProbability(name, "must be within [0, 1]")

    r = cfg.radio
    if r.e_elec <= 0 or r.e_amp <= 0:
        raise ConfigError("radio", "e_elec and e_amp must be positive")
    if not (0 < r.packet_bits <= 512):
        raise ConfigError("radio.packet_bits", "must be in (0, 512] bits")
    if r.path_loss_exp <= 0:
        raise ConfigError("radio.path_loss_exp", "must be positive")

    t = cfg.thermal
    if not (t.t_max > t.link_hot_threshold > 0):
        raise ConfigError("thermal", "need t_max > link_hot_threshold > 0")
    if min(t.dt_tx, t.dt_rx, t.dt_cool) < 0:
        raise ConfigError("thermal", "heat deltas must be >= 0")
    if t.cooloff_rounds < 1:
        raise ConfigError("thermal.cooloff_rounds", "must be >= 1")

    if cfg.rounds < 0:
        raise ConfigError("rounds", "must be >= 0")
    if cfg.mobility_period < 1:
        raise ConfigError("mobility_period", "must be >= 1")
    if cfg.mu_max < 1:
        raise ConfigError("mu_max", "must be >= 1")
    if not (0 < cfg.tx_range <= 10.0):
        raise ConfigError("tx_range", "must be in (0, 10] m")
    if not (0 < cfg.boosted_range <= 10.0):
        raise ConfigError("boosted_range", "must be in (0, 10] m")
    if cfg.velocity < 0:
        raise ConfigError("velocity", "must be >= 0")
    if cfg.velocity_threshold <= 0:
        raise ConfigError("velocity_threshold", "must be positive")
    if cfg.candidate_routes < 1:
        raise ConfigError("candidate_routes", "must be >= 1")
    if cfg.hold_limit < 1:
        raise ConfigError("hold_limit", "must be >= 1")
    if cfg.mobility_cost_factor < 0:
        raise ConfigError("mobility_cost_factor", "must be >= 0")
    if cfg.hello_mode not in ("auto", "event", "every-round"):
        raise ConfigError("hello_mode", "must be auto, event or every-round")

    split = cfg.split()
    if len(split) != 3 or any(s < 0 for s in split) or sum(split) != cfg.node_count:
        raise ConfigError("tier_split",
                          f"three tier sizes summing to {cfg.node_count} required")
    return cfg


SINK_ID = 0


@dataclass
class World:
    """Mutable state of one simulation run."""

    cfg: SimConfig
    nodes: dict            # id -> SensorNode, sink included under SINK_ID
    seed: int
    round: int = 0
    rng_traffic: random.Random = None
    rng_mobility: random.Random = None
    # (from_id, to_id) -> last round the hot mark blocks
    hot_marks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)   # id -> NeighborTable
    schedule: object = None
    held: dict = field(default_factory=dict)     # id -> [HeldPacket]
    epoch_dirty: bool = True
    next_packet_id: int = 0
    listener: object = None
    stats: object = None
    data_active: set = field(default_factory=set)

    @property
    def sink(self) -> SensorNode:
        return self.nodes[SINK_ID]

    def sensors(self):
        return [n for i, n in self.nodes.items() if i != SINK_ID]

    def alive_sensors(self):
        return [n for n in self.sensors() if n.alive]

    def distance(self, a: int, b: int) -> float:
        return self.nodes[a].distance_to(self.nodes[b])

    def emit(self, event: str, **fields):
        if self.listener is not None:
            self.listener(event, self.round, fields)

    def to_jsonable(self):
        return {
            "seed": self.seed,
            "round": self.round,
            "protocol": self.cfg.protocol.value,
            "nodes": [self.nodes[i].to_jsonable() for i in sorted(self.nodes)],
        }


def build_topology(cfg: SimConfig, seed: int | None = None) -> World:
    """Place cfg.node_count nodes uniformly at random inside the area and
    classify them by distance rank from the sink: the nearest tier becomes
    parents, then first level children, then second level children.

    Deterministic for a given (cfg, seed); the tree itself (parent links)
    is established by the first discovery pass, not here.
    """
    validate_config(cfg)
    if seed is None:
        seed = cfg.seed
    rng = random.Random(f"{seed}:topology")
    w, h = cfg.area

    sink = SensorNode(
        id=SINK_ID, node_class=NodeClass.SINK,
        x=cfg.sink_position[0], y=cfg.sink_position[1],
        energy=math.inf, tx_range=cfg.tx_range, boosted_range=cfg.boosted_range,
    )
    positions = [(rng.uniform(0, w), rng.uniform(0, h))
                 for _ in range(cfg.node_count)]

    # descending data rate <-> ascending distance from the sink
    by_rank = sorted(range(cfg.node_count),
                     key=lambda i: math.hypot(positions[i][0] - sink.x,
                                              positions[i][1] - sink.y))
    parents, level1, _ = cfg.split()
    classes = {}
    for rank, idx in enumerate(by_rank):
        if rank < parents:
            classes[idx] = NodeClass.PARENT
        elif rank < parents + level1:
            classes[idx] = NodeClass.LEVEL1_CHILD
        else:
            classes[idx] = NodeClass.LEVEL2_CHILD

    nodes = {SINK_ID: sink}
    for i in range(cfg.node_count):
        nid = i + 1
        cls = classes[i]
        nodes[nid] = SensorNode(
            id=nid, node_class=cls,
            x=positions[i][0], y=positions[i][1],
            energy=cfg.energy_for(cls),
            tx_range=cfg.tx_range, boosted_range=cfg.boosted_range,
        )

    return World(
        cfg=cfg, nodes=nodes, seed=seed,
        rng_traffic=random.Random(f"{seed}:traffic"),
        rng_mobility=random.Random(f"{seed}:mobility"),
    )


def clone_config(cfg: SimConfig, **overrides) -> SimConfig:
    """Copy a config with some fields replaced (sub-configs shared)."""
    return replace(cfg, **overrides)
