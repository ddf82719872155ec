import random

import pytest

from wbansim.model import (SINK_ID, NodeClass, SensorNode, SimConfig, World,
                           clone_config, validate_config)


def make_node(nid, node_class, x, y, energy=0.5, tx_range=2.75, boosted=10.0):
    return SensorNode(id=nid, node_class=node_class, x=x, y=y, energy=energy,
                      tx_range=tx_range, boosted_range=boosted)


def make_world(cfg, sensors, seed=0):
    """Hand-built world for toy topologies; node ids must be unique and
    nonzero, the sink comes from cfg.sink_position."""
    validate_config(cfg)
    sink = SensorNode(id=SINK_ID, node_class=NodeClass.SINK,
                      x=cfg.sink_position[0], y=cfg.sink_position[1],
                      energy=float("inf"), tx_range=cfg.tx_range,
                      boosted_range=cfg.boosted_range)
    nodes = {SINK_ID: sink}
    for node in sensors:
        nodes[node.id] = node
    return World(cfg=cfg, nodes=nodes, seed=seed,
                 rng_traffic=random.Random(f"{seed}:traffic"),
                 rng_mobility=random.Random(f"{seed}:mobility"))


@pytest.fixture
def base_cfg():
    return SimConfig()


def cfg_with(**overrides):
    return clone_config(SimConfig(), **overrides)
