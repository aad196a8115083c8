"""Shared fixtures: assembled simulation worlds with temp audit logs."""

from __future__ import annotations

import itertools

import pytest

from clusterbus.config import build_world


@pytest.fixture
def make_world(tmp_path):
    """Factory for SimWorld instances; audit logs land in tmp_path."""
    worlds = []
    counter = itertools.count()

    def factory(
        addresses=(),
        relay_on=False,
        corruption_probability=0.0,
        seed=1,
        baud=9600,
        timeout_us=100_000,
        retries=2,
        inter_retry_gap_us=10_000,
        state_path=None,
        node_overrides=None,
    ):
        nodes = []
        for address in addresses:
            entry = {"address": address, "relay_on": relay_on}
            if node_overrides and address in node_overrides:
                entry.update(node_overrides[address])
            nodes.append(entry)
        config = {
            "bus": {
                "baud": baud,
                "corruption_probability": corruption_probability,
                "seed": seed,
            },
            "nodes": nodes,
            "policy": {
                "timeout_us": timeout_us,
                "retries": retries,
                "inter_retry_gap_us": inter_retry_gap_us,
            },
            "server": {"state_path": state_path},
        }
        world = build_world(
            config, audit_path=str(tmp_path / f"audit{next(counter)}.ndjson")
        )
        worlds.append(world)
        return world

    yield factory
    for world in worlds:
        world.close()
