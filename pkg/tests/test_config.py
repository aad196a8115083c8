"""Config loading, env override, and world assembly tests."""

from __future__ import annotations

import json
import pathlib

import pytest

from clusterbus.config import (
    DEFAULTS,
    ENV_CONFIG_PATH,
    build_world,
    load_config,
    node_sensor_seed,
)


def test_defaults_without_any_source(monkeypatch):
    monkeypatch.delenv(ENV_CONFIG_PATH, raising=False)
    config = load_config()
    assert config["bus"]["baud"] == 9600
    assert config["policy"]["retries"] == 2
    assert config["nodes"] == []
    assert config is not DEFAULTS  # callers get their own copy


def test_partial_file_overlays_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bus": {"baud": 19200}, "nodes": [{"address": 9}]}))
    config = load_config(str(path))
    assert config["bus"]["baud"] == 19200
    assert config["bus"]["seed"] == 1  # default survives
    assert config["nodes"] == [{"address": 9}]
    assert config["server"]["bind"] == "127.0.0.1:8735"


def test_env_var_supplies_config_path(tmp_path, monkeypatch):
    path = tmp_path / "env-cfg.json"
    path.write_text(json.dumps({"bus": {"seed": 404}}))
    monkeypatch.setenv(ENV_CONFIG_PATH, str(path))
    assert load_config()["bus"]["seed"] == 404


def test_explicit_path_beats_env(tmp_path, monkeypatch):
    env_cfg = tmp_path / "env.json"
    env_cfg.write_text(json.dumps({"bus": {"seed": 1}}))
    flag_cfg = tmp_path / "flag.json"
    flag_cfg.write_text(json.dumps({"bus": {"seed": 2}}))
    monkeypatch.setenv(ENV_CONFIG_PATH, str(env_cfg))
    assert load_config(str(flag_cfg))["bus"]["seed"] == 2


def test_build_world_wires_everything(tmp_path):
    config = {
        "bus": {"baud": 4800, "corruption_probability": 0.0, "seed": 9},
        "nodes": [
            {"address": 3, "temp_baseline": 300, "humid_baseline": 400},
            {"address": 4, "relay_on": True},
        ],
        "policy": {"timeout_us": 200_000, "retries": 1},
        "server": {},
    }
    world = build_world(config, audit_path=str(tmp_path / "a.ndjson"))
    assert world.bus.byte_time_us == 2083
    assert world.node_at(3).temperature_baseline == 300
    assert world.node_at(4).relay_on is True
    assert world.master.policy.timeout_us == 200_000
    assert world.master.policy.retries == 1
    outcome = world.service.power_node(3, "on")
    assert outcome.acked
    world.close()


def test_sensor_seeds_differ_per_node_and_are_stable():
    seeds = {node_sensor_seed(1, a) for a in range(1, 255)}
    assert len(seeds) == 254
    assert node_sensor_seed(7, 42) == node_sensor_seed(7, 42)
    assert node_sensor_seed(7, 42) != node_sensor_seed(8, 42)


def test_bad_node_address_rejected(tmp_path):
    config = {"nodes": [{"address": 300}], "server": {}}
    with pytest.raises(ValueError):
        build_world(config, audit_path=str(tmp_path / "a.ndjson"))


def test_sample_config_in_repo_builds(tmp_path):
    sample = pathlib.Path(__file__).parent.parent / "sample-config.json"
    config = load_config(str(sample))
    world = build_world(config, audit_path=str(tmp_path / "a.ndjson"))
    assert len(world.nodes) == 8
    assert world.service.scan_bus(1, 8) == list(range(1, 9))
    world.close()
