import argparse
import json
from fractions import Fraction

import pytest

from src.graphs import PreconditionError
from src.instances import GeneratorSpec, generate
from src.utils import (default_seed, dumps, instance_from_dict, instance_to_dict, load_instance, save_instance,
                       set_config, summary_stats)


def test_instance_file_round_trip(tmp_path):
    instance = generate(GeneratorSpec("random-cacap", cycles=(3, 4), link_count=2, seed=1))
    path = tmp_path / "cacap.json"
    save_instance(instance, str(path))
    loaded = load_instance(str(path))
    assert loaded.kind == "cacap"
    assert loaded.graph == instance.graph
    assert loaded.links == instance.links
    assert loaded.metadata["cycles"] == [3, 4]


def test_ca_roles():
    doc = instance_to_dict(generate(GeneratorSpec("path-family", t=2)))
    roles = {node["id"]: node["role"] for node in doc["nodes"]}
    assert roles[0] == roles[1] == "steiner"
    assert doc["terminals"] == [2, 3, 4, 5]
    assert instance_from_dict(doc).terminals == (2, 3, 4, 5)


@pytest.mark.parametrize("broken", [
    {"format_version": 2},
    {"kind": "tap"},
    {"edges": [[0, 7]]},
    {"nodes": [{"id": 0, "role": "terminal"}, {"id": 2, "role": "steiner"}]},
    {"terminals": [0]},
])
def test_malformed_documents_are_rejected(broken):
    doc = instance_to_dict(generate(GeneratorSpec("path-family", t=2)))
    doc.update(broken)
    with pytest.raises(PreconditionError):
        instance_from_dict(doc)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(PreconditionError):
        load_instance(str(path))


def test_dumps_writes_fractions_exactly():
    doc = json.loads(dumps({"h": Fraction(29, 18), "nodes": {3, 1}}))
    assert doc["h"]["value"] == "29/18"
    assert doc["h"]["float"] == pytest.approx(29 / 18)
    assert doc["nodes"] == [1, 3]


def test_summary_stats():
    stats = summary_stats([1, 2, 3])
    assert stats["mean"] == 2
    assert stats["max"] == 3
    assert summary_stats([]) == {"count": 0}


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("AUGUR_SEED", "7")
    assert default_seed() == 7
    monkeypatch.setenv("AUGUR_SEED", "seven")
    with pytest.raises(PreconditionError):
        default_seed()


def test_config_defaults():
    config = set_config(argparse.Namespace(k=3, exact=True))
    assert config["rounding"]["k"] == 3
    assert config["lp"]["exact"]
    assert config["steiner"]["exact_cap"] == 10
