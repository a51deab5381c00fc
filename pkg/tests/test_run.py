import json

import pytest

from scripts.run import build_parser, main
from src.utils import load_instance


@pytest.fixture(autouse=True)
def offline_wandb(monkeypatch, tmp_path):
    monkeypatch.setenv("WANDB_MODE", "disabled")
    monkeypatch.setenv("WANDB_DIR", str(tmp_path))


def test_generate_writes_instance(tmp_path):
    out = tmp_path / "path.json"
    assert main(["generate", "--kind", "path-family", "--t", "3", "--out", str(out)]) == 0
    instance = load_instance(str(out))
    assert instance.kind == "ca"
    assert len(instance.terminals) == 6


def test_generate_is_reproducible(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        assert main(["generate", "--kind", "random-one-node-cap", "--n", "7", "--seed", "4",
                     "--out", str(path)]) == 0
    assert paths[0].read_text() == paths[1].read_text()


def test_bad_arguments_exit_two(tmp_path):
    assert main(["generate"]) == 2
    assert main(["generate", "--kind", "random-tree"]) == 2
    assert main(["witness", str(tmp_path / "missing.json")]) == 2


def test_reduce_rejects_ca_instances(tmp_path):
    out = tmp_path / "path.json"
    main(["generate", "--kind", "path-family", "--t", "2", "--out", str(out)])
    assert main(["reduce", str(out)]) == 2


def test_reduce_then_solve(tmp_path, capsys):
    source, reduced = tmp_path / "cap.json", tmp_path / "ca.json"
    assert main(["generate", "--kind", "random-one-node-cap", "--n", "6", "--links", "3",
                 "--out", str(source)]) == 0
    assert main(["reduce", str(source), "--out", str(reduced)]) == 0
    assert load_instance(str(reduced)).metadata["source_kind"] == "one-node-cap"
    capsys.readouterr()
    assert main(["solve", str(source), "--json", "--quiet"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["feasible"]
    assert report["cost"] >= 1


def test_witness_report(tmp_path, capsys):
    out = tmp_path / "path.json"
    main(["generate", "--kind", "path-family", "--t", "3", "--out", str(out)])
    capsys.readouterr()
    assert main(["witness", str(out), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["h_average"] == "29/18"
    assert report["passed"]


def test_verify_small_suite(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "--suite", "structural", "path-family", "--trials", "2", "--quiet",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert [suite["suite"] for suite in report["suites"]] == ["structural", "path-family"]


def test_parser_defaults():
    args = build_parser().parse_args(["solve", "instance.json"])
    assert args.k == 4
    assert args.seed == 0
    assert not args.log_wandb


def test_short_flags_are_not_abbreviations():
    args = build_parser().parse_args(["generate", "--kind", "path-family", "--t", "3"])
    assert args.t == 3
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--ta", "x", "generate", "--kind", "path-family"])


def test_generate_leaf_adjacent_block_tap(tmp_path):
    out = tmp_path / "tap.json"
    assert main(["generate", "--kind", "random-block-tap", "--n", "9", "--links", "4", "--leaf-adjacent",
                 "--out", str(out)]) == 0
    instance = load_instance(str(out))
    leaves = {v for v in instance.graph.nodes if instance.graph.degree(v) == 1}
    assert all(u in leaves or v in leaves for u, v in instance.links)
