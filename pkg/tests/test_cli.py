import csv
import json

import numpy as np
import pytest

from ordergraph.cli import main
from ordergraph.graph import load_graph


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("gen", "--d", 4, "--n", 120, "--seed", 1, "--out", root / "gen") == 0
    assert run(
        "train", "--data", root / "gen/data.csv", "--episodes", 40, "--hidden", 16, "--seed", 1, "--out", root / "train"
    ) == 0
    return root


def test_gen_outputs_and_rerun(workspace, tmp_path):
    gen = workspace / "gen"
    assert sorted(p.name for p in gen.iterdir()) == ["data.csv", "manifest.json", "truth.json"]
    assert run("gen", "--d", 4, "--n", 120, "--seed", 1, "--out", tmp_path) == 0
    assert (tmp_path / "data.csv").read_bytes() == (gen / "data.csv").read_bytes()
    assert (tmp_path / "truth.json").read_bytes() == (gen / "truth.json").read_bytes()


def test_gen_manifest_echo(tmp_path):
    assert run("gen", "--d", 20, "--seed", 0, "--out", tmp_path) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["edge_probability"] == pytest.approx(40 / 190)
    assert manifest["config"]["d"] == 20 and manifest["config"]["seed"] == 0


def test_gen_too_few_samples(tmp_path, capsys):
    assert run("gen", "--d", 5, "--n", 1, "--out", tmp_path) == 1
    assert "d+2" in capsys.readouterr().err


def test_train_outputs_and_determinism(workspace, tmp_path):
    out = workspace / "train"
    rows = [json.loads(x) for x in (out / "train_log.jsonl").read_text().splitlines()]
    assert len(rows) == 40 and all(len(r["loss"]) == 4 for r in rows)
    assert run(
        "train", "--data", workspace / "gen/data.csv", "--episodes", 40, "--hidden", 16, "--seed", 1, "--out", tmp_path
    ) == 0
    assert (tmp_path / "checkpoint.json").read_bytes() == (out / "checkpoint.json").read_bytes()


def test_missing_data(tmp_path, capsys):
    assert run("train", "--data", tmp_path / "missing.csv", "--out", tmp_path) == 1
    assert "missing.csv" in capsys.readouterr().err


def test_config_file_and_override(workspace, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(f"[train]\ndata = {workspace / 'gen/data.csv'}\nepisodes = 5\nhidden = 8 8\nlr = 0.01\n")
    assert run("train", "--config", ini, "--episodes", 3, "--out", tmp_path / "a") == 0
    manifest = json.loads((tmp_path / "a/manifest.json").read_text())
    assert manifest["config"]["episodes"] == 3
    assert manifest["config"]["hidden"] == [8, 8] and manifest["config"]["lr"] == 0.01
    assert manifest["config_file"] == str(ini)
    bad = tmp_path / "bad.ini"
    bad.write_text("[train]\nbogus = 1\n")
    assert run("train", "--config", bad, "--data", workspace / "gen/data.csv", "--out", tmp_path / "b") == 1


def test_sample_greedy_eval(workspace, tmp_path):
    data, ckpt = workspace / "gen/data.csv", workspace / "train/checkpoint.json"
    assert run("sample", "--data", data, "--checkpoint", ckpt, "--num-samples", 30, "--k", 4, "--out", tmp_path / "s") == 0
    best = json.loads((tmp_path / "s/best_k.json").read_text())
    assert len(best) == 4 and len(json.loads((tmp_path / "s/samples.json").read_text())) == 30
    scores = [g["score"] for g in best]
    assert scores == sorted(scores, reverse=True)
    assert run("greedy", "--data", data, "--checkpoint", ckpt, "--out", tmp_path / "g") == 0
    load_graph(tmp_path / "g/greedy.json")
    truth = workspace / "gen/truth.json"
    assert run("eval", "--graphs", truth, "--truth", truth, "--out", tmp_path / "e") == 0
    report = json.loads((tmp_path / "e/metrics.json").read_text())
    assert report["shd"] == 0 and report["tpr"] == 1.0
    assert run("eval", "--graphs", tmp_path / "s/best_k.json", "--truth", truth, "--out", tmp_path / "e2") == 0
    assert len(json.loads((tmp_path / "e2/metrics.json").read_text())["per_graph"]) == 4


def test_exact_modes(workspace, tmp_path):
    data = workspace / "gen/data.csv"
    assert run("exact", "--data", data, "--out", tmp_path / "dp") == 0
    post = json.loads((tmp_path / "dp/posterior.json").read_text())
    assert len(post) == 24 and sum(r["probability"] for r in post) == pytest.approx(1.0, abs=1e-9)
    assert (tmp_path / "dp/exact_q.json").exists()


def test_exact_enum_limit(tmp_path, capsys):
    assert run("gen", "--d", 12, "--n", 50, "--out", tmp_path) == 0
    assert run("exact", "--data", tmp_path / "data.csv", "--mode", "enum", "--out", tmp_path / "x") == 1
    assert "--mode dp" in capsys.readouterr().err


def test_compare_probs(workspace, tmp_path):
    data, ckpt = workspace / "gen/data.csv", workspace / "train/checkpoint.json"
    assert run("compare-probs", "--data", data, "--checkpoint", ckpt, "--out", tmp_path) == 0
    with (tmp_path / "compare.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 250
    est = np.array([float(r["estimated"]) for r in rows])
    exact = np.array([float(r["exact"]) for r in rows])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["pearson_r"] == pytest.approx(np.corrcoef(est, exact)[0, 1], abs=1e-12)
