import csv
import json
from pathlib import Path

import pytest

from equiflow.cli import main
from equiflow.config import config_from_dict, config_to_dict, default_config, dump_config


@pytest.fixture()
def quick_config_path(tmp_path):
    """Config small enough for CLI round trips in well under a second."""
    cfg = default_config()
    data = config_to_dict(cfg)
    data["env"]["total_to_distribute"] = 120_000
    data["eval"]["total_to_distribute"] = 120_000
    data["eval"]["n_runs"] = 3
    data["hyper"]["episodes"] = 10
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# Config round trips

def test_config_dict_roundtrip():
    cfg = default_config()
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_dump_config_roundtrip(capsys):
    assert main(["dump-config"]) == 0
    text = capsys.readouterr().out
    cfg = config_from_dict(json.loads(text))
    assert cfg == default_config()
    assert dump_config(cfg) == text


def test_dump_config_applies_seed_override(capsys):
    assert main(["dump-config", "--seed", "123"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 123


def test_shipped_default_config_matches_factory():
    data_file = Path(__file__).resolve().parents[1] / "src" / "equiflow" / "data" / "default_config.json"
    assert config_from_dict(json.loads(data_file.read_text())) == default_config()


def test_malformed_config_is_a_clean_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["dump-config", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train

def test_train_smoke_single_episode(tmp_path, quick_config_path):
    out = tmp_path / "model.json"
    assert main(["train", "--config", str(quick_config_path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["format"] == "equiflow-qmodel"
    assert doc["kind"] == "eadql"
    assert doc["qa"]


def test_train_rejects_local_policy(tmp_path, quick_config_path, capsys):
    data = json.loads(quick_config_path.read_text())
    data["policy_kind"] = "local"
    cfg = quick_config_path.parent / "local.json"
    cfg.write_text(json.dumps(data))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m.json")]) == 2
    assert "local" in capsys.readouterr().err


def test_train_adql_requires_epsilon_one(tmp_path, quick_config_path):
    data = json.loads(quick_config_path.read_text())
    data["policy_kind"] = "adql"
    cfg = quick_config_path.parent / "adql.json"
    cfg.write_text(json.dumps(data))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m.json")]) == 2
    data["hyper"]["epsilon"] = 1.0
    cfg.write_text(json.dumps(data))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m.json")]) == 0


# ---------------------------------------------------------------------------
# evaluate

def test_evaluate_local_fixed_scenario(tmp_path, quick_config_path, capsys):
    out = tmp_path / "eval"
    assert main(["evaluate", "--config", str(quick_config_path),
                 "--model", "local", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "policy=local" in printed and "score=" in printed
    series = read_csv(out / "series.csv")
    summary = read_csv(out / "summary.csv")
    assert series[0][:4] == ["step", "reward", "running_average", "violation"]
    assert summary[1][0] == "local"
    assert float(summary[1][1]) == 0.0  # the baseline is the eps=0 behaviour


def test_evaluate_model_and_aggregate_mode(tmp_path, quick_config_path):
    model_path = tmp_path / "model.json"
    assert main(["train", "--config", str(quick_config_path), "--out", str(model_path)]) == 0
    data = json.loads(quick_config_path.read_text())
    data["eval"]["mode"] = "random"
    cfg = quick_config_path.parent / "agg.json"
    cfg.write_text(json.dumps(data))
    out = tmp_path / "eval"
    assert main(["evaluate", "--config", str(cfg), "--model", str(model_path),
                 "--out", str(out), "--runs", "2", "--eps-eval", "0.05"]) == 0
    summary = read_csv(out / "summary.csv")
    assert summary[1][0] == "eadql"
    assert float(summary[1][2]) == 0.05


def test_evaluate_rejects_level_param_mismatch(tmp_path, quick_config_path, capsys):
    model_path = tmp_path / "model.json"
    assert main(["train", "--config", str(quick_config_path), "--out", str(model_path)]) == 0
    data = json.loads(quick_config_path.read_text())
    data["hyper"]["levels"]["hidden"] = 7
    cfg = quick_config_path.parent / "mismatch.json"
    cfg.write_text(json.dumps(data))
    assert main(["evaluate", "--config", str(cfg), "--model", str(model_path),
                 "--out", str(tmp_path / "x")]) == 2
    assert "level bands" in capsys.readouterr().err


def test_saved_model_evaluates_byte_identically(tmp_path, quick_config_path):
    from equiflow.qlearn import load_model, save_model

    model_path = tmp_path / "model.json"
    assert main(["train", "--config", str(quick_config_path), "--out", str(model_path)]) == 0
    copy_path = tmp_path / "copy.json"
    save_model(load_model(model_path), copy_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for model, out in ((model_path, out_a), (copy_path, out_b)):
        assert main(["evaluate", "--config", str(quick_config_path),
                     "--model", str(model), "--out", str(out)]) == 0
    assert (out_a / "series.csv").read_bytes() == (out_b / "series.csv").read_bytes()
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()


# ---------------------------------------------------------------------------
# compare

def test_compare_writes_row_per_policy_and_shared_seed(tmp_path, quick_config_path):
    model_path = tmp_path / "model.json"
    assert main(["train", "--config", str(quick_config_path), "--out", str(model_path)]) == 0
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(quick_config_path), "--out", str(out),
                 "--runs", "2", "local", str(model_path)]) == 0
    summary = read_csv(out / "compare_summary.csv")
    assert len(summary) == 3
    assert summary[1][0] == "local"
    assert summary[2][0].startswith("eadql")
    assert summary[1][7] == summary[2][7]  # shared seed column
    series = read_csv(out / "compare_series.csv")
    assert series[0] == ["policy", "step", "mean_reward"]
    assert {row[0] for row in series[1:]} == {summary[1][0], summary[2][0]}


def test_compare_single_policy_matches_evaluate(tmp_path, quick_config_path):
    data = json.loads(quick_config_path.read_text())
    data["eval"]["mode"] = "random"
    cfg = quick_config_path.parent / "agg.json"
    cfg.write_text(json.dumps(data))
    out_eval, out_cmp = tmp_path / "ev", tmp_path / "cmp"
    assert main(["evaluate", "--config", str(cfg), "--model", "local", "--out", str(out_eval)]) == 0
    assert main(["compare", "--config", str(cfg), "--out", str(out_cmp), "local"]) == 0
    ev = read_csv(out_eval / "summary.csv")[1]
    cmp_row = read_csv(out_cmp / "compare_summary.csv")[1]
    assert ev[4:7] == cmp_row[4:7]  # score, violation_ratio, episode_length
