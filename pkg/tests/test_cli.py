import argparse
import json
import numpy as np
import pandas as pd
import pytest

from sublaplace.cli.config import (
    EXIT_CONFIG_ERROR,
    EXIT_FALSIFIED,
    EXIT_NUMERIC_FAILURE,
    EXIT_OK,
    ConfigError,
    Experiment,
    load_config,
    parse_config,
)
from sublaplace.cli.experiments import cmd_theory
from sublaplace.cli.handler import ExperimentHandler, aggregate_rows
from sublaplace.cli.main import main, parse_seeds
from sublaplace.theory.ipv import ipv

TINY_SYNTHETIC = {
    "synthetic": {"generator": "smooth_sine", "n_train": 40, "n_test": 12, "input_dim": 2, "noise_std": 0.1},
    "model": {"hidden_widths": [5]},
    "train": {"learning_rate": 0.01, "epochs": 5, "batch_size": 16},
    # p = (2*5 + 5) + (5 + 1) = 21
    "methods": [
        {"method": "gradient_laplace", "k": [3, 21]},
        {"method": "greedy_laplace", "k": [3]},
        {"method": "subnet_diagonal", "k": [3]},
        {"method": "last_k", "k": [3]},
        {"method": "neural_linear"},
    ],
}

TINY_THEORY = {
    "experiment": "theory",
    "seeds": [0],
    "theory": {
        "instances": 2,
        "theorem1_p": 4,
        "theorem2_p": 5,
        "theorem3_p": 5,
        "theorem3_k": 2,
        "classification_p": 3,
    },
}

TINY_BANDIT = {
    "experiment": "bandit",
    "seeds": [0, 1],
    "model": {"hidden_widths": [4]},
    "methods": [{"method": "gradient_laplace", "k": [5, 10]}, {"method": "neural_linear"}, {"method": "map"}],
    "bandit": {"horizon": 21, "agent": {"interact_steps": 5, "sgd_updates": 5, "replay_batch": 16}},
}


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ("SUBLAPLACE_LOG_FILE", "SUBLAPLACE_OUTPUT_DIR", "SUBLAPLACE_JOBS", "SUBLAPLACE_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


def write_config(tmp_path, body, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return path


def run(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), *extra])


def read_shards(directory):
    return {path.name: path.read_bytes() for path in sorted(directory.iterdir())}


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config({"experiment": "theory", "seeds": [0], "colour": "red"})
    with pytest.raises(ConfigError, match="theory"):
        parse_config({"experiment": "theory", "seeds": [0], "theory": {"p": 3}})
    config = write_config(tmp_path, {**TINY_THEORY, "extra": 1})
    assert run("theory", config, tmp_path / "out") == EXIT_CONFIG_ERROR


@pytest.mark.parametrize(
    "body",
    [
        {"experiment": "theory", "seeds": []},
        {"experiment": "theory", "seeds": [1, 1]},
        {"experiment": "theory", "seeds": [-1]},
        {"experiment": "wasserstein", "seeds": [0]},
        {"experiment": "wasserstein", "seeds": [0], **TINY_SYNTHETIC, "prior_precision": 0},
        {"experiment": "wasserstein", "seeds": [0], **TINY_SYNTHETIC, "methods": [{"method": "last_k", "k": [22]}]},
        {"experiment": "wasserstein", "seeds": [0], **TINY_SYNTHETIC, "methods": [{"method": "last_k"}]},
        {"experiment": "coverage", "seeds": [0], **TINY_SYNTHETIC, "coverage": {"ensemble_members": 1}},
        {"experiment": "bandit", "seeds": [0], "methods": [{"method": "thompson"}]},
        {"experiment": "theory", "seeds": [0], "theory": {"theorem1_p": 11}},
    ],
)
def test_invalid_configs(body):
    with pytest.raises(ConfigError):
        parse_config(body)


def test_config_hash_ignores_output_location(tmp_path):
    config = write_config(tmp_path, TINY_THEORY)
    a = load_config(config, Experiment.THEORY, output_dir="a")
    b = load_config(config, Experiment.THEORY, output_dir="b")
    c = load_config(config, Experiment.THEORY, seeds=[3])
    assert a.hash == b.hash != c.hash
    assert c.seeds == (3,)


def test_experiment_mismatch_and_missing_file(tmp_path):
    config = write_config(tmp_path, TINY_THEORY)
    assert run("bandit", config, tmp_path / "out") == EXIT_CONFIG_ERROR
    assert run("theory", tmp_path / "absent.json", tmp_path / "out") == EXIT_CONFIG_ERROR
    (tmp_path / "broken.json").write_text("{")
    assert run("theory", tmp_path / "broken.json", tmp_path / "out") == EXIT_CONFIG_ERROR


def test_parse_seeds():
    assert parse_seeds("3,1,2") == [3, 1, 2]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_seeds("a,b")


def test_theory_run_passes_and_reports(tmp_path):
    out = tmp_path / "out"
    assert run("theory", write_config(tmp_path, TINY_THEORY), out) == EXIT_OK
    for theorem in ("theorem1", "theorem2", "theorem3", "classification"):
        with open(out / f"theory_{theorem}.json") as f:
            body = json.load(f)
        assert body["passed"] and len(body["reports"]) == 2
        assert "worst_margin" in body
    lines = (out / "theory_summary.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    summary = pd.read_csv(out / "theory_summary.csv", comment="#")
    assert summary["passed"].all() and len(summary) == 4


def test_corrupted_ipv_is_a_falsification(tmp_path):
    cfg = parse_config(TINY_THEORY)
    handler = ExperimentHandler(cfg, tmp_path)
    assert cmd_theory(cfg, handler, ipv_fn=lambda instance, S: -ipv(instance, S)) == EXIT_FALSIFIED
    with open(tmp_path / "theory_theorem1.json") as f:
        assert json.load(f)["passed"] is False


def test_wasserstein_shards_are_reproducible(tmp_path):
    config = write_config(tmp_path, {"experiment": "wasserstein", "seeds": [0, 1], "test_subsample": 8, **TINY_SYNTHETIC})
    assert run("wasserstein", config, tmp_path / "first", "--jobs", "2") == EXIT_OK
    assert run("wasserstein", config, tmp_path / "second") == EXIT_OK
    first, second = read_shards(tmp_path / "first"), read_shards(tmp_path / "second")
    assert first == second
    assert set(first) == {
        "wasserstein_seed0.csv",
        "wasserstein_seed0.json",
        "wasserstein_seed1.csv",
        "wasserstein_seed1.json",
        "wasserstein_aggregate.csv",
    }

    frame = pd.read_csv(tmp_path / "first" / "wasserstein_seed0.csv", comment="#")
    assert len(frame) == 6
    full = frame[(frame["method"] == "gradient_laplace") & (frame["k"] == 21)]
    assert full["value"].iloc[0] == pytest.approx(0.0, abs=1e-8)
    with open(tmp_path / "first" / "wasserstein_seed1.json") as f:
        shard = json.load(f)
    assert shard["seed"] == 1 and shard["p"] == 21 and len(shard["test_indices"]) == 8


def test_dataset_run_leaves_input_untouched(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 3))
    data = pd.DataFrame(X, columns=["a", "b", "c"]).assign(target=X[:, 0] - X[:, 2])
    data_path = tmp_path / "data.csv"
    data.to_csv(data_path, sep=";", index=False)
    before = data_path.read_bytes()
    body = {
        "experiment": "wasserstein",
        "seeds": [5],
        "dataset": {"path": str(data_path), "target_column": "target", "delimiter": ";", "test_fraction": 0.2},
        "model": {"hidden_widths": [4]},
        "train": {"epochs": 3},
        "methods": [{"method": "last_k", "k": [2, 21]}, {"method": "subnet_diagonal", "k": [5]}],
    }
    assert run("wasserstein", write_config(tmp_path, body), tmp_path / "out") == EXIT_OK
    assert data_path.read_bytes() == before
    body["methods"] = [{"method": "last_k", "k": [22]}]
    assert run("wasserstein", write_config(tmp_path, body, "too_big.json"), tmp_path / "out") == EXIT_CONFIG_ERROR


def test_coverage_with_ensemble_reference(tmp_path):
    body = {
        "experiment": "coverage",
        "seeds": [0, 1],
        **TINY_SYNTHETIC,
        "methods": [{"method": "gradient_laplace", "k": [3]}],
        "coverage": {"ensemble_members": 2},
    }
    assert run("coverage", write_config(tmp_path, body), tmp_path / "out") == EXIT_OK
    aggregate = pd.read_csv(tmp_path / "out" / "coverage_aggregate.csv", comment="#")
    assert list(aggregate["method"]) == ["full", "gradient_laplace", "deep_ensemble_variance", "deep_ensemble_quantile"]
    assert set(aggregate["seed"]) == {"all"}
    assert aggregate["value"].between(0, 1).all()


def test_divergent_training_is_a_numeric_failure(tmp_path):
    body = {"experiment": "wasserstein", "seeds": [0], **TINY_SYNTHETIC, "train": {"learning_rate": 1e100, "epochs": 3}}
    assert run("wasserstein", write_config(tmp_path, body), tmp_path / "out") == EXIT_NUMERIC_FAILURE


def test_bandit_summary_rows(tmp_path):
    out = tmp_path / "out"
    assert run("bandit", write_config(tmp_path, TINY_BANDIT), out, "--jobs", "3") == EXIT_OK
    summary = pd.read_csv(out / "bandit_summary.csv", comment="#")
    assert list(summary.columns) == ["method", "k", "mean", "ci95"]
    assert list(summary["method"]) == ["gradient_laplace", "gradient_laplace", "neural_linear", "map"]
    assert (out / "bandit_gradient_laplace_k5_seed1.csv").exists()
    assert (out / "bandit_map_seed0.csv").exists()
    with open(out / "bandit_summary.json") as f:
        assert len(json.load(f)["summaries"]) == 4


def test_bandit_horizon_shorter_than_warm_start(tmp_path):
    body = {**TINY_BANDIT, "bandit": {"horizon": 10}}
    assert run("bandit", write_config(tmp_path, body), tmp_path / "out") == EXIT_CONFIG_ERROR


def test_aggregate_rows_reports_cross_seed_spread():
    columns = ["method", "k", "seed", "metric", "value", "stderr"]
    frames = [
        pd.DataFrame([["last_k", 3, seed, "w2", value, 0.0]], columns=columns) for seed, value in ((0, 1.0), (1, 3.0))
    ]
    aggregate = aggregate_rows(frames)
    assert aggregate.loc[0, "value"] == 2.0
    assert aggregate.loc[0, "stderr"] == pytest.approx(1.0)
    assert aggregate.loc[0, "seed"] == "all"
