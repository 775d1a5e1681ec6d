import json
import os

import numpy as np
import pytest
import yaml

from impact_hedge.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigError,
    main,
    parse_config,
    parse_config_data,
    run_scenario,
    serialize_config,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "configs")

MINIMAL = {
    "model": {"f0": 0.0, "horizon": 1.0},
    "driver": {"kind": "zero"},
    "payoffs": {},
    "grids": {
        "space": {"x_min": -3.0, "x_max": 3.0, "nx": 61, "nt": 30},
        "volume": {"y_min": -1.0, "y_max": 1.0, "n": 5},
    },
}


def test_minimal_config_parses_with_defaults():
    cfg = parse_config_data(MINIMAL)
    assert cfg.model.drift(0.0, 0.0) == 0.0  # drift defaults to 0
    assert cfg.model.vol(0.0, 0.0) == 1.0
    assert cfg.n_paths == 100 and cfg.seed == 0
    assert cfg.precision == 17


def test_negative_gamma_names_field_path():
    bad = dict(MINIMAL, driver={"kind": "quadratic", "gamma": -1.0})
    with pytest.raises(ConfigError) as exc:
        parse_config_data(bad)
    assert any("driver.gamma" in e for e in exc.value.errors)


def test_all_errors_reported_at_once():
    bad = dict(MINIMAL)
    bad = json.loads(json.dumps(bad))
    bad["driver"] = {"kind": "quadratic", "gamma": -1.0}
    bad["model"] = {"f0": "zero", "horizon": -2.0}
    with pytest.raises(ConfigError) as exc:
        parse_config_data(bad)
    paths = " ".join(exc.value.errors)
    assert "driver.gamma" in paths and "model.f0" in paths and "model.horizon" in paths


def test_put_block_fixture_round_trip():
    cfg = parse_config(os.path.join(FIXTURES, "put_block.yaml"))
    assert cfg.put_block.lam == 10.0
    assert cfg.put_block.gamma == 0.1
    assert cfg.put_block.K == 100.0


def test_serialize_parse_fixed_point():
    cfg = parse_config(os.path.join(FIXTURES, "affine_market.yaml"))
    text = serialize_config(cfg)
    cfg2 = parse_config_data(yaml.safe_load(text))
    assert serialize_config(cfg2) == text
    assert cfg2.digest == cfg.digest


def test_missing_blocks_reported_per_subcommand():
    cfg = parse_config_data({"output": {"directory": "out"}})
    with pytest.raises(ConfigError) as exc:
        run_scenario(cfg, "quote")
    assert any("model" in e for e in exc.value.errors)


def test_quote_run_and_outputs(tmp_path):
    rc = main(["quote", "--config", os.path.join(FIXTURES, "affine_market.yaml"),
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    curve = (tmp_path / "curve.csv").read_text().splitlines()
    assert curve[0] == "z,y,price"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["subcommand"] == "quote"
    assert "numpy" in manifest["versions"]
    assert "wall" not in json.dumps(manifest)  # deterministic manifest


def test_hedge_with_no_liability_costs_nothing(tmp_path):
    data = json.loads(json.dumps(MINIMAL))
    data["driver"] = {"kind": "quadratic", "gamma": 0.5}
    data["payoffs"] = {
        "h_M": {"kind": "affine", "a0": 0.0, "a1": 0.0},
        "s": {"kind": "affine", "a0": 0.0, "a1": 1.0},
        "h_L": {"kind": "affine", "a0": 0.0, "a1": 0.0},
    }
    cfg = parse_config_data(data)
    report, artifacts = run_scenario(cfg, "hedge")
    assert report.metrics["initial_cost"] == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(artifacts["plan"].strategy_field, 0.0, atol=1e-7)


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("driver: {kind: quadratic, gamma: -3}\n")
    rc = main(["quote", "--config", str(bad)])
    assert rc == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path):
    # a volume grid far too narrow for the liability saturates the inversion
    data = json.loads(json.dumps(MINIMAL))
    data["driver"] = {"kind": "quadratic", "gamma": 0.5}
    data["payoffs"] = {
        "h_M": {"kind": "affine", "a0": 0.0, "a1": 0.0},
        "s": {"kind": "affine", "a0": 0.0, "a1": 1.0},
        "h_L": {"kind": "logcosh_put", "lam": 5.0, "gamma": 0.5, "k": 0.0, "scale": -1.0},
    }
    data["grids"]["volume"] = {"y_min": -0.2, "y_max": 0.2, "n": 3}
    cfg_file = tmp_path / "saturating.yaml"
    cfg_file.write_text(yaml.safe_dump(data))
    rc = main(["hedge", "--config", str(cfg_file), "--out", str(tmp_path / "o")])
    assert rc == EXIT_NUMERICAL


def test_io_failure_exit_code(tmp_path):
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory")
    rc = main(["esscher", "--config", os.path.join(FIXTURES, "esscher.yaml"),
               "--out", str(target)])
    assert rc == EXIT_IO


def test_env_var_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("IMPACT_HEDGE_OUT", str(tmp_path / "envout"))
    data = json.loads(json.dumps(MINIMAL))
    data["esscher"] = {
        "measure": {"kind": "atoms", "points": [0.0, 1.0], "weights": [0.5, 0.5]},
        "y_grid": {"min": -5.0, "max": 5.0, "n": 11},
    }
    cfg = parse_config_data(data)
    assert cfg.out_dir == str(tmp_path / "envout")


def test_seed_override(tmp_path):
    cfg_path = os.path.join(FIXTURES, "affine_market.yaml")
    cfg = parse_config(cfg_path)
    assert cfg.seed == 0
