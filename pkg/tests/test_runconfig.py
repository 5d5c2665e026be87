"""Tests for runconfig.py"""

import json
from argparse import Namespace

import pytest


def _args(**kw):
    base = dict(d=None, N=None, eps=None, trials=None, seed=None, dense_budget=None,
                format=None, out=None, config=None, workers=None)
    base.update(kw)
    return Namespace(**base)


# ─── Grid parsing ────────────────────────────────────────────────────────────

def test_parse_single_list_and_range():
    from pbsp_sim.runconfig import parse_int_grid
    assert parse_int_grid("3") == (3,)
    assert parse_int_grid("3,1,2") == (1, 2, 3)
    assert parse_int_grid("1..4") == (1, 2, 3, 4)
    assert parse_int_grid("1..3,5,2") == (1, 2, 3, 5)
    assert parse_int_grid([2, "4"]) == (2, 4)
    assert parse_int_grid(7) == (7,)


def test_parse_grid_rejects_garbage():
    from pbsp_sim.runconfig import parse_int_grid
    from pbsp_sim.common.errors import UsageError
    for bad in ("a", "4..1", "1,,2", True, 1.5):
        with pytest.raises(UsageError):
            parse_int_grid(bad, "N")


def test_parse_float_list_keeps_order():
    from pbsp_sim.runconfig import parse_float_list
    assert parse_float_list("0.2,0.1,0.2") == (0.2, 0.1)
    assert parse_float_list([0.5]) == (0.5,)


def test_parse_float_list_rejects_garbage():
    from pbsp_sim.runconfig import parse_float_list
    from pbsp_sim.common.errors import UsageError
    with pytest.raises(UsageError):
        parse_float_list("0.1,x")


# ─── Config files ────────────────────────────────────────────────────────────

def test_load_config_file(tmp_path):
    from pbsp_sim.runconfig import load_config_file
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"d": [2, 3], "N": "1..2", "seed": 7}))
    assert load_config_file(str(path)) == {"d": [2, 3], "N": "1..2", "seed": 7}
    assert load_config_file(None) == {}


def test_load_config_file_rejects_unknown_keys(tmp_path):
    from pbsp_sim.runconfig import load_config_file
    from pbsp_sim.common.errors import UsageError
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"dims": [2]}))
    with pytest.raises(UsageError):
        load_config_file(str(path))


def test_load_config_file_rejects_bad_json(tmp_path):
    from pbsp_sim.runconfig import load_config_file
    from pbsp_sim.common.errors import UsageError
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(UsageError):
        load_config_file(str(path))
    with pytest.raises(UsageError):
        load_config_file(str(tmp_path / "missing.json"))


def test_load_config_file_needs_object(tmp_path):
    from pbsp_sim.runconfig import load_config_file
    from pbsp_sim.common.errors import UsageError
    path = tmp_path / "run.json"
    path.write_text("[1, 2]")
    with pytest.raises(UsageError):
        load_config_file(str(path))


# ─── RunConfig ───────────────────────────────────────────────────────────────

def test_defaults():
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.common.config import Config
    config = build_run_config(_args(), "table")
    assert config.d_list == Config.default_d_list
    assert config.seed == Config.default_seed
    assert config.output_format == "csv"
    assert config.out is None


def test_flags_override_config_file(tmp_path):
    from pbsp_sim.runconfig import build_run_config
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"d": "2..4", "N": [1], "seed": 7, "format": "json"}))
    config = build_run_config(_args(config=str(path), seed=9, N="2,3"), "table")
    assert config.d_list == (2, 3, 4)
    assert config.n_list == (2, 3)
    assert config.seed == 9
    assert config.output_format == "json"


def test_out_path(tmp_path):
    from pbsp_sim.runconfig import build_run_config
    config = build_run_config(_args(out=str(tmp_path / "r.csv")), "sample")
    assert config.out == tmp_path / "r.csv"


def test_validation_errors():
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.common.errors import UsageError
    for kw in (dict(d="1"), dict(N="0"), dict(eps="1.5"), dict(trials=0), dict(workers=0),
               dict(format="xml"), dict(seed=-1), dict(dense_budget=0)):
        with pytest.raises(UsageError):
            build_run_config(_args(**kw), "table")


def test_dense_ok():
    from pbsp_sim.runconfig import RunConfig
    config = RunConfig("table", dense_budget=64)
    assert config.dense_ok(64)
    assert not config.dense_ok(65)


def test_perturb_passed_through():
    from pbsp_sim.runconfig import build_run_config
    args = _args()
    args.perturb = 1.05
    assert build_run_config(args, "verify").perturb == pytest.approx(1.05)


# ─── Environment overrides ───────────────────────────────────────────────────

def test_env_int_override(monkeypatch):
    from pbsp_sim.common.config import _env_int
    monkeypatch.setenv("PBSP_SIM_SEED", "123")
    assert _env_int("PBSP_SIM_SEED", 42) == 123
    monkeypatch.setenv("PBSP_SIM_SEED", "not-a-number")
    assert _env_int("PBSP_SIM_SEED", 42) == 42
    monkeypatch.delenv("PBSP_SIM_SEED")
    assert _env_int("PBSP_SIM_SEED", 42) == 42
