import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratiflow.harness.config import (
    PRESETS,
    RunConfig,
    coerce,
    dump_config,
    load_config,
    parse_config_text,
    preset,
)


def test_defaults():
    cfg = RunConfig()
    assert cfg.m == 16 and cfg.mode == "nonlinear"
    assert cfg.n_steps == 10000
    assert cfg.bootstrap_hypotheses


@pytest.mark.parametrize("gamma,kappa,ok", [(5.0, 16, True), (5.0, 15, False), (4.0, 20, False), (4.5, 15, True)])
def test_bootstrap_hypotheses(gamma, kappa, ok):
    assert RunConfig(gamma=gamma, kappa=kappa).bootstrap_hypotheses is ok


@pytest.mark.parametrize("bad", [dict(m=0), dict(dt=0.0), dict(t_end=-1.0), dict(epsilon=-1e-3),
                                 dict(mode="chaotic"), dict(output_every=0), dict(checkpoint_every=-1),
                                 dict(kappa=-1)])
def test_validation(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_coerce_types():
    assert coerce("m", "8") == 8 and isinstance(coerce("m", 8.0), int)
    assert coerce("dt", "1e-3") == 1e-3
    assert coerce("epsilon", 0) == 0.0 and isinstance(coerce("epsilon", 0), float)
    assert coerce("mode", "linearized") == "linearized"
    with pytest.raises(ValueError):
        coerce("m", "2.5")


def test_int_and_float_inputs_serialise_identically():
    assert RunConfig(epsilon=0).to_json() == RunConfig(epsilon=0.0).to_json()
    assert RunConfig(m=8.0).to_json() == RunConfig(m=8).to_json()


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError, match="unknown"):
        RunConfig.from_dict({"m": 4, "colour": "blue"})


@given(m=st.integers(1, 64), dt=st.floats(1e-4, 1.0), seed=st.integers(0, 2 ** 31))
def test_dict_roundtrip(m, dt, seed):
    cfg = RunConfig(m=m, dt=dt, seed=seed)
    assert RunConfig.from_dict(json.loads(cfg.to_json())) == cfg


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_valid(name):
    cfg = preset(name)
    assert cfg.mode in ("nonlinear", "linearized", "quasilinear")
    assert preset(name, seed=3).seed == 3


def test_preset_unknown():
    with pytest.raises(ValueError):
        preset("nope")


def test_parse_config_text():
    text = "# comment\nm = 8\ndt=1e-3  # trailing\n\nmode = 'linearized'\nk-energy = 1\n"
    assert parse_config_text(text) == {"m": "8", "dt": "1e-3", "mode": "linearized", "k_energy": "1"}
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("m 8")
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("mass = 8")


def test_load_config_with_preset(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("preset = audit\nm = 4\n")
    cfg = load_config(p, seed=9)
    assert cfg == preset("audit", m=4, seed=9)


def test_dump_then_load(tmp_path):
    cfg = preset("quasilinear", seed=5)
    p = tmp_path / "c.cfg"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


def test_replace():
    cfg = RunConfig().replace(m=4)
    assert cfg.m == 4
    with pytest.raises(ValueError):
        cfg.replace(m=0)
