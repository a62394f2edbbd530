import numpy as np
import pytest
import yaml

from pinchrl.config import ConfigError, ExperimentConfig, config_to_dict, load_config, loads_config, parse_power


def test_empty_file_gives_scenario_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = load_config(path)
    env, ch = cfg.env, cfg.env.channel
    assert ch.beta == 0.05
    assert env.layout.n_waveguides == 2
    assert env.p_bs == pytest.approx(0.1, rel=1e-12)
    assert ch.noise_psd_dbm == -174.0
    assert env.layout.lengths == (100.0, 100.0)
    assert env.layout.heights == (10.0, 10.0)
    assert env.layout.offsets == (0.0, 3.0)
    assert env.layout.pa_counts == (4, 4)
    assert env.r_th == 1.0
    assert ch.alpha == 3.9
    assert cfg.agent.tau_critic == cfg.agent.tau_actor == 0.001
    assert ch.wavelength == 0.0111
    assert env.min_spacing == pytest.approx(0.0111 / 2)
    assert cfg.realizations == 150
    assert cfg == ExperimentConfig()


@pytest.mark.parametrize(
    "text,watts",
    [("-5 dBm", 10 ** (-3.5)), ("20 dBm", 0.1), ("0.25 W", 0.25), ("250 mW", 0.25), (0.3, 0.3), ("1e-2", 0.01)],
)
def test_power_units(text, watts):
    assert parse_power(text) == pytest.approx(watts, rel=1e-12)


def test_power_in_config():
    assert loads_config("env:\n  p_bs: -5 dBm\n").env.p_bs == pytest.approx(10 ** -3.5, rel=1e-12)


def test_bad_power_reported_with_line():
    with pytest.raises(ConfigError) as exc:
        loads_config("seed: 1\nenv:\n  p_bs: 20 dBW\n")
    assert "line 3" in str(exc.value) and "p_bs" in str(exc.value)


def test_unknown_keys_named():
    with pytest.raises(ConfigError) as exc:
        loads_config("env:\n  penalty: 3\nbogus: 1\n")
    msg = str(exc.value)
    assert "env.penalty" in msg and "bogus" in msg
    assert len(exc.value.problems) == 2


def test_invariant_violations_listed_exhaustively():
    text = "env:\n  horizon: 0\n  r_th: -1\nagent:\n  discount: 1.0\n  batch_size: 0\nrealizations: 0\n"
    with pytest.raises(ConfigError) as exc:
        loads_config(text)
    probs = exc.value.problems
    assert any("horizon" in p for p in probs)
    assert any("r_th" in p for p in probs)
    assert any("discount" in p for p in probs)
    assert any("batch_size" in p for p in probs)
    assert any("realizations" in p for p in probs)


def test_parse_error_has_line_info(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("env:\n  p_bs: [1,\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert "line" in str(exc.value)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        loads_config("seed: 1\nseed: 2\n")


def test_sections_override_nested_types():
    cfg = loads_config(
        "layout:\n  pa_counts: [2, 3]\nchannel:\n  beta: 0.1\nagent:\n  hidden: [32, 16]\nsweep:\n  beta: [0.0]\n"
    )
    assert cfg.env.layout.pa_counts == (2, 3)
    assert cfg.env.state_dim == (4 + 5) + 1 + 4 * 5
    assert cfg.env.channel.beta == 0.1
    assert cfg.agent.hidden == (32, 16)
    assert cfg.sweep.beta == (0.0,)


def test_resolved_config_round_trip():
    cfg = loads_config("seed: 9\nenv:\n  p_bs: 17 dBm\n  pen1: 3\nchannel:\n  beta: 0.07\n")
    again = loads_config(yaml.safe_dump(config_to_dict(cfg)))
    assert again == cfg


def test_with_env_routes_beta():
    cfg = ExperimentConfig().with_env(beta=0.1, r_th=2.0)
    assert cfg.env.channel.beta == 0.1 and cfg.env.r_th == 2.0
    assert np.isclose(cfg.env.p_bs, 0.1)
