import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbiot_sls.config import (
    ConfigError,
    ConfigParseError,
    SimConfig,
    config_from_text,
    dump_config,
    load_config,
    parse_config_text,
)


def test_defaults():
    c = SimConfig()
    assert (c.num_sites, c.inter_site_distance, c.carrier_freq) == (19, 1732.0, 900.0)
    assert (c.enb_tx_power, c.terminal_tx_power) == (43.0, 23.0)
    assert (c.enb_antenna_gain_max, c.terminal_antenna_gain) == (18.0, -4.0)
    assert (c.shadow_std, c.shadow_corr_distance) == (8.0, 110.0)


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("", encoding="utf-8")
    assert load_config(p) == SimConfig()


def test_edrx_k_out_of_range_names_key(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("edrx_k = 11\n", encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.key == "edrx_k"
    assert "[1, 10]" in str(exc.value)


def test_zero_shadow_std_accepted():
    assert config_from_text("shadow_std = 0").shadow_std == 0.0


def test_overrides_apply_before_validation(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("edrx_k = 11\n", encoding="utf-8")
    assert load_config(p, edrx_k=3).edrx_k == 3


def test_comments_and_whitespace():
    vals = parse_config_text("# header\n  num_terminals = 12   # trailing\n\nscheduler=pf\n")
    assert vals == {"num_terminals": 12, "scheduler": "pf"}
    assert config_from_text("scheduler = pf").scheduler == "PF"


@pytest.mark.parametrize("text, lineno", [
    ("num_terminals 5", 1),
    ("\nnot_a_key = 3", 2),
    ("num_ttis = 1\nnum_ttis = 2", 2),
    ("edrx_enabled = maybe", 1),
    ("num_ttis = 1.5", 1),
])
def test_parse_errors_report_line(text, lineno):
    with pytest.raises(ConfigParseError) as exc:
        parse_config_text(text)
    assert exc.value.lineno == lineno


@pytest.mark.parametrize("key, value", [
    ("num_sites", 5),
    ("sectors_per_site", 0),
    ("subcarrier_ul", 5000.0),
    ("fading_rho", 1.0),
    ("ul_mcs_max", 14),
    ("scheduler", "EDF"),
    ("ptw_length", 30.0),
    ("n_rep_map", "3:0"),
    ("inter_site_distance", 60.0),
])
def test_validation_rejects(key, value):
    with pytest.raises(ConfigError) as exc:
        SimConfig(**{key: value})
    assert exc.value.key == key


def test_type_checks():
    with pytest.raises(ConfigError):
        SimConfig(num_terminals=3.5)
    with pytest.raises(ConfigError):
        SimConfig(edrx_enabled=1)
    with pytest.raises(ConfigError):
        SimConfig(shadow_std=math.inf)


def test_derived_quantities():
    c = SimConfig()
    assert c.edrx_period_ttis == 20480
    assert c.ptw_ttis == 2560
    assert c.connected_timer_ttis == 10000
    assert c.ul_tones == 12 and c.ru_ttis == 8
    assert SimConfig(subcarrier_ul=3750.0).ru_ttis == 32
    assert SimConfig(edrx_k=10).edrx_period_ttis == 1024 * 10240
    assert SimConfig(n_rep_map="0:8, 1:4").repetition_map() == {0: 8, 1: 4}


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(0, 5000),
    k=st.integers(1, 10),
    seed=st.integers(0, 2**63),
    sched=st.sampled_from(["RR", "PF"]),
    std=st.floats(0, 20, allow_nan=False),
)
def test_dump_round_trip(n, k, seed, sched, std):
    c = SimConfig(num_terminals=n, edrx_k=k, rng_seed=seed, scheduler=sched, shadow_std=std)
    assert config_from_text(dump_config(c)) == c
