import csv
import math
import shutil
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nbiot_sls import phy

DL = phy.load_assets()
UL = phy.load_assets(link="ul")

sinr_lists = st.lists(st.floats(1e-4, 1e3, allow_nan=False), min_size=1, max_size=24)


def test_eesm_oracle():
    # -2 ln((e^-2 + e^-0.5) / 2)
    expected = -2.0 * math.log((math.exp(-2.0) + math.exp(-0.5)) / 2.0)
    assert phy.eesm([4.0, 1.0], 2.0) == pytest.approx(expected, rel=1e-12)
    assert phy.eesm([4.0, 1.0], 2.0) == pytest.approx(1.98347, abs=1e-5)


@given(st.floats(1e-4, 1e4), st.integers(1, 24), st.floats(0.1, 10))
def test_eesm_identity(g, n, eta):
    assert phy.eesm([g] * n, eta) == pytest.approx(g)


@given(sinr_lists, st.randoms())
def test_eesm_permutation_invariant(g, rnd):
    h = list(g)
    rnd.shuffle(h)
    assert phy.eesm(h) == pytest.approx(phy.eesm(g), rel=1e-12)


@given(sinr_lists, st.floats(0.1, 10))
def test_eesm_bounds(g, eta):
    e = phy.eesm(g, eta)
    assert min(g) * (1 - 1e-12) <= e <= np.mean(g) * (1 + 1e-12)


def test_eesm_large_sinr_no_underflow():
    assert math.isfinite(phy.eesm([1e6, 2e6]))
    assert phy.eesm([1e6, 2e6]) > 1e6


def test_eesm_errors():
    with pytest.raises(ValueError):
        phy.eesm([])
    with pytest.raises(ValueError):
        phy.eesm([1.0], eta=0)


def test_sinr_per_subcarrier():
    s = phy.sinr_per_subcarrier((0.5, 2.0), [(0.1, 1.0), (0.2, 0.5)], 0.3)
    assert s == pytest.approx(1.0 / (0.1 + 0.1 + 0.3))
    with pytest.raises(ValueError):
        phy.sinr_per_subcarrier((1, 1), [], 0.0)


def test_db_conversions():
    assert phy.db2lin(10.0) == pytest.approx(10.0)
    assert phy.lin2db(100.0) == pytest.approx(20.0)


@pytest.mark.parametrize("assets", [DL, UL])
def test_bler_curves_monotone_and_thresholds_hit_target(assets):
    for mcs in range(phy.N_MCS):
        x = np.linspace(-20, 30, 400)
        b = phy.bler_lookup(assets, mcs, 1, x)
        assert np.all(np.diff(b) <= 1e-15)
        assert phy.bler_lookup(assets, mcs, 1, -100.0) == 1.0
    for cqi in range(1, phy.MAX_CQI + 1):
        thr = assets.cqi_thresholds[cqi - 1]
        assert phy.bler_lookup(assets, cqi, 1, thr) == pytest.approx(phy.CQI_TARGET_BLER, rel=0.02)


def test_higher_mcs_needs_more_sinr():
    assert np.all(np.diff(DL.cqi_thresholds) > 0)
    # a single-tone uplink unit carries fewer data symbols than a downlink subframe
    assert np.all(UL.cqi_thresholds > DL.cqi_thresholds)


@given(st.integers(0, 13), st.floats(-15, 20), st.sampled_from([2, 4, 8, 16]))
def test_repetition_gain(mcs, x, n):
    a = phy.bler_lookup(DL, mcs, n, x)
    b = phy.bler_lookup(DL, mcs, 1, x + 10 * math.log10(n))
    assert a == pytest.approx(b, rel=1e-9)


def test_unknown_mcs():
    with pytest.raises(ValueError):
        phy.bler_lookup(DL, 14, 1, 0.0)


def test_sinr_to_cqi():
    thr = DL.cqi_thresholds
    assert phy.sinr_to_cqi(DL, thr[0] - 0.01) == 0
    assert phy.sinr_to_cqi(DL, thr[0]) == 1
    assert phy.sinr_to_cqi(DL, thr[5] + 1e-6) == 6
    assert phy.sinr_to_cqi(DL, 100.0) == 13
    assert np.all(np.diff(phy.sinr_to_cqi(DL, np.linspace(-20, 30, 200))) >= 0)


def test_tbs_lookup():
    assert phy.tbs_lookup(DL, 0, 1) == 16
    assert phy.tbs_lookup(DL, 13, 10) == 2536
    assert phy.tbs_lookup(DL, 10, 1) == 144
    # no standard column for 7 and 9 subframes: the next lower one is used
    assert phy.tbs_lookup(DL, 5, 7) == phy.tbs_lookup(DL, 5, 6)
    with pytest.raises(IndexError):
        phy.tbs_lookup(DL, 14, 1)
    with pytest.raises(IndexError):
        phy.tbs_lookup(DL, 0, 11)


def test_coin_toss_extremes_and_errors():
    rng = np.random.default_rng(0)
    assert all(phy.decode_coin_toss(0.0, rng) for _ in range(1000))
    assert not any(phy.decode_coin_toss(1.0, rng) for _ in range(1000))
    with pytest.raises(ValueError):
        phy.decode_coin_toss(1.5, rng)


def test_derived_thresholds_match_file():
    derived = phy.load_assets(derive_thresholds=True)
    assert np.allclose(derived.cqi_thresholds, DL.cqi_thresholds, atol=1e-3)


def test_load_assets_rejects_incomplete_tables(tmp_path):
    src = resources.files("nbiot_sls") / "data"
    for name in ("bler_curves.csv", "tbs_table.csv"):
        shutil.copy(str(src / name), tmp_path / name)
    with open(tmp_path / "bler_curves.csv", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r[0] != "13"]
    with open(tmp_path / "bler_curves.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    with pytest.raises(ValueError):
        phy.load_assets(tmp_path)
    with pytest.raises(ValueError):
        phy.load_assets(link="xx")


def test_bler_curve_validation():
    with pytest.raises(ValueError):
        phy.BlerCurve(np.array([0.0, 1.0]), np.array([0.1, 0.5]))
    with pytest.raises(ValueError):
        phy.BlerCurve(np.array([1.0, 0.0]), np.array([0.5, 0.1]))
