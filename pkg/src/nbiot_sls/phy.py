"""Link-to-system abstraction: per-subcarrier SINR, EESM, BLER/CQI/TBS tables and decoding."""

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

N_MCS = 14
MAX_CQI = 13
CQI_TARGET_BLER = 0.1
ETA_QPSK = 2.0


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def sinr_per_subcarrier(signal, interferers, noise_power):
    """SINR of one subcarrier.

    ``signal`` and each interferer are ``(gain, power)`` pairs in linear units;
    arrays broadcast, so a vector of subcarriers can be evaluated at once.
    """
    if np.any(np.asarray(noise_power) <= 0):
        raise ValueError("noise_power must be positive")
    g0, p0 = signal
    interference = 0.0
    for g, p in interferers:
        interference = interference + np.asarray(g) * np.asarray(p)
    return np.asarray(g0) * np.asarray(p0) / (interference + noise_power)


def eesm(gammas, eta=ETA_QPSK):
    """Exponential effective SINR mapping of linear per-subcarrier SINRs.

    gamma_eff = -eta * ln(mean(exp(-gamma_i / eta))), evaluated through
    log-sum-exp so large SINRs do not underflow.
    """
    g = np.asarray(gammas, dtype=float)
    if g.ndim == 0:
        g = g[None]
    if g.size == 0:
        raise ValueError("need at least one subcarrier")
    if eta <= 0:
        raise ValueError("eta must be positive")
    if np.all(g == g[0]):
        # flat channel: the mapping is the identity
        return float(g[0])
    return float(-eta * (logsumexp(-g / eta) - math.log(g.size)))


def eesm_rows(gammas, eta=ETA_QPSK):
    """``eesm`` applied to each row of a (n, n_subcarriers) array."""
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    if g.shape[1] == 0:
        raise ValueError("need at least one subcarrier")
    if eta <= 0:
        raise ValueError("eta must be positive")
    out = g[:, 0].copy()
    rough = ~np.all(g == g[:, :1], axis=1)
    if rough.any():
        r = g[rough]
        lo = r.min(axis=1, keepdims=True)
        # shift by the smallest SINR so the largest exponent is 0
        out[rough] = lo[:, 0] - eta * np.log(np.mean(np.exp(-(r - lo) / eta), axis=1))
    return out


@dataclass(frozen=True)
class BlerCurve:
    snr_db: np.ndarray
    bler: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.snr_db) <= 0):
            raise ValueError("BLER curve SNR points must be strictly increasing")
        if np.any((self.bler < 0) | (self.bler > 1)):
            raise ValueError("BLER values must be in [0, 1]")
        if np.any(np.diff(self.bler) > 0):
            raise ValueError("BLER curve must be non-increasing in SNR")
        object.__setattr__(self, "log_bler", np.log(np.maximum(self.bler, 1e-300)))


@dataclass(frozen=True)
class PhyAssets:
    bler_curves: dict
    cqi_thresholds: np.ndarray  # snr_db for CQI 1..13
    tbs: np.ndarray  # (N_MCS, 10): row mcs, column n_sf - 1
    eta: float = ETA_QPSK


def _interp_log_bler(curve, snr_db):
    out = np.exp(np.interp(snr_db, curve.snr_db, curve.log_bler))
    return np.where(np.asarray(snr_db) < curve.snr_db[0], 1.0, out)


def derive_cqi_thresholds(curves, target=CQI_TARGET_BLER):
    """SNR (dB) at which each MCS 1..13 curve crosses ``target`` BLER."""
    out = []
    for mcs in range(1, N_MCS):
        c = curves[mcs]
        logb = np.log(np.maximum(c.bler, 1e-300))
        # logb is non-increasing; reverse for np.interp
        out.append(float(np.interp(math.log(target), logb[::-1], c.snr_db[::-1])))
    return np.array(out)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_assets(directory=None, derive_thresholds=False, link="dl"):
    """Load ``bler_curves.csv``, ``cqi_thresholds.csv`` and ``tbs_table.csv``.

    With no directory the tables bundled with the package are used. When
    ``derive_thresholds`` is set (or the threshold file is missing) the CQI
    thresholds are computed from the BLER curves. ``link = "ul"`` reads the
    uplink curve and threshold files (``*_ul.csv``) instead.
    """
    link = link.lower()
    if link not in ("dl", "ul"):
        raise ValueError("link must be 'dl' or 'ul'")
    sfx = "_ul" if link == "ul" else ""
    base = Path(directory) if directory is not None else Path(str(resources.files("nbiot_sls") / "data"))
    points = {}
    for row in _read_csv(base / f"bler_curves{sfx}.csv"):
        points.setdefault(int(row["mcs"]), []).append((float(row["snr_db"]), float(row["bler"])))
    if sorted(points) != list(range(N_MCS)):
        raise ValueError("bler_curves.csv must cover MCS 0..13")
    curves = {m: BlerCurve(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
              for m, pts in points.items()}

    tbs = np.zeros((N_MCS, 10), dtype=np.int64)
    for row in _read_csv(base / "tbs_table.csv"):
        tbs[int(row["mcs"]), int(row["n_sf"]) - 1] = int(row["bits"])
    if np.any(tbs <= 0):
        raise ValueError("tbs_table.csv must cover mcs 0..13 x n_sf 1..10")
    if np.any(np.diff(tbs, axis=0) < 0) or np.any(np.diff(tbs, axis=1) < 0):
        raise ValueError("TBS table must be non-decreasing in mcs and n_sf")

    thr_path = base / f"cqi_thresholds{sfx}.csv"
    if derive_thresholds or not thr_path.exists():
        thresholds = derive_cqi_thresholds(curves)
    else:
        rows = sorted(_read_csv(thr_path), key=lambda r: int(r["cqi"]))
        if [int(r["cqi"]) for r in rows] != list(range(1, MAX_CQI + 1)):
            raise ValueError("cqi_thresholds.csv must list CQI 1..13")
        thresholds = np.array([float(r["snr_db"]) for r in rows])
    if np.any(np.diff(thresholds) <= 0):
        raise ValueError("CQI thresholds must be strictly increasing")
    return PhyAssets(curves, thresholds, tbs)


def _check_mcs(mcs):
    if not 0 <= int(mcs) < N_MCS:
        raise ValueError(f"unknown MCS {mcs}")


def bler_lookup(assets, mcs, n_rep, gamma_eff_db):
    """Block error probability for ``mcs`` at effective SINR ``gamma_eff_db``.

    Repetitions act as a 10*log10(n_rep) dB gain. Below the curve BLER is 1;
    above it the last tabulated value holds.
    """
    _check_mcs(mcs)
    x = np.asarray(gamma_eff_db, dtype=float) + 10.0 * math.log10(n_rep)
    out = _interp_log_bler(assets.bler_curves[int(mcs)], x)
    return float(out) if out.ndim == 0 else out


def decode_coin_toss(bler, rng):
    """True when the block decodes: a uniform draw in (0, 1] must exceed ``bler``."""
    if not 0.0 <= bler <= 1.0:
        raise ValueError("bler must be in [0, 1]")
    u = 1.0 - rng.random()
    return bool(u > bler)


def decode_coin_tosses(bler, rng):
    """Vector form of ``decode_coin_toss``; consumes one uniform per entry in order."""
    bler = np.asarray(bler, dtype=float)
    if np.any((bler < 0) | (bler > 1)):
        raise ValueError("bler must be in [0, 1]")
    u = 1.0 - rng.random(bler.shape)
    return u > bler


def sinr_to_cqi(assets, gamma_eff_db):
    """Largest CQI whose threshold does not exceed ``gamma_eff_db`` (0 below all)."""
    x = np.asarray(gamma_eff_db, dtype=float)
    out = np.searchsorted(assets.cqi_thresholds, x, side="right")
    return int(out) if out.ndim == 0 else out


def tbs_lookup(assets, mcs, n_sf):
    if not 0 <= int(mcs) < N_MCS:
        raise IndexError(f"mcs {mcs} out of range 0..13")
    if not 1 <= int(n_sf) <= 10:
        raise IndexError(f"n_sf {n_sf} out of range 1..10")
    return int(assets.tbs[int(mcs), int(n_sf) - 1])
