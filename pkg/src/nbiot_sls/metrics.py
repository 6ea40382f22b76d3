"""Post-processing: coupling-loss CDF, normalized user throughput, eDRX activity and the MCL link budget."""

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import channel

TTI_S = 1e-3
NB_BANDWIDTH_HZ = 180000.0
DIRECTION_NAMES = ("DL", "UL")


class MetricsError(ValueError):
    """A metric cannot be computed from the given input."""


# --- CDFs ----------------------------------------------------------------------


@dataclass(frozen=True)
class CdfSeries:
    values: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) != len(self.fractions):
            raise MetricsError("a CDF needs matching, non-empty value and fraction arrays")
        if np.any(np.diff(self.values) <= 0) or np.any(np.diff(self.fractions) < 0):
            raise MetricsError("CDF values must increase and fractions must not decrease")
        if not math.isclose(float(self.fractions[-1]), 1.0):
            raise MetricsError("a CDF must end at 1.0")

    def at(self, x):
        """Fraction of samples <= ``x``."""
        i = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        out = np.where(i > 0, self.fractions[np.maximum(i - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def below(self, x):
        """Fraction of samples strictly below ``x``."""
        i = np.searchsorted(self.values, np.asarray(x, dtype=float), side="left")
        out = np.where(i > 0, self.fractions[np.maximum(i - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out


def build_cdf(samples):
    """Empirical CDF with ties collapsed onto one point."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise MetricsError("build_cdf needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise MetricsError("samples must be finite")
    values, counts = np.unique(x, return_counts=True)
    fractions = np.cumsum(counts) / x.size
    fractions[-1] = 1.0
    return CdfSeries(values, fractions)


# --- coupling loss -------------------------------------------------------------


def coupling_loss_db(distance, theta, shadow_db, cfg):
    """Large-scale coupling loss: path loss + shadowing + penetration + cable - antenna gains.

    ``distance`` in meters, ``theta`` in degrees off boresight. Fast fading
    is not part of it.
    """
    alpha = channel.coupling_alpha_db(distance, theta, channel.path_loss_params(cfg), channel.antenna_pattern(cfg))
    out = np.asarray(alpha) + np.asarray(shadow_db, dtype=float)
    return out if out.ndim else float(out)


def coupling_cdf(result):
    """CDF of each terminal's coupling loss to its serving sector."""
    return build_cdf(result.coupling_db)


# --- throughput ----------------------------------------------------------------


@dataclass(frozen=True)
class ThroughputStats:
    per_terminal: np.ndarray  # (2, N) bps/Hz; NaN where the terminal was never observed
    observed: np.ndarray  # (N,) bool
    median: tuple  # (DL, UL)
    mean: tuple

    def direction(self, d):
        row = self.per_terminal[DIRECTION_NAMES.index(d) if isinstance(d, str) else d]
        return row[self.observed]


def normalized_throughput(bits, seconds, bandwidth_hz=NB_BANDWIDTH_HZ):
    """Delivered bits per second per hertz."""
    seconds = np.asarray(seconds, dtype=float)
    if np.any(seconds <= 0):
        raise MetricsError("observation time must be positive")
    out = np.asarray(bits, dtype=float) / (seconds * bandwidth_hz)
    return out if out.ndim else float(out)


def normalized_user_throughput(result, bandwidth_hz=NB_BANDWIDTH_HZ):
    """Per-terminal delivered bits over the terminal's awake time and 180 kHz.

    A terminal's observation time is the number of TTIs it spent awake
    (every TTI when power saving is off); terminals never awake during the
    run have no defined throughput and are left out of the statistics.
    """
    awake = np.asarray(result.awake_ttis, dtype=float)
    observed = awake > 0
    if not observed.any():
        raise MetricsError("zero observation time: no terminal was awake during the run")
    per = np.full(np.shape(result.delivered_bits), np.nan)
    per[:, observed] = normalized_throughput(result.delivered_bits[:, observed], awake[observed] * TTI_S,
                                             bandwidth_hz)
    med = tuple(float(np.median(per[d, observed])) for d in range(2))
    mean = tuple(float(np.mean(per[d, observed])) for d in range(2))
    return ThroughputStats(per, observed, med, mean)


def awake_statistics(result):
    """Average number and share of terminals awake per TTI."""
    n = result.config.num_terminals
    mean = result.mean_awake
    return {"mean_awake": float(mean), "awake_share": float(mean / n) if n else 0.0}


# --- link budget ---------------------------------------------------------------


@dataclass(frozen=True)
class LinkBudget:
    direction: str
    tx_power_dbm: float
    thermal_noise_dbm_hz: float
    noise_figure_db: float
    interference_margin_db: float
    bandwidth_hz: float
    effective_noise_dbm: float
    target_snr_db: float
    sensitivity_dbm: float
    process_gain_db: float
    mcl_db: float

    def rows(self):
        """The ten budget rows in table order as (label, value)."""
        return [
            ("tx_power_dbm", self.tx_power_dbm),
            ("thermal_noise_density_dbm_hz", self.thermal_noise_dbm_hz),
            ("noise_figure_db", self.noise_figure_db),
            ("interference_margin_db", self.interference_margin_db),
            ("occupied_bandwidth_hz", self.bandwidth_hz),
            ("effective_noise_power_dbm", self.effective_noise_dbm),
            ("required_snr_db", self.target_snr_db),
            ("receiver_sensitivity_dbm", self.sensitivity_dbm),
            ("process_gain_db", self.process_gain_db),
            ("mcl_db", self.mcl_db),
        ]


def link_budget(direction, cfg, bandwidth_hz=None):
    """Maximum coupling loss budget for one direction.

    Downlink: base-station power over the 180 kHz carrier; uplink: terminal
    power in one subcarrier. ``bandwidth_hz`` overrides the occupied bandwidth.
    """
    d = direction.upper()
    if d == "DL":
        p, nf, bw, snr = cfg.enb_tx_power, cfg.enb_noise_figure, cfg.bandwidth_dl, cfg.target_snr_dl
    elif d == "UL":
        p, nf, bw, snr = cfg.terminal_tx_power, cfg.terminal_noise_figure, cfg.subcarrier_ul, cfg.target_snr_ul
    else:
        raise ValueError(f"direction must be DL or UL, got {direction!r}")
    if bandwidth_hz is not None:
        bw = float(bandwidth_hz)
    if bw <= 0:
        raise ValueError("bandwidth must be positive")
    noise = cfg.thermal_noise_density + nf + cfg.interference_margin + 10.0 * math.log10(bw)
    sens = noise + snr
    mcl = p - sens + cfg.process_gain
    return LinkBudget(d, p, cfg.thermal_noise_density, nf, cfg.interference_margin, bw, noise, snr, sens,
                      cfg.process_gain, mcl)


# --- CSV output ----------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    """UTF-8 CSV with LF line endings; floats are written with full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def write_coupling_cdf(path, cdf):
    return write_csv(path, ["value_db", "fraction"], zip(cdf.values, cdf.fractions))


def write_throughput(path, stats):
    rows = []
    for i in np.flatnonzero(stats.observed):
        for d, name in enumerate(DIRECTION_NAMES):
            rows.append((int(i), name, float(stats.per_terminal[d, i])))
    return write_csv(path, ["terminal_id", "direction", "bps_per_hz"], rows)


def write_summary(path, summary):
    return write_csv(path, ["metric", "value"], summary.items())


def write_link_budget(path, budgets):
    budgets = list(budgets)
    labels = [label for label, _ in budgets[0].rows()]
    rows = []
    for k, label in enumerate(labels):
        rows.append([k + 1, label] + [b.rows()[k][1] for b in budgets])
    return write_csv(path, ["row", "quantity"] + [b.direction for b in budgets], rows)


def merge_results(results):
    """Pool independent replicas into one result: per-terminal arrays are
    concatenated, awake time is summed so ``mean_awake`` stays per TTI."""
    results = list(results)
    if len(results) == 1:
        return results[0]

    def cat(name):
        return np.concatenate([getattr(r, name) for r in results], axis=-1)

    return replace(
        results[0],
        num_ttis=sum(r.num_ttis for r in results),
        terminals=[t for r in results for t in r.terminals],
        serving_sector=cat("serving_sector"),
        coupling_db=cat("coupling_db"),
        delivered_bits=cat("delivered_bits"),
        offered_bits=cat("offered_bits"),
        dropped_bits=cat("dropped_bits"),
        inflight_bits=cat("inflight_bits"),
        transmissions=cat("transmissions"),
        failures=cat("failures"),
        awake_ttis=cat("awake_ttis"),
        awake_sum=sum(r.awake_sum for r in results),
        max_grants_per_tti=max(r.max_grants_per_tti for r in results),
        reports=sum(r.reports for r in results),
        pages=sum(r.pages for r in results),
        ttis_stepped=sum(r.ttis_stepped for r in results),
        grant_trace=None,
        event_trace=None,
        shadowing=None,
    )


def summary_metrics(result, stats=None, cdf=None, replicas=1):
    """Named scalar metrics of one (possibly merged) run, in a fixed order."""
    stats = stats if stats is not None else normalized_user_throughput(result)
    cdf = cdf if cdf is not None else coupling_cdf(result)
    cfg = result.config
    out = {
        "num_terminals": cfg.num_terminals,
        "num_ttis": cfg.num_ttis,
        "replicas": replicas,
        "scheduler": cfg.scheduler,
        "edrx_enabled": cfg.edrx_enabled,
        "rng_seed": cfg.rng_seed,
        "observed_terminals": int(stats.observed.sum()),
        "median_dl_bps_per_hz": stats.median[0],
        "median_ul_bps_per_hz": stats.median[1],
        "mean_dl_bps_per_hz": stats.mean[0],
        "mean_ul_bps_per_hz": stats.mean[1],
        "delivered_dl_bits": int(result.delivered_bits[0].sum()),
        "delivered_ul_bits": int(result.delivered_bits[1].sum()),
        "dropped_dl_bits": int(result.dropped_bits[0].sum()),
        "dropped_ul_bits": int(result.dropped_bits[1].sum()),
        "transmissions_dl": int(result.transmissions[0].sum()),
        "transmissions_ul": int(result.transmissions[1].sum()),
        "failures_dl": int(result.failures[0].sum()),
        "failures_ul": int(result.failures[1].sum()),
    }
    out.update(awake_statistics(result))
    out["coupling_max_db"] = float(cdf.values[-1])
    out["coupling_below_140db"] = cdf.below(140.0)
    return out


def write_run_outputs(directory, result, budgets=None, replicas=1):
    """Write coupling_cdf.csv, throughput.csv, summary.csv and link_budget.csv; returns the summary."""
    directory = Path(directory)
    stats = normalized_user_throughput(result)
    cdf = coupling_cdf(result)
    summary = summary_metrics(result, stats, cdf, replicas)
    if budgets is None:
        budgets = [link_budget("DL", result.config), link_budget("UL", result.config)]
    write_coupling_cdf(directory / "coupling_cdf.csv", cdf)
    write_throughput(directory / "throughput.csv", stats)
    write_summary(directory / "summary.csv", summary)
    write_link_budget(directory / "link_budget.csv", budgets)
    return summary
