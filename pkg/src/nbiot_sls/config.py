"""Simulation parameters: defaults, validation and the flat ``key = value`` file format."""

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

SUPERFRAME_S = 10.24

_ENUMS = {
    "scheduler": ("RR", "PF"),
    "pattern_plane": ("horizontal", "vertical"),
    "psi_mode": ("derived", "paper_value"),
    "roi": ("center", "all"),
    "fading_model": ("block-rayleigh", "none"),
    "traffic_mode": ("full_buffer", "mar"),
    "harq_combining": ("chase", "none"),
    "co_channel_sectors": ("same_index", "all"),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    """A configuration value is out of range or inconsistent."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class ConfigParseError(ValueError):
    """A configuration file line could not be parsed."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SimConfig:
    # network layout
    num_sites: int = 19
    sectors_per_site: int = 3
    inter_site_distance: float = 1732.0
    roi: str = "center"
    pixel_resolution: float = 5.0
    allow_duplicate_pixels: bool = False
    # radio
    carrier_freq: float = 900.0
    bandwidth_dl: float = 180000.0
    subcarrier_ul: float = 15000.0
    enb_tx_power: float = 43.0
    terminal_tx_power: float = 23.0
    enb_antenna_gain_max: float = 18.0
    terminal_antenna_gain: float = -4.0
    antenna_beamwidth: float = 65.0
    antenna_floor: float = 23.0
    pattern_plane: str = "horizontal"
    enb_noise_figure: float = 5.0
    terminal_noise_figure: float = 3.0
    thermal_noise_density: float = -174.0
    interference_margin: float = 0.0
    target_snr_dl: float = -4.6
    target_snr_ul: float = -11.8
    process_gain: float = 0.0
    # propagation
    cable_loss: float = 3.0
    penetration_loss: float = 20.0
    enb_antenna_height: float = 15.0
    min_link_distance: float = 35.0
    psi_mode: str = "derived"
    psi_fixed_db: float = 178.96
    shadow_std: float = 8.0
    shadow_corr_distance: float = 110.0
    shadow_grid_spacing: float = 20.0
    fading_model: str = "block-rayleigh"
    fading_rho: float = 0.9
    # link abstraction
    eesm_eta: float = 2.0
    ul_mcs_max: int = 10
    dl_n_sf: int = 1
    ul_n_ru: int = 1
    n_rep: int = 1
    n_rep_map: str = ""
    # interference: which sectors of other sites share the carrier, and their load
    co_channel_sectors: str = "same_index"
    dl_load: float = 1.0
    ul_load: float = 1.0
    ul_interferer_pool: int = 64
    # run
    num_terminals: int = 4000
    num_ttis: int = 10000
    scheduler: str = "RR"
    pf_beta: float = 0.01
    pf_epsilon: float = 1e-6
    harq_feedback_delay: int = 4
    harq_max_retx: int = 4
    harq_combining: str = "chase"
    # traffic and power saving
    traffic_mode: str = "full_buffer"
    pareto_min: float = 24.0
    pareto_shape: float = 2.5
    pareto_cap: float = 200.0
    mean_packet_bytes: float = 32.0
    edrx_enabled: bool = True
    edrx_k: int = 1
    ptw_length: float = 2.56
    paging_occasion_interval: int = 10
    connected_timer: float = 10.0
    # execution
    rng_seed: int = 1
    fast_forward: bool = False
    trace: bool = False
    verbose: bool = False

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in _ENUMS:
                normalized = _normalize_enum(f.name, value)
                object.__setattr__(self, f.name, normalized)
            elif f.type is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f.name, f"expected a number, got {value!r}")
                object.__setattr__(self, f.name, float(value))
                if not math.isfinite(value):
                    raise ConfigError(f.name, "must be finite")
            elif f.type is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f.name, f"expected an integer, got {value!r}")
            elif f.type is bool and not isinstance(value, bool):
                raise ConfigError(f.name, f"expected a boolean, got {value!r}")
        _validate(self)

    @property
    def rings(self):
        return {1: 0, 7: 1, 19: 2}[self.num_sites]

    @property
    def edrx_period_ttis(self):
        return int(round((2**self.edrx_k) * SUPERFRAME_S * 1000))

    @property
    def ptw_ttis(self):
        return int(round(self.ptw_length * 1000))

    @property
    def connected_timer_ttis(self):
        return int(round(self.connected_timer * 1000))

    @property
    def ul_tones(self):
        return int(round(self.bandwidth_dl / self.subcarrier_ul))

    @property
    def ru_ttis(self):
        # single-tone resource unit: 8 ms at 15 kHz, 32 ms at 3.75 kHz
        return 8 if self.subcarrier_ul == 15000.0 else 32

    def repetition_map(self):
        """CQI -> number of repetitions; CQIs absent from the map use ``n_rep``."""
        return _parse_rep_map(self.n_rep_map)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _normalize_enum(key, value):
    allowed = _ENUMS[key]
    if not isinstance(value, str):
        raise ConfigError(key, f"expected one of {allowed}")
    for option in allowed:
        if value.lower() == option.lower():
            return option
    raise ConfigError(key, f"{value!r} not in {allowed}")


def _require(cond, key, message):
    if not cond:
        raise ConfigError(key, message)


def _validate(cfg):
    _require(cfg.num_sites in (1, 7, 19), "num_sites", "must be 1, 7 or 19 (0, 1 or 2 rings)")
    _require(1 <= cfg.sectors_per_site <= 6, "sectors_per_site", "must be in [1, 6]")
    _require(cfg.min_link_distance > 0, "min_link_distance", "must be > 0")
    _require(
        cfg.inter_site_distance > 2 * cfg.min_link_distance,
        "inter_site_distance",
        f"must be > 2*min_link_distance = {2 * cfg.min_link_distance}",
    )
    _require(cfg.pixel_resolution > 0, "pixel_resolution", "must be > 0")
    _require(cfg.carrier_freq > 0, "carrier_freq", "must be > 0")
    _require(cfg.enb_antenna_height > 0, "enb_antenna_height", "must be > 0")
    _require(cfg.bandwidth_dl > 0, "bandwidth_dl", "must be > 0")
    _require(cfg.subcarrier_ul in (3750.0, 15000.0), "subcarrier_ul", "must be 15000 or 3750")
    _require(cfg.antenna_beamwidth > 0, "antenna_beamwidth", "must be > 0")
    _require(cfg.antenna_floor >= 0, "antenna_floor", "must be >= 0")
    _require(cfg.shadow_std >= 0, "shadow_std", "must be >= 0")
    _require(cfg.shadow_corr_distance > 0, "shadow_corr_distance", "must be > 0")
    _require(cfg.shadow_grid_spacing > 0, "shadow_grid_spacing", "must be > 0")
    _require(0.0 <= cfg.fading_rho < 1.0, "fading_rho", "must be in [0, 1)")
    _require(cfg.eesm_eta > 0, "eesm_eta", "must be > 0")
    _require(0 <= cfg.ul_mcs_max <= 13, "ul_mcs_max", "must be in [0, 13]")
    _require(1 <= cfg.dl_n_sf <= 10, "dl_n_sf", "must be in [1, 10]")
    _require(1 <= cfg.ul_n_ru <= 10, "ul_n_ru", "must be in [1, 10]")
    _require(1 <= cfg.n_rep <= 128, "n_rep", "must be in [1, 128]")
    try:
        rep = _parse_rep_map(cfg.n_rep_map)
    except ValueError as exc:
        raise ConfigError("n_rep_map", str(exc)) from None
    _require(all(0 <= c <= 13 and 1 <= r <= 128 for c, r in rep.items()),
             "n_rep_map", "CQI keys must be in [0, 13] and repetitions in [1, 128]")
    _require(0.0 <= cfg.dl_load <= 1.0, "dl_load", "must be in [0, 1]")
    _require(0.0 <= cfg.ul_load <= 1.0, "ul_load", "must be in [0, 1]")
    _require(cfg.ul_interferer_pool >= 1, "ul_interferer_pool", "must be >= 1")
    _require(cfg.num_terminals >= 0, "num_terminals", "must be >= 0")
    _require(cfg.num_ttis >= 0, "num_ttis", "must be >= 0")
    _require(0.0 < cfg.pf_beta <= 1.0, "pf_beta", "must be in (0, 1]")
    _require(cfg.pf_epsilon > 0, "pf_epsilon", "must be > 0")
    _require(cfg.harq_feedback_delay >= 1, "harq_feedback_delay", "must be >= 1")
    _require(cfg.harq_max_retx >= 0, "harq_max_retx", "must be >= 0")
    _require(cfg.pareto_min > 0, "pareto_min", "must be > 0")
    _require(cfg.pareto_shape > 0, "pareto_shape", "must be > 0")
    _require(cfg.pareto_cap > cfg.pareto_min, "pareto_cap", "must be > pareto_min")
    _require(cfg.mean_packet_bytes > 0, "mean_packet_bytes", "must be > 0")
    _require(1 <= cfg.edrx_k <= 10, "edrx_k", "must be in [1, 10]")
    _require(cfg.ptw_length > 0, "ptw_length", "must be > 0")
    _require(
        cfg.ptw_ttis <= cfg.edrx_period_ttis,
        "ptw_length",
        f"must not exceed the eDRX period {cfg.edrx_period_ttis / 1000} s",
    )
    _require(cfg.paging_occasion_interval >= 1, "paging_occasion_interval", "must be >= 1")
    _require(cfg.connected_timer > 0, "connected_timer", "must be > 0")
    _require(0 <= cfg.rng_seed < 2**64, "rng_seed", "must be in [0, 2**64)")


def _parse_rep_map(text):
    out = {}
    text = text.strip()
    if not text:
        return out
    for item in text.split(","):
        cqi, _, rep = item.partition(":")
        out[int(cqi)] = int(rep)
    return out


_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def parse_value(key, raw):
    """Convert the textual value of ``key`` to its field type."""
    kind = _FIELD_TYPES[key]
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"invalid boolean {raw!r}")
    if kind is int:
        return int(raw, 0)
    if kind is float:
        return float(raw)
    return raw


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of typed values (no validation)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigParseError(lineno, f"expected 'key = value', got {line!r}")
        if key not in _FIELD_TYPES:
            raise ConfigParseError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ConfigParseError(lineno, f"duplicate key {key!r}")
        try:
            values[key] = parse_value(key, raw)
        except ValueError as exc:
            raise ConfigParseError(lineno, f"{key}: {exc}") from None
    return values


def config_from_text(text, **overrides):
    values = parse_config_text(text)
    values.update(overrides)
    return SimConfig(**values)


def load_config(path, **overrides):
    """Load and validate a config file; ``overrides`` apply before validation."""
    text = Path(path).read_text(encoding="utf-8")
    return config_from_text(text, **overrides)


def dump_config(cfg):
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
