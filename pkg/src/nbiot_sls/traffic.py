"""Periodic uplink-report traffic with truncated-Pareto payloads, and the eDRX sleep/paging machine."""

import math
from dataclasses import dataclass, replace

import numpy as np

SUPERFRAME_TTIS = 10240  # 1024 frames x 10 subframes
FRAME_TTIS = 10
TTIS_PER_SECOND = 1000

MAR_PERIODS_S = (86400, 7200, 3600, 1800)
MAR_SHARES = (0.40, 0.40, 0.15, 0.05)

IDLE_SLEEP = "IDLE_SLEEP"
PTW_MONITOR = "PTW_MONITOR"
CONNECTED = "CONNECTED"
PHASES = (IDLE_SLEEP, PTW_MONITOR, CONNECTED)
_IDLE, _PTW, _CONN = 0, 1, 2


# --- periodic reports -----------------------------------------------------------


@dataclass
class MarProfile:
    """Report period classes and each terminal's class and phase (both in TTIs)."""

    periods_s: tuple
    shares: tuple
    terminal_class: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        if abs(sum(self.shares) - 1.0) > 1e-9:
            raise ValueError("class shares must sum to 1")

    @property
    def period_ttis(self):
        return np.asarray(self.periods_s, dtype=np.int64)[self.terminal_class] * TTIS_PER_SECOND


def class_counts(n, shares):
    """Split ``n`` terminals over classes by largest remainder."""
    raw = np.asarray(shares, dtype=float) * n
    counts = np.floor(raw).astype(np.int64)
    rest = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:rest]] += 1
    return counts


def assign_mar_profile(n, rng, periods_s=MAR_PERIODS_S, shares=MAR_SHARES):
    counts = class_counts(n, shares)
    cls = rng.permutation(np.repeat(np.arange(len(periods_s)), counts))
    period = np.asarray(periods_s, dtype=np.int64)[cls] * TTIS_PER_SECOND
    phase = (rng.random(n) * period).astype(np.int64)
    return MarProfile(tuple(periods_s), tuple(shares), cls, phase)


def next_report_time(profile, terminal, now):
    """First report TTI strictly after ``now``: phase + m * period."""
    period = int(profile.periods_s[profile.terminal_class[terminal]]) * TTIS_PER_SECOND
    phase = int(profile.phase[terminal])
    if now < phase:
        return phase
    return phase + ((now - phase) // period + 1) * period


def average_report_rate(periods_s=MAR_PERIODS_S, shares=MAR_SHARES):
    """Population-average report rate in packets per second per terminal."""
    return float(sum(s / p for p, s in zip(periods_s, shares)))


def average_bit_rate(mean_packet_bytes, periods_s=MAR_PERIODS_S, shares=MAR_SHARES):
    return average_report_rate(periods_s, shares) * mean_packet_bytes * 8.0


def total_bit_rate(n_terminals, mean_packet_bytes, periods_s=MAR_PERIODS_S, shares=MAR_SHARES):
    return n_terminals * average_bit_rate(mean_packet_bytes, periods_s, shares)


# --- payload sizes -------------------------------------------------------------


@dataclass(frozen=True)
class PacketSizeModel:
    """Pareto payload (bytes) conditioned on not exceeding ``cap``."""

    minimum: float = 24.0
    shape: float = 2.5
    cap: float = 200.0

    def __post_init__(self):
        if not 0 < self.minimum < self.cap or self.shape <= 0:
            raise ValueError("need 0 < minimum < cap and shape > 0")

    @property
    def _mass(self):
        return 1.0 - (self.minimum / self.cap) ** self.shape

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.minimum, self.cap)
        return (1.0 - (self.minimum / x) ** self.shape) / self._mass

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return self.minimum / (1.0 - u * self._mass) ** (1.0 / self.shape)

    def mean(self):
        a, m, c = self.shape, self.minimum, self.cap
        if a == 1.0:
            body = m * math.log(c / m)
        else:
            body = a * m**a / (a - 1.0) * (m ** (1.0 - a) - c ** (1.0 - a))
        return body / self._mass


def draw_packet_size(model, rng, size=None):
    """Inverse-transform draw(s) in [minimum, cap] bytes."""
    out = model.quantile(rng.random(size))
    return float(out) if size is None else out


def packet_bits(size_bytes):
    return np.ceil(np.asarray(size_bytes)).astype(np.int64) * 8


# --- eDRX ------------------------------------------------------------------------


def edrx_period_ttis(k):
    if not 1 <= k <= 10:
        raise ValueError("eDRX exponent k must be in 1..10")
    return (2**k) * SUPERFRAME_TTIS


def paging_offsets(n, k):
    """Cycle offset (TTIs) per terminal.

    Terminals go to superframe ``id mod 2**k`` and, within it, are spread
    evenly over the 1024 frames.
    """
    n_sf = 2**k
    ids = np.arange(n)
    per_sf = max(1, -(-n // n_sf))
    frame = (ids // n_sf) * 1024 // per_sf
    return ((ids % n_sf) * 1024 + frame) * FRAME_TTIS


@dataclass(frozen=True)
class EdrxState:
    phase: str
    edrx_period: int  # TTIs
    ptw_length: int  # TTIs
    offset: int  # cycle start (TTIs)
    po_interval: int = 10
    connected_ttis: int = 10000
    timer: int = 0

    @property
    def edrx_period_s(self):
        return self.edrx_period / TTIS_PER_SECOND

    def ptw_window(self, t):
        """[start, end) of the paging window of the cycle containing ``t``."""
        start = t - (t - self.offset) % self.edrx_period
        return start, start + self.ptw_length

    @property
    def awake(self):
        return self.phase != IDLE_SLEEP


def init_edrx_state(offset, t0, edrx_period, ptw_length, po_interval=10, connected_ttis=10000):
    tau = (t0 - offset) % edrx_period
    phase = PTW_MONITOR if tau < ptw_length else IDLE_SLEEP
    return EdrxState(phase, edrx_period, ptw_length, int(offset), po_interval, connected_ttis)


def edrx_step(state, t, paging_pending):
    """Advance one terminal by one TTI; at most one transition per step."""
    tau = (t - state.offset) % state.edrx_period
    if state.phase == IDLE_SLEEP:
        if tau == 0:
            return replace(state, phase=PTW_MONITOR)
        return state
    if state.phase == PTW_MONITOR:
        if tau >= state.ptw_length:
            return replace(state, phase=IDLE_SLEEP)
        if paging_pending and tau % state.po_interval == 0:
            return replace(state, phase=CONNECTED, timer=state.connected_ttis)
        return state
    if paging_pending:
        return replace(state, timer=state.connected_ttis)
    if state.timer <= 1:
        return replace(state, phase=IDLE_SLEEP, timer=0)
    return replace(state, timer=state.timer - 1)


class EdrxPopulation:
    """Vectorized ``edrx_step`` over all terminals.

    ``step`` returns the masks of terminals that woke, slept (window end or
    timer expiry), connected on a page, or had their timer expire.
    """

    def __init__(self, offsets, edrx_period, ptw_length, po_interval=10, connected_ttis=10000,
                 enabled=True, t0=0):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.edrx_period = int(edrx_period)
        self.ptw_length = int(ptw_length)
        self.po_interval = int(po_interval)
        self.connected_ttis = int(connected_ttis)
        self.enabled = enabled
        n = len(self.offsets)
        self.timer = np.zeros(n, dtype=np.int64)
        if enabled:
            tau = (t0 - self.offsets) % self.edrx_period
            self.phase = np.where(tau < self.ptw_length, _PTW, _IDLE).astype(np.int8)
        else:
            self.phase = np.full(n, _CONN, dtype=np.int8)
        self.awake = self.phase != _IDLE

    @classmethod
    def from_config(cls, cfg, n=None, t0=0):
        n = cfg.num_terminals if n is None else n
        return cls(paging_offsets(n, cfg.edrx_k), cfg.edrx_period_ttis, cfg.ptw_ttis,
                   cfg.paging_occasion_interval, cfg.connected_timer_ttis, cfg.edrx_enabled, t0)

    def state(self, i):
        return EdrxState(PHASES[self.phase[i]], self.edrx_period, self.ptw_length, int(self.offsets[i]),
                         self.po_interval, self.connected_ttis, int(self.timer[i]))

    def step(self, t, paging_pending):
        n = len(self.phase)
        if not self.enabled:
            none = np.zeros(n, dtype=bool)
            return none, none, none, none
        pend = np.asarray(paging_pending, dtype=bool)
        tau = (t - self.offsets) % self.edrx_period
        ph = self.phase
        idle, ptw, conn = ph == _IDLE, ph == _PTW, ph == _CONN
        wake = idle & (tau == 0)
        window_end = ptw & (tau >= self.ptw_length)
        connect = ptw & ~window_end & pend & (tau % self.po_interval == 0)
        refresh = conn & pend
        expire = conn & ~pend & (self.timer <= 1)
        tick = conn & ~pend & ~expire
        ph[wake] = _PTW
        ph[window_end | expire] = _IDLE
        ph[connect] = _CONN
        self.timer[connect | refresh] = self.connected_ttis
        self.timer[expire] = 0
        self.timer[tick] -= 1
        self.awake = ph != _IDLE
        return wake, window_end | expire, connect, expire

    def next_wake(self, t):
        """Earliest TTI > t at which a sleeping terminal's window opens (awake ones excluded)."""
        if not self.enabled:
            return t + 1
        tau = (t - self.offsets) % self.edrx_period
        wait = np.where(tau == 0, self.edrx_period, self.edrx_period - tau)
        return int(t + wait.min())


def eligible_terminals(states, t=None):
    """Ids of terminals that are monitoring or connected.

    ``states`` is an ``EdrxPopulation`` or a sequence of ``EdrxState``; with
    eDRX disabled every terminal is eligible.
    """
    if isinstance(states, EdrxPopulation):
        return np.flatnonzero(states.awake)
    return np.array([i for i, s in enumerate(states) if s.phase != IDLE_SLEEP], dtype=np.int64)


def awake_fraction(edrx_period, ptw_length, connected_ttis=0, po_interval=10, paged_every_cycle=False):
    """Analytic long-run awake fraction for one terminal.

    A terminal with a page waiting when its window opens connects at the
    first occasion after the opening TTI and then stays connected for the
    timer, so it is awake ``po_interval + connected_ttis`` TTIs per cycle.
    """
    if not paged_every_cycle:
        return ptw_length / edrx_period
    return min(edrx_period, po_interval + connected_ttis) / edrx_period
