"""Round-robin / proportional-fair scheduling and single-process HARQ with delayed feedback."""

from dataclasses import dataclass, replace

import numpy as np

from .phy import tbs_lookup

DL = "DL"
UL = "UL"


@dataclass(frozen=True)
class Grant:
    terminal_id: int
    direction: str
    mcs: int
    n_sf: int
    n_rep: int
    resources: tuple
    tbs_bits: int
    is_retransmission: bool = False
    sector: int = 0
    start_tti: int = 0
    duration: int = 1

    @property
    def end_tti(self):
        return self.start_tti + self.duration - 1


@dataclass(frozen=True)
class FeedbackEvent:
    deliver_at: int
    kind: str  # ACK, NACK, NDI, NDI_TIMEOUT or CQI
    terminal_id: int
    direction: str
    value: int = 0


class HarqError(RuntimeError):
    """Feedback arrived for a process that is not waiting for it."""


@dataclass
class HarqProcess:
    terminal_id: int
    direction: str
    grant: Grant = None
    payload_bits: int = 0
    retx_count: int = 0
    awaiting_feedback_until: int = -1
    retx_pending: bool = False
    decoded: bool = False
    sinr_sum: float = 0.0  # linear effective SINR accumulated over attempts
    ndi_received: bool = None
    ack_nack: str = None

    @property
    def active(self):
        return self.grant is not None

    def start(self, grant, payload_bits):
        self.grant = grant
        self.payload_bits = int(payload_bits)
        self.retx_count = 0
        self.retx_pending = False
        self.decoded = False
        self.sinr_sum = 0.0
        self.ndi_received = None
        self.ack_nack = None
        self.awaiting_feedback_until = -1

    def clear(self):
        self.grant = None
        self.payload_bits = 0
        self.retx_count = 0
        self.retx_pending = False
        self.decoded = False
        self.sinr_sum = 0.0
        self.awaiting_feedback_until = -1


def harq_on_decode(t, process, success, delay):
    """Record a decode outcome and return the feedback event due at ``t + delay``.

    Uplink: success produces an NDI; failure produces nothing on the air, so the
    terminal's NDI-wait timer expiring at the same instant is returned instead.
    Downlink: ACK or NACK.
    """
    if not process.active or process.retx_pending:
        raise HarqError(f"decode for inactive HARQ process of terminal {process.terminal_id}")
    process.decoded = bool(success)
    process.awaiting_feedback_until = t + delay
    if process.direction == UL:
        kind = "NDI" if success else "NDI_TIMEOUT"
    else:
        kind = "ACK" if success else "NACK"
    return FeedbackEvent(t + delay, kind, process.terminal_id, process.direction)


def apply_harq_feedback(process, event, max_retx):
    """Apply a HARQ event; returns 'delivered', 'retransmit' or 'dropped'."""
    if not process.active or process.awaiting_feedback_until != event.deliver_at:
        raise HarqError(
            f"{event.kind} at TTI {event.deliver_at} for terminal {event.terminal_id} "
            "does not match an outstanding transmission"
        )
    if event.kind in ("ACK", "NACK"):
        process.ack_nack = event.kind
    else:
        process.ndi_received = event.kind == "NDI"
    if event.kind in ("ACK", "NDI"):
        process.clear()
        return "delivered"
    if process.retx_count < max_retx:
        process.retx_count += 1
        process.retx_pending = True
        process.awaiting_feedback_until = -1
        return "retransmit"
    process.clear()
    return "dropped"


class HarqTable:
    """One HARQ process per terminal for one direction, with vector views for scheduling."""

    def __init__(self, n, direction):
        self.direction = direction
        self.processes = [HarqProcess(i, direction) for i in range(n)]
        self.busy = np.zeros(n, dtype=bool)  # in flight or awaiting feedback
        self.retx = np.zeros(n, dtype=bool)

    def __getitem__(self, terminal_id):
        return self.processes[terminal_id]

    def start(self, grant, payload_bits):
        p = self.processes[grant.terminal_id]
        if grant.is_retransmission:
            p.grant = grant
            p.retx_pending = False
        else:
            p.start(grant, payload_bits)
        self.busy[grant.terminal_id] = True
        self.retx[grant.terminal_id] = False

    def on_decode(self, t, terminal_id, success, delay):
        return harq_on_decode(t, self.processes[terminal_id], success, delay)

    def on_feedback(self, event, max_retx):
        p = self.processes[event.terminal_id]
        payload = p.payload_bits
        outcome = apply_harq_feedback(p, event, max_retx)
        self.busy[event.terminal_id] = False
        self.retx[event.terminal_id] = p.retx_pending
        return outcome, payload

    def inflight_bits(self):
        return np.array([p.payload_bits if p.active and not p.decoded else 0 for p in self.processes])


# --- policies ------------------------------------------------------------------


class RoundRobin:
    """Serve candidates in terminal-id order from a persistent cursor."""

    name = "RR"

    def __init__(self):
        self.cursor = -1

    def select(self, candidates, k, retx=None, rate=None):
        cand = np.asarray(candidates, dtype=np.int64)
        if k <= 0 or len(cand) == 0:
            return []
        split = np.searchsorted(cand, self.cursor, side="right")
        order = np.concatenate([cand[split:], cand[:split]])
        if retx is not None:
            r = retx[order]
            order = np.concatenate([order[r], order[~r]])
            picked = order[:k]
            fresh = picked[~retx[picked]]
        else:
            picked = order[:k]
            fresh = picked
        if len(fresh):
            self.cursor = int(fresh[-1])
        return [int(x) for x in picked]


@dataclass
class PfState:
    avg: np.ndarray
    last_scheduled: np.ndarray
    beta: float = 0.01
    epsilon: float = 1e-6

    @classmethod
    def initial(cls, n, beta=0.01, epsilon=1e-6):
        return cls(np.full(n, epsilon), np.full(n, -1, dtype=np.int64), beta, epsilon)


def update_pf(state, grants, delivered_bits):
    """EWMA update of every terminal's average throughput (bits per TTI).

    ``delivered_bits`` is a full-length array (zeros for unscheduled
    terminals). Averages never fall below ``epsilon``.
    """
    d = np.asarray(delivered_bits, dtype=float)
    np.maximum((1.0 - state.beta) * state.avg + state.beta * d, state.epsilon, out=state.avg)
    for g in grants:
        state.last_scheduled[g.terminal_id] = g.start_tti
    return state


class ProportionalFair:
    """Largest achievable-rate / average-throughput ratio first; ties to the lowest id."""

    name = "PF"

    def __init__(self, state):
        self.state = state

    def select(self, candidates, k, retx=None, rate=None):
        cand = np.asarray(candidates, dtype=np.int64)
        if k <= 0 or len(cand) == 0:
            return []
        metric = np.asarray(rate, dtype=float)[cand] / self.state.avg[cand]
        first = retx[cand].astype(np.int8) if retx is not None else np.zeros(len(cand), np.int8)
        # primary: retransmissions, then metric descending, then id ascending
        order = np.lexsort((cand, -metric, -first))
        return [int(x) for x in cand[order[:k]]]


def make_policy(name, n_terminals, beta=0.01, epsilon=1e-6):
    if name == "RR":
        return RoundRobin()
    if name == "PF":
        return ProportionalFair(PfState.initial(n_terminals, beta, epsilon))
    raise ValueError(f"unknown scheduler {name!r}")


def achievable_rate(assets, cqi_reports, mcs_max, n_sf, unit_ttis=1):
    """Bits per TTI each terminal would get at its reported CQI."""
    mcs = np.minimum(np.asarray(cqi_reports), mcs_max)
    return assets.tbs[mcs, n_sf - 1] / float(n_sf * unit_ttis)


def schedule_tti(
    t,
    eligible,
    cqi_reports,
    harq,
    policy,
    assets,
    *,
    direction=DL,
    resources=(0,),
    n_sf=1,
    mcs_max=13,
    n_rep=1,
    n_rep_map=None,
    unit_ttis=1,
    sector=0,
    rate=None,
):
    """Grants for one sector and direction at TTI ``t``.

    ``eligible`` holds awake terminal ids of the sector; terminals whose HARQ
    process is in flight are skipped, pending retransmissions go first and
    reuse their original transport block. One grant per entry of ``resources``.
    """
    elig = np.asarray(eligible, dtype=np.int64)
    if len(elig) == 0 or len(resources) == 0:
        return []
    cand = np.sort(elig[~harq.busy[elig]])
    if len(cand) == 0:
        return []
    if rate is None and isinstance(policy, ProportionalFair):
        rate = achievable_rate(assets, cqi_reports, mcs_max, n_sf, unit_ttis)
    picked = policy.select(cand, len(resources), harq.retx, rate)
    grants = []
    for res, u in zip(resources, picked):
        proc = harq[u]
        if proc.retx_pending:
            g = replace(proc.grant, resources=(res,), is_retransmission=True, start_tti=t, sector=sector)
        else:
            cqi = int(cqi_reports[u])
            mcs = min(cqi, mcs_max)
            reps = (n_rep_map or {}).get(cqi, n_rep)
            g = Grant(u, direction, mcs, n_sf, reps, (res,), tbs_lookup(assets, mcs, n_sf),
                      False, sector, t, n_sf * reps * unit_ttis)
        grants.append(g)
    return grants
