"""TTI-driven simulation loop: clock, RNG streams, feedback queue and the per-TTI pipeline.

Each TTI runs, in order: feedback delivery, channel/traffic/eDRX update,
scheduling, link quality (SINR + EESM) for transmissions ending now, link
performance (BLER + coin toss), and enqueueing of the resulting feedback.
"""

import math
import sys
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import channel, topology
from .mac import DL, UL, FeedbackEvent, HarqTable, ProportionalFair, achievable_rate, make_policy, schedule_tti
from .phy import bler_lookup, decode_coin_tosses, eesm_rows, load_assets, sinr_to_cqi
from .traffic import (
    EdrxPopulation,
    PacketSizeModel,
    assign_mar_profile,
    draw_packet_size,
    packet_bits,
)

DIRECTIONS = (DL, UL)
DL_SUBCARRIERS = 12
STREAM_NAMES = (
    "placement",
    "shadowing",
    "fading",
    "traffic",
    "coin_toss",
    "scheduler",
    "ul_interference",
    "edrx",
    "load",
)


class SimulationError(RuntimeError):
    def __init__(self, tti, message):
        super().__init__(f"TTI {tti}: {message}")
        self.tti = tti


class RngStreams:
    """Named generators, each seeded from (rng_seed, fixed stream index).

    A stream's output does not depend on how much any other stream was used.
    """

    def __init__(self, seed):
        self.seed = int(seed)
        self._gens = {}

    def __getitem__(self, name):
        if name not in STREAM_NAMES:
            raise KeyError(f"unknown RNG stream {name!r}")
        gen = self._gens.get(name)
        if gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(STREAM_NAMES.index(name),))
            gen = self._gens[name] = np.random.default_rng(ss)
        return gen


@dataclass
class SimClock:
    tti_index: int = 0
    tti_seconds: float = 1e-3

    @property
    def seconds(self):
        return self.tti_index * self.tti_seconds

    def advance_to(self, t):
        if t < self.tti_index:
            raise ValueError("clock cannot move backwards")
        self.tti_index = t


class FeedbackQueue:
    """Events bucketed by delivery TTI; ``pop_due(t)`` returns exactly the events for ``t``."""

    def __init__(self):
        self._due = defaultdict(list)
        self._count = 0

    def push(self, event):
        self._due[event.deliver_at].append(event)
        self._count += 1

    def pop_due(self, t):
        if self._due and min(self._due) < t:
            raise SimulationError(t, "feedback event left undelivered")
        events = self._due.pop(t, [])
        self._count -= len(events)
        return events

    def __len__(self):
        return self._count


@dataclass
class TtiRecord:
    t: int
    grants: list = field(default_factory=list)
    decodes: list = field(default_factory=list)  # (terminal, direction, sinr_db, success, cqi, bits)
    awake: int = 0


@dataclass
class SimResult:
    config: object
    num_ttis: int
    terminals: list
    sites: list
    serving_sector: np.ndarray  # global sector index per terminal
    coupling_db: np.ndarray  # serving-sector coupling loss per terminal
    delivered_bits: np.ndarray  # (2, N), row 0 DL, row 1 UL
    offered_bits: np.ndarray
    dropped_bits: np.ndarray
    inflight_bits: np.ndarray
    transmissions: np.ndarray  # (2, N)
    failures: np.ndarray
    awake_ttis: np.ndarray  # (N,)
    awake_sum: int = 0
    max_grants_per_tti: int = 0
    reports: int = 0
    pages: int = 0
    ttis_stepped: int = 0
    grant_trace: list = None
    event_trace: list = None
    shadowing: list = None

    @property
    def mean_awake(self):
        return self.awake_sum / self.num_ttis if self.num_ttis else 0.0


class Simulator:
    """One simulation run for a validated ``SimConfig``."""

    def __init__(self, cfg, assets=None, ul_assets=None, layout_only=False):
        """``layout_only`` stops after the drop, attachment and large-scale gains."""
        self.cfg = cfg
        self.assets = assets if assets is not None else load_assets()
        if ul_assets is None:
            # explicit downlink tables without uplink ones serve both links
            ul_assets = load_assets(link="ul") if assets is None else self.assets
        self.link_assets = {DL: self.assets, UL: ul_assets}
        self.rng = RngStreams(cfg.rng_seed)
        self.clock = SimClock()
        self.queue = FeedbackQueue()
        self._initialize()
        if not layout_only:
            self._pregenerate()

    # --- setup ---------------------------------------------------------------

    def _initialize(self):
        cfg = self.cfg
        self.sites, self.sectors = topology.build_layout(cfg)
        self.n_sites = len(self.sites)
        self.n_sectors = len(self.sectors)
        self.pixel_map = topology.build_pixel_map(cfg, self.sites)
        terminals = topology.drop_terminals(cfg, self.pixel_map, self.rng["placement"])
        self.n = len(terminals)
        self.shadow_fields = channel.generate_shadowing(self.pixel_map, cfg, self.rng["shadowing"], self.n_sites)
        pts = np.array([[u.x, u.y] for u in terminals]).reshape(-1, 2)
        self.links = channel.build_link_table(pts, self.sites, self.sectors, cfg, self.shadow_fields)
        roi_ids = {s.id for s in topology.roi_sites(cfg, self.sites)}
        self.sector_site = self.links.sector_site
        self.simulated = np.array([sec.site_id in roi_ids for sec in self.sectors])
        self.sim_sectors = np.flatnonzero(self.simulated)
        self.terminals = topology.attach_terminals(terminals, self.sectors, self.links.coupling_db, self.sim_sectors)
        spb = cfg.sectors_per_site
        self.serving = np.array([u.serving_site * spb + u.serving_sector for u in self.terminals], dtype=np.int64)
        self.serving_site = self.sector_site[self.serving]
        # co-sited sectors are orthogonal; of the other sites either every sector or only the
        # one with the same sector index (its own carrier) is co-channel
        index = np.array([sec.sector_index for sec in self.sectors])
        self.cochannel = self.sector_site[:, None] != self.sector_site[None, :]
        if cfg.co_channel_sectors == "same_index":
            self.cochannel &= index[:, None] == index[None, :]
        self.members = {int(s): np.flatnonzero(self.serving == s) for s in self.sim_sectors}
        self.gain = self.links.gain_linear  # (N, n_sectors)
        self.coupling = self.links.coupling_db[np.arange(self.n), self.serving]

        self.p_dl = 10.0 ** (cfg.enb_tx_power / 10.0)
        self.p_ul = 10.0 ** (cfg.terminal_tx_power / 10.0)
        self.noise_dl = 10.0 ** ((cfg.thermal_noise_density + cfg.enb_noise_figure
                                  + 10.0 * np.log10(cfg.bandwidth_dl)) / 10.0)
        self.noise_ul = 10.0 ** ((cfg.thermal_noise_density + cfg.terminal_noise_figure
                                  + 10.0 * np.log10(cfg.subcarrier_ul)) / 10.0)

    def _pregenerate(self):
        cfg = self.cfg
        self.fading = channel.FadingProcess(self.n * self.n_sites, cfg.fading_rho, cfg.fading_model,
                                            self.rng["fading"])
        self._build_ul_pools()
        self.cqi = {DL: self._geometry_cqi(DL), UL: self._geometry_cqi(UL)}
        self.harq = {d: HarqTable(self.n, d) for d in DIRECTIONS}
        self.policies = {}
        pf_state = {}
        for d in DIRECTIONS:
            for s in self.sim_sectors:
                pol = make_policy(cfg.scheduler, self.n, cfg.pf_beta, cfg.pf_epsilon)
                if isinstance(pol, ProportionalFair):
                    # one average per terminal and direction, shared by that direction's sectors
                    pol.state = pf_state.setdefault(d, pol.state)
                self.policies[d, int(s)] = pol
        self.pf = pf_state
        self.edrx = EdrxPopulation.from_config(cfg, self.n)
        self.paging_pending = np.zeros(self.n, dtype=bool)

        self.packet_model = PacketSizeModel(cfg.pareto_min, cfg.pareto_shape, cfg.pareto_cap)
        self.profile = assign_mar_profile(self.n, self.rng["traffic"])
        self.report_period = self.profile.period_ttis
        self.next_report = self.profile.phase.copy()
        self._next_report_min = int(self.next_report.min()) if self.n else np.iinfo(np.int64).max
        self.ul_buffer = np.zeros(self.n, dtype=np.int64)

        n_tones = cfg.ul_tones
        self.dl_busy_until = np.full(self.n_sectors, -1, dtype=np.int64)
        self.ul_busy_until = np.full((self.n_sectors, n_tones), -1, dtype=np.int64)
        self.ul_tone_user = np.full((self.n_sectors, n_tones), -1, dtype=np.int64)
        self.ending = defaultdict(list)
        self.n_rep_map = cfg.repetition_map()
        self._load_t = -1

        self.delivered = np.zeros((2, self.n), dtype=np.int64)
        self.offered = np.zeros((2, self.n), dtype=np.int64)
        self.dropped = np.zeros((2, self.n), dtype=np.int64)
        self.tx_count = np.zeros((2, self.n), dtype=np.int64)
        self.fail_count = np.zeros((2, self.n), dtype=np.int64)
        self.awake_ttis = np.zeros(self.n, dtype=np.int64)
        self.awake_sum = 0
        self.max_grants = 0
        self.reports = 0
        self.pages = 0
        self.ttis_stepped = 0
        self.grant_trace = [] if cfg.trace else None
        self.event_trace = [] if cfg.trace else None

    def _build_ul_pools(self):
        """Candidate interferer positions for every sector outside the simulated area.

        Each pool member gets its own coupling to every simulated sector, with
        independent shadowing; one member per tone is drawn at each decode.
        """
        cfg = self.cfg
        rng = self.rng["ul_interference"]
        outer = np.flatnonzero(~self.simulated)
        m = cfg.ul_interferer_pool
        self.pool_sectors = outer
        self.pool_gain = np.zeros((len(outer), m, len(self.sim_sectors)))
        if len(outer) == 0:
            return
        params = channel.path_loss_params(cfg)
        pattern = channel.antenna_pattern(cfg)
        radius = cfg.inter_site_distance / np.sqrt(3.0)
        half = 180.0 / cfg.sectors_per_site
        for i, s in enumerate(outer):
            sec = self.sectors[s]
            site = self.sites[sec.site_id]
            pts = np.empty((0, 2))
            while len(pts) < m:
                cand = rng.uniform(-radius, radius, size=(4 * m, 2))
                ok = topology.in_cell(cand, (0.0, 0.0), cfg.inter_site_distance)
                ok &= np.hypot(cand[:, 0], cand[:, 1]) >= cfg.min_link_distance
                az = np.degrees(np.arctan2(cand[:, 1], cand[:, 0]))
                ok &= np.abs(channel.wrap_degrees(az - sec.boresight_azimuth)) <= half
                pts = np.vstack([pts, cand[ok]])
            pts = pts[:m] + np.array([site.x, site.y])
            dist, theta = channel.link_geometry(pts, self.sites, [self.sectors[j] for j in self.sim_sectors], cfg)
            tgt_site = self.sector_site[self.sim_sectors]
            alpha = channel.coupling_alpha_db(dist[:, tgt_site], theta, params, pattern)
            shadow = cfg.shadow_std * rng.standard_normal(alpha.shape)
            self.pool_gain[i] = 10.0 ** (-(alpha + shadow) / 10.0)
        self._sim_index = {int(s): k for k, s in enumerate(self.sim_sectors)}
        self._sim_pos = np.full(self.n_sectors, -1, dtype=np.int64)
        self._sim_pos[self.sim_sectors] = np.arange(len(self.sim_sectors))

    def _geometry_cqi(self, direction):
        """CQI from large-scale SINR with every interferer at its mean level."""
        cfg = self.cfg
        g = self.gain
        rows = np.arange(self.n)
        if direction == DL:
            s = self.p_dl * g[rows, self.serving]
            load = np.where(self.simulated, 1.0, cfg.dl_load)
            load = load[None, :] * self.cochannel[self.serving]
            i = self.p_dl * (g * load).sum(axis=1)
            sinr = s / (i + self.noise_dl)
        else:
            s = self.p_ul * g[rows, self.serving]
            if len(self.pool_sectors):
                mean_g = self.pool_gain.mean(axis=1)  # (n_pools, n_sim)
                k = self._sim_pos[self.serving]
                co = self.cochannel[self.serving][:, self.pool_sectors]
                i = cfg.ul_load * self.p_ul * (co * mean_g[:, k].T).sum(axis=1)
            else:
                i = 0.0
            sinr = s / (i + self.noise_ul)
        return np.asarray(sinr_to_cqi(self.link_assets[direction], 10.0 * np.log10(sinr)), dtype=np.int64)

    # --- per-TTI pieces ------------------------------------------------------

    def _trace_event(self, t, ids, name):
        if self.event_trace is not None:
            self.event_trace.extend((t, int(u), name) for u in np.atleast_1d(ids))

    def _deliver_feedback(self, t):
        max_retx = self.cfg.harq_max_retx
        for ev in self.queue.pop_due(t):
            if ev.kind == "CQI":
                self.cqi[ev.direction][ev.terminal_id] = ev.value
                continue
            d = 0 if ev.direction == DL else 1
            outcome, payload = self.harq[ev.direction].on_feedback(ev, max_retx)
            if outcome == "dropped":
                self.dropped[d, ev.terminal_id] += payload

    def _traffic_and_edrx(self, t):
        cfg = self.cfg
        if t >= self._next_report_min:
            due = np.flatnonzero(self.next_report <= t)
            sizes = draw_packet_size(self.packet_model, self.rng["traffic"], size=len(due))
            if cfg.traffic_mode == "mar":
                self.ul_buffer[due] += packet_bits(sizes)
            self.paging_pending[due] = True
            self.next_report[due] += self.report_period[due]
            self.reports += len(due)
            self._next_report_min = int(self.next_report.min())
            self._trace_event(t, due, "report_generated")
        wake, sleep, connect, expire = self.edrx.step(t, self.paging_pending)
        if self.edrx.enabled:
            self.pages += int(connect.sum())
            if self.event_trace is not None:
                self._trace_event(t, np.flatnonzero(connect), "page_sent")
                self._trace_event(t, np.flatnonzero(connect), "connect")
                self._trace_event(t, np.flatnonzero(wake), "wake")
                self._trace_event(t, np.flatnonzero(expire), "timer_expire")
                self._trace_event(t, np.flatnonzero(sleep), "sleep")
            self.paging_pending[connect | (self.edrx.phase == 2)] = False
        else:
            self.paging_pending[:] = False
        awake = self.edrx.awake
        self.awake_ttis += awake
        n_awake = int(np.count_nonzero(awake))
        self.awake_sum += n_awake
        return n_awake

    def _schedule(self, t, rec):
        cfg = self.cfg
        awake = self.edrx.awake
        n_grants = 0
        for d in DIRECTIONS:
            if d == DL and cfg.traffic_mode == "mar":
                continue
            harq = self.harq[d]
            ok = None
            for s in self.sim_sectors:
                s = int(s)
                if d == DL:
                    if self.dl_busy_until[s] >= t:
                        continue
                    resources = (0,)
                    n_sf, mcs_max, unit = cfg.dl_n_sf, 13, 1
                else:
                    free = np.flatnonzero(self.ul_busy_until[s] < t)
                    if len(free) == 0:
                        continue
                    resources = tuple(free.tolist())
                    n_sf, mcs_max, unit = cfg.ul_n_ru, cfg.ul_mcs_max, cfg.ru_ttis
                if ok is None:
                    ok = awake & ~harq.busy
                    if d == UL and cfg.traffic_mode == "mar":
                        ok &= self.ul_buffer > 0
                members = self.members[s]
                elig = members[ok[members]]
                if len(elig) == 0:
                    continue
                pol = self.policies[d, s]
                rate = None
                if isinstance(pol, ProportionalFair):
                    rate = achievable_rate(self.assets, self.cqi[d], mcs_max, n_sf, unit)
                grants = schedule_tti(t, elig, self.cqi[d], harq, pol, self.assets, direction=d,
                                      resources=resources, n_sf=n_sf, mcs_max=mcs_max, n_rep=cfg.n_rep,
                                      n_rep_map=self.n_rep_map, unit_ttis=unit, sector=s, rate=rate)
                for g in grants:
                    self._start(g, d)
                    rec.grants.append(g)
                n_grants = max(n_grants, len(grants))
        self.max_grants = max(self.max_grants, n_grants)

    def _start(self, g, d):
        di = 0 if d == DL else 1
        u = g.terminal_id
        payload = 0
        if not g.is_retransmission:
            if self.cfg.traffic_mode == "mar" and d == UL:
                payload = int(min(g.tbs_bits, self.ul_buffer[u]))
                self.ul_buffer[u] -= payload
            else:
                payload = g.tbs_bits
            self.offered[di, u] += payload
        self.harq[d].start(g, payload)
        if d == DL:
            self.dl_busy_until[g.sector] = g.end_tti
        else:
            j = g.resources[0]
            self.ul_busy_until[g.sector, j] = g.end_tti
            self.ul_tone_user[g.sector, j] = u
        self.ending[g.end_tti].append(g)
        if self.grant_trace is not None:
            self.grant_trace.append((g.start_tti, g.sector, u, d, g.mcs, g.n_sf, g.tbs_bits,
                                     int(g.is_retransmission)))

    def _outer_dl_active(self, t):
        if self.cfg.dl_load >= 1.0:
            return ~self.simulated
        if self._load_t != t:
            draw = self.rng["load"].random(self.n_sectors) < self.cfg.dl_load
            self._load_mask = draw & ~self.simulated
            self._load_t = t
        return self._load_mask

    def _ul_co_tone(self, t, sector, tone):
        """Terminals of other sites' simulated sectors transmitting on ``tone`` at ``t``."""
        return [int(self.ul_tone_user[o, tone]) for o in self.sim_sectors
                if self.cochannel[sector, o] and self.ul_busy_until[o, tone] >= t]

    def link_quality(self, t, grants):
        """Per-subcarrier SINR vectors (linear) for ``grants`` evaluated at TTI ``t``.

        Fading for every link involved is advanced once, in one batch. Downlink
        interference comes from active sectors of other sites; uplink
        interference from same-tone transmissions of co-channel simulated
        sectors and one pool draw per co-channel surrounding sector.
        """
        ns = self.n_sites
        parts, co = [], []
        for g in grants:
            u = g.terminal_id
            if g.direction == DL:
                parts.append(u * ns + np.arange(ns))
                co.append(None)
            else:
                others = self._ul_co_tone(t, g.sector, g.resources[0])
                parts.append(np.array([u] + others, dtype=np.int64) * ns + self.sector_site[g.sector])
                co.append(others)
        uniq, inv = np.unique(np.concatenate(parts), return_inverse=True)
        fade = self.fading.gains(uniq, t)[inv]

        n_ul = sum(1 for g in grants if g.direction == UL)
        n_out = len(self.pool_sectors)
        if n_ul and n_out:
            rng = self.rng["ul_interference"]
            pick = rng.integers(0, self.pool_gain.shape[1], size=(n_ul, n_out))
            on = rng.random((n_ul, n_out)) < self.cfg.ul_load
            pool_fade = (rng.exponential(1.0, size=(n_ul, n_out)) if self.cfg.fading_model != "none"
                         else np.ones((n_ul, n_out)))
        dl_active = self._outer_dl_active(t) | (self.simulated & (self.dl_busy_until >= t))

        sizes = np.array([len(p) for p in parts])
        offs = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        users = np.array([g.terminal_id for g in grants])
        secs = np.array([g.sector for g in grants])
        is_dl = np.array([g.direction == DL for g in grants])
        sinr = np.empty(len(grants))

        d = np.flatnonzero(is_dl)
        if len(d):
            f = fade[offs[d, None] + np.arange(ns)]  # (n_dl, n_sites)
            rx = self.p_dl * self.gain[users[d]] * f[:, self.sector_site]
            interference = (rx * (dl_active & self.cochannel[secs[d]])).sum(axis=1)
            sinr[d] = rx[np.arange(len(d)), secs[d]] / (interference + self.noise_dl)

        u = np.flatnonzero(~is_dl)
        if len(u):
            sig = self.p_ul * self.gain[users[u], secs[u]] * fade[offs[u]]
            interference = np.zeros(len(u))
            for j, i in enumerate(u):
                for m, v in enumerate(co[i]):
                    interference[j] += self.p_ul * self.gain[v, secs[i]] * fade[offs[i] + 1 + m]
            if n_out:
                pg = self.pool_gain[np.arange(n_out)[None, :], pick, self._sim_pos[secs[u]][:, None]]
                live = on & self.cochannel[secs[u]][:, self.pool_sectors]
                interference += self.p_ul * (pg * pool_fade * live).sum(axis=1)
            sinr[u] = sig / (interference + self.noise_ul)
        return [np.full(DL_SUBCARRIERS, x) if dl else np.array([x]) for x, dl in zip(sinr, is_dl)]

    def _decode(self, t, rec):
        cfg = self.cfg
        delivered = {DL: {}, UL: {}}
        grants = self.ending.pop(t, None)
        if not grants:
            return delivered
        n = len(grants)
        delay = cfg.harq_feedback_delay
        chase = cfg.harq_combining == "chase"
        gammas = self.link_quality(t, grants)
        gamma_eff = np.empty(n)
        is_dl = np.array([g.direction == DL for g in grants])
        for mask in (is_dl, ~is_dl):
            idx = np.flatnonzero(mask)
            if len(idx):
                gamma_eff[idx] = eesm_rows(np.stack([gammas[i] for i in idx]), cfg.eesm_eta)
        # chase combining: attempts of one block add up in linear SINR
        procs = [self.harq[g.direction][g.terminal_id] for g in grants]
        combined = np.array([p.sinr_sum for p in procs]) + gamma_eff if chase else gamma_eff
        for p, x in zip(procs, combined):
            p.sinr_sum = float(x)
        combined_db = 10.0 * np.log10(combined)
        eff_db = 10.0 * np.log10(gamma_eff)
        bler = np.empty(n)
        cqi = np.empty(n, dtype=np.int64)
        keys = [(g.direction, g.mcs, g.n_rep) for g in grants]
        for key in set(keys):
            idx = np.array([i for i, k in enumerate(keys) if k == key])
            bler[idx] = bler_lookup(self.link_assets[key[0]], key[1], key[2], combined_db[idx])
        for d, mask in ((DL, is_dl), (UL, ~is_dl)):
            if mask.any():
                cqi[mask] = sinr_to_cqi(self.link_assets[d], eff_db[mask])
        ok = decode_coin_tosses(bler, self.rng["coin_toss"])
        for i, g in enumerate(grants):
            u, d = g.terminal_id, g.direction
            di = 0 if d == DL else 1
            payload = procs[i].payload_bits
            self.queue.push(self.harq[d].on_decode(t, u, bool(ok[i]), delay))
            self.queue.push(FeedbackEvent(t + delay, "CQI", u, d, int(cqi[i])))
            self.tx_count[di, u] += 1
            if ok[i]:
                self.delivered[di, u] += payload
                delivered[d][u] = payload
            else:
                self.fail_count[di, u] += 1
            rec.decodes.append((u, d, float(eff_db[i]), bool(ok[i]), int(cqi[i]), payload if ok[i] else 0))
        return delivered

    def _update_pf(self, delivered):
        for d, state in self.pf.items():
            state.avg *= 1.0 - state.beta
            for u, bits in delivered[d].items():
                state.avg[u] += state.beta * bits
            np.maximum(state.avg, state.epsilon, out=state.avg)

    # --- loop ----------------------------------------------------------------

    def step(self, t):
        rec = TtiRecord(t)
        self.clock.advance_to(t)
        self._deliver_feedback(t)
        rec.awake = self._traffic_and_edrx(t)
        self._schedule(t, rec)
        delivered = self._decode(t, rec)
        if self.pf:
            self._update_pf(delivered)
            for g in rec.grants:
                self.pf[g.direction].last_scheduled[g.terminal_id] = t
        self.ttis_stepped += 1
        return rec

    def _idle_until(self, t, end):
        """First TTI >= t that may carry work, when nothing is awake or in flight."""
        if not self.cfg.fast_forward or not self.edrx.enabled:
            return t
        if self.edrx.awake.any() or len(self.queue) or self.ending:
            return t
        return min(end, self.edrx.next_wake(t - 1), self._next_report_min)

    def run(self, progress=None):
        cfg = self.cfg
        end = cfg.num_ttis
        verbose = cfg.verbose if progress is None else progress
        mark = max(1, end // 10)
        t = 0
        while t < end:
            nxt = self._idle_until(t, end)
            if nxt > t:
                for _ in range(nxt - t):
                    self._update_pf({DL: {}, UL: {}})
                t = nxt
                continue
            try:
                self.step(t)
            except SimulationError:
                raise
            except Exception as exc:
                raise SimulationError(t, f"{type(exc).__name__}: {exc}") from exc
            if verbose and (t + 1) % mark == 0:
                print(f"TTI {t + 1}/{end} ({100.0 * (t + 1) / end:.0f}%)", file=sys.stderr)
            t += 1
        if end > 0:
            self.clock.advance_to(end)
        return self.result()

    def result(self):
        inflight = np.stack([self.harq[d].inflight_bits() for d in DIRECTIONS])
        return SimResult(
            config=self.cfg,
            num_ttis=self.cfg.num_ttis,
            terminals=self.terminals,
            sites=self.sites,
            serving_sector=self.serving,
            coupling_db=self.coupling,
            delivered_bits=self.delivered,
            offered_bits=self.offered,
            dropped_bits=self.dropped,
            inflight_bits=inflight,
            transmissions=self.tx_count,
            failures=self.fail_count,
            awake_ttis=self.awake_ttis,
            awake_sum=self.awake_sum,
            max_grants_per_tti=self.max_grants,
            reports=self.reports,
            pages=self.pages,
            ttis_stepped=self.ttis_stepped,
            grant_trace=self.grant_trace,
            event_trace=self.event_trace,
            shadowing=self.shadow_fields,
        )


def run(cfg, assets=None, progress=None, ul_assets=None):
    """Run one simulation and return its ``SimResult``."""
    return Simulator(cfg, assets, ul_assets).run(progress)
