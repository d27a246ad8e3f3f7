"""Discrete-event simulation core: clock, event queue, traffic, drops.

One drop is one single-threaded deterministic task.  Per transport block
the chain is: static link geometry -> SINR (link budget + current
co-channel occupancy) -> scheme (ACM on the delayed channel-quality
estimate) -> capacity -> Bernoulli delivery.  Statistics come only from
central-beam terminals inside the measurement window.

Interfering-beam handling mirrors the load model: on the forward link a
fully loaded (or dummy-frame padded) beam is a constant full-band emitter
and needs no per-frame scheduling; partially loaded beams and the whole
return link are scheduled terminal by terminal.
"""

import hashlib
import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import geometry, kernels, linkbudget, mac, phy, rng, stats, tables
from .config import (
    BEAM_BANDWIDTH_MHZ,
    DL_CENTER_FREQ_GHZ,
    UL_CENTER_FREQ_GHZ,
    ScenarioConfig,
)
from .constants import BOLTZMANN_J_K


@dataclass(frozen=True)
class DropConfig:
    duration_s: float = 5.0  # measurement window, excludes warmup
    warmup_s: float = 1.0
    drop_index: int = 0
    master_seed: int = 1

    def __post_init__(self):
        if self.duration_s < 0 or self.warmup_s < 0:
            raise ValueError("durations must be non-negative")
        if not 0 <= self.drop_index <= 4:
            raise ValueError("drop_index must be in 0..4")


def ftp3_next_interarrival(gen, mean_s: float = 0.1, upper_bound_s: float = 1.0) -> float:
    """Exponential inter-arrival, truncated at the configured upper bound."""
    return min(gen.exponential(mean_s), upper_bound_s)


@dataclass
class FileTransferRecord:
    terminal_id: int
    direction: str
    size_bits: int
    t_tx_start_s: float  # arrival into the sender queue
    t_rx_finish_s: float


class _File:
    __slots__ = ("size_bits", "remaining", "t_arrival")

    def __init__(self, size_bits, t_arrival):
        self.size_bits = size_bits
        self.remaining = size_bits
        self.t_arrival = t_arrival


class TrafficQueue:
    """Sender-side queue: infinite backlog or FTP3 file bursts.

    Lost transport blocks return their payload to the queue head (the
    acknowledged-delivery behaviour of the traffic layer both stacks sit
    on); a lost block therefore costs a fresh grant cycle, never data.
    """

    def __init__(self, kind: str, terminal_id: int, direction: str):
        self.kind = kind
        self.terminal_id = terminal_id
        self.direction = direction
        self.files = deque()
        self.queued_bits = 0

    @property
    def full_buffer(self) -> bool:
        return self.kind == "full_buffer"

    def add_file(self, size_bits: int, t: float) -> None:
        self.files.append(_File(size_bits, t))
        self.queued_bits += size_bits

    def has_data(self, arrival_cutoff: float = math.inf) -> bool:
        if self.full_buffer:
            return True
        return any(f.t_arrival <= arrival_cutoff for f in self.files)

    def visible_bits(self, arrival_cutoff: float = math.inf) -> int:
        if self.full_buffer:
            return 1 << 40
        return sum(f.remaining for f in self.files if f.t_arrival <= arrival_cutoff)

    def plan(self, bits: int, arrival_cutoff: float = math.inf):
        """(taken_bits, assignments) to transmit now; queue untouched."""
        if self.full_buffer:
            return bits, None
        taken = 0
        assignments = []
        for f in self.files:
            if f.t_arrival > arrival_cutoff:
                continue
            if taken >= bits:
                break
            amount = min(f.remaining, bits - taken)
            assignments.append((f, amount))
            taken += amount
        return taken, assignments

    def commit(self, assignments, t_rx_finish: float):
        """Apply a successful transmission; returns completed-file records."""
        if assignments is None:
            return []
        records = []
        for f, amount in assignments:
            f.remaining -= amount
            self.queued_bits -= amount
            if f.remaining == 0:
                self.files.remove(f)
                records.append(
                    FileTransferRecord(
                        self.terminal_id, self.direction, f.size_bits, f.t_arrival, t_rx_finish
                    )
                )
        return records


class EventQueue:
    """Priority queue keyed by (time, priority, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, t: float, callback, priority: int = 0) -> None:
        heapq.heappush(self._heap, (t, priority, self._seq, callback))
        self._seq += 1

    def pop(self):
        return heapq.heappop(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def peek_time(self):
        return self._heap[0][0] if self._heap else math.inf


@dataclass
class DirectionData:
    """Per-direction raw outputs of one drop."""

    sinr_samples: dict = field(default_factory=dict)  # central tid -> [dB]
    llc_bits: dict = field(default_factory=dict)  # central tid -> bits
    file_records: list = field(default_factory=list)
    beam_phy_bits: float = 0.0
    beam_llc_bits: float = 0.0
    beam_airtime_s: float = 0.0


@dataclass
class DropResult:
    data: dict  # direction -> DirectionData
    measurement_s: float
    positions_hash: str
    event_log: list = None
    allocation_audit: list = None


def positions_hash(terminals) -> str:
    h = hashlib.blake2b(digest_size=16)
    for t in terminals:
        h.update(repr((t.id, t.beam_id, t.profile.name, t.position_geo)).encode())
    return h.hexdigest()


class _PcHistory:
    """Rolling (t, tx_power_dBm, cn0_dBHz) measurements for power control."""

    def __init__(self, window_s: float):
        self.window_s = window_s
        self._entries = deque()

    def record(self, t, tx_power_dBm, cn0_dBHz):
        self._entries.append((t, tx_power_dBm, cn0_dBHz))
        cutoff = t - 4.0 * self.window_s
        while self._entries and self._entries[0][0] < cutoff:
            self._entries.popleft()

    def pairs_until(self, t_query):
        lo = t_query - self.window_s
        return [(p, c) for (ts, p, c) in self._entries if lo < ts <= t_query]


class _MeasThrottle:
    """Condense per-block return-link measurements to one (minimum) sample
    per report interval so estimator windows stay small at any block rate."""

    def __init__(self, interval_s: float):
        self.interval_s = interval_s
        self._last_flush = -math.inf
        self._min_sinr = None
        self._min_cn0 = None
        self._tx = None

    def push(self, t, sinr_dB, cn0_dBHz, tx_dBm):
        if self._min_sinr is None or sinr_dB < self._min_sinr:
            self._min_sinr = sinr_dB
        if self._min_cn0 is None or cn0_dBHz < self._min_cn0:
            self._min_cn0 = cn0_dBHz
            self._tx = tx_dBm
        if t - self._last_flush >= self.interval_s:
            out = (t, self._min_sinr, self._min_cn0, self._tx)
            self._last_flush = t
            self._min_sinr = None
            self._min_cn0 = None
            return out
        return None


class _DropRunner:
    def __init__(self, cfg: ScenarioConfig, drop: DropConfig, collect_event_log=False, collect_audit=False):
        self.cfg = cfg
        self.drop = drop
        self.seed = drop.master_seed
        self.end = drop.warmup_s + drop.duration_s
        self.warmup = drop.warmup_s
        self.collect_event_log = collect_event_log
        self.collect_audit = collect_audit
        self.event_log = [] if collect_event_log else None
        self.audit = [] if collect_audit else None

        self._build_scene()
        self._load_tables()
        self._precompute_links()

        self.events = EventQueue()
        self.data = {}
        directions = ("dl", "ul") if cfg.direction == "both" else (cfg.direction,)
        self.directions = directions
        for d in directions:
            self.data[d] = DirectionData()

    # ------------------------------------------------------------------
    # scene and static link tables

    def _build_scene(self):
        geo = self.cfg.geometry
        self.layout = geometry.build_beam_lattice(
            geo.orbit,
            geo.tiers,
            geo.resolved_beam_spacing_deg(),
            geo.hpbw_deg,
        )
        self.terminals = geometry.deploy_terminals(
            self.layout, geo.per_beam_terminals, geo.profile_mix, self.seed
        )
        self.n_terminals = len(self.terminals)
        self.n_beams = len(self.layout.beams)
        self.central_ids = [t.id for t in self.terminals if t.beam_id == 0]
        self.users_by_beam = [
            [t.id for t in self.terminals if t.beam_id == b] for b in range(self.n_beams)
        ]
        self.one_way_delay = geometry.one_way_delay_s(self.layout)
        self.pos_hash = positions_hash(self.terminals)

    def _load_tables(self):
        p = self.cfg.phy
        self.modcods = (
            tables.load_modcod_table(p.modcod_table) if p.modcod_table else tables.builtin_dvbs2x_modcods()
        )
        self.waveforms = (
            tables.load_waveform_table(p.waveform_table) if p.waveform_table else tables.builtin_rcs2_waveforms()
        )
        self.nr_mcs = (
            tables.load_modcod_table(p.mcs_table) if p.mcs_table else tables.builtin_nr_mcs_table3()
        )
        pa = self.cfg.pa
        cim_dl = pa.dl_c_over_im_dvb_dB if self.cfg.stack == "dvb" else pa.dl_c_over_im_nr_dB
        self.pa_dl = linkbudget.PaModel(pa.dl_ibo_dB, pa.dl_obo_dB, cim_dl)
        self.pa_ul = linkbudget.PaModel(
            pa.ul_ibo_dB, 0.0, 30.0, tuple(tuple(r) for r in pa.ul_obo_cim_table)
        )

    def _precompute_links(self):
        sat = self.cfg.satellite.to_rf()
        geo = self.cfg.geometry
        pattern = linkbudget.AperturePattern(0.0, geo.hpbw_deg, geo.pattern_floor_rel_dB)

        pos = np.array([t.position_ecef_km for t in self.terminals])
        slant = np.linalg.norm(pos - self.layout.sat_ecef_km, axis=1)
        fspl_dl = (
            92.45 + 20.0 * np.log10(slant) + 20.0 * math.log10(DL_CENTER_FREQ_GHZ)
        )
        fspl_ul = (
            92.45 + 20.0 * np.log10(slant) + 20.0 * math.log10(UL_CENTER_FREQ_GHZ)
        )

        rel = np.empty((self.n_terminals, self.n_beams))
        for b, beam in enumerate(self.layout.beams):
            off = np.array([geometry.off_axis_angle(beam, t) for t in self.terminals])
            rel[:, b] = pattern.relative_gain_dB_many(off)
        self.rel_pattern_dB = rel

        rx_gain = np.array([t.profile.rx_gain_dBi for t in self.terminals])
        self.tx_gain = np.array([t.profile.tx_gain_dBi for t in self.terminals])
        self.max_tx_dBm = np.array([t.profile.tx_power_dBm for t in self.terminals])
        t_sys = np.array(
            [
                linkbudget.system_noise_temperature(t.profile.antenna_temp_K, t.profile.noise_figure_dB)
                for t in self.terminals
            ]
        )
        self.n0_dBW_Hz = 10.0 * np.log10(BOLTZMANN_J_K * t_sys)

        # forward link: received dBW per MHz of satellite emission, per (terminal, beam)
        self.dl_density_dBW_MHz = (
            sat.tx_eirp_density_dBW_per_MHz + rel - fspl_dl[:, None] + rx_gain[:, None]
        )
        self.dl_density_lin = 10.0 ** (self.dl_density_dBW_MHz / 10.0)
        # return link: C/N0 per dBW of terminal EIRP, per (terminal, beam)
        self.ul_gain_dBHz = (
            -fspl_ul[:, None]
            + sat.g_over_t_dB_per_K
            + rel
            - 10.0 * math.log10(BOLTZMANN_J_K)
        )
        self.serving = np.array([t.beam_id for t in self.terminals])

        att_cfg = self.cfg.attenuation
        self.atten_dl = linkbudget.AttenuationProcess(att_cfg, pos, self.seed, "atten/dl")
        self.atten_ul = linkbudget.AttenuationProcess(att_cfg, pos, self.seed, "atten/ul")

    # ------------------------------------------------------------------
    # shared helpers

    def _central_window(self, t_rx: float) -> bool:
        return self.warmup <= t_rx < self.end

    def _airtime_overlap(self, t0: float, t1: float) -> float:
        return max(0.0, min(t1, self.end) - max(t0, self.warmup))

    def _log(self, t, beam, tid, direction, scheme_id, sinr, bits, ok):
        if self.event_log is not None:
            self.event_log.append((t, beam, tid, direction, scheme_id, sinr, bits, int(ok)))

    def _record_sample(self, d: DirectionData, tid, sinr, llc_bits):
        d.sinr_samples.setdefault(tid, []).append(sinr)
        d.llc_bits[tid] = d.llc_bits.get(tid, 0) + llc_bits

    # ------------------------------------------------------------------
    # run

    def run(self) -> DropResult:
        if self.drop.duration_s > 0:
            if "dl" in self.directions:
                self._start_dl()
            if "ul" in self.directions:
                self._start_ul()
            self._start_traffic()
            while self.events:
                t, _prio, _seq, callback = self.events.pop()
                if t >= self.end:
                    break
                callback(t)
        return DropResult(
            data=self.data,
            measurement_s=self.drop.duration_s,
            positions_hash=self.pos_hash,
            event_log=self.event_log,
            allocation_audit=self.audit,
        )

    # ------------------------------------------------------------------
    # traffic

    def _start_traffic(self):
        cfg = self.cfg.traffic
        self.queues = {}
        for d in self.directions:
            for t in self.terminals:
                self.queues[(d, t.id)] = TrafficQueue(cfg.kind, t.id, d)
        if cfg.kind != "ftp3":
            return
        for d in self.directions:
            size = 8 * (cfg.ftp3_file_bytes_dl if d == "dl" else cfg.ftp3_file_bytes_ul)
            # forward-link traffic only matters for beams that are scheduled
            tids = (
                [t.id for t in self.terminals]
                if d == "ul" or self._dl_scheduled_beams() != [0]
                else list(self.central_ids)
            )
            for tid in tids:
                gen = rng.stream(self.seed, f"traffic/{d}/t{tid}")
                self._schedule_arrival(d, tid, size, gen, 0.0)

    def _schedule_arrival(self, direction, tid, size_bits, gen, t_from):
        iat = ftp3_next_interarrival(
            gen, self.cfg.traffic.ftp3_mean_iat_s, self.cfg.traffic.ftp3_iat_upper_bound_s
        )
        t_next = t_from + iat

        def arrival(t, direction=direction, tid=tid, size_bits=size_bits, gen=gen):
            self.queues[(direction, tid)].add_file(size_bits, t)
            if direction == "dl":
                self._dl_wake(self.serving[tid], t)
            self._schedule_arrival(direction, tid, size_bits, gen, t)

        self.events.push(t_next, arrival)

    # ------------------------------------------------------------------
    # forward link

    def _dl_scheduled_beams(self):
        """Beams needing per-frame scheduling; the rest are constant emitters."""
        if self.cfg.traffic.kind == "full_buffer":
            return [0]
        if self.cfg.stack == "dvb" and self.cfg.phy.s2x.dummy_frames_enabled:
            return [0]
        return list(range(self.n_beams))

    def _start_dl(self):
        m = self.cfg.mac
        self.dl_estimators = {
            t.id: mac.CqiEstimator(m.cqi_report_interval_s, m.cqi_window_s) for t in self.terminals
        }
        self.dl_sched_beams = self._dl_scheduled_beams()
        # fraction of the beam bandwidth each beam currently radiates
        self.dl_occ = np.ones(self.n_beams)
        self.dl_pf = {
            b: mac.PfState(
                len(self.users_by_beam[b]), m.pf_alpha, m.pf_beta, m.pf_smoothing_s, m.pf_floor_bps
            )
            for b in self.dl_sched_beams
        }
        self.dl_err_gen = {b: rng.stream(self.seed, f"err/dl/{self.cfg.stack}/beam{b}") for b in range(self.n_beams)}
        if self.cfg.stack == "dvb":
            s2x = self.cfg.phy.s2x
            self.dl_symbol_rate = phy.symbol_rate(
                BEAM_BANDWIDTH_MHZ * 1e6, s2x.rolloff, s2x.carrier_spacing_factor
            )
            self.dl_carrier_MHz = self.dl_symbol_rate / 1e6
            self._dvb_idle = {b: False for b in self.dl_sched_beams}
            for b in self.dl_sched_beams:
                self.dl_occ[b] = 1.0 if s2x.dummy_frames_enabled else 0.0
                self.events.push(0.0, lambda t, b=b: self._dvb_frame(b, t))
        else:
            grid = self.cfg.phy.nr
            self.dl_carrier_MHz = grid.occupied_bandwidth_MHz
            self.slot_s = grid.slot_duration_ms / 1e3
            if self.cfg.traffic.kind != "full_buffer":
                self.dl_occ[:] = 0.0
            self.events.push(0.0, lambda t: self._nr_dl_slot(t))
        self.events.push(0.0, lambda t: self._dl_cqi_tick(t))

    def _dl_sinr(self, tid: int, bw_MHz: float, att_dB: float, occ=None) -> float:
        """SINR of a forward-link block of bw_MHz for one terminal."""
        occ = self.dl_occ if occ is None else occ
        s = self.serving[tid]
        c_lin = self.dl_density_lin[tid, s] * bw_MHz
        row = self.dl_density_lin[tid]
        i_lin = (row @ occ - row[s] * occ[s]) * bw_MHz
        att_fac = 10.0 ** (-att_dB / 10.0)
        c_lin *= att_fac
        i_lin *= att_fac
        n_lin = 10.0 ** (self.n0_dBW_Hz[tid] / 10.0) * (bw_MHz * 1e6) * self._dl_noise_bw_factor
        cn = 10.0 * math.log10(c_lin / n_lin)
        ci = 10.0 * math.log10(c_lin / i_lin) if i_lin > 0 else math.inf
        return kernels.combine_sinr_db(cn, ci, self.pa_dl.c_over_im_dB)

    @property
    def _dl_noise_bw_factor(self) -> float:
        # TDM receivers filter at the symbol rate; grid receivers at the PRB width
        if self.cfg.stack == "dvb":
            return self.dl_symbol_rate / (self.dl_carrier_MHz * 1e6)
        return 1.0

    def _dl_cqi_tick(self, t):
        tids = [tid for b in self.dl_sched_beams for tid in self.users_by_beam[b]]
        att = self.atten_dl.sample_many(t)
        for tid in tids:
            sinr = self._dl_sinr(tid, self.dl_carrier_MHz, att[tid])
            self.dl_estimators[tid].record(t, sinr)
        self.events.push(t + self.cfg.mac.cqi_report_interval_s, lambda t2: self._dl_cqi_tick(t2))

    def _dl_scheme(self, tid, t, table, target):
        est = self.dl_estimators[tid].estimate(t, delay_s=self.one_way_delay)
        return phy.acm_select(table, est if est is not None else -1e9, target)

    def _dl_wake(self, beam, t):
        if self.cfg.stack == "dvb" and self._dvb_idle.get(beam):
            self._dvb_idle[beam] = False
            self.events.push(t, lambda t2, b=beam: self._dvb_frame(b, t2))

    # ---- TDM forward link ----

    def _dvb_frame(self, b, t):
        if t >= self.end:
            return
        s2x = self.cfg.phy.s2x
        users = self.users_by_beam[b]
        queues = [self.queues[("dl", tid)] for tid in users]
        eligible = np.array([q.has_data() for q in queues], dtype=np.uint8)
        d = self.data["dl"]

        if not eligible.any():
            if not s2x.dummy_frames_enabled:
                self._dvb_idle[b] = True
                self.dl_occ[b] = 0.0
                return
            dur = s2x.dummy_frame_symbols / self.dl_symbol_rate
            self.dl_occ[b] = 1.0
            if b == 0:
                d.beam_airtime_s += self._airtime_overlap(t, t + dur)
            self.events.push(t + dur, lambda t2: self._dvb_frame(b, t2))
            return

        self.dl_occ[b] = 1.0
        n = len(users)
        rates = np.zeros(n)
        schemes = [None] * n
        caps = [None] * n
        for i, tid in enumerate(users):
            if not eligible[i]:
                continue
            scheme = self._dl_scheme(tid, t, self.modcods, self.cfg.phy.dl_error_target)
            bits, airtime = phy.s2x_frame_capacity_bits(s2x, scheme)
            schemes[i] = scheme
            caps[i] = (bits, airtime)
            rates[i] = bits / (airtime / self.dl_symbol_rate)

        pick = self.dl_pf[b].pick(rates, eligible)
        tid = users[pick]
        scheme = schemes[pick]
        bits, airtime = caps[pick]
        dur = airtime / self.dl_symbol_rate
        t_rx = t + dur

        att = self.atten_dl.sample(tid, t + dur / 2.0)
        sinr = self._dl_sinr(tid, self.dl_carrier_MHz, att)
        p_err = phy.error_probability(scheme.curve, sinr)
        ok = phy.transport_success(p_err, self.dl_err_gen[b])

        queue = self.queues[("dl", tid)]
        taken, assignments = queue.plan(bits)
        delivered = 0
        if ok:
            records = queue.commit(assignments, t_rx)
            delivered = taken
            if b == 0:
                d.file_records.extend(r for r in records if self._central_window(r.t_rx_finish_s))

        if b == 0:
            d.beam_airtime_s += self._airtime_overlap(t, t_rx)
            if self._central_window(t_rx):
                self._record_sample(d, tid, sinr, delivered)
                if ok:
                    d.beam_phy_bits += bits + s2x.bbframe_header_bits
                    d.beam_llc_bits += delivered
        self._log(t_rx, b, tid, "dl", scheme.id, sinr, delivered, ok)

        served = np.zeros(n)
        served[pick] = taken
        self.dl_pf[b].update(dur, served)
        self.events.push(t_rx, lambda t2: self._dvb_frame(b, t2))

    # ---- grid forward link ----

    def _nr_dl_slot(self, t):
        if t >= self.end:
            return
        grid = self.cfg.phy.nr
        slot_idx = int(round(t / self.slot_s))
        decisions = {}
        for b in self.dl_sched_beams:
            decisions[b] = self._nr_dl_decide(b, t)
        occ = self.dl_occ.copy()
        for b, allocs in decisions.items():
            prbs = sum(a[2] for a in allocs)
            occ[b] = prbs / grid.prb_count
        self.dl_occ = occ
        for b, allocs in decisions.items():
            self._nr_dl_resolve(b, t, allocs)
        if self.audit is not None:
            for b, allocs in decisions.items():
                self.audit.append(
                    ("nr_dl_slot", t, b, [(a[0], a[1], a[2]) for a in allocs])
                )
        self.events.push((slot_idx + 1) * self.slot_s, lambda t2: self._nr_dl_slot(t2))

    def _nr_dl_decide(self, b, t):
        """Greedy PF over PRB groups; returns [(tid, prb0, nprb, scheme, bits)]."""
        grid = self.cfg.phy.nr
        users = self.users_by_beam[b]
        queues = [self.queues[("dl", tid)] for tid in users]
        n = len(users)
        remaining = np.array(
            [q.visible_bits() if not q.full_buffer else (1 << 40) for q in queues], dtype=np.float64
        )
        eligible = (remaining > 0).astype(np.uint8)
        if not eligible.any():
            return []
        schemes = [None] * n
        rates = np.zeros(n)
        for i, tid in enumerate(users):
            if not eligible[i]:
                continue
            scheme = self._dl_scheme(tid, t, self.nr_mcs, self.cfg.phy.dl_error_target)
            schemes[i] = scheme
            rates[i] = phy.nr_tb_size_bits(grid, scheme, grid.prb_count, 1) / (self.slot_s)

        group = self.cfg.mac.nr_dl_prb_group
        edges = list(range(0, grid.prb_count, group)) + [grid.prb_count]
        n_groups = len(edges) - 1
        pf = self.dl_pf[b]
        picks = []
        for g in range(n_groups):
            pick = pf.pick(rates, eligible)
            if pick < 0:
                break
            nprb = edges[g + 1] - edges[g]
            bits_g = phy.nr_tb_size_bits(grid, schemes[pick], nprb, 1)
            picks.append((pick, edges[g], nprb))
            remaining[pick] -= bits_g
            if remaining[pick] <= 0:
                eligible[pick] = 0
            served = np.zeros(n)
            served[pick] = bits_g
            pf.update(self.slot_s / n_groups, served)

        allocs = []
        for pick, prb0, nprb in picks:
            if allocs and allocs[-1][0] == users[pick] and allocs[-1][1] + allocs[-1][2] == prb0:
                last = allocs[-1]
                allocs[-1] = (last[0], last[1], last[2] + nprb, last[3])
            else:
                allocs.append((users[pick], prb0, nprb, schemes[pick]))
        return [
            (tid, prb0, nprb, scheme, phy.nr_tb_size_bits(self.cfg.phy.nr, scheme, nprb, 1))
            for tid, prb0, nprb, scheme in allocs
        ]

    def _nr_dl_resolve(self, b, t, allocs):
        if not allocs:
            return
        grid = self.cfg.phy.nr
        d = self.data["dl"]
        t_rx = t + self.slot_s
        att_all = self.atten_dl.sample_many(t + self.slot_s / 2.0)
        for tid, _prb0, nprb, scheme, bits in allocs:
            bw_MHz = nprb * grid.prb_bandwidth_Hz / 1e6
            sinr = self._dl_sinr(tid, bw_MHz, att_all[tid])
            p_err = phy.error_probability(scheme.curve, sinr)
            ok = phy.transport_success(p_err, self.dl_err_gen[b])
            queue = self.queues[("dl", tid)]
            taken, assignments = queue.plan(bits)
            delivered = 0
            if ok:
                records = queue.commit(assignments, t_rx)
                delivered = taken
                if b == 0:
                    d.file_records.extend(
                        r for r in records if self._central_window(r.t_rx_finish_s)
                    )
            if b == 0:
                d.beam_airtime_s += self._airtime_overlap(t, t_rx) * (nprb / grid.prb_count)
                if self._central_window(t_rx):
                    self._record_sample(d, tid, sinr, delivered)
                    if ok:
                        d.beam_phy_bits += bits + grid.tb_crc_bits
                        d.beam_llc_bits += delivered
            self._log(t_rx, b, tid, "dl", scheme.id, sinr, delivered, ok)

    # ------------------------------------------------------------------
    # return link

    def _start_ul(self):
        m = self.cfg.mac
        self.ul_estimators = {
            t.id: mac.CqiEstimator(m.cqi_report_interval_s, m.cqi_window_s) for t in self.terminals
        }
        self.ul_pc_hist = {t.id: _PcHistory(m.cqi_window_s) for t in self.terminals}
        self.ul_meas = {t.id: _MeasThrottle(m.cqi_report_interval_s) for t in self.terminals}
        self._ul_scheme_memo = {}
        self._ul_p1_memo = {}
        self.ul_err_gen = {b: rng.stream(self.seed, f"err/ul/{self.cfg.stack}/beam{b}") for b in range(self.n_beams)}
        if self.cfg.stack == "dvb":
            pc_mode = "rcs2_esn0_target"
            target = m.rcs2_esn0_target_dB
        else:
            pc_mode = "nr_clx_ile"
            target = m.nr_snr_target_dB
        # per-terminal cap comes in later; configs share the mode and target
        self._pc_cfg_proto = (pc_mode, target, m.pc_percentile_x)
        if self.cfg.stack == "dvb":
            rcs2 = self.cfg.phy.rcs2
            wf_symbols = self.waveforms[0].total_symbols
            self.rcs2_slots = rcs2.timeslots_per_carrier(wf_symbols)
            self.rcs2_burst_s = rcs2.burst_duration_s(wf_symbols)
            self.sf_s = rcs2.superframe_duration_ms / 1e3
            self._rcs2_offset = {b: 0 for b in range(self.n_beams)}
            self.events.push(0.0, lambda t: self._rcs2_superframe(t))
        else:
            grid = self.cfg.phy.nr
            self.slot_s = grid.slot_duration_ms / 1e3
            self._nr_ul_ptr = {b: 0 for b in range(self.n_beams)}
            self.events.push(0.0, lambda t: self._nr_ul_slot(t))

    def _pc_config(self, tid) -> mac.PowerControlConfig:
        mode, target, px = self._pc_cfg_proto
        return mac.PowerControlConfig(mode, target, self.max_tx_dBm[tid], px)

    def _ul_tx_power_dBm(self, tid, t_decision, bandwidth_Hz) -> float:
        pairs = self.ul_pc_hist[tid].pairs_until(t_decision)
        if not pairs:
            return self.max_tx_dBm[tid]
        return mac.power_control(self._pc_config(tid), pairs, bandwidth_Hz)

    def _ul_scheme(self, tid, t_decision, table, target):
        est = self.ul_estimators[tid].estimate(t_decision)
        return phy.acm_select(table, est if est is not None else -1e9, target)

    def _report_idx(self, t_decision) -> int:
        return int(math.floor(t_decision / self.cfg.mac.cqi_report_interval_s))

    def _ul_scheme_cached(self, tid, t_decision, table, target):
        # estimates only change at report boundaries
        key = (tid, self._report_idx(t_decision))
        val = self._ul_scheme_memo.get(key)
        if val is None:
            val = self._ul_scheme(tid, t_decision, table, target)
            self._ul_scheme_memo[key] = val
        return val

    def _ul_p1_cached(self, tid, t_decision, bandwidth_Hz) -> float:
        key = (tid, self._report_idx(t_decision))
        val = self._ul_p1_memo.get(key)
        if val is None:
            val = self._ul_tx_power_dBm(tid, t_decision, bandwidth_Hz)
            self._ul_p1_memo[key] = val
        return val

    def _ul_cim_lin(self, tid, tx_dBm) -> float:
        obo = max(0.0, self.max_tx_dBm[tid] - tx_dBm) + self.cfg.pa.ul_ibo_dB
        return 10.0 ** (self.pa_ul.ul_c_over_im_dB(obo) / 10.0)

    # ---- MF-TDMA return link ----

    def _rcs2_superframe(self, t):
        if t >= self.end:
            return
        sf_idx = int(round(t / self.sf_s))
        rcs2 = self.cfg.phy.rcs2
        t_build = t - self.one_way_delay  # TBTP computed one travel time ago
        cutoff = t - 2.0 * self.one_way_delay  # request -> grant round trip
        target = self.cfg.phy.ul_error_target
        d = self.data["ul"]

        all_allocs = []  # (beam, Allocation, waveform, tx_dBm)
        for b in range(self.n_beams):
            users = self.users_by_beam[b]
            schemes = {}
            powers = {}

            def scheme_for(tid, _s=schemes, _t=t_build, _tg=target):
                if tid not in _s:
                    wf = self._ul_scheme(tid, _t, self.waveforms, _tg)
                    _s[tid] = (wf, phy.rcs2_burst_capacity_bits(wf)[0])
                wf, bits = _s[tid]
                return wf.id, bits

            allocs = mac.schedule_ul_rcs2(
                rcs2.carrier_count, self.rcs2_slots, users, scheme_for, self._rcs2_offset[b]
            )
            self._rcs2_offset[b] = (self._rcs2_offset[b] + len(allocs)) % max(1, len(users))
            if self.audit is not None:
                self.audit.append(("rcs2_sf", t, b, [(a.terminal_id,) + a.resource for a in allocs]))
            for a in allocs:
                tid = a.terminal_id
                if tid not in powers:
                    powers[tid] = self._ul_tx_power_dBm(tid, t_build, rcs2.symbol_rate_baud)
                all_allocs.append((b, a, schemes[tid][0], powers[tid]))

        if not all_allocs:
            self.events.push((sf_idx + 1) * self.sf_s, lambda t2: self._rcs2_superframe(t2))
            return

        # vectorised burst resolution over the whole superframe
        att = self.atten_ul.sample_many(t + self.sf_s / 2.0)
        n = len(all_allocs)
        beam_ids = np.array([b for b, _a, _w, _p in all_allocs])
        tids = np.array([a.terminal_id for _b, a, _w, _p in all_allocs])
        tx_dBm = np.array([p for _b, _a, _w, p in all_allocs])
        eirp_dBW = tx_dBm - 30.0 + self.tx_gain[tids]
        active = np.array(
            [
                self.queues[("ul", a.terminal_id)].has_data(cutoff)
                for _b, a, _w, _p in all_allocs
            ]
        )
        cs_key = np.array([a.resource[0] * self.rcs2_slots + a.resource[1] for _b, a, _w, _p in all_allocs])

        # N0-referenced linear received level of each burst at every beam
        lin = 10.0 ** ((eirp_dBW[:, None] + self.ul_gain_dBHz[tids] - att[tids][:, None]) / 10.0)
        lin[~active, :] = 0.0
        n_keys = rcs2.carrier_count * self.rcs2_slots
        sums = np.zeros((n_keys, self.n_beams))
        np.add.at(sums, cs_key, lin)

        own = lin[np.arange(n), beam_ids]
        itf = sums[cs_key, beam_ids] - own
        rs = rcs2.symbol_rate_baud
        cim_lin = np.array([self._ul_cim_lin(tids[i], tx_dBm[i]) for i in range(n)])
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr_lin = own / (rs + itf + own / cim_lin)
        sinr_db = np.where(active, 10.0 * np.log10(np.maximum(sinr_lin, 1e-30)), np.nan)

        draws = {b: self.ul_err_gen[b].random(int((beam_ids == b).sum())) for b in range(self.n_beams)}
        draw_idx = {b: 0 for b in range(self.n_beams)}

        sf_min_sinr = {}
        for i, (b, alloc, wf, tx) in enumerate(all_allocs):
            tid = alloc.terminal_id
            if not active[i]:
                continue
            slot = alloc.resource[1]
            t0 = t + slot * self.rcs2_burst_s
            t_rx = t0 + self.rcs2_burst_s
            p_err = phy.error_probability(wf.curve, sinr_db[i])
            di = draw_idx[b]
            draw_idx[b] += 1
            ok = draws[b][di] >= p_err
            queue = self.queues[("ul", tid)]
            taken, assignments = queue.plan(alloc.granted_bits, cutoff)
            delivered = 0
            if ok and taken > 0:
                records = queue.commit(assignments, t_rx)
                delivered = taken
                if b == 0:
                    d.file_records.extend(r for r in records if self._central_window(r.t_rx_finish_s))
            if b == 0:
                d.beam_airtime_s += self._airtime_overlap(t0, t_rx)
                if self._central_window(t_rx):
                    self._record_sample(d, tid, sinr_db[i], delivered)
                    if ok:
                        d.beam_phy_bits += alloc.granted_bits
                        d.beam_llc_bits += delivered
            self._log(t_rx, b, tid, "ul", wf.id, sinr_db[i], delivered, ok)
            # gateway-side measurements (minimum per superframe is enough
            # for a min-window estimator)
            cn0_db = 10.0 * math.log10(max(own[i], 1e-30))
            prev = sf_min_sinr.get(tid)
            if prev is None or sinr_db[i] < prev[0]:
                sf_min_sinr[tid] = (sinr_db[i], cn0_db, tx)

        t_meas = t + self.sf_s
        for tid, (s_min, cn0_db, tx) in sf_min_sinr.items():
            flushed = self.ul_meas[tid].push(t_meas, s_min, cn0_db, tx)
            if flushed is not None:
                tf, s_f, c_f, tx_f = flushed
                self.ul_estimators[tid].record(tf, s_f)
                self.ul_pc_hist[tid].record(tf, tx_f, c_f)

        self.events.push((sf_idx + 1) * self.sf_s, lambda t2: self._rcs2_superframe(t2))

    # ---- grid return link ----

    def _nr_ul_slot(self, t):
        if t >= self.end:
            return
        grid = self.cfg.phy.nr
        slot_idx = int(round(t / self.slot_s))
        t_build = t - self.one_way_delay
        cutoff = t - 2.0 * self.one_way_delay
        target = self.cfg.phy.ul_error_target
        d = self.data["ul"]
        prb_bw = grid.prb_bandwidth_Hz

        decisions = {}
        for b in range(self.n_beams):
            users = self.users_by_beam[b]
            n = len(users)
            ptr = self._nr_ul_ptr[b]
            requests = []
            schemes = {}
            for j in range(n):
                tid = users[(ptr + j) % n]
                queue = self.queues[("ul", tid)]
                visible = queue.visible_bits(cutoff)
                if visible <= 0:
                    continue
                scheme = self._ul_scheme_cached(tid, t_build, self.nr_mcs, target)
                schemes[tid] = scheme
                bits_one = max(1, phy.nr_tb_size_bits(grid, scheme, 1, 1))
                demand = math.ceil(visible / bits_one)
                p_one = self._ul_p1_cached(tid, t_build, prb_bw)
                headroom = self.max_tx_dBm[tid] - p_one
                cap = max(1, int(10.0 ** (headroom / 10.0))) if headroom >= 0 else 1
                requests.append((tid, cap, demand))
            ranges = mac.schedule_ul_nr(grid.prb_count, requests)
            if ranges:
                last = ranges[-1][0]
                self._nr_ul_ptr[b] = (users.index(last) + 1) % n
            allocs = []
            for tid, prb0, nprb in ranges:
                scheme = schemes[tid]
                bits = phy.nr_tb_size_bits(grid, scheme, nprb, 1)
                p_one = self._ul_p1_cached(tid, t_build, prb_bw)
                tx = min(self.max_tx_dBm[tid], p_one + 10.0 * math.log10(nprb))
                allocs.append((tid, prb0, nprb, scheme, bits, tx))
            decisions[b] = allocs
            if self.audit is not None:
                self.audit.append(("nr_ul_slot", t, b, [(a[0], a[1], a[2]) for a in allocs]))

        # interference: every transmission smeared over the grid fraction it occupies
        att = self.atten_ul.sample_many(t + self.slot_s / 2.0)
        itx = np.zeros(self.n_beams)
        lin_by_beam = {}
        for b, allocs in decisions.items():
            if not allocs:
                continue
            a_tids = np.array([a[0] for a in allocs])
            a_eirp = np.array([a[5] for a in allocs]) - 30.0 + self.tx_gain[a_tids]
            lin = 10.0 ** ((a_eirp[:, None] + self.ul_gain_dBHz[a_tids] - att[a_tids][:, None]) / 10.0)
            frac = np.array([a[2] for a in allocs]) / grid.prb_count
            lin_by_beam[b] = (lin, frac)
            itx += (lin * frac[:, None]).sum(axis=0)

        t_rx = t + self.slot_s
        for b, allocs in decisions.items():
            if not allocs:
                continue
            lin, frac = lin_by_beam[b]
            own_contrib = (lin[:, b] * frac).sum()
            for idx, (tid, _prb0, nprb, scheme, bits, tx) in enumerate(allocs):
                own = lin[idx, b]
                alloc_bw = nprb * prb_bw
                i_n0 = (itx[b] - own_contrib) * (nprb / grid.prb_count)
                cim = self._ul_cim_lin(tid, tx)
                sinr_lin = own / (alloc_bw + i_n0 + own / cim)
                sinr = 10.0 * math.log10(max(sinr_lin, 1e-30))
                p_err = phy.error_probability(scheme.curve, sinr)
                ok = phy.transport_success(p_err, self.ul_err_gen[b])
                queue = self.queues[("ul", tid)]
                taken, assignments = queue.plan(bits, cutoff)
                delivered = 0
                if ok and taken > 0:
                    records = queue.commit(assignments, t_rx)
                    delivered = taken
                    if b == 0:
                        d.file_records.extend(
                            r for r in records if self._central_window(r.t_rx_finish_s)
                        )
                if b == 0:
                    d.beam_airtime_s += self._airtime_overlap(t, t_rx) * (nprb / grid.prb_count)
                    if self._central_window(t_rx):
                        self._record_sample(d, tid, sinr, delivered)
                        if ok:
                            d.beam_phy_bits += bits + grid.tb_crc_bits
                            d.beam_llc_bits += delivered
                self._log(t_rx, b, tid, "ul", scheme.id, sinr, delivered, ok)
                cn0_db = 10.0 * math.log10(max(own, 1e-30))
                flushed = self.ul_meas[tid].push(t_rx, sinr, cn0_db, tx)
                if flushed is not None:
                    tf, s_f, c_f, tx_f = flushed
                    self.ul_estimators[tid].record(tf, s_f)
                    self.ul_pc_hist[tid].record(tf, tx_f, c_f)

        self.events.push((slot_idx + 1) * self.slot_s, lambda t2: self._nr_ul_slot(t2))


def run_drop(scenario: ScenarioConfig, drop_cfg: DropConfig, collect_event_log=False, collect_audit=False) -> DropResult:
    """Execute one drop; raises on configuration inconsistencies before t=0."""
    runner = _DropRunner(scenario, drop_cfg, collect_event_log, collect_audit)
    return runner.run()


@dataclass
class CampaignResult:
    drops: list
    reports: dict  # direction -> stats.StatReport
    user_samples: dict  # direction -> [stats.UserSample]
    file_records: dict  # direction -> [FileTransferRecord]
    positions_hashes: list


def run_campaign(
    scenario: ScenarioConfig,
    n_drops: int = None,
    master_seed: int = None,
    collect_event_log: bool = False,
    collect_audit: bool = False,
) -> CampaignResult:
    """Run the configured number of drops and pool user-level samples."""
    n = n_drops if n_drops is not None else scenario.drops.count
    if n < 1:
        raise ValueError("campaign needs at least one drop")
    seed0 = master_seed if master_seed is not None else scenario.drops.master_seed
    drops = []
    for i in range(n):
        drop_seed = rng.derive_seed(seed0, f"drop{i}")
        drop_cfg = DropConfig(scenario.drops.duration_s, scenario.drops.warmup_s, i, drop_seed)
        drops.append(run_drop(scenario, drop_cfg, collect_event_log, collect_audit))
    return aggregate_campaign(scenario, drops)


def aggregate_campaign(scenario: ScenarioConfig, drops) -> CampaignResult:
    directions = ("dl", "ul") if scenario.direction == "both" else (scenario.direction,)
    reports = {}
    samples = {}
    records = {}
    for d in directions:
        user_samples = []
        file_records = []
        phy_bits = llc_bits = airtime = measurement = 0.0
        for drop in drops:
            dd = drop.data[d]
            measurement += drop.measurement_s
            phy_bits += dd.beam_phy_bits
            llc_bits += dd.beam_llc_bits
            airtime += dd.beam_airtime_s
            for tid, sinrs in dd.sinr_samples.items():
                user_samples.append(
                    stats.UserSample(
                        terminal_id=tid,
                        mean_sinr_dB=float(np.mean(sinrs)),
                        sinr_samples=tuple(sinrs),
                        delivered_bits=dd.llc_bits.get(tid, 0),
                        active_time_s=drop.measurement_s,
                    )
                )
            file_records.extend(dd.file_records)
        counters = stats.BeamCounters(
            phy_bits=phy_bits,
            llc_bits=llc_bits,
            airtime_s=airtime,
            measurement_s=measurement,
            bandwidth_Hz=BEAM_BANDWIDTH_MHZ * 1e6,
        )
        if user_samples:
            reports[d] = stats.build_report(user_samples, file_records, counters)
        else:
            reports[d] = stats.StatReport()
        samples[d] = user_samples
        records[d] = file_records
    return CampaignResult(
        drops=drops,
        reports=reports,
        user_samples=samples,
        file_records=records,
        positions_hashes=[drop.positions_hash for drop in drops],
    )
