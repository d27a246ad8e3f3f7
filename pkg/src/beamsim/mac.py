"""Resource management: PF forward-link picks, resource-fair return-link
grids, closed-loop power control, channel-quality estimation and the
long-delay request/grant loop.

Schedulers are pure decision functions over snapshots (brute-force
testable); the per-drop engine owns all mutable state.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .stats import percentile


@dataclass(frozen=True)
class Allocation:
    """A time-frequency grant binding one terminal to resources.

    ``resource`` is (prb_start, prb_count, slot_index) on the grid stack or
    (carrier_index, timeslot_index) on the MF-TDMA return grid.
    """

    terminal_id: int
    resource: tuple
    granted_bits: int
    scheme_id: object


def pf_priority(t_user_bps: float, r_user_bps: float, alpha: float, beta: float) -> float:
    """Proportional-fair metric T^alpha / R^beta."""
    if r_user_bps <= 0:
        raise ValueError("historical average rate must be positive")
    if t_user_bps < 0:
        raise ValueError("achievable rate must be non-negative")
    return t_user_bps**alpha / r_user_bps**beta


class PfState:
    """Smoothed per-user average throughput backing the PF metric.

    Averages are exponentially smoothed with a configurable time constant
    and floored at a small epsilon so fresh users never divide by zero.
    """

    def __init__(self, n_users, alpha=0.0, beta=1.0, smoothing_time_s=0.1, floor_bps=1.0):
        self.alpha = alpha
        self.beta = beta
        self.smoothing_time_s = smoothing_time_s
        self.floor_bps = floor_bps
        self.r_bps = np.full(n_users, floor_bps, dtype=np.float64)

    def pick(self, t_bps: np.ndarray, eligible: np.ndarray) -> int:
        """Greedy argmax of the PF metric; -1 when nobody is eligible."""
        return kernels.pf_argmax(
            np.ascontiguousarray(t_bps, dtype=np.float64),
            self.r_bps,
            self.alpha,
            self.beta,
            np.ascontiguousarray(eligible, dtype=np.uint8),
        )

    def update(self, dt_s: float, served_bits: np.ndarray) -> None:
        w = 1.0 - math.exp(-dt_s / self.smoothing_time_s)
        self.r_bps *= 1.0 - w
        self.r_bps += w * (served_bits / dt_s)
        np.maximum(self.r_bps, self.floor_bps, out=self.r_bps)


def schedule_ul_rcs2(n_carriers, slots_per_carrier, terminal_ids, scheme_for, start_offset=0):
    """Distribute the whole superframe grid round-robin over terminals.

    Slot counts per terminal differ by at most one; remainders go to the
    terminals at the front of the rotation (lowest ids when offset is 0).
    ``scheme_for(terminal_id) -> (scheme_id, bits)`` prices each grant.
    """
    terminals = sorted(terminal_ids)
    allocations = []
    if not terminals:
        return allocations
    n = len(terminals)
    i = 0
    for carrier in range(n_carriers):
        for slot in range(slots_per_carrier):
            tid = terminals[(start_offset + i) % n]
            scheme_id, bits = scheme_for(tid)
            allocations.append(Allocation(tid, (carrier, slot), bits, scheme_id))
            i += 1
    return allocations


def schedule_ul_nr(prb_count, requests):
    """Pack one slot with contiguous PRB ranges, round-robin over requests.

    ``requests`` is an ordered list of (terminal_id, cap_prbs, demand_prbs);
    the caller provides rotation by ordering.  Each terminal gets at most
    one range; PRBs a capped terminal cannot use flow to later ones.
    """
    allocations = []
    prb = 0
    for tid, cap, demand in requests:
        if prb >= prb_count:
            break
        take = min(cap, demand, prb_count - prb)
        if take <= 0:
            continue
        allocations.append((tid, prb, take))
        prb += take
    return allocations


@dataclass(frozen=True)
class PowerControlConfig:
    mode: str  # "rcs2_esn0_target" or "nr_clx_ile"
    target_dB: float
    max_tx_power_dBm: float
    percentile_x: float = 10.0

    def __post_init__(self):
        if self.mode not in ("rcs2_esn0_target", "nr_clx_ile"):
            raise ValueError(f"unknown power control mode: {self.mode}")


def power_control(config: PowerControlConfig, cn0_history, allocation_bandwidth_Hz: float) -> float:
    """Transmit power (dBm) for the next grant.

    ``cn0_history`` holds (tx_power_dBm_used, measured_cn0_dBHz) pairs.  The
    Es/N0 mode drives the minimum observed channel gain to the target over
    the allocated symbol bandwidth; the closed-loop percentile mode drives
    the x-th percentile of the gain window instead.  Output never exceeds
    the terminal maximum.
    """
    if not cn0_history:
        raise ValueError("power control needs at least one C/N0 measurement")
    gains = [cn0 - p for p, cn0 in cn0_history]
    if config.mode == "rcs2_esn0_target":
        gain = min(gains)
    else:
        gain = percentile(gains, config.percentile_x)
    required = config.target_dB + 10.0 * math.log10(allocation_bandwidth_Hz) - gain
    return min(required, config.max_tx_power_dBm)


class CqiEstimator:
    """Minimum-of-window channel quality estimate with delayed reports.

    Samples are recorded as they are measured; a report published at each
    report boundary carries the minimum sample of the trailing window and
    becomes visible to the consumer one propagation delay later.  With no
    sample in the window the last non-empty report is reused.
    """

    def __init__(self, report_interval_s=0.1, window_s=0.5):
        self.report_interval_s = report_interval_s
        self.window_s = window_s
        self._samples = deque()
        self._last_value = None
        self._last_report_time = -math.inf

    def record(self, t: float, value_dB: float) -> None:
        self._samples.append((t, value_dB))

    def _window_min(self, t_report: float):
        lo = t_report - self.window_s
        best = None
        for ts, v in self._samples:
            if lo < ts <= t_report and (best is None or v < best):
                best = v
        return best

    def estimate(self, t: float, delay_s: float = 0.0):
        """Estimate visible to the consumer at time t (None before any data)."""
        visible = t - delay_s
        t_report = math.floor(visible / self.report_interval_s) * self.report_interval_s
        if t_report > self._last_report_time:
            value = self._window_min(t_report)
            if value is not None:
                self._last_value = value
            self._last_report_time = t_report
            cutoff = t_report - self.window_s
            while self._samples and self._samples[0][0] <= cutoff:
                self._samples.popleft()
        return self._last_value


class GrantLoop:
    """Request pipe with one-way propagation delay and no losses."""

    def __init__(self, one_way_delay_s: float, request_interval_s: float = 0.0):
        self.one_way_delay_s = one_way_delay_s
        self.request_interval_s = request_interval_s
        self._pending = deque()
        self._seq = 0

    def submit(self, t: float, terminal_id: int, amount: int) -> None:
        self._pending.append((t, self._seq, terminal_id, amount))
        self._seq += 1

    def matured(self, t: float):
        """Requests visible to the scheduler at time t, FIFO order."""
        out = []
        while self._pending and self._pending[0][0] + self.one_way_delay_s <= t:
            t0, _seq, tid, amount = self._pending.popleft()
            out.append((tid, amount, t0))
        return out
