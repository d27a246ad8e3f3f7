"""Physical-layer abstractions for both radio stacks.

Covers scheme tables (TDM modcods, MF-TDMA burst waveforms, grid MCS),
the logistic SINR-to-error mapping used as the link-to-system model,
adaptive scheme selection, and frame/burst/transport-block capacity
accounting.  All bit capacities are floored; symbol counts are integers.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import kernels

MODULATION_BITS = {
    "QPSK": 2,
    "PSK8": 3,
    "APSK16": 4,
    "APSK32": 5,
    "QAM16": 4,
    "QAM64": 6,
    "QAM256": 8,
}


class AllocationError(Exception):
    """Raised when a grant does not fit the resource grid."""


@dataclass(frozen=True)
class ErrorCurve:
    """Logistic error-rate curve in the dB domain."""

    sinr50_dB: float
    slope_per_dB: float

    def __post_init__(self):
        if self.slope_per_dB <= 0:
            raise ValueError("curve slope must be positive")


def error_probability(curve: ErrorCurve, sinr_dB: float) -> float:
    """Block error probability at the given SINR."""
    return kernels.logistic_error_probability(sinr_dB, curve.sinr50_dB, curve.slope_per_dB)


def required_sinr_dB(curve: ErrorCurve, error_target: float) -> float:
    """SINR at which the curve exactly meets the error target."""
    if not 0.0 < error_target < 1.0:
        raise ValueError("error target must be in (0, 1)")
    return curve.sinr50_dB + math.log(1.0 / error_target - 1.0) / curve.slope_per_dB


@dataclass(frozen=True)
class ModcodEntry:
    """One (modulation, code rate) scheme of a TDM carrier or MCS grid."""

    id: str
    modulation: str
    code_rate_num: int
    code_rate_den: int
    spectral_efficiency: float  # info bits per symbol (ideal, no framing)
    curve: ErrorCurve

    @property
    def code_rate(self) -> Fraction:
        return Fraction(self.code_rate_num, self.code_rate_den)

    @property
    def bits_per_symbol(self) -> int:
        return MODULATION_BITS[self.modulation]


@dataclass(frozen=True)
class WaveformEntry:
    """One MF-TDMA burst waveform: fixed burst layout plus a scheme."""

    id: int
    modulation: str
    code_rate_num: int
    code_rate_den: int
    payload_symbols: int
    preamble_symbols: int
    postamble_symbols: int
    pilot_symbols: int
    guard_symbols: int
    curve: ErrorCurve

    @property
    def code_rate(self) -> Fraction:
        return Fraction(self.code_rate_num, self.code_rate_den)

    @property
    def bits_per_symbol(self) -> int:
        return MODULATION_BITS[self.modulation]

    @property
    def total_symbols(self) -> int:
        return (
            self.payload_symbols
            + self.preamble_symbols
            + self.postamble_symbols
            + self.pilot_symbols
            + self.guard_symbols
        )

    @property
    def spectral_efficiency(self) -> float:
        """Info bits per burst symbol (used for scheme ranking)."""
        bits, airtime = rcs2_burst_capacity_bits(self)
        return bits / airtime


def symbol_rate(carrier_bandwidth_Hz: float, rolloff: float, carrier_spacing_factor: float) -> float:
    """Symbol rate supported by a carrier after roll-off and spacing."""
    if rolloff < 0 or carrier_spacing_factor < 0:
        raise ValueError("roll-off and carrier spacing must be >= 0")
    return carrier_bandwidth_Hz / (1.0 + rolloff + carrier_spacing_factor)


def acm_select(table, sinr_estimate_dB: float, error_target: float):
    """Highest-efficiency entry meeting the error target at the SINR estimate.

    Falls back to the most robust entry (lowest SINR required for the
    target) when nothing qualifies.
    """
    if not table:
        raise ValueError("scheme table is empty")
    best = None
    for entry in table:
        if error_probability(entry.curve, sinr_estimate_dB) <= error_target:
            if best is None or entry.spectral_efficiency > best.spectral_efficiency:
                best = entry
    if best is not None:
        return best
    return min(table, key=lambda e: (required_sinr_dB(e.curve, error_target), e.spectral_efficiency))


@dataclass(frozen=True)
class S2xFrameConfig:
    """TDM carrier framing: normal FEC frames plus physical-layer overheads.

    ``pilot_block_symbols_per_frame=None`` derives the pilot overhead from
    the standard insertion rule (36-symbol block every 16 payload slots of
    90 symbols).
    """

    fecframe_bits: int = 64800
    rolloff: float = 0.05
    carrier_spacing_factor: float = 0.02
    pl_header_symbols: int = 90
    pilot_block_symbols_per_frame: int = None
    bbframe_header_bits: int = 80
    dummy_frames_enabled: bool = True
    dummy_frame_symbols: int = 3330  # header + 36 slots of 90 symbols

    def pilot_symbols_for(self, data_symbols: int) -> int:
        if self.pilot_block_symbols_per_frame is not None:
            return self.pilot_block_symbols_per_frame
        slots = data_symbols // 90
        return 36 * max(0, math.ceil(slots / 16) - 1)


def s2x_frame_capacity_bits(frame_cfg: S2xFrameConfig, modcod: ModcodEntry):
    """(information bits, airtime symbols) of one frame at a given scheme."""
    data_symbols = frame_cfg.fecframe_bits // modcod.bits_per_symbol
    bits = math.floor(frame_cfg.fecframe_bits * modcod.code_rate) - frame_cfg.bbframe_header_bits
    bits = max(0, bits)
    airtime = data_symbols + frame_cfg.pl_header_symbols + frame_cfg.pilot_symbols_for(data_symbols)
    return bits, airtime


def rcs2_burst_capacity_bits(waveform: WaveformEntry):
    """(information bits, airtime symbols) of one burst."""
    bits = math.floor(waveform.payload_symbols * waveform.bits_per_symbol * waveform.code_rate)
    return bits, waveform.total_symbols


RCS2_CARRIER_LAYOUTS = {
    "c10x20MHz": (10, 20.0),
    "c40x5MHz": (40, 5.0),
}


@dataclass(frozen=True)
class Rcs2FrameConfig:
    """Static MF-TDMA return grid: fixed carriers, periodic superframe."""

    carriers: str = "c40x5MHz"
    superframe_duration_ms: float = 12.456
    rolloff: float = 0.20
    carrier_spacing_factor: float = 0.02
    beam_bandwidth_MHz: float = 200.0

    def __post_init__(self):
        if self.carriers not in RCS2_CARRIER_LAYOUTS:
            raise ValueError(f"unknown carrier layout: {self.carriers}")
        n, bw = RCS2_CARRIER_LAYOUTS[self.carriers]
        if abs(n * bw - self.beam_bandwidth_MHz) > 1e-9:
            raise ValueError("carrier layout does not tile the beam bandwidth")

    @property
    def carrier_count(self) -> int:
        return RCS2_CARRIER_LAYOUTS[self.carriers][0]

    @property
    def carrier_bandwidth_MHz(self) -> float:
        return RCS2_CARRIER_LAYOUTS[self.carriers][1]

    @property
    def symbol_rate_baud(self) -> float:
        return symbol_rate(self.carrier_bandwidth_MHz * 1e6, self.rolloff, self.carrier_spacing_factor)

    def timeslots_per_carrier(self, burst_symbols: int) -> int:
        """Whole bursts fitting one carrier per superframe; remainder is guard."""
        sf_symbols = self.symbol_rate_baud * self.superframe_duration_ms / 1e3
        return int(sf_symbols // burst_symbols)

    def burst_duration_s(self, burst_symbols: int) -> float:
        return burst_symbols / self.symbol_rate_baud


@dataclass(frozen=True)
class NrGridConfig:
    """OFDM grid: numerology, PRB count and per-slot overhead knobs."""

    numerology: int = 3
    prb_count: int = 132
    symbols_per_slot: int = 14
    dmrs_symbols_per_slot: int = 1
    ptrs_fraction: float = 0.01
    tb_crc_bits: int = 24

    @property
    def scs_kHz(self) -> float:
        return 15.0 * 2**self.numerology

    @property
    def slot_duration_ms(self) -> float:
        return 1.0 / 2**self.numerology

    @property
    def prb_bandwidth_Hz(self) -> float:
        return 12.0 * self.scs_kHz * 1e3

    @property
    def occupied_bandwidth_MHz(self) -> float:
        return self.prb_count * self.prb_bandwidth_Hz / 1e6


def nr_tb_size_bits(grid: NrGridConfig, mcs: ModcodEntry, prbs: int, slots: int = 1) -> int:
    """Transport-block capacity over a PRB x slot allocation."""
    if prbs > grid.prb_count:
        raise AllocationError(f"{prbs} PRBs exceed the {grid.prb_count}-PRB grid")
    if prbs < 0 or slots < 0:
        raise AllocationError("allocation sizes must be non-negative")
    data_res = (
        prbs
        * 12
        * (grid.symbols_per_slot - grid.dmrs_symbols_per_slot)
        * slots
        * (1.0 - grid.ptrs_fraction)
    )
    bits = math.floor(data_res * mcs.bits_per_symbol * mcs.code_rate) - grid.tb_crc_bits
    return max(0, bits)


def transport_success(error_probability: float, gen) -> bool:
    """Bernoulli delivery draw; failed blocks deliver nothing (no HARQ)."""
    if not 0.0 <= error_probability <= 1.0:
        raise ValueError("error probability must be in [0, 1]")
    return gen.random() >= error_probability
