"""Per-link power, noise, interference and SINR arithmetic.

Everything here is stateless except :class:`AttenuationProcess`, which owns
a private random stream per drop.  Powers are dBW, densities dBW/MHz,
temperatures Kelvin.  The excess-attenuation process is a lightweight
correlated stand-in for a full tropospheric time-series model: Gaussian in
dB, exponential autocorrelation in time, exponential spatial correlation
over terminal distance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .constants import BOLTZMANN_J_K, FSPL_CONSTANT_DB, T0_K

# First -3 dB crossing of the circular-aperture taper 4*(J1(u)/u)^2,
# root of 2*J1(u)/u = 1/sqrt(2).
U_3DB = 1.6163399483107035


def fspl_dB(distance_km: float, freq_GHz: float) -> float:
    """Free-space path loss."""
    if distance_km <= 0 or freq_GHz <= 0:
        raise ValueError("distance and frequency must be positive")
    return FSPL_CONSTANT_DB + 20.0 * math.log10(distance_km) + 20.0 * math.log10(freq_GHz)


def system_noise_temperature(antenna_temp_K: float, noise_figure_dB: float) -> float:
    """Receiver system noise temperature T_ant + T0*(F-1)."""
    if antenna_temp_K < 0 or noise_figure_dB < 0:
        raise ValueError("temperature and noise figure must be non-negative")
    return antenna_temp_K + T0_K * (10.0 ** (noise_figure_dB / 10.0) - 1.0)


def noise_power_dBW(temp_K: float, bandwidth_Hz: float) -> float:
    """Thermal noise power kTB."""
    if temp_K <= 0 or bandwidth_Hz <= 0:
        raise ValueError("temperature and bandwidth must be positive")
    return 10.0 * math.log10(BOLTZMANN_J_K * temp_K * bandwidth_Hz)


@dataclass(frozen=True)
class AperturePattern:
    """Circular-aperture (Bessel) antenna pattern parameterised by beamwidth.

    The relative pattern is 4*(J1(u)/u)^2 with u scaled so that the -3 dB
    point falls at half the half-power beamwidth; it is clamped at
    ``floor_rel_dB`` below peak to keep the nulls finite.
    """

    max_gain_dBi: float
    half_power_beamwidth_deg: float
    floor_rel_dB: float = -30.0

    def u_of(self, off_axis_deg: float) -> float:
        half = math.radians(self.half_power_beamwidth_deg / 2.0)
        return U_3DB * math.sin(math.radians(off_axis_deg)) / math.sin(half)

    def relative_gain_dB(self, off_axis_deg: float) -> float:
        if off_axis_deg < 0:
            raise ValueError("off-axis angle must be >= 0")
        return kernels.bessel_taper_db(self.u_of(off_axis_deg), self.floor_rel_dB)

    def relative_gain_dB_many(self, off_axis_deg) -> np.ndarray:
        half = math.radians(self.half_power_beamwidth_deg / 2.0)
        u = U_3DB * np.sin(np.radians(np.asarray(off_axis_deg, dtype=np.float64))) / math.sin(half)
        return kernels.bessel_taper_db_many(u, self.floor_rel_dB)


def antenna_gain_dBi(pattern: AperturePattern, off_axis_deg: float) -> float:
    """Absolute gain toward an off-axis direction (peak gain plus taper)."""
    return pattern.max_gain_dBi + pattern.relative_gain_dB(off_axis_deg)


@dataclass(frozen=True)
class SinrBreakdown:
    c_over_n_dB: float
    c_over_i_dB: float
    c_over_im_dB: float
    sinr_dB: float


def combine_sinr(
    c_over_n_dB: float,
    c_over_i_dB: float = math.inf,
    c_over_im_dB: float = math.inf,
) -> SinrBreakdown:
    """Combine carrier-to-impairment ratios: 1/sinr = 1/cn + 1/ci + 1/cim (linear)."""
    sinr = kernels.combine_sinr_db(c_over_n_dB, c_over_i_dB, c_over_im_dB)
    return SinrBreakdown(c_over_n_dB, c_over_i_dB, c_over_im_dB, sinr)


@dataclass(frozen=True)
class SatelliteRf:
    """Payload RF characteristics of one link-budget parameter set."""

    tx_eirp_density_dBW_per_MHz: float
    g_over_t_dB_per_K: float
    tx_max_gain_dBi: float
    rx_max_gain_dBi: float


@dataclass(frozen=True)
class PaModel:
    """Non-linear amplifier back-off and intermodulation summary.

    Downlink uses the fixed ``c_over_im_dB``; uplink interpolates C/Im from
    the realised output back-off (power reduction below saturation).
    """

    ibo_dB: float
    obo_dB: float
    c_over_im_dB: float
    ul_obo_cim_table: tuple = ()

    def ul_c_over_im_dB(self, obo_dB: float) -> float:
        table = self.ul_obo_cim_table
        if not table:
            return self.c_over_im_dB
        obos = [p[0] for p in table]
        cims = [p[1] for p in table]
        if list(obos) != sorted(obos):
            raise ValueError("ul_obo_cim_table must be sorted by OBO")
        return float(np.interp(obo_dB, obos, cims))


@dataclass(frozen=True)
class CarrierPlan:
    direction: str  # "DL" or "UL"
    center_freq_GHz: float
    beam_bandwidth_MHz: float
    sub_carriers: tuple  # ((center_offset_MHz, bandwidth_MHz), ...)

    def __post_init__(self):
        if self.direction not in ("DL", "UL"):
            raise ValueError("direction must be DL or UL")
        spans = sorted(self.carrier_span_MHz(i) for i in range(len(self.sub_carriers)))
        half = self.beam_bandwidth_MHz / 2.0
        for i, (lo, hi) in enumerate(spans):
            if lo < -half - 1e-9 or hi > half + 1e-9:
                raise ValueError("sub-carrier extends outside the beam bandwidth")
            if i > 0 and lo < spans[i - 1][1] - 1e-9:
                raise ValueError("sub-carriers overlap")

    def carrier_span_MHz(self, index: int) -> tuple:
        off, bw = self.sub_carriers[index]
        return (off - bw / 2.0, off + bw / 2.0)


def spectral_overlap(victim_span, interferer_span) -> float:
    """Fraction of the interferer's power falling into the victim span."""
    lo = max(victim_span[0], interferer_span[0])
    hi = min(victim_span[1], interferer_span[1])
    width = interferer_span[1] - interferer_span[0]
    if hi <= lo or width <= 0:
        return 0.0
    return (hi - lo) / width


def cochannel_interference(victim_span, victim_color, transmissions) -> float:
    """Aggregate co-channel interference power (dBW) at the victim receiver.

    ``transmissions`` is an iterable of (rx_power_dBW, span, color); beams
    of other colours contribute nothing, same-colour power is weighted by
    its spectral overlap with the victim carrier.
    """
    levels = []
    weights = []
    for power_dBW, span, color in transmissions:
        if color != victim_color:
            continue
        levels.append(power_dBW)
        weights.append(spectral_overlap(victim_span, span))
    if not levels:
        return -math.inf
    return kernels.weighted_sum_power_db(
        np.asarray(levels, dtype=np.float64), np.asarray(weights, dtype=np.float64)
    )


def dl_carrier_power_dBW(
    eirp_density_dBW_per_MHz: float,
    carrier_bandwidth_MHz: float,
    tx_relative_pattern_dB: float,
    path_loss_dB: float,
    rx_gain_dBi: float,
    excess_attenuation_dB: float = 0.0,
) -> float:
    """Received forward-link carrier power for one satellite transmission."""
    return (
        eirp_density_dBW_per_MHz
        + 10.0 * math.log10(carrier_bandwidth_MHz)
        + tx_relative_pattern_dB
        - path_loss_dB
        - excess_attenuation_dB
        + rx_gain_dBi
    )


def ul_received_cn0_dBHz(
    terminal_eirp_dBW: float,
    path_loss_dB: float,
    g_over_t_dB_per_K: float,
    rx_relative_pattern_dB: float,
    excess_attenuation_dB: float = 0.0,
) -> float:
    """Return-link C/N0 at the payload for a terminal transmission."""
    return (
        terminal_eirp_dBW
        - path_loss_dB
        - excess_attenuation_dB
        + g_over_t_dB_per_K
        + rx_relative_pattern_dB
        - 10.0 * math.log10(BOLTZMANN_J_K)
    )


@dataclass(frozen=True)
class AttenuationConfig:
    kind: str = "none"  # "none" or "correlated_lognormal"
    std_dB: float = 0.5
    decorrelation_time_s: float = 60.0
    spatial_correlation_km: float = 50.0
    tick_s: float = 0.1

    def __post_init__(self):
        if self.kind not in ("none", "correlated_lognormal"):
            raise ValueError(f"unknown attenuation kind: {self.kind}")
        if self.std_dB < 0:
            raise ValueError("std_dB must be >= 0")


class AttenuationProcess:
    """Correlated excess-attenuation field over a fixed set of terminals.

    Values are Gaussian in dB (std ``std_dB``), evolve as an
    Ornstein-Uhlenbeck chain on a fixed tick, and correlate spatially as
    exp(-d / spatial_correlation_km).  Deterministic per (seed, label);
    terminals at identical positions always see identical samples.
    """

    def __init__(self, config: AttenuationConfig, positions_km, master_seed: int, label: str = "atten"):
        self.config = config
        positions = np.asarray(positions_km, dtype=np.float64)
        self._n = len(positions)
        if config.kind == "none" or config.std_dB == 0.0 or self._n == 0:
            self._static_zero = True
            return
        self._static_zero = False

        # exact duplicates share one field component
        keys = [tuple(p) for p in positions]
        uniq = {}
        self._index = np.empty(self._n, dtype=np.intp)
        for i, k in enumerate(keys):
            if k not in uniq:
                uniq[k] = len(uniq)
            self._index[i] = uniq[k]
        upos = np.array([k for k, _ in sorted(uniq.items(), key=lambda kv: kv[1])])

        d = np.linalg.norm(upos[:, None, :] - upos[None, :, :], axis=-1)
        corr = np.exp(-d / config.spatial_correlation_km)
        corr[np.diag_indices_from(corr)] += 1e-10
        self._chol = np.linalg.cholesky(corr)
        self._rho = math.exp(-config.tick_s / config.decorrelation_time_s)
        self._gen = rng.stream(master_seed, label)
        self._states = [self._chol @ self._gen.standard_normal(len(upos))]

    def _state_at_tick(self, k: int) -> np.ndarray:
        while len(self._states) <= k:
            prev = self._states[-1]
            w = self._chol @ self._gen.standard_normal(prev.shape[0])
            self._states.append(self._rho * prev + math.sqrt(1.0 - self._rho**2) * w)
        return self._states[k]

    def sample(self, terminal_index: int, t: float) -> float:
        if self._static_zero:
            return 0.0
        k = int(t / self.config.tick_s)
        return float(self.config.std_dB * self._state_at_tick(k)[self._index[terminal_index]])

    def sample_many(self, t: float) -> np.ndarray:
        """Attenuation of every terminal at time t (dB)."""
        if self._static_zero:
            return np.zeros(self._n)
        k = int(t / self.config.tick_s)
        return self.config.std_dB * self._state_at_tick(k)[self._index]


def sample_attenuation(process: AttenuationProcess, terminal_index: int, t: float) -> float:
    return process.sample(terminal_index, t)
