"""Result aggregation: percentiles, CDFs, spectral efficiency, gains.

User-level metrics follow the central-beam convention: one value per
terminal for SINR (dB-domain mean of its block samples) and throughput,
one value per *file* for the file-throughput metric.  The percentile
method is pinned to linear interpolation over order statistics
(rank = p/100 * (n-1)) for regression stability.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

CDF_POINTS = 200


def percentile(samples, p: float) -> float:
    """Linear-interpolated order statistic."""
    if not 0.0 <= p <= 100.0:
        raise ValueError("percentile must be in [0, 100]")
    data = sorted(samples)
    if not data:
        raise ValueError("cannot take a percentile of an empty sample set")
    rank = p / 100.0 * (len(data) - 1)
    lo = int(math.floor(rank))
    hi = min(lo + 1, len(data) - 1)
    frac = rank - lo
    return data[lo] * (1.0 - frac) + data[hi] * frac


def file_throughput(record) -> float:
    """End-to-end throughput of one file transfer, bits per second."""
    interval = record.t_rx_finish_s - record.t_tx_start_s
    if interval <= 0:
        raise ValueError("file transfer must finish after it starts")
    if record.size_bits <= 0:
        raise ValueError("file size must be positive")
    return record.size_bits / interval


def beam_spectral_efficiency(delivered_phy_bits: float, measurement_s: float, bandwidth_Hz: float) -> float:
    """Delivered physical-layer bits per second per Hertz."""
    if measurement_s <= 0 or bandwidth_Hz <= 0:
        raise ValueError("measurement time and bandwidth must be positive")
    return delivered_phy_bits / (measurement_s * bandwidth_Hz)


def gain_pct(metric_a: float, metric_b: float) -> float:
    """Relative gain of a over b in percent."""
    if metric_b <= 0:
        raise ValueError("comparison baseline must be positive")
    return 100.0 * (metric_a - metric_b) / metric_b


@dataclass(frozen=True)
class UserSample:
    terminal_id: int
    mean_sinr_dB: float
    sinr_samples: tuple
    delivered_bits: int
    active_time_s: float


@dataclass(frozen=True)
class BeamCounters:
    phy_bits: float
    llc_bits: float
    airtime_s: float
    measurement_s: float
    bandwidth_Hz: float


@dataclass
class MetricSummary:
    p5: float
    p50: float
    p95: float
    mean: float


@dataclass
class StatReport:
    metrics: dict = field(default_factory=dict)  # name -> MetricSummary
    cdfs: dict = field(default_factory=dict)  # name -> [(value, fraction)]
    beam_phy_se_200MHz: float = 0.0
    beam_phy_se_400MHz: float = 0.0
    beam_rlc_llc_throughput_Mbps: float = 0.0
    gain_vs_comparison_pct: float = None
    user_count: int = 0
    file_count: int = 0


def _summary(values) -> MetricSummary:
    return MetricSummary(
        p5=percentile(values, 5),
        p50=percentile(values, 50),
        p95=percentile(values, 95),
        mean=float(np.mean(values)),
    )


def _cdf(values):
    qs = np.linspace(0.0, 100.0, CDF_POINTS)
    return [(percentile(values, q), q / 100.0) for q in qs]


def build_report(user_samples, file_records, beam_counters: BeamCounters) -> StatReport:
    """Assemble the per-campaign report from pooled central-beam data."""
    if not user_samples:
        raise ValueError("no central-beam user samples to report")
    report = StatReport(user_count=len(user_samples), file_count=len(file_records))

    sinr = [u.mean_sinr_dB for u in user_samples]
    report.metrics["sinr_db"] = _summary(sinr)
    report.cdfs["sinr_db"] = _cdf(sinr)

    tput = [u.delivered_bits / beam_counters.measurement_s / 1e3 for u in user_samples]
    report.metrics["user_tput_kbps"] = _summary(tput)
    report.cdfs["user_tput_kbps"] = _cdf(tput)

    if file_records:
        ftp = [file_throughput(r) / 1e3 for r in file_records]
        report.metrics["file_tput_kbps"] = _summary(ftp)
        report.cdfs["file_tput_kbps"] = _cdf(ftp)

    se_200 = beam_spectral_efficiency(
        beam_counters.phy_bits, beam_counters.measurement_s, beam_counters.bandwidth_Hz
    )
    report.beam_phy_se_200MHz = se_200
    # one colour of the 2+2 reuse spans half the 400 MHz system bandwidth
    report.beam_phy_se_400MHz = se_200 / 2.0
    report.beam_rlc_llc_throughput_Mbps = (
        beam_counters.llc_bits / beam_counters.measurement_s / 1e6
    )
    return report


USER_CSV_COLUMNS = [
    "link_direction",
    "sub_scenario",
    "technology",
    "sinr_p5_db",
    "sinr_p50_db",
    "sinr_p95_db",
    "sinr_mean_db",
    "user_tput_p5_kbps",
    "user_tput_p50_kbps",
    "user_tput_p95_kbps",
    "user_tput_mean_kbps",
    "file_tput_p5_kbps",
    "file_tput_p50_kbps",
    "file_tput_p95_kbps",
    "file_tput_mean_kbps",
    "avg_tput_gain_vs_comparison_pct",
]

BEAM_CSV_COLUMNS = [
    "link_direction",
    "sub_scenario",
    "technology",
    "beam_phy_se_400mhz_bps_hz",
    "beam_phy_se_200mhz_bps_hz",
    "beam_rlc_llc_tput_mbps",
    "avg_tput_gain_vs_comparison_pct",
]


def _fmt(value):
    if value is None:
        return ""
    return f"{value:.4f}"


def user_csv_row(direction, sub_scenario, technology, report: StatReport):
    s = report.metrics["sinr_db"]
    t = report.metrics["user_tput_kbps"]
    f = report.metrics.get("file_tput_kbps")
    return [
        direction,
        sub_scenario,
        technology,
        _fmt(s.p5),
        _fmt(s.p50),
        _fmt(s.p95),
        _fmt(s.mean),
        _fmt(t.p5),
        _fmt(t.p50),
        _fmt(t.p95),
        _fmt(t.mean),
        _fmt(f.p5 if f else None),
        _fmt(f.p50 if f else None),
        _fmt(f.p95 if f else None),
        _fmt(f.mean if f else None),
        _fmt(report.gain_vs_comparison_pct),
    ]


def beam_csv_row(direction, sub_scenario, technology, report: StatReport):
    return [
        direction,
        sub_scenario,
        technology,
        _fmt(report.beam_phy_se_400MHz),
        _fmt(report.beam_phy_se_200MHz),
        _fmt(report.beam_rlc_llc_throughput_Mbps),
        _fmt(report.gain_vs_comparison_pct),
    ]


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def write_cdf_csv(path, points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "cumulative_fraction"])
        for value, frac in points:
            writer.writerow([f"{value:.6f}", f"{frac:.6f}"])
