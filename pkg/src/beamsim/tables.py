"""Scheme-table loading: modcod/MCS and burst-waveform files.

Tables are plain CSV with a header row and '#' comments; schemas are
documented in the README and in the shipped default files under
``beamsim/data``.  Loaded tables are immutable lists sorted by the SINR
their curves require.
"""

import csv
from importlib import resources

from .phy import ErrorCurve, ModcodEntry, WaveformEntry

MODCOD_COLUMNS = [
    "id",
    "modulation",
    "rate_num",
    "rate_den",
    "spectral_efficiency",
    "sinr50_db",
    "slope_per_db",
]

WAVEFORM_COLUMNS = [
    "id",
    "modulation",
    "rate_num",
    "rate_den",
    "payload_symbols",
    "preamble_symbols",
    "postamble_symbols",
    "pilot_symbols",
    "guard_symbols",
    "sinr50_db",
    "slope_per_db",
]


def _read_rows(lines, expected_columns, where):
    reader = csv.reader(
        line for line in lines if line.strip() and not line.lstrip().startswith("#")
    )
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != expected_columns:
        raise ValueError(f"{where}: expected header {','.join(expected_columns)}")
    for row in reader:
        if len(row) != len(expected_columns):
            raise ValueError(f"{where}: malformed row {row!r}")
        yield [c.strip() for c in row]


def parse_modcod_table(lines, where="modcod table"):
    entries = []
    for row in _read_rows(lines, MODCOD_COLUMNS, where):
        entries.append(
            ModcodEntry(
                id=row[0],
                modulation=row[1],
                code_rate_num=int(row[2]),
                code_rate_den=int(row[3]),
                spectral_efficiency=float(row[4]),
                curve=ErrorCurve(float(row[5]), float(row[6])),
            )
        )
    if not entries:
        raise ValueError(f"{where}: no entries")
    return sorted(entries, key=lambda e: (e.curve.sinr50_dB, e.spectral_efficiency))


def parse_waveform_table(lines, where="waveform table"):
    entries = []
    for row in _read_rows(lines, WAVEFORM_COLUMNS, where):
        entries.append(
            WaveformEntry(
                id=int(row[0]),
                modulation=row[1],
                code_rate_num=int(row[2]),
                code_rate_den=int(row[3]),
                payload_symbols=int(row[4]),
                preamble_symbols=int(row[5]),
                postamble_symbols=int(row[6]),
                pilot_symbols=int(row[7]),
                guard_symbols=int(row[8]),
                curve=ErrorCurve(float(row[9]), float(row[10])),
            )
        )
    if not entries:
        raise ValueError(f"{where}: no entries")
    burst_sizes = {e.total_symbols for e in entries}
    if len(burst_sizes) != 1:
        raise ValueError(f"{where}: waveforms must share one burst length, got {burst_sizes}")
    return sorted(entries, key=lambda e: (e.curve.sinr50_dB, e.spectral_efficiency))


def load_modcod_table(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_modcod_table(f, where=str(path))


def load_waveform_table(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_waveform_table(f, where=str(path))


def _builtin(name):
    return resources.files("beamsim.data").joinpath(name).read_text().splitlines()


def builtin_dvbs2x_modcods():
    return parse_modcod_table(_builtin("dvbs2x_modcods.csv"), "builtin dvbs2x_modcods")


def builtin_rcs2_waveforms():
    return parse_waveform_table(_builtin("rcs2_waveforms.csv"), "builtin rcs2_waveforms")


def builtin_nr_mcs_table3():
    return parse_modcod_table(_builtin("nr_mcs_table3.csv"), "builtin nr_mcs_table3")
