"""Scenario configuration: schema, presets, validation, YAML round-trip.

A scenario fully describes one campaign: geometry, satellite RF values,
amplifier model, attenuation process, both stacks' phy parameters, MAC
settings, traffic and drop plan.  Presets cover the three sub-scenarios;
satellite RF values and the beamwidth are deliberately unset there (the
published system-parameter sets must be put in the config; the shipped
files under ``configs/`` carry transcribed values).
"""

import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import yaml

from .geometry import OrbitConfig, PROFILES, default_beam_spacing_deg
from .linkbudget import AttenuationConfig, CarrierPlan, SatelliteRf
from .phy import NrGridConfig, Rcs2FrameConfig, S2xFrameConfig

SCHEMA_VERSION = 1

STACKS = ("dvb", "nr")
DIRECTIONS = ("dl", "ul", "both")
LINK_BUDGET_SETS = ("set1", "set2")
SUB_SCENARIOS = ("full_load", "full_load_diversity", "limited_load")

DL_CENTER_FREQ_GHZ = 20.0
UL_CENTER_FREQ_GHZ = 30.0
BEAM_BANDWIDTH_MHZ = 200.0


class ConfigError(Exception):
    """Configuration is malformed or violates a scenario invariant."""


@dataclass
class GeometryConfig:
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    tiers: int = 2
    hpbw_deg: float = None  # REQUIRED: satellite antenna 3 dB beamwidth
    beam_spacing_deg: float = None  # default: sqrt(3) x HPBW (co-channel pitch)
    per_beam_terminals: int = 50
    profile_mix: dict = field(default_factory=lambda: {"vsat_default": 50})
    pattern_floor_rel_dB: float = -30.0

    def resolved_beam_spacing_deg(self) -> float:
        if self.beam_spacing_deg is not None:
            return self.beam_spacing_deg
        return default_beam_spacing_deg(self.hpbw_deg)


@dataclass
class SatelliteConfig:
    # REQUIRED: transcribe from the published system parameter sets
    tx_eirp_density_dBW_per_MHz: float = None
    g_over_t_dB_per_K: float = None
    tx_max_gain_dBi: float = None
    rx_max_gain_dBi: float = None

    def to_rf(self) -> SatelliteRf:
        return SatelliteRf(
            self.tx_eirp_density_dBW_per_MHz,
            self.g_over_t_dB_per_K,
            self.tx_max_gain_dBi,
            self.rx_max_gain_dBi,
        )


@dataclass
class PaConfig:
    dl_ibo_dB: float = 5.0
    dl_obo_dB: float = 0.8
    dl_c_over_im_dvb_dB: float = 18.6
    dl_c_over_im_nr_dB: float = 18.4
    ul_ibo_dB: float = 0.0
    # (OBO dB, C/Im dB) interpolation points for the terminal amplifier
    ul_obo_cim_table: list = field(
        default_factory=lambda: [
            [0.0, 15.0],
            [2.0, 19.0],
            [4.0, 23.0],
            [6.0, 27.0],
            [8.0, 30.0],
            [10.0, 33.0],
            [12.0, 36.0],
            [16.0, 42.0],
        ]
    )


@dataclass
class PhyConfig:
    s2x: S2xFrameConfig = field(default_factory=S2xFrameConfig)
    rcs2: Rcs2FrameConfig = field(default_factory=Rcs2FrameConfig)
    nr: NrGridConfig = field(default_factory=NrGridConfig)
    modcod_table: str = None  # path; None selects the shipped default
    waveform_table: str = None
    mcs_table: str = None
    dl_error_target: float = 1e-5
    ul_error_target: float = 1e-3
    # optional explicit sub-carrier layout {(offset_MHz, bandwidth_MHz), ...}
    sub_carrier_overrides: dict = None


@dataclass
class MacConfig:
    pf_alpha: float = 0.0
    pf_beta: float = 1.0
    pf_smoothing_s: float = 0.1
    pf_floor_bps: float = 1.0
    nr_dl_prb_group: int = 33
    rcs2_esn0_target_dB: float = 12.5
    nr_snr_target_dB: float = 15.0
    pc_percentile_x: float = 10.0
    cqi_report_interval_s: float = 0.1
    cqi_window_s: float = 0.5


@dataclass
class TrafficConfig:
    kind: str = "full_buffer"  # or "ftp3"
    ftp3_mean_iat_s: float = 0.1
    ftp3_iat_upper_bound_s: float = 1.0
    ftp3_file_bytes_dl: int = 60000
    ftp3_file_bytes_ul: int = 15000


@dataclass
class DropsConfig:
    count: int = 5
    duration_s: float = 5.0  # measurement window, excludes warmup
    warmup_s: float = 1.0
    master_seed: int = 1


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    schema_version: int = SCHEMA_VERSION
    link_budget_set: str = "set1"
    sub_scenario: str = "full_load"
    stack: str = "dvb"
    direction: str = "dl"
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    satellite: SatelliteConfig = field(default_factory=SatelliteConfig)
    pa: PaConfig = field(default_factory=PaConfig)
    attenuation: AttenuationConfig = field(default_factory=AttenuationConfig)
    phy: PhyConfig = field(default_factory=PhyConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    drops: DropsConfig = field(default_factory=DropsConfig)


_NESTED_TYPES = {
    "orbit": OrbitConfig,
    "geometry": GeometryConfig,
    "satellite": SatelliteConfig,
    "pa": PaConfig,
    "attenuation": AttenuationConfig,
    "phy": PhyConfig,
    "mac": MacConfig,
    "traffic": TrafficConfig,
    "drops": DropsConfig,
    "s2x": S2xFrameConfig,
    "rcs2": Rcs2FrameConfig,
    "nr": NrGridConfig,
}


def _build_dataclass(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key: {path}.{key}" if path else f"unknown key: {key}")
        sub = f"{path}.{key}" if path else key
        if key in _NESTED_TYPES and isinstance(value, dict):
            kwargs[key] = _build_dataclass(_NESTED_TYPES[key], value, sub)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or cls.__name__}: {exc}") from exc


def scenario_from_dict(data: dict) -> "ScenarioConfig":
    data = dict(data)
    preset_name = data.pop("preset", None)
    if preset_name is not None:
        base = preset(preset_name)
        data = _deep_merge(base, data)
    cfg = _build_dataclass(ScenarioConfig, data, "")
    validate_scenario(cfg)
    return cfg


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return scenario_from_dict(data)


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(cfg), fh, sort_keys=True)


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


def validate_scenario(cfg: ScenarioConfig) -> None:
    _require(cfg.schema_version == SCHEMA_VERSION, f"schema_version must be {SCHEMA_VERSION}")
    _require(cfg.stack in STACKS, f"stack: must be one of {STACKS}")
    _require(cfg.direction in DIRECTIONS, f"direction: must be one of {DIRECTIONS}")
    _require(cfg.link_budget_set in LINK_BUDGET_SETS, f"link_budget_set: must be one of {LINK_BUDGET_SETS}")
    _require(cfg.sub_scenario in SUB_SCENARIOS, f"sub_scenario: must be one of {SUB_SCENARIOS}")

    geo = cfg.geometry
    _require(geo.hpbw_deg is not None, "geometry.hpbw_deg: REQUIRED (transcribe from the system parameter set)")
    _require(geo.hpbw_deg > 0, "geometry.hpbw_deg: must be positive")
    _require(geo.tiers in (1, 2), "geometry.tiers: must be 1 or 2")
    _require(geo.per_beam_terminals >= 1, "geometry.per_beam_terminals: must be >= 1")
    for name in geo.profile_mix:
        _require(name in PROFILES, f"geometry.profile_mix: unknown terminal profile {name!r}")
    _require(
        sum(geo.profile_mix.values()) == geo.per_beam_terminals,
        "geometry.profile_mix: counts must sum to per_beam_terminals",
    )

    sat = cfg.satellite
    for key in (
        "tx_eirp_density_dBW_per_MHz",
        "g_over_t_dB_per_K",
        "tx_max_gain_dBi",
        "rx_max_gain_dBi",
    ):
        value = getattr(sat, key)
        _require(value is not None, f"satellite.{key}: REQUIRED (transcribe from the system parameter set)")
        _require(math.isfinite(value), f"satellite.{key}: must be finite")

    _require(0.0 < cfg.phy.dl_error_target < 1.0, "phy.dl_error_target: must be in (0, 1)")
    _require(0.0 < cfg.phy.ul_error_target < 1.0, "phy.ul_error_target: must be in (0, 1)")

    if cfg.phy.sub_carrier_overrides is not None:
        for direction, subs in cfg.phy.sub_carrier_overrides.items():
            _require(direction in ("dl", "ul"), "phy.sub_carrier_overrides: keys must be dl/ul")
            freq = DL_CENTER_FREQ_GHZ if direction == "dl" else UL_CENTER_FREQ_GHZ
            try:
                CarrierPlan(direction.upper(), freq, BEAM_BANDWIDTH_MHZ, tuple(tuple(s) for s in subs))
            except ValueError as exc:
                raise ConfigError(f"phy.sub_carrier_overrides.{direction}: {exc}") from exc

    table = cfg.pa.ul_obo_cim_table
    _require(
        all(table[i][0] < table[i + 1][0] for i in range(len(table) - 1)),
        "pa.ul_obo_cim_table: must be sorted by OBO",
    )
    _require(all(row[1] > 0 for row in table), "pa.ul_obo_cim_table: C/Im must be positive")

    drops = cfg.drops
    _require(drops.count >= 1, "drops.count: must be >= 1")
    _require(drops.duration_s >= 0, "drops.duration_s: must be >= 0")
    _require(drops.warmup_s >= 0, "drops.warmup_s: must be >= 0")

    _require(cfg.traffic.kind in ("full_buffer", "ftp3"), "traffic.kind: must be full_buffer or ftp3")

    # sub-scenario consistency
    if cfg.sub_scenario in ("full_load", "full_load_diversity"):
        _require(cfg.traffic.kind == "full_buffer", f"{cfg.sub_scenario}: traffic.kind must be full_buffer")
        _require(
            cfg.attenuation.kind != "none",
            f"{cfg.sub_scenario}: excess attenuation must be enabled",
        )
    if cfg.sub_scenario == "limited_load":
        _require(cfg.traffic.kind == "ftp3", "limited_load: traffic.kind must be ftp3")
        _require(cfg.attenuation.kind == "none", "limited_load: attenuation.kind must be none")
        _require(cfg.geometry.tiers == 1, "limited_load: geometry.tiers must be 1")
    if cfg.sub_scenario == "full_load_diversity":
        _require(cfg.link_budget_set == "set2", "full_load_diversity: link_budget_set must be set2")
        counts = sorted(cfg.geometry.profile_mix.values())
        _require(
            len(counts) == 3 and counts[-1] - counts[0] <= 1,
            "full_load_diversity: profile_mix must spread three profiles near-evenly",
        )
    if cfg.sub_scenario == "full_load" and cfg.link_budget_set == "set1":
        if cfg.direction == "dl":
            _require(cfg.geometry.tiers == 2, "set1 full_load dl: geometry.tiers must be 2")
        elif cfg.direction == "ul":
            _require(cfg.geometry.tiers == 1, "set1 full_load ul: geometry.tiers must be 1")
        else:
            raise ConfigError("set1 full_load: run dl and ul separately (tier counts differ)")


def preset(name: str) -> dict:
    """Base config dict for one of the three sub-scenarios."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset: {name!r} (have {sorted(PRESETS)})")
    base = {
        "name": name,
        "schema_version": SCHEMA_VERSION,
        "geometry": {
            "tiers": 2,
            "per_beam_terminals": 50,
            "profile_mix": {"vsat_default": 50},
        },
        "drops": {"count": 5, "duration_s": 5.0, "warmup_s": 1.0, "master_seed": 1},
    }
    return _deep_merge(base, PRESETS[name])


PRESETS = {
    "set1_full_load": {
        "link_budget_set": "set1",
        "sub_scenario": "full_load",
        "direction": "dl",
        "traffic": {"kind": "full_buffer"},
        "attenuation": {"kind": "correlated_lognormal"},
        "geometry": {"tiers": 2},
    },
    "set2_full_load_diversity": {
        "link_budget_set": "set2",
        "sub_scenario": "full_load_diversity",
        "direction": "dl",
        "traffic": {"kind": "full_buffer"},
        "attenuation": {"kind": "correlated_lognormal"},
        "geometry": {
            "tiers": 1,
            "profile_mix": {"vsat_low": 17, "vsat_default": 17, "vsat_high": 16},
        },
    },
    "set1_limited_load": {
        "link_budget_set": "set1",
        "sub_scenario": "limited_load",
        "direction": "dl",
        "traffic": {"kind": "ftp3"},
        "attenuation": {"kind": "none"},
        "geometry": {"tiers": 1},
    },
}
