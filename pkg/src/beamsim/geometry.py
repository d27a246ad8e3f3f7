"""Static scene construction: GEO satellite, beam lattice, terminals.

The Earth is a sphere; everything internal is ECEF kilometers, geodetic
latitude/longitude appears only at the config boundary.  The simulated
beams are the single co-channel colour of a 2-colour x 2-polarisation
frequency plan: in the full system neighbouring boresights sit at
sqrt(3)/2 x HPBW (-3 dB contour overlap) and same-colour beams at twice
that, so the simulated lattice pitch defaults to sqrt(3) x HPBW.  All
simulated beams carry the central beam's colour and interfere with each
other; the other colours never enter the simulation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .constants import SPEED_OF_LIGHT_KM_S

# Same-colour boresight pitch, in units of adjacent-beam spacing, for a
# 4-colour (2 frequency x 2 polarisation) hexagonal reuse plan.
FRF2PLUS2_REUSE_DISTANCE = 2.0


def default_beam_spacing_deg(hpbw_deg: float) -> float:
    """Pitch of the simulated co-channel lattice for a given beamwidth.

    Adjacent beams of the full multi-colour system are packed so their
    -3 dB contours overlap (pitch sqrt(3)/2 x HPBW); the single simulated
    colour repeats every second beam.
    """
    return math.sqrt(3.0) / 2.0 * hpbw_deg * FRF2PLUS2_REUSE_DISTANCE


@dataclass(frozen=True)
class OrbitConfig:
    altitude_km: float = 35786.0
    earth_radius_km: float = 6371.0
    central_beam_elevation_deg: float = 45.0

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")
        if not 0.0 < self.central_beam_elevation_deg <= 90.0:
            raise ValueError("central beam elevation must be in (0, 90] deg")

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km


@dataclass(frozen=True)
class TerminalProfile:
    name: str
    rx_gain_dBi: float
    tx_gain_dBi: float
    tx_power_dBm: float
    antenna_temp_K: float
    noise_figure_dB: float
    aperture_diameter_m: float


# Fixed VSAT classes (low / default / high capability).
VSAT_LOW = TerminalProfile("vsat_low", 36.7, 40.4, 30.0, 150.0, 1.2, 0.46)
VSAT_DEFAULT = TerminalProfile("vsat_default", 39.7, 43.2, 33.0, 150.0, 1.2, 0.60)
VSAT_HIGH = TerminalProfile("vsat_high", 53.2, 50.1, 33.0, 150.0, 1.2, 1.80)

PROFILES = {p.name: p for p in (VSAT_LOW, VSAT_DEFAULT, VSAT_HIGH)}


@dataclass(frozen=True)
class Beam:
    id: int
    boresight: np.ndarray  # unit vector, satellite -> ground, ECEF
    center_geo: tuple  # (lat_deg, lon_deg) of the boresight ground point
    color: int
    half_power_beamwidth_deg: float
    sat_ecef_km: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class BeamLayout:
    beams: list
    tiers: int
    beam_spacing_deg: float  # boresight pitch of the simulated lattice
    frf_scheme: str
    orbit: OrbitConfig
    sat_ecef_km: np.ndarray = field(repr=False, default=None)

    @property
    def central_beam(self) -> Beam:
        return self.beams[0]


@dataclass(frozen=True)
class Terminal:
    id: int
    beam_id: int
    position_geo: tuple  # (lat_deg, lon_deg, alt_km=0)
    profile: TerminalProfile
    position_ecef_km: np.ndarray = field(repr=False, default=None)


def geodetic_to_ecef(lat_deg: float, lon_deg: float, radius_km: float) -> np.ndarray:
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    return radius_km * np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )


def ecef_to_geodetic(p: np.ndarray) -> tuple:
    r = float(np.linalg.norm(p))
    lat = math.degrees(math.asin(p[2] / r))
    lon = math.degrees(math.atan2(p[1], p[0]))
    return (lat, lon)


def central_angle_for_elevation(elevation_deg: float, orbit: OrbitConfig) -> float:
    """Earth-centre angle (deg) between the sub-satellite point and a ground
    point that sees the satellite at the given elevation."""
    if not 0.0 < elevation_deg <= 90.0:
        raise ValueError("elevation must be in (0, 90] deg")
    el = math.radians(elevation_deg)
    # half-angle at the satellite between nadir and the ground point
    alpha = math.asin(orbit.earth_radius_km / orbit.orbit_radius_km * math.cos(el))
    return 90.0 - elevation_deg - math.degrees(alpha)


def slant_range(elevation_deg: float, orbit: OrbitConfig) -> float:
    """Ground-to-satellite distance (km) at a given elevation angle."""
    gamma = math.radians(central_angle_for_elevation(elevation_deg, orbit))
    re = orbit.earth_radius_km
    r = orbit.orbit_radius_km
    return math.sqrt(re * re + r * r - 2.0 * re * r * math.cos(gamma))


def _ray_sphere_intersection(origin: np.ndarray, direction: np.ndarray, radius: float) -> np.ndarray:
    """Nearest intersection of origin + t*direction with the sphere |p| = radius."""
    b = float(np.dot(origin, direction))
    c = float(np.dot(origin, origin)) - radius * radius
    disc = b * b - c
    if disc < 0.0:
        raise ValueError("ray does not intersect the sphere")
    t = -b - math.sqrt(disc)
    if t < 0.0:
        raise ValueError("sphere intersection behind the ray origin")
    return origin + t * direction


def _tangent_basis(boresight: np.ndarray) -> tuple:
    north = np.array([0.0, 0.0, 1.0])
    e1 = north - np.dot(north, boresight) * boresight
    n = np.linalg.norm(e1)
    if n < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0]) - boresight[0] * boresight
        n = np.linalg.norm(e1)
    e1 = e1 / n
    e2 = np.cross(boresight, e1)
    return e1, e2


def _rotate_towards(boresight, e1, e2, angle_deg, azimuth_rad):
    a = math.radians(angle_deg)
    radial = math.cos(azimuth_rad) * e1 + math.sin(azimuth_rad) * e2
    return math.cos(a) * boresight + math.sin(a) * radial


def build_beam_lattice(
    orbit: OrbitConfig,
    tiers: int,
    beam_spacing_deg: float,
    hpbw_deg: float,
    frf_scheme: str = "FRF2plus2_single_color",
) -> BeamLayout:
    """Hexagonal lattice of the simulated (single-colour) beams.

    ``tiers`` rings of co-channel beams surround the central beam: 7 beams
    for one tier, 19 for two.  ``beam_spacing_deg`` is the pitch between
    adjacent simulated boresights (see ``default_beam_spacing_deg``).
    Boresights are ordered by (ring, azimuth).
    """
    if tiers not in (1, 2):
        raise ValueError("tiers must be 1 or 2")
    if frf_scheme != "FRF2plus2_single_color":
        raise ValueError(f"unsupported frequency reuse scheme: {frf_scheme}")

    sat = np.array([orbit.orbit_radius_km, 0.0, 0.0])
    gamma = central_angle_for_elevation(orbit.central_beam_elevation_deg, orbit)
    center_ground = geodetic_to_ecef(gamma, 0.0, orbit.earth_radius_km)
    b0 = center_ground - sat
    b0 = b0 / np.linalg.norm(b0)
    e1, e2 = _tangent_basis(b0)

    pitch = beam_spacing_deg

    # axial hex coordinates within `tiers` rings, ordered (ring, azimuth)
    offsets = []
    for q in range(-tiers, tiers + 1):
        for s in range(-tiers, tiers + 1):
            ring = max(abs(q), abs(s), abs(q + s))
            if ring > tiers:
                continue
            x = pitch * (q + 0.5 * s)
            y = pitch * (0.5 * math.sqrt(3.0) * s)
            az = math.atan2(y, x) % (2.0 * math.pi) if ring > 0 else 0.0
            offsets.append((ring, az, x, y))
    offsets.sort(key=lambda o: (o[0], round(o[1], 9)))

    beams = []
    for i, (ring, _az, x, y) in enumerate(offsets):
        angle = math.hypot(x, y)
        azim = math.atan2(y, x)
        d = _rotate_towards(b0, e1, e2, angle, azim)
        ground = _ray_sphere_intersection(sat, d, orbit.earth_radius_km)
        beams.append(
            Beam(
                id=i,
                boresight=d,
                center_geo=ecef_to_geodetic(ground),
                color=0,
                half_power_beamwidth_deg=hpbw_deg,
                sat_ecef_km=sat,
            )
        )
    return BeamLayout(
        beams=beams,
        tiers=tiers,
        beam_spacing_deg=beam_spacing_deg,
        frf_scheme=frf_scheme,
        orbit=orbit,
        sat_ecef_km=sat,
    )


def deploy_terminals(
    layout: BeamLayout,
    per_beam_count: int,
    profile_mix: dict,
    rng_seed: int,
    placement_radius_deg: float = None,
) -> list:
    """Place terminals uniformly over each beam's -3 dB angular footprint.

    The same (seed, layout) always yields byte-identical terminal lists;
    per-beam streams keep placements independent of the beam count.
    """
    if per_beam_count < 1:
        raise ValueError("per_beam_count must be >= 1")
    if sum(profile_mix.values()) != per_beam_count:
        raise ValueError("profile_mix counts must sum to per_beam_count")

    profile_seq = []
    for name, count in profile_mix.items():
        profile_seq.extend([PROFILES[name]] * count)

    terminals = []
    tid = 0
    for beam in layout.beams:
        radius = (
            placement_radius_deg
            if placement_radius_deg is not None
            else beam.half_power_beamwidth_deg / 2.0
        )
        gen = rng.stream(rng_seed, f"deploy/beam{beam.id}")
        e1, e2 = _tangent_basis(beam.boresight)
        for k in range(per_beam_count):
            theta = radius * math.sqrt(gen.random())
            phi = gen.random() * 2.0 * math.pi
            d = _rotate_towards(beam.boresight, e1, e2, theta, phi)
            ground = _ray_sphere_intersection(
                layout.sat_ecef_km, d, layout.orbit.earth_radius_km
            )
            lat, lon = ecef_to_geodetic(ground)
            terminals.append(
                Terminal(
                    id=tid,
                    beam_id=beam.id,
                    position_geo=(lat, lon, 0.0),
                    profile=profile_seq[k],
                    position_ecef_km=ground,
                )
            )
            tid += 1
    return terminals


def off_axis_angle(beam: Beam, point) -> float:
    """Angle (deg) between the beam boresight and satellite->point direction."""
    p = point.position_ecef_km if isinstance(point, Terminal) else np.asarray(point)
    d = p - beam.sat_ecef_km
    d = d / np.linalg.norm(d)
    cosang = float(np.clip(np.dot(d, beam.boresight), -1.0, 1.0))
    return math.degrees(math.acos(cosang))


def terminal_slant_range_km(layout: BeamLayout, terminal: Terminal) -> float:
    return float(np.linalg.norm(terminal.position_ecef_km - layout.sat_ecef_km))


def one_way_delay_s(layout: BeamLayout) -> float:
    """Propagation delay of the central beam's boresight path."""
    return slant_range(layout.orbit.central_beam_elevation_deg, layout.orbit) / SPEED_OF_LIGHT_KM_S
