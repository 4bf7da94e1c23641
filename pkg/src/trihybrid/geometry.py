"""Array geometries, waveguide propagation gains, steering vectors and channels.

Conventions: the array lies in the y-z plane. Elements of one waveguide run
along y, waveguides are stacked along z, and the propagation direction for
azimuth ``theta`` and elevation ``phi`` is

    u = (sin(phi) cos(theta), sin(phi) sin(theta), cos(phi)),

so (theta, phi) = (0, pi/2) is broadside. Element ``(i, j)`` (0-based waveguide
``i``, element ``j``) has global index ``i * N_u + j``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_complex_vector, check_positive, check_positive_int
from .exceptions import InvalidConfigError

SPEED_OF_LIGHT = 299_792_458.0

AZIMUTH_RANGE = (-np.pi / 3, np.pi / 3)
ELEVATION_RANGE = (np.pi / 6, 5 * np.pi / 6)


@dataclass(frozen=True)
class ArrayGeometry:
    """Element layout of a waveguide-partitioned planar array.

    For the DMA, ``feed_distances`` are the distances from each waveguide's
    input port to the radiator. Baseline arrays reuse the same container with
    rows playing the role of waveguides.
    """

    n_waveguides: int
    elements_per_waveguide: int
    waveguide_spacing: float
    element_spacing: float
    wavelength: float
    positions: np.ndarray = field(repr=False)
    feed_distances: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.n_waveguides * self.elements_per_waveguide
        if self.positions.shape != (n, 3):
            raise InvalidConfigError(f"positions must have shape ({n}, 3)")
        if self.feed_distances.shape != (n,):
            raise InvalidConfigError(f"feed_distances must have shape ({n},)")

    @property
    def n_elements(self):
        return self.n_waveguides * self.elements_per_waveguide

    def index(self, waveguide, element):
        if not (0 <= waveguide < self.n_waveguides and 0 <= element < self.elements_per_waveguide):
            raise IndexError(f"({waveguide}, {element}) outside the array")
        return waveguide * self.elements_per_waveguide + element

    def position(self, waveguide, element):
        return self.positions[self.index(waveguide, element)]

    def feed_distance(self, waveguide, element):
        return float(self.feed_distances[self.index(waveguide, element)])

    def blocks(self, x):
        """View a length-N_r vector as (N_w, N_u) waveguide blocks."""
        return np.asarray(x).reshape(self.n_waveguides, self.elements_per_waveguide)


def wavelength_from_frequency(carrier_frequency_hz):
    return SPEED_OF_LIGHT / check_positive(carrier_frequency_hz, "carrier_frequency_hz")


def planar_geometry(n_rows, n_cols, row_spacing, col_spacing, wavelength):
    """Rectangular grid; row ``i`` sits at z = i*row_spacing, column ``j`` at y = (j+1)*col_spacing."""
    n_rows = check_positive_int(n_rows, "n_rows")
    n_cols = check_positive_int(n_cols, "n_cols")
    ii, jj = np.meshgrid(np.arange(n_rows), np.arange(1, n_cols + 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    positions = np.column_stack(
        [np.zeros(ii.size), jj * col_spacing, ii * row_spacing]
    ).astype(float)
    return ArrayGeometry(
        n_waveguides=n_rows,
        elements_per_waveguide=n_cols,
        waveguide_spacing=float(row_spacing),
        element_spacing=float(col_spacing),
        wavelength=float(wavelength),
        positions=positions,
        feed_distances=(jj * col_spacing).astype(float),
    )


def build_dma_geometry(n_waveguides, elements_per_waveguide, carrier_frequency_hz):
    """DMA layout: lambda/2 between waveguides, lambda/5 between radiators.

    The first radiator sits one element spacing away from the feed so that
    every feed distance is strictly positive.
    """
    n_waveguides = check_positive_int(n_waveguides, "n_waveguides")
    elements_per_waveguide = check_positive_int(elements_per_waveguide, "elements_per_waveguide")
    lam = wavelength_from_frequency(carrier_frequency_hz)
    return planar_geometry(n_waveguides, elements_per_waveguide, lam / 2, lam / 5, lam)


def propagation_gains(geometry, attenuation_per_meter, wavenumber_per_meter):
    """q_j = exp(-d_j * (nu + i*varpi)) for every radiator."""
    nu = check_positive(attenuation_per_meter, "attenuation_per_meter")
    d = geometry.feed_distances
    return np.exp(-d * nu) * np.exp(-1j * d * float(wavenumber_per_meter))


def direction_vector(azimuth, elevation):
    return np.array(
        [
            np.sin(elevation) * np.cos(azimuth),
            np.sin(elevation) * np.sin(azimuth),
            np.cos(elevation),
        ]
    )


def steering_vector(geometry, direction):
    """Far-field array response with unit-modulus entries.

    ``direction`` is a :class:`TargetDirection` or an ``(azimuth, elevation)`` pair.
    """
    az, el = _angles(direction)
    k = 2 * np.pi / geometry.wavelength
    return np.exp(1j * k * (geometry.positions @ direction_vector(az, el)))


def _angles(direction):
    if isinstance(direction, TargetDirection):
        return direction.azimuth, direction.elevation
    az, el = direction
    return float(az), float(el)


@dataclass(frozen=True)
class TargetDirection:
    azimuth: float
    elevation: float

    @classmethod
    def sample(cls, rng):
        return cls(
            azimuth=float(rng.uniform(*AZIMUTH_RANGE)),
            elevation=float(rng.uniform(*ELEVATION_RANGE)),
        )


@dataclass(frozen=True)
class SvChannelParams:
    """Geometric Saleh-Valenzuela channel: ``n_paths`` rays with CN(0, 1) gains."""

    n_paths: int = 5
    noise_power_mw: float = 1.0
    azimuth_range: tuple = AZIMUTH_RANGE
    elevation_range: tuple = ELEVATION_RANGE

    def __post_init__(self):
        if isinstance(self.n_paths, bool) or int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidConfigError(f"n_paths must be >= 1, got {self.n_paths!r}")
        check_positive(self.noise_power_mw, "noise_power_mw")


@dataclass(frozen=True)
class SvPaths:
    """Ray parameters of one channel draw; independent of the array geometry."""

    gains: np.ndarray
    azimuths: np.ndarray
    elevations: np.ndarray

    @property
    def n_paths(self):
        return len(self.gains)

    @classmethod
    def sample(cls, rng, params):
        L = params.n_paths
        gains = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2)
        az = rng.uniform(*params.azimuth_range, size=L)
        el = rng.uniform(*params.elevation_range, size=L)
        return cls(gains=gains, azimuths=az, elevations=el)


@dataclass(frozen=True)
class ChannelRealization:
    raw_channel: np.ndarray
    noise_power: float
    normalized_channel: np.ndarray
    paths: SvPaths = None
    seed: int = None

    def to_dict(self):
        """Geometry-free record of the draw, enough to rebuild it on any array."""
        if self.paths is None:
            raise ValueError("realization carries no path parameters")
        return {
            "seed": self.seed,
            "L": self.paths.n_paths,
            "paths": [
                {
                    "gain_re": float(g.real),
                    "gain_im": float(g.imag),
                    "azimuth": float(a),
                    "elevation": float(e),
                }
                for g, a, e in zip(self.paths.gains, self.paths.azimuths, self.paths.elevations)
            ],
            "sigma2_mw": float(self.noise_power),
        }

    @classmethod
    def from_dict(cls, data, geometry):
        if int(data["L"]) != len(data["paths"]):
            raise InvalidConfigError("L does not match the number of paths")
        p = data["paths"]
        paths = SvPaths(
            gains=np.array([d["gain_re"] + 1j * d["gain_im"] for d in p]),
            azimuths=np.array([d["azimuth"] for d in p], dtype=float),
            elevations=np.array([d["elevation"] for d in p], dtype=float),
        )
        return channel_from_paths(geometry, paths, data["sigma2_mw"], seed=data.get("seed"))


def channel_from_paths(geometry, paths, noise_power_mw=1.0, seed=None):
    """h_bar = sqrt(N/L) * sum_l alpha_l a(theta_l, phi_l), h = h_bar / sigma."""
    if paths.n_paths < 1:
        raise InvalidConfigError("at least one path is required")
    sigma2 = check_positive(noise_power_mw, "noise_power_mw")
    n = geometry.n_elements
    A = np.stack(
        [steering_vector(geometry, (a, e)) for a, e in zip(paths.azimuths, paths.elevations)],
        axis=1,
    )
    raw = np.sqrt(n / paths.n_paths) * (A @ as_complex_vector(paths.gains, "gains"))
    return ChannelRealization(
        raw_channel=raw,
        noise_power=sigma2,
        normalized_channel=raw / np.sqrt(sigma2),
        paths=paths,
        seed=seed,
    )


def sample_sv_channel(geometry, sv_params=None, rng_seed=0):
    if sv_params is None:
        sv_params = SvChannelParams()
    rng = np.random.default_rng(rng_seed)
    paths = SvPaths.sample(rng, sv_params)
    return channel_from_paths(geometry, paths, sv_params.noise_power_mw, seed=rng_seed)
