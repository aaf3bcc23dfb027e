"""Far-field multipath channels between the metasurface and ground users."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FimGeometry, SurfaceShape, steering_matrix


@dataclass(frozen=True)
class ScenarioGeometry:
    bs_height: float = 5.0
    user_region_radius: float = 10.0
    region_center_distance: float = 20.0
    user_count: int = 4

    def __post_init__(self):
        if self.bs_height <= 0 or self.region_center_distance <= 0:
            raise ValueError("BS height and region distance must be positive")
        if self.user_region_radius < 0:
            raise ValueError("user region radius must be non-negative")
        if self.user_count < 1:
            raise ValueError("need at least one user")


@dataclass(frozen=True)
class LinkBudget:
    distances: np.ndarray
    gains: np.ndarray
    noise_powers: np.ndarray

    def __post_init__(self):
        for name in ("distances", "gains", "noise_powers"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.distances.shape == self.gains.shape == self.noise_powers.shape):
            raise ValueError("link budget arrays must have one entry per user")
        if np.any(self.gains <= 0) or np.any(self.noise_powers <= 0):
            raise ValueError("gains and noise powers must be positive")

    @property
    def user_count(self) -> int:
        return self.gains.size


@dataclass(frozen=True)
class ScatteringEnvironment:
    """One channel realization.

    Path directions are shared by every user; ``gains[k, l]`` is the complex
    amplitude of path ``l`` towards user ``k`` and ``per_path_power[k, l]`` its
    variance.
    """

    azimuth: np.ndarray
    elevation: np.ndarray
    gains: np.ndarray = field(repr=False)
    per_path_power: np.ndarray = field(repr=False)

    def __post_init__(self):
        az = np.array(self.azimuth, dtype=float).ravel()
        el = np.array(self.elevation, dtype=float).ravel()
        gains = np.array(self.gains, dtype=complex)
        power = np.array(self.per_path_power, dtype=float)
        if az.size < 1 or az.shape != el.shape:
            raise ValueError("need matching, non-empty azimuth/elevation arrays")
        if gains.ndim != 2 or gains.shape[1] != az.size or power.shape != gains.shape:
            raise ValueError("gains and per-path powers must be K x L")
        for arr in (az, el, gains, power):
            arr.setflags(write=False)
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "per_path_power", power)

    @property
    def n_paths(self) -> int:
        return self.azimuth.size

    @property
    def user_count(self) -> int:
        return self.gains.shape[0]

    @property
    def angles(self) -> np.ndarray:
        return np.column_stack([self.azimuth, self.elevation])


def noise_power(noise_density_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts over ``bandwidth_hz``."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return 10 ** ((noise_density_dbm_per_hz + 10 * np.log10(bandwidth_hz) - 30) / 10)


def path_gain(d, d0: float, path_loss_exponent: float, wavelength: float):
    """Linear channel power gain at distance ``d``.

    Free-space Friis gain ``(lambda / (4 pi d0))**2`` at the reference
    distance, decaying as ``(d / d0) ** -path_loss_exponent`` beyond it.
    """
    d = np.asarray(d, dtype=float)
    if d0 <= 0:
        raise ValueError("reference distance must be positive")
    if np.any(d < d0):
        raise ValueError(f"distance below reference distance {d0}")
    kappa = 2 * np.pi / wavelength
    g = (2 * kappa * d0) ** -2.0 * (d / d0) ** -path_loss_exponent
    return float(g) if g.ndim == 0 else g


def sample_user_positions(rng: np.random.Generator, geometry: ScenarioGeometry) -> np.ndarray:
    """Drop users uniformly on a ground disk and return their 3-D distances to the BS."""
    k = geometry.user_count
    r = geometry.user_region_radius * np.sqrt(rng.random(k))
    t = rng.uniform(0.0, 2 * np.pi, k)
    gx = geometry.region_center_distance + r * np.cos(t)
    gy = r * np.sin(t)
    return np.sqrt(geometry.bs_height**2 + gx**2 + gy**2)


def make_link_budget(distances, d0: float, path_loss_exponent: float, wavelength: float,
                     noise_w: float) -> LinkBudget:
    distances = np.asarray(distances, dtype=float)
    gains = np.atleast_1d(path_gain(distances, d0, path_loss_exponent, wavelength))
    return LinkBudget(distances, gains, np.full(distances.size, noise_w))


def sample_environment(rng: np.random.Generator, geometry: ScenarioGeometry, n_paths: int,
                       link: LinkBudget) -> ScatteringEnvironment:
    if n_paths < 1:
        raise ValueError("need at least one propagation path")
    k = geometry.user_count
    if link.user_count != k:
        raise ValueError(f"link budget has {link.user_count} users, scenario has {k}")
    azimuth = rng.uniform(0.0, np.pi, n_paths)
    elevation = rng.uniform(0.0, np.pi, n_paths)
    power = np.repeat(link.gains[:, None] / n_paths, n_paths, axis=1)
    z = rng.standard_normal((k, n_paths, 2))
    gains = np.sqrt(power / 2) * (z[..., 0] + 1j * z[..., 1])
    return ScatteringEnvironment(azimuth, elevation, gains, power)


def channel_matrix(env: ScatteringEnvironment, geom: FimGeometry, shape: SurfaceShape) -> np.ndarray:
    """``H(y)``: column ``k`` is the channel ``h_k`` of user ``k`` (``N x K``)."""
    a = steering_matrix(geom, shape, env.azimuth, env.elevation)
    return a @ env.gains.T
