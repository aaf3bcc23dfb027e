"""Array layout of a flexible metasurface and its steering vectors.

Elements sit on a uniform planar grid in the x-z plane; each one can be
pushed along the y-axis by up to ``y_max``.  Indices are 0-based here,
element ``n`` lives at ``x = d_x * (n % n_x)``, ``z = d_z * (n // n_x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class FimGeometry:
    n_x: int
    n_z: int
    d_x: float
    d_z: float
    wavelength: float

    def __post_init__(self):
        if self.n_x < 1 or self.n_z < 1:
            raise ValueError(f"element counts must be >= 1, got n_x={self.n_x}, n_z={self.n_z}")
        if self.d_x <= 0 or self.d_z <= 0:
            raise ValueError(f"spacings must be positive, got d_x={self.d_x}, d_z={self.d_z}")
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")

    @classmethod
    def half_wavelength(cls, n_x: int, n_z: int, carrier_hz: float) -> "FimGeometry":
        lam = SPEED_OF_LIGHT / carrier_hz
        return cls(n_x, n_z, lam / 2, lam / 2, lam)

    @property
    def n(self) -> int:
        return self.n_x * self.n_z

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def x(self) -> np.ndarray:
        return self.d_x * (np.arange(self.n) % self.n_x)

    @property
    def z(self) -> np.ndarray:
        return self.d_z * (np.arange(self.n) // self.n_x)


@dataclass(frozen=True)
class SurfaceShape:
    """Per-element displacement ``y`` (meters) constrained to ``[0, y_max]``."""

    y: np.ndarray = field(repr=False)
    y_max: float

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim != 1:
            raise ValueError("surface shape must be a 1-D vector")
        if self.y_max < 0:
            raise ValueError(f"y_max must be non-negative, got {self.y_max}")
        if np.any(y < 0) or np.any(y > self.y_max):
            raise ValueError(f"displacements must lie in [0, {self.y_max}]")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @classmethod
    def flat(cls, n: int, y_max: float) -> "SurfaceShape":
        return cls(np.zeros(n), y_max)

    @classmethod
    def clamped(cls, y, y_max: float) -> "SurfaceShape":
        return cls(project(y, y_max), y_max)

    @property
    def morphing_range(self) -> float:
        return self.y_max

    def __len__(self):
        return self.y.size

    def __eq__(self, other):
        if not isinstance(other, SurfaceShape):
            return NotImplemented
        return self.y_max == other.y_max and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash((self.y_max, self.y.tobytes()))


def project(y, y_max: float) -> np.ndarray:
    """Clamp displacements into the morphing box ``[0, y_max]``."""
    return np.maximum(np.minimum(np.asarray(y, dtype=float), y_max), 0.0)


def _check(geom: FimGeometry, shape: SurfaceShape):
    if len(shape) != geom.n:
        raise ValueError(f"shape has {len(shape)} elements, geometry has {geom.n}")


def element_positions(geom: FimGeometry, shape: SurfaceShape) -> np.ndarray:
    """Return the ``(N, 3)`` array of element coordinates ``[x, y, z]``."""
    _check(geom, shape)
    return np.column_stack([geom.x, shape.y, geom.z])


def direction_cosines(azimuth, elevation):
    """Projections of a far-field direction onto the x, y and z axes.

    Accepts scalars or equal-length arrays of angles in radians.
    """
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    st = np.sin(elevation)
    return st * np.cos(azimuth), st * np.sin(azimuth), np.cos(elevation)


def steering_vector(geom: FimGeometry, shape: SurfaceShape, azimuth: float, elevation: float) -> np.ndarray:
    _check(geom, shape)
    ux, uy, uz = direction_cosines(azimuth, elevation)
    phase = geom.wavenumber * (geom.x * ux + shape.y * uy + geom.z * uz)
    return np.exp(1j * phase)


def steering_matrix(geom: FimGeometry, shape: SurfaceShape, azimuth, elevation) -> np.ndarray:
    """Stack steering vectors for ``L`` directions into an ``(N, L)`` matrix."""
    _check(geom, shape)
    ux, uy, uz = direction_cosines(np.atleast_1d(azimuth), np.atleast_1d(elevation))
    phase = geom.wavenumber * (
        np.outer(geom.x, ux) + np.outer(shape.y, uy) + np.outer(geom.z, uz)
    )
    return np.exp(1j * phase)
