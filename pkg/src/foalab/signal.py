"""FOA signal model: directions, ACN/SN3D encoding, mixing, rotation.

Channel convention throughout the package: ACN ordering [W, Y, Z, X] with
SN3D normalization, so the first-order dipole gains are plain direction
cosines and the omni gain is 1.  The coordinate frame is right-handed with
+x front, +y left, +z up; azimuth grows counterclockwise from front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SampleRateMismatchError, ValidationError

ACN_CHANNEL_NAMES = ("W", "Y", "Z", "X")


def wrap_azimuth(azimuth: float) -> float:
    """Wrap an angle in radians into (-pi, pi]."""
    w = (azimuth + math.pi) % (2.0 * math.pi)
    if w == 0.0:
        w = 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class Direction:
    """A direction on the unit sphere.

    azimuth: radians in (-pi, pi], counterclockwise from front (+x toward +y).
    elevation: radians in [-pi/2, pi/2], upward positive.  Out-of-range
    elevations are rejected, not clamped.
    """

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ValidationError("direction angles must be finite")
        if not -math.pi / 2 <= self.elevation <= math.pi / 2:
            raise ValidationError(
                f"elevation {self.elevation} outside [-pi/2, pi/2]"
            )
        object.__setattr__(self, "azimuth", wrap_azimuth(self.azimuth))

    @classmethod
    def from_degrees(cls, azimuth_deg: float, elevation_deg: float) -> "Direction":
        return cls(math.radians(azimuth_deg), math.radians(elevation_deg))

    @property
    def azimuth_deg(self) -> float:
        return math.degrees(self.azimuth)

    @property
    def elevation_deg(self) -> float:
        return math.degrees(self.elevation)


def unit_vector(direction: Direction) -> np.ndarray:
    """Cartesian unit vector (x, y, z) of a direction; norm 1 within 1e-12."""
    ca, sa = math.cos(direction.azimuth), math.sin(direction.azimuth)
    ce, se = math.cos(direction.elevation), math.sin(direction.elevation)
    return np.array([ca * ce, sa * ce, se])


def direction_from_vector(v: np.ndarray) -> Direction:
    """Direction of a nonzero 3-vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"expected a 3-vector, got shape {v.shape}")
    n = float(np.linalg.norm(v))
    if n == 0.0 or not math.isfinite(n):
        raise ValidationError("cannot take the direction of a zero or non-finite vector")
    az = math.atan2(v[1], v[0])
    el = math.atan2(v[2], math.hypot(v[0], v[1]))
    return Direction(az, el)


@dataclass(frozen=True)
class FoaSignal:
    """4-channel first-order ambisonic waveform in ACN order [W, Y, Z, X].

    Samples are float64 internally regardless of any file encoding.
    """

    sample_rate: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if data.ndim != 2 or data.shape[0] != 4:
            raise ValidationError(f"FOA data must have shape (4, n_samples), got {data.shape}")
        if data.shape[1] == 0:
            raise ValidationError("FOA signal must contain at least one sample")
        if not np.all(np.isfinite(data)):
            raise ValidationError("FOA samples must all be finite")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "data", data)

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def w(self) -> np.ndarray:
        return self.data[0]

    @property
    def y(self) -> np.ndarray:
        return self.data[1]

    @property
    def z(self) -> np.ndarray:
        return self.data[2]

    @property
    def x(self) -> np.ndarray:
        return self.data[3]


def encode_source(mono, direction: Direction, sample_rate: int = 24000) -> FoaSignal:
    """Pan a mono signal to FOA via first-order SN3D gains.

    W = mono, Y = sin(az)cos(el) mono, Z = sin(el) mono, X = cos(az)cos(el) mono,
    so the dipole gain vector satisfies X^2 + Y^2 + Z^2 = 1 for any direction.
    """
    mono = np.asarray(mono, dtype=np.float64)
    if mono.ndim != 1 or mono.size == 0:
        raise ValidationError("mono input must be a nonempty 1-D sample sequence")
    if not np.all(np.isfinite(mono)):
        raise ValidationError("mono input contains non-finite samples")
    gx, gy, gz = unit_vector(direction)
    data = np.stack([mono, gy * mono, gz * mono, gx * mono])
    return FoaSignal(sample_rate, data)


def mix(signals: list[FoaSignal]) -> FoaSignal:
    """Sample-wise sum of FOA signals; shorter ones are zero-padded at the tail."""
    if not signals:
        raise ValidationError("mix needs at least one signal")
    rate = signals[0].sample_rate
    for s in signals[1:]:
        if s.sample_rate != rate:
            raise SampleRateMismatchError(
                f"sample rates differ: {rate} vs {s.sample_rate}"
            )
    n = max(s.n_samples for s in signals)
    out = np.zeros((4, n))
    for s in signals:
        out[:, : s.n_samples] += s.data
    return FoaSignal(rate, out)


def rotate_azimuth(s: FoaSignal, phi: float) -> FoaSignal:
    """Rotate the sound field by phi radians about the vertical axis.

    A source at azimuth a ends up at azimuth a + phi; W and Z are unchanged.
    """
    if not math.isfinite(phi):
        raise ValidationError("rotation angle must be finite")
    c, si = math.cos(phi), math.sin(phi)
    out = s.data.copy()
    out[3] = c * s.x - si * s.y
    out[1] = si * s.x + c * s.y
    return FoaSignal(s.sample_rate, out)
