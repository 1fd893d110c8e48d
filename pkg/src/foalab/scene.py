"""Synthetic scene construction: spread directions on the sphere, diffuse
background fields, and manifest-driven mixes with ground-truth sidecars.

Diffuse fields are realized as many uncorrelated noise sources encoded
directly at well-spread directions.  That is not a room simulation, but
it produces the high-diffuseness, low-anisotropy statistics the analysis
and loss care about, deterministically from a single seed.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingSourceError, ValidationError
from .signal import Direction, FoaSignal, direction_from_vector, encode_source, mix, unit_vector

DEFAULT_SAMPLE_RATE = 24000
DEFAULT_DIFFUSE_DIRECTIONS = 64
MAX_SOURCES = 5
NOISE_KINDS = ("white", "pink")

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _haar_rotation(rng: np.random.Generator) -> np.ndarray:
    """Random 3x3 rotation, uniformly distributed (QR of a Gaussian
    matrix with sign-fixed diagonal, mirror corrected to det +1)."""
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def uniform_sphere_directions(n: int, seed=0) -> list[Direction]:
    """n well-spread directions: Fibonacci lattice under a seeded random
    rotation, so layouts differ across seeds but stay evenly spaced."""
    if n < 1:
        raise ValidationError(f"need at least one direction, got {n}")
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = _GOLDEN_ANGLE * i
    pts = np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)
    rot = _haar_rotation(np.random.default_rng(seed))
    pts = pts @ rot.T
    return [direction_from_vector(p) for p in pts]


@dataclass(frozen=True)
class DiffuseFieldSpec:
    """Recipe for an isotropic background field."""

    n_directions: int = DEFAULT_DIFFUSE_DIRECTIONS
    level: float = 1.0
    kind: str = "white"
    seed: int = 0

    def __post_init__(self):
        if self.n_directions < 4:
            raise ValidationError(f"need at least 4 directions, got {self.n_directions}")
        if not (math.isfinite(self.level) and self.level >= 0):
            raise ValidationError(f"level must be finite and >= 0, got {self.level}")
        if self.kind not in NOISE_KINDS:
            raise ValidationError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")


def _noise(rng: np.random.Generator, n: int, kind: str) -> np.ndarray:
    x = rng.standard_normal(n)
    if kind == "pink":
        # 1/sqrt(f) amplitude shaping, DC removed
        spec = np.fft.rfft(x)
        freqs = np.arange(spec.size, dtype=np.float64)
        spec[1:] /= np.sqrt(freqs[1:])
        spec[0] = 0.0
        x = np.fft.irfft(spec, n)
    rms = math.sqrt(float(np.mean(x * x)))
    return x / rms if rms > 0 else x


def generate_diffuse(spec: DiffuseFieldSpec, duration: float,
                     sample_rate: int = DEFAULT_SAMPLE_RATE) -> FoaSignal:
    """Sum of independently seeded noises encoded at spread directions,
    scaled so the W-channel RMS equals spec.level."""
    n = int(round(duration * sample_rate))
    if n < 1:
        raise ValidationError(f"duration {duration} s gives no samples at {sample_rate} Hz")
    if spec.level == 0.0:
        return FoaSignal(sample_rate, np.zeros((4, n)))
    root = np.random.SeedSequence(spec.seed)
    dir_ss, *noise_ss = root.spawn(1 + spec.n_directions)
    dirs = uniform_sphere_directions(spec.n_directions, dir_ss)
    gains = np.empty((4, spec.n_directions))
    for j, d in enumerate(dirs):
        gx, gy, gz = unit_vector(d)
        gains[:, j] = (1.0, gy, gz, gx)
    noises = np.empty((spec.n_directions, n))
    for j, ss in enumerate(noise_ss):
        noises[j] = _noise(np.random.default_rng(ss), n, spec.kind)
    data = gains @ noises
    w_rms = math.sqrt(float(np.mean(data[0] * data[0])))
    if w_rms > 0:
        data *= spec.level / w_rms
    return FoaSignal(sample_rate, data)


@dataclass(frozen=True)
class SourceSpec:
    """One directional source of a scene."""

    azimuth_deg: float
    elevation_deg: float
    gain: float
    file: str

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise ValidationError(f"source gain must be finite and > 0, got {self.gain}")
        if not self.file:
            raise ValidationError("source file id must be a nonempty string")
        # range-check the angles early; Direction re-validates
        self.direction()

    def direction(self) -> Direction:
        return Direction.from_degrees(self.azimuth_deg, self.elevation_deg)


@dataclass(frozen=True)
class SceneManifest:
    """Deterministic description of one scene."""

    sources: tuple
    diffuse_level: float = 0.0
    duration: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not 1 <= len(self.sources) <= MAX_SOURCES:
            raise ValidationError(
                f"scenes take 1 to {MAX_SOURCES} directional sources, got {len(self.sources)}"
            )
        for s in self.sources:
            if not isinstance(s, SourceSpec):
                raise ValidationError(f"sources must be SourceSpec, got {type(s).__name__}")
        if not (math.isfinite(self.diffuse_level) and self.diffuse_level >= 0):
            raise ValidationError(f"diffuse level must be >= 0, got {self.diffuse_level}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"duration must be positive, got {self.duration}")

    def to_dict(self) -> dict:
        return {
            "sources": [
                {
                    "azimuth_deg": s.azimuth_deg,
                    "elevation_deg": s.elevation_deg,
                    "gain": s.gain,
                    "file": s.file,
                }
                for s in self.sources
            ],
            "diffuse_level": self.diffuse_level,
            "duration": self.duration,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneManifest":
        try:
            sources = tuple(
                SourceSpec(
                    azimuth_deg=float(s["azimuth_deg"]),
                    elevation_deg=float(s["elevation_deg"]),
                    gain=float(s["gain"]),
                    file=str(s["file"]),
                )
                for s in d["sources"]
            )
            return cls(
                sources=sources,
                diffuse_level=float(d.get("diffuse_level", 0.0)),
                duration=float(d["duration"]),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed scene manifest: {exc}") from exc


def load_manifest(path) -> SceneManifest:
    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return SceneManifest.from_dict(payload)


def write_json_atomic(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_manifest(path, manifest: SceneManifest) -> None:
    write_json_atomic(path, manifest.to_dict())


def _fit_length(mono: np.ndarray, n: int) -> np.ndarray:
    if mono.shape[0] >= n:
        return mono[:n]
    out = np.zeros(n)
    out[: mono.shape[0]] = mono
    return out


def generate_scene(manifest: SceneManifest, source_audio: dict,
                   sample_rate: int = DEFAULT_SAMPLE_RATE):
    """Render a manifest into (FoaSignal, ground-truth Direction list).

    source_audio maps each manifest file id to a mono sample array;
    clips are cut or zero-padded to the manifest duration.
    """
    n = int(round(manifest.duration * sample_rate))
    if n < 1:
        raise ValidationError(
            f"duration {manifest.duration} s gives no samples at {sample_rate} Hz"
        )
    parts = []
    truth = []
    for s in manifest.sources:
        if s.file not in source_audio:
            raise MissingSourceError(f"no audio supplied for source id {s.file!r}")
        mono = np.asarray(source_audio[s.file], dtype=np.float64)
        if mono.ndim != 1 or mono.size == 0:
            raise ValidationError(f"source {s.file!r} must be a nonempty mono array")
        d = s.direction()
        parts.append(encode_source(s.gain * _fit_length(mono, n), d, sample_rate))
        truth.append(d)
    if manifest.diffuse_level > 0:
        spec = DiffuseFieldSpec(level=manifest.diffuse_level, seed=manifest.seed)
        parts.append(generate_diffuse(spec, manifest.duration, sample_rate))
    return mix(parts), truth
