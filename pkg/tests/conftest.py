"""Shared fixtures: seeded noise sources and temporary scene material."""

import numpy as np
import pytest

from foalab import Direction, SceneManifest, SourceSpec, encode_source, write_mono_wav


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise_mono(rng):
    # 0.5 s at 24 kHz, unit-ish amplitude
    return rng.normal(size=12000) * 0.4


@pytest.fixture
def front_signal(noise_mono):
    return encode_source(noise_mono, Direction(0.0, 0.0))


@pytest.fixture
def scene_dir(tmp_path, rng):
    """Audio directory with two mono WAVs plus a two-source manifest."""
    audio = tmp_path / "audio"
    audio.mkdir()
    for name, seed in (("a.wav", 7), ("b.wav", 8)):
        mono = np.random.default_rng(seed).normal(size=12000) * 0.3
        write_mono_wav(audio / name, 24000, mono)
    manifest = SceneManifest(
        sources=(
            SourceSpec(azimuth_deg=30.0, elevation_deg=10.0, gain=1.0, file="a.wav"),
            SourceSpec(azimuth_deg=-60.0, elevation_deg=-5.0, gain=0.5, file="b.wav"),
        ),
        diffuse_level=0.0,
        duration=0.5,
        seed=3,
    )
    return audio, manifest
