"""Per-bin DirAC analysis: energy, active intensity, diffuseness.

Conventions (SN3D makes these clean):
  E = (|W|^2 + |X|^2 + |Y|^2 + |Z|^2) / 2
  I = Re{ conj(W) . (X, Y, Z) }           (component order x, y, z)
so a plane wave satisfies ||I|| = E exactly and no physical constants enter.
Diffuseness compares intensity and energy after a centered moving average of
L frames (edge-truncated):
  D = 1 - ||<I>|| / (<E> + 1e-12),  clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .tf import FoaSpectrum

EPS_DIFFUSENESS = 1e-12
DEFAULT_AVG_FRAMES = 5


def intensity(spec: FoaSpectrum) -> np.ndarray:
    """Active intensity vectors, shape (T, K, 3) with components (x, y, z)."""
    cw = np.conj(spec.w)
    return np.stack(
        [np.real(cw * spec.x), np.real(cw * spec.y), np.real(cw * spec.z)],
        axis=-1,
    )


def energy(spec: FoaSpectrum) -> np.ndarray:
    """Per-bin energy, shape (T, K)."""
    mags = np.abs(spec.channels) ** 2
    return 0.5 * mags.sum(axis=0)


def moving_average_frames(grid: np.ndarray, l_frames: int) -> np.ndarray:
    """Centered moving average over the frame axis (axis 0), edge-truncated:
    edge frames average over however many of the L frames actually exist."""
    if l_frames < 1 or l_frames % 2 == 0:
        raise ValidationError(f"averaging window must be odd and >= 1, got {l_frames}")
    if l_frames == 1:
        return np.asarray(grid, dtype=np.float64).copy()
    g = np.asarray(grid, dtype=np.float64)
    t = g.shape[0]
    half = (l_frames - 1) // 2
    cs = np.zeros((t + 1,) + g.shape[1:])
    np.cumsum(g, axis=0, out=cs[1:])
    hi = np.minimum(np.arange(t) + half, t - 1)
    lo = np.maximum(np.arange(t) - half, 0)
    counts = (hi - lo + 1).astype(np.float64)
    sums = cs[hi + 1] - cs[lo]
    return sums / counts.reshape((t,) + (1,) * (g.ndim - 1))


def diffuseness(e_grid: np.ndarray, i_grid: np.ndarray, l_frames: int) -> np.ndarray:
    """Diffuseness in [0, 1]; 0 for a plane wave, 1 where energy vanishes."""
    e_grid = np.asarray(e_grid, dtype=np.float64)
    i_grid = np.asarray(i_grid, dtype=np.float64)
    if i_grid.shape != e_grid.shape + (3,):
        raise ShapeMismatchError(
            f"intensity shape {i_grid.shape} does not match energy shape {e_grid.shape}"
        )
    e_avg = moving_average_frames(e_grid, l_frames)
    i_avg = moving_average_frames(i_grid, l_frames)
    d = 1.0 - np.linalg.norm(i_avg, axis=-1) / (e_avg + EPS_DIFFUSENESS)
    return np.clip(d, 0.0, 1.0)


@dataclass(frozen=True)
class DiracField:
    """Bundled DirAC analysis of one FOA spectrum."""

    e: np.ndarray = field(repr=False)
    i: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    l_frames: int = DEFAULT_AVG_FRAMES

    def __post_init__(self):
        if self.i.shape != self.e.shape + (3,) or self.d.shape != self.e.shape:
            raise ShapeMismatchError(
                f"inconsistent field shapes: E {self.e.shape}, I {self.i.shape}, D {self.d.shape}"
            )

    @property
    def n_frames(self) -> int:
        return self.e.shape[0]

    @property
    def n_bins(self) -> int:
        return self.e.shape[1]

    def averaged_intensity_magnitude(self) -> np.ndarray:
        """||<I>|| per bin with this field's averaging window, the matrix
        behind the intensity-magnitude visualizations."""
        return np.linalg.norm(moving_average_frames(self.i, self.l_frames), axis=-1)


def analyze(spec: FoaSpectrum, l_frames: int = DEFAULT_AVG_FRAMES) -> DiracField:
    """Full DirAC analysis (E, I, D) of a spectrum."""
    e = energy(spec)
    i = intensity(spec)
    d = diffuseness(e, i, l_frames)
    return DiracField(e, i, d, l_frames)


def export_matrix_csv(matrix: np.ndarray, path) -> None:
    """Write a (frames x bins) matrix as CSV: one row per frame."""
    matrix = np.atleast_2d(np.asarray(matrix))
    with open(path, "w", encoding="utf-8", newline="") as f:
        for row in matrix:
            f.write(",".join(repr(float(v)) for v in row))
            f.write("\n")
