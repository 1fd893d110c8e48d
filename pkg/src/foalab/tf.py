"""Short-time Fourier analysis: STFT/iSTFT, its adjoint, and mel spectrograms.

The synthesis path normalizes by the overlapped squared window, so
istft(stft(x)) reproduces x exactly (up to float rounding) whenever the
window/hop combination keeps that overlap sum strictly positive.  That
positivity is validated when StftParams is constructed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .signal import FoaSignal

_NORM_FLOOR = 1e-12


def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window."""
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


@dataclass(frozen=True)
class StftParams:
    """Transform parameters: FFT size, hop, Hann window length, centering.

    The window is zero-padded symmetrically to fft_size when win_length is
    smaller.  Construction rejects combinations whose overlap-added squared
    window is not strictly positive everywhere (the invertibility condition
    for the synthesis used here); hop > win_length is rejected outright.
    """

    fft_size: int = 1024
    hop: int = 256
    win_length: int | None = None
    center: bool = True

    def __post_init__(self):
        win = self.fft_size if self.win_length is None else self.win_length
        object.__setattr__(self, "win_length", win)
        if self.fft_size < 2 or self.fft_size % 2:
            raise ValidationError(f"fft_size must be even and >= 2, got {self.fft_size}")
        if not 1 <= self.hop <= win <= self.fft_size:
            raise ValidationError(
                f"need 1 <= hop <= win_length <= fft_size, got "
                f"hop={self.hop}, win_length={win}, fft_size={self.fft_size}"
            )
        if np.min(self._overlap_sq_period()) <= _NORM_FLOOR:
            raise ValidationError(
                f"window/hop ({win}/{self.hop}) violates the overlap-add "
                f"condition: squared-window sum has (near-)zeros"
            )

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def padded_window(self) -> np.ndarray:
        w = np.zeros(self.fft_size)
        off = (self.fft_size - self.win_length) // 2
        w[off : off + self.win_length] = hann_window(self.win_length)
        return w

    def _overlap_sq_period(self) -> np.ndarray:
        # squared-window sum over one hop period, all shifts wrapped in
        w2 = self.padded_window ** 2
        acc = np.zeros(self.hop)
        for start in range(0, self.fft_size, self.hop):
            seg = w2[start : start + self.hop]
            acc[: seg.size] += seg
        return acc

    def n_frames(self, n_samples: int) -> int:
        if self.center:
            return 1 + n_samples // self.hop
        if n_samples < self.fft_size:
            raise ValidationError(
                f"{n_samples} samples is shorter than one un-centered frame"
            )
        return 1 + (n_samples - self.fft_size) // self.hop


def _pad(x: np.ndarray, p: StftParams) -> np.ndarray:
    if not p.center:
        return x
    pad = p.fft_size // 2
    return np.concatenate([np.zeros(pad), x, np.zeros(pad)])


def stft(channel, p: StftParams) -> np.ndarray:
    """Complex STFT grid of shape (T, fft_size//2 + 1)."""
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"stft expects a 1-D sample sequence, got shape {x.shape}")
    t_frames = p.n_frames(x.size)
    xp = _pad(x, p)
    w = p.padded_window
    idx = p.hop * np.arange(t_frames)[:, None] + np.arange(p.fft_size)[None, :]
    # frames can run past the padded end; extend with zeros
    need = int(idx[-1, -1]) + 1
    if need > xp.size:
        xp = np.concatenate([xp, np.zeros(need - xp.size)])
    frames = xp[idx] * w[None, :]
    return np.fft.rfft(frames, axis=1)


def istft(grid: np.ndarray, p: StftParams, length: int | None = None) -> np.ndarray:
    """Inverse STFT via windowed overlap-add with squared-window normalization.

    length: number of output samples; defaults to hop * (T - 1) when centered,
    which covers every fully-determined sample.
    """
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[1] != p.n_bins:
        raise ShapeMismatchError(
            f"grid shape {grid.shape} does not match params (expected (*, {p.n_bins}))"
        )
    t_frames = grid.shape[0]
    w = p.padded_window
    total = p.hop * (t_frames - 1) + p.fft_size
    acc = np.zeros(total)
    norm = np.zeros(total)
    frames = np.fft.irfft(grid, n=p.fft_size, axis=1) * w[None, :]
    for t in range(t_frames):
        s = t * p.hop
        acc[s : s + p.fft_size] += frames[t]
        norm[s : s + p.fft_size] += w ** 2
    out = np.where(norm > _NORM_FLOOR, acc / np.maximum(norm, _NORM_FLOOR), 0.0)
    pad = p.fft_size // 2 if p.center else 0
    if length is None:
        length = p.hop * (t_frames - 1) if p.center else total
    if pad + length > total:
        out = np.concatenate([out, np.zeros(pad + length - total)])
    return out[pad : pad + length]


def stft_adjoint(grid: np.ndarray, p: StftParams, length: int) -> np.ndarray:
    """Adjoint of the (real-input) STFT operator, as a map to real signals.

    Given G with G[t,k] = dL/dRe(S[t,k]) + i dL/dIm(S[t,k]) for S = stft(x),
    returns dL/dx for a length-`length` input.  This is the exact chain rule
    through the analysis transform, used to push spectral-domain gradients
    back to the time domain.
    """
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[1] != p.n_bins:
        raise ShapeMismatchError(
            f"grid shape {grid.shape} does not match params (expected (*, {p.n_bins}))"
        )
    t_frames = grid.shape[0]
    w = p.padded_window
    # Re(A^H G) per frame: halve interior bins, keep only Re at DC/Nyquist,
    # then N * irfft gives sum_k Re(G_k e^{+2pi i k n / N}).
    h = grid.astype(np.complex128).copy()
    h[:, 1:-1] *= 0.5
    h[:, 0] = h[:, 0].real
    h[:, -1] = h[:, -1].real
    frames = p.fft_size * np.fft.irfft(h, n=p.fft_size, axis=1) * w[None, :]
    total = p.hop * (t_frames - 1) + p.fft_size
    acc = np.zeros(total)
    for t in range(t_frames):
        s = t * p.hop
        acc[s : s + p.fft_size] += frames[t]
    pad = p.fft_size // 2 if p.center else 0
    if pad + length > total:
        acc = np.concatenate([acc, np.zeros(pad + length - total)])
    return acc[pad : pad + length]


@dataclass(frozen=True)
class FoaSpectrum:
    """Per-channel complex time-frequency grids in ACN order [W, Y, Z, X]."""

    channels: np.ndarray = field(repr=False)
    params: StftParams = field(default_factory=StftParams)
    sample_rate: int = 24000
    n_samples: int | None = None

    def __post_init__(self):
        ch = np.ascontiguousarray(np.asarray(self.channels, dtype=np.complex128))
        if ch.ndim != 3 or ch.shape[0] != 4:
            raise ValidationError(f"expected 4 grids of shape (T, K), got {ch.shape}")
        if ch.shape[2] != self.params.n_bins:
            raise ShapeMismatchError(
                f"grids have {ch.shape[2]} bins, params imply {self.params.n_bins}"
            )
        if not np.all(np.isfinite(ch.view(np.float64))):
            raise ValidationError("spectrum entries must be finite")
        object.__setattr__(self, "channels", ch)

    @property
    def n_frames(self) -> int:
        return self.channels.shape[1]

    @property
    def n_bins(self) -> int:
        return self.channels.shape[2]

    @property
    def w(self) -> np.ndarray:
        return self.channels[0]

    @property
    def y(self) -> np.ndarray:
        return self.channels[1]

    @property
    def z(self) -> np.ndarray:
        return self.channels[2]

    @property
    def x(self) -> np.ndarray:
        return self.channels[3]


def foa_stft(s: FoaSignal, p: StftParams | None = None) -> FoaSpectrum:
    """STFT of all four FOA channels."""
    p = p or StftParams()
    grids = np.stack([stft(s.data[c], p) for c in range(4)])
    return FoaSpectrum(grids, p, s.sample_rate, s.n_samples)


def foa_istft(spec: FoaSpectrum) -> FoaSignal:
    """Inverse of foa_stft; restores the original sample count when known."""
    data = np.stack(
        [istft(spec.channels[c], spec.params, spec.n_samples) for c in range(4)]
    )
    return FoaSignal(spec.sample_rate, data)


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_mels: int, n_bins: int) -> np.ndarray:
    """Triangular HTK-mel filterbank spanning 0..Nyquist, shape (n_mels, K)."""
    if n_mels < 1:
        raise ValidationError(f"n_mels must be >= 1, got {n_mels}")
    if n_mels > n_bins:
        raise ValidationError(f"n_mels={n_mels} exceeds the {n_bins} available bins")
    nyquist = sample_rate / 2.0
    mel_pts = np.linspace(0.0, float(hz_to_mel(nyquist)), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.linspace(0.0, nyquist, n_bins)
    fb = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, mid, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        rising = (bin_freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - mid, 1e-12)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def mel_spectrogram(channel, sample_rate: int, n_mels: int, p: StftParams) -> np.ndarray:
    """Power mel spectrogram of shape (T, n_mels); each band is a nonnegative
    combination of squared STFT magnitudes."""
    grid = stft(channel, p)
    fb = mel_filterbank(sample_rate, n_mels, p.n_bins)
    power = np.abs(grid) ** 2
    return power @ fb.T
