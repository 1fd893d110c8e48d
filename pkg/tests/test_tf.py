"""STFT/iSTFT invertibility, adjoint identity, and mel filterbank shape."""

import numpy as np
import pytest

from foalab import (
    Direction,
    FoaSignal,
    FoaSpectrum,
    ShapeMismatchError,
    StftParams,
    ValidationError,
    encode_source,
    foa_istft,
    foa_stft,
    hann_window,
    istft,
    mel_filterbank,
    mel_spectrogram,
    stft,
    stft_adjoint,
)

P = StftParams(fft_size=1024, hop=256)


class TestStftParams:
    def test_defaults(self):
        assert P.win_length == 1024
        assert P.n_bins == 513

    def test_hop_larger_than_window_rejected(self):
        with pytest.raises(ValidationError):
            StftParams(fft_size=256, hop=512)

    def test_window_larger_than_fft_rejected(self):
        with pytest.raises(ValidationError):
            StftParams(fft_size=256, hop=64, win_length=512)

    def test_nonpositive_sizes_rejected(self):
        with pytest.raises(ValidationError):
            StftParams(fft_size=0, hop=1)
        with pytest.raises(ValidationError):
            StftParams(fft_size=256, hop=0)

    def test_hann_window_periodic(self):
        w = hann_window(8)
        # periodic form: w[n] = 0.5 - 0.5 cos(2 pi n / N), peak at N/2
        assert w[0] == pytest.approx(0.0)
        assert w[4] == pytest.approx(1.0)
        assert w[2] == pytest.approx(0.5)


class TestStft:
    def test_zero_input(self):
        grid = stft(np.zeros(4096), P)
        assert grid.shape == (1 + 4096 // P.hop, P.n_bins)
        assert np.all(grid == 0.0)

    def test_impulse_at_frame_center(self):
        # an impulse at sample t*hop lands on the window peak of frame t,
        # giving a flat magnitude spectrum equal to the peak gain 1.0
        x = np.zeros(4096)
        x[4 * P.hop] = 1.0
        grid = stft(x, P)
        np.testing.assert_allclose(np.abs(grid[4]), 1.0, atol=1e-12)

    def test_bin_centered_sine_concentrates(self):
        # Hann spreads a bin-centered tone one bin to each side and no
        # further, so the 3-bin neighborhood holds all frame energy
        k0 = 32
        n = 8192
        t = np.arange(n)
        x = np.sin(2 * np.pi * k0 * t / P.fft_size)
        grid = stft(x, P)
        frame = np.abs(grid[16]) ** 2
        neighborhood = frame[k0 - 1 : k0 + 2].sum()
        total = frame.sum()
        assert neighborhood / total > 0.99
        assert np.argmax(frame) == k0

    def test_per_frame_parseval(self, rng):
        # unnormalized DFT: full-spectrum energy = fft_size * frame energy;
        # rfft interior bins count twice
        x = rng.normal(size=3000)
        grid = stft(x, P)
        weights = np.full(P.n_bins, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0
        spec_energy = (weights * np.abs(grid) ** 2).sum(axis=1)

        padded = np.concatenate([np.zeros(P.fft_size // 2), x, np.zeros(P.fft_size)])
        w = hann_window(P.win_length)
        for t_idx in range(grid.shape[0]):
            frame = padded[t_idx * P.hop : t_idx * P.hop + P.win_length] * w
            expected = P.fft_size * (frame**2).sum()
            if expected > 0:
                assert spec_energy[t_idx] == pytest.approx(expected, rel=1e-9)

    def test_linearity(self, rng):
        x = rng.normal(size=2000)
        y = rng.normal(size=2000)
        lhs = stft(2.5 * x - 0.5 * y, P)
        rhs = 2.5 * stft(x, P) - 0.5 * stft(y, P)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestIstft:
    def test_round_trip_white_noise(self, rng):
        x = rng.normal(size=8192)
        back = istft(stft(x, P), P, length=x.size)
        assert np.max(np.abs(back - x)) < 1e-9

    def test_round_trip_chirp(self):
        n = 24000
        t = np.arange(n) / 24000.0
        x = np.sin(2 * np.pi * (200.0 * t + 1500.0 * t**2))
        back = istft(stft(x, P), P, length=n)
        assert np.max(np.abs(back - x)) < 1e-9

    def test_round_trip_small_params(self, rng):
        for fft_size, hop in ((64, 16), (256, 64), (512, 256)):
            p = StftParams(fft_size=fft_size, hop=hop)
            x = rng.normal(size=2048)
            back = istft(stft(x, p), p, length=x.size)
            assert np.max(np.abs(back - x)) < 1e-9

    def test_zero_grid(self):
        grid = np.zeros((9, P.n_bins), dtype=complex)
        assert np.all(istft(grid, P) == 0.0)

    def test_shape_mismatch(self):
        grid = np.zeros((9, 100), dtype=complex)
        with pytest.raises(ShapeMismatchError):
            istft(grid, P)


class TestStftAdjoint:
    def test_adjoint_identity(self, rng):
        # <G, stft(x)> under the real inner product equals <adjoint(G), x>
        x = rng.normal(size=3000)
        grid = stft(x, P)
        g = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
        lhs = np.sum(g.real * grid.real + g.imag * grid.imag)
        rhs = np.dot(stft_adjoint(g, P, length=x.size), x)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_adjoint_identity_small_params(self, rng):
        p = StftParams(fft_size=64, hop=16)
        x = rng.normal(size=500)
        grid = stft(x, p)
        g = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
        lhs = np.sum(g.real * grid.real + g.imag * grid.imag)
        rhs = np.dot(stft_adjoint(g, p, length=x.size), x)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestFoaSpectrum:
    def test_round_trip(self, front_signal):
        spec = foa_stft(front_signal, P)
        assert spec.channels.shape[0] == 4
        back = foa_istft(spec)
        assert back.sample_rate == front_signal.sample_rate
        np.testing.assert_allclose(back.data, front_signal.data, atol=1e-9)

    def test_bin_count_validated(self):
        with pytest.raises(ShapeMismatchError):
            FoaSpectrum(np.zeros((4, 5, 100), dtype=complex), P)

    def test_channel_count_validated(self):
        with pytest.raises(ValidationError):
            FoaSpectrum(np.zeros((2, 5, P.n_bins), dtype=complex), P)


class TestMel:
    def test_zero_input(self):
        grid = mel_spectrogram(np.zeros(4096), 24000, 80, P)
        assert grid.shape == (1 + 4096 // P.hop, 80)
        assert np.all(grid == 0.0)

    def test_filterbank_rows_positive(self):
        fb = mel_filterbank(24000, 80, P.n_bins)
        assert fb.shape == (80, P.n_bins)
        assert np.all(fb >= 0.0)
        assert np.all(fb.sum(axis=1) > 0.0)

    def test_white_noise_all_bands_positive(self, rng):
        grid = mel_spectrogram(rng.normal(size=24000), 24000, 80, P)
        assert np.all(grid.sum(axis=0) > 0.0)

    def test_too_many_bands_rejected(self):
        with pytest.raises(ValidationError):
            mel_filterbank(24000, P.n_bins + 1, P.n_bins)

    def test_nonnegative(self, rng):
        grid = mel_spectrogram(rng.normal(size=6000), 24000, 40, P)
        assert np.all(grid >= 0.0)

    def test_scaling_quadratic(self, rng):
        # power grid: doubling the signal multiplies every band by 4
        x = rng.normal(size=6000)
        a = mel_spectrogram(x, 24000, 40, P)
        b = mel_spectrogram(2.0 * x, 24000, 40, P)
        np.testing.assert_allclose(b, 4.0 * a, rtol=1e-12)
