"""Central finite-difference verification of the analytic loss gradient.

Checks two things per case: a sample of individual coordinates (real and
imaginary parts of spectrum bins, or time samples) and a few random
directional probes that touch every coordinate at once.  Relative errors
use max(|analytic|, |numeric|, floor) in the denominator so zero-gradient
coordinates compare in absolute terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .dirac import analyze
from .errors import ValidationError
from .scloss import ScConfig, mask, sc_loss_grad, weights
from .signal import FoaSignal
from .tf import FoaSpectrum, foa_stft

DEFAULT_THRESHOLD = 1e-4
DEFAULT_STEP_SCALE = 1e-6
DEFAULT_N_COORDS = 24
DEFAULT_N_PROBES = 2


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of one finite-difference comparison."""

    max_rel_error: float
    threshold: float
    n_coords: int
    n_probes: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.threshold


def _input_state(spec_in: FoaSpectrum, cfg: ScConfig):
    field = analyze(spec_in, cfg.l_frames)
    m = mask(field.e, field.d, cfg)
    return field.i, weights(m, field.e, field.d)


def _fast_loss(i_in: np.ndarray, w: np.ndarray, channels: np.ndarray, eps: float) -> float:
    # same arithmetic as sc_loss with the input analysis hoisted out
    cw = np.conj(channels[0])
    i_rec = np.stack(
        [np.real(cw * channels[3]), np.real(cw * channels[1]), np.real(cw * channels[2])],
        axis=-1,
    )
    s = _backend.alignment_grid(i_in, i_rec, eps)
    t, k = w.shape
    return float(np.sum(w * (1.0 - s))) / float(t * k)


def _bin_term(a, w_tk: float, vals, eps: float, n_bins: int) -> float:
    """Loss contribution of one bin given its four channel values.

    Perturbing a single spectrum coordinate changes the loss only through
    its own bin, so central differences of this term equal differences of
    the full loss with the untouched bins cancelled exactly.
    """
    cw = np.conj(vals[0])
    bx = (cw * vals[3]).real
    by = (cw * vals[1]).real
    bz = (cw * vals[2]).real
    num = a[0] * bx + a[1] * by + a[2] * bz
    na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
    nb = bx * bx + by * by + bz * bz
    den = math.sqrt(na * nb) + eps
    s = num / den if den > 0.0 else 0.0
    s = min(1.0, max(-1.0, s))
    return w_tk * (1.0 - s) / n_bins


def _rel_errors(analytic: np.ndarray, numeric: np.ndarray, floor: float) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def check_spectrum_gradient(
    spec_in: FoaSpectrum,
    spec_rec: FoaSpectrum,
    cfg: ScConfig = ScConfig(),
    n_coords: int = DEFAULT_N_COORDS,
    n_probes: int = DEFAULT_N_PROBES,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    inject_sign_flip: bool = False,
) -> GradCheckReport:
    """Compare the analytic spectrum-domain gradient against central
    differences at sampled coordinates plus random directional probes.

    inject_sign_flip negates the analytic gradient first; it exists so
    callers can verify the checker actually fails on a broken gradient.
    """
    if n_coords < 1 and n_probes < 1:
        raise ValidationError("nothing to check: need coordinates or probes")
    analytic = sc_loss_grad(spec_in, spec_rec, cfg)
    if inject_sign_flip:
        analytic = -analytic
    i_in, w = _input_state(spec_in, cfg)
    base = spec_rec.channels
    gmax = float(np.max(np.abs(analytic.view(np.float64)))) if analytic.size else 0.0
    floor = max(1e-8, DEFAULT_STEP_SCALE * gmax)
    h = DEFAULT_STEP_SCALE * max(1.0, float(np.max(np.abs(base))))
    rng = np.random.default_rng(seed)

    errors = [0.0]
    flat = rng.integers(0, base.size, size=max(0, n_coords - 1)).tolist()
    # always cover the largest-magnitude gradient entry
    flat.append(int(np.argmax(np.abs(analytic.view(np.float64))) // 2))
    n_bins_total = base.shape[1] * base.shape[2]
    for pos in flat:
        c, t, k = np.unravel_index(pos, base.shape)
        a = i_in[t, k]
        w_tk = float(w[t, k])
        for part in (1.0, 1.0j):
            vals = base[:, t, k].copy()
            vals[c] += h * part
            lp = _bin_term(a, w_tk, vals, cfg.eps, n_bins_total)
            vals = base[:, t, k].copy()
            vals[c] -= h * part
            lm = _bin_term(a, w_tk, vals, cfg.eps, n_bins_total)
            fd = (lp - lm) / (2.0 * h)
            ga = analytic[c, t, k].real if part == 1.0 else analytic[c, t, k].imag
            errors.append(float(_rel_errors(np.float64(ga), np.float64(fd), floor)))

    for _ in range(n_probes):
        d = rng.standard_normal(base.shape) + 1j * rng.standard_normal(base.shape)
        d /= np.linalg.norm(d.view(np.float64))
        lp = _fast_loss(i_in, w, base + h * d, cfg.eps)
        lm = _fast_loss(i_in, w, base - h * d, cfg.eps)
        fd = (lp - lm) / (2.0 * h)
        ga = float(np.sum(analytic.real * d.real + analytic.imag * d.imag))
        errors.append(float(_rel_errors(np.float64(ga), np.float64(fd), floor)))

    return GradCheckReport(
        max_rel_error=max(errors),
        threshold=threshold,
        n_coords=len(flat),
        n_probes=n_probes,
    )


def _rows_loss(i_in, w, grids, rows, eps, n_bins_total) -> float:
    # loss restricted to a frame-row slice; rows outside are constant in
    # the perturbation, so their terms drop out of the derivative exactly
    cw = np.conj(grids[0, rows])
    i_rec = np.stack(
        [
            np.real(cw * grids[3, rows]),
            np.real(cw * grids[1, rows]),
            np.real(cw * grids[2, rows]),
        ],
        axis=-1,
    )
    s = _backend.alignment_grid(np.ascontiguousarray(i_in[rows]), i_rec, eps)
    return float(np.sum(w[rows] * (1.0 - s))) / n_bins_total


def check_time_gradient(
    sig_in: FoaSignal,
    sig_rec: FoaSignal,
    cfg: ScConfig = ScConfig(),
    params=None,
    n_coords: int = DEFAULT_N_COORDS,
    n_probes: int = DEFAULT_N_PROBES,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
) -> GradCheckReport:
    """Same comparison for the gradient chained back to time samples.

    Bumping one time sample only alters the frames whose windows cover
    it, so coordinate differences are taken over that frame range alone;
    this keeps untouched frames from adding cancellation noise.
    """
    from .tf import stft

    spec_in = foa_stft(sig_in, params)
    spec_rec = foa_stft(sig_rec, params)
    analytic = sc_loss_grad(spec_in, spec_rec, cfg, time_domain=True)
    i_in, w = _input_state(spec_in, cfg)
    p = spec_rec.params
    base = sig_rec.data
    base_grids = spec_rec.channels
    n_frames, n_bins = base_grids.shape[1], base_grids.shape[2]
    n_bins_total = n_frames * n_bins

    def loss_of(data: np.ndarray) -> float:
        grids = np.stack([stft(data[c], p) for c in range(4)])
        return _fast_loss(i_in, w, grids, cfg.eps)

    def frame_range(n: int) -> slice:
        # centered frames: frame f covers padded samples [f*hop, f*hop+fft),
        # and sample n sits at padded position n + fft//2
        pos = n + p.fft_size // 2
        lo = max(0, -(-(pos - p.fft_size + 1) // p.hop))
        hi = min(n_frames, pos // p.hop + 1)
        return slice(lo, hi)

    gmax = float(np.max(np.abs(analytic))) if analytic.size else 0.0
    # each time-sample difference spans win/hop frames of bins, so its
    # truncation error is larger than the spectrum check's single-bin
    # differences; the near-zero floor is raised to match
    floor = max(1e-8, 10.0 * DEFAULT_STEP_SCALE * gmax)
    h = DEFAULT_STEP_SCALE * max(1.0, float(np.max(np.abs(base))))
    rng = np.random.default_rng(seed)

    errors = [0.0]
    flat = rng.integers(0, base.size, size=max(0, n_coords - 1)).tolist()
    flat.append(int(np.argmax(np.abs(analytic))))
    for pos in flat:
        c, t = np.unravel_index(pos, base.shape)
        rows = frame_range(int(t))
        sides = []
        for sign in (1.0, -1.0):
            bumped = base[c].copy()
            bumped[t] += sign * h
            grids = base_grids.copy()
            grids[c] = stft(bumped, p)
            sides.append(_rows_loss(i_in, w, grids, rows, cfg.eps, n_bins_total))
        fd = (sides[0] - sides[1]) / (2.0 * h)
        errors.append(float(_rel_errors(np.float64(analytic[c, t]), np.float64(fd), floor)))

    for _ in range(n_probes):
        d = rng.standard_normal(base.shape)
        d /= np.linalg.norm(d)
        fd = (loss_of(base + h * d) - loss_of(base - h * d)) / (2.0 * h)
        ga = float(np.sum(analytic * d))
        errors.append(float(_rel_errors(np.float64(ga), np.float64(fd), floor)))

    return GradCheckReport(
        max_rel_error=max(errors),
        threshold=threshold,
        n_coords=len(flat),
        n_probes=n_probes,
    )


def random_spectrum_pair(seed: int, n_frames: int = 12, fft_size: int = 64,
                         sample_rate: int = 24000):
    """Seeded random (input, reconstruction) spectrum pair for checks.

    The input leans directional (dipoles correlated with W) so the mask
    keeps plenty of bins; the reconstruction is a noisy deformation.
    """
    from .tf import StftParams

    p = StftParams(fft_size=fft_size, hop=fft_size // 4)
    k = p.n_bins
    rng = np.random.default_rng(seed)

    def cgrid(scale: float = 1.0):
        return scale * (rng.standard_normal((n_frames, k))
                        + 1j * rng.standard_normal((n_frames, k)))

    w = cgrid()
    gx, gy, gz = rng.standard_normal(3)
    norm = max(1e-9, float(np.sqrt(gx * gx + gy * gy + gz * gz)))
    gx, gy, gz = gx / norm, gy / norm, gz / norm
    chans_in = np.stack([w, gy * w + cgrid(0.2), gz * w + cgrid(0.2), gx * w + cgrid(0.2)])
    deform = rng.uniform(0.2, 1.0)
    chans_rec = chans_in + np.stack([cgrid(0.5) for _ in range(4)]) * deform
    return FoaSpectrum(chans_in, p, sample_rate), FoaSpectrum(chans_rec, p, sample_rate)
