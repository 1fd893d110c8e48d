"""Spatial-consistency loss: cosine misalignment of intensity vectors,
masked to energetic non-diffuse bins and weighted by direct energy.

The loss compares the reconstruction against the input per time-frequency
bin.  Mask and weights come from the input analysis only, so they act as
constants under differentiation and the reconstruction is the only branch
that receives gradient.  Composition helpers for the full generator
objective and the discriminator hinge loss live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .dirac import DEFAULT_AVG_FRAMES, analyze, intensity
from .errors import ShapeMismatchError, ValidationError
from .tf import FoaSpectrum, stft_adjoint

DEFAULT_ENERGY_THRESHOLD = 1e-6
DEFAULT_DIFFUSENESS_THRESHOLD = 0.95
DEFAULT_COSINE_EPS = 1e-8

GENERATOR_COMPONENTS = ("q", "mel", "adv", "feat", "sc")


@dataclass(frozen=True)
class ScConfig:
    """Thresholds and stabilizers for the spatial-consistency loss.

    tau_e: energy gate, bins at or below it are ignored.
    tau_d: diffuseness gate, bins at or above it are ignored.
    eps: cosine denominator stabilizer.  Zero is allowed: it makes
         self-comparison exactly zero at the cost of 0/0 guards.
    l_frames: diffuseness averaging window (odd frame count).
    """

    tau_e: float = DEFAULT_ENERGY_THRESHOLD
    tau_d: float = DEFAULT_DIFFUSENESS_THRESHOLD
    eps: float = DEFAULT_COSINE_EPS
    l_frames: int = DEFAULT_AVG_FRAMES

    def __post_init__(self):
        if not (math.isfinite(self.tau_e) and self.tau_e > 0):
            raise ValidationError(f"energy threshold must be finite and > 0, got {self.tau_e}")
        if not (0.0 < self.tau_d <= 1.0):
            raise ValidationError(f"diffuseness threshold must lie in (0, 1], got {self.tau_d}")
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise ValidationError(f"cosine stabilizer must be finite and >= 0, got {self.eps}")
        if self.l_frames < 1 or self.l_frames % 2 == 0:
            raise ValidationError(f"averaging window must be odd and >= 1, got {self.l_frames}")


@dataclass(frozen=True)
class ScBreakdown:
    """Per-bin pieces of one loss evaluation.

    s: alignment grid in [-1, 1]; m: 0/1 mask; w: nonnegative weights
    (zero wherever the mask is zero); loss: the scalar value.
    """

    s: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    loss: float

    def __post_init__(self):
        if self.m.shape != self.s.shape or self.w.shape != self.s.shape:
            raise ShapeMismatchError(
                f"grid shapes differ: s {self.s.shape}, m {self.m.shape}, w {self.w.shape}"
            )

    @property
    def active_fraction(self) -> float:
        """Fraction of bins that survive the mask."""
        return float(self.m.mean()) if self.m.size else 0.0

    def contribution(self) -> np.ndarray:
        """Per-bin share of the loss; sums to `loss` up to rounding."""
        t, k = self.s.shape
        return self.w * (1.0 - self.s) / float(t * k)


def alignment(i_in: np.ndarray, i_rec: np.ndarray, eps: float = DEFAULT_COSINE_EPS) -> np.ndarray:
    """Cosine similarity of intensity vectors per bin, stabilized by eps
    on the product of norms.  Zero-denominator bins give 0."""
    i_in = np.asarray(i_in, dtype=np.float64)
    i_rec = np.asarray(i_rec, dtype=np.float64)
    if i_in.shape != i_rec.shape:
        raise ShapeMismatchError(f"intensity shapes differ: {i_in.shape} vs {i_rec.shape}")
    if i_in.shape[-1] != 3:
        raise ShapeMismatchError(f"intensity vectors must have 3 components, got {i_in.shape}")
    return _backend.alignment_grid(i_in, i_rec, float(eps))


def mask(e_in: np.ndarray, d_in: np.ndarray, cfg: ScConfig) -> np.ndarray:
    """Binary gate: 1 where energy exceeds tau_e AND diffuseness is below
    tau_d (both strict), computed from the input field only."""
    e_in = np.asarray(e_in, dtype=np.float64)
    d_in = np.asarray(d_in, dtype=np.float64)
    if e_in.shape != d_in.shape:
        raise ShapeMismatchError(f"energy shape {e_in.shape} vs diffuseness shape {d_in.shape}")
    return ((e_in > cfg.tau_e) & (d_in < cfg.tau_d)).astype(np.float64)


def weights(m: np.ndarray, e_in: np.ndarray, d_in: np.ndarray) -> np.ndarray:
    """Per-bin weights m * E * (1 - D)."""
    m = np.asarray(m, dtype=np.float64)
    e_in = np.asarray(e_in, dtype=np.float64)
    d_in = np.asarray(d_in, dtype=np.float64)
    if not (m.shape == e_in.shape == d_in.shape):
        raise ShapeMismatchError(
            f"grid shapes differ: m {m.shape}, E {e_in.shape}, D {d_in.shape}"
        )
    return m * e_in * (1.0 - d_in)


def _check_pair(spec_in: FoaSpectrum, spec_rec: FoaSpectrum) -> None:
    if spec_in.channels.shape != spec_rec.channels.shape:
        raise ShapeMismatchError(
            f"spectrum shapes differ: {spec_in.channels.shape} vs {spec_rec.channels.shape}"
        )
    if spec_in.params != spec_rec.params:
        raise ValidationError("input and reconstruction use different analysis parameters")


def sc_loss(spec_in: FoaSpectrum, spec_rec: FoaSpectrum, cfg: ScConfig = ScConfig()) -> ScBreakdown:
    """Weighted misalignment penalty averaged over all T*K bins.

    Masked-out bins contribute zero but still count in the normalizer.
    """
    _check_pair(spec_in, spec_rec)
    din = analyze(spec_in, cfg.l_frames)
    i_rec = intensity(spec_rec)
    s = alignment(din.i, i_rec, cfg.eps)
    m = mask(din.e, din.d, cfg)
    w = weights(m, din.e, din.d)
    t, k = s.shape
    loss = float(np.sum(w * (1.0 - s))) / float(t * k)
    return ScBreakdown(s=s, m=m, w=w, loss=loss)


def sc_loss_grad(
    spec_in: FoaSpectrum,
    spec_rec: FoaSpectrum,
    cfg: ScConfig = ScConfig(),
    time_domain: bool = False,
) -> np.ndarray:
    """Analytic gradient of sc_loss with respect to the reconstruction.

    Returns a (4, T, K) complex array in channel order (W, Y, Z, X) where
    each entry packs d(loss)/dRe + 1j * d(loss)/dIm of the matching bin.
    With time_domain=True the gradient is chained through the inverse
    transform and returned as (4, n_samples) float64.
    """
    _check_pair(spec_in, spec_rec)
    din = analyze(spec_in, cfg.l_frames)
    i_rec = intensity(spec_rec)
    m = mask(din.e, din.d, cfg)
    w = weights(m, din.e, din.d)
    t, k = w.shape
    scale = 1.0 / float(t * k)
    g = _backend.intensity_gradient(din.i, i_rec, w, float(cfg.eps), scale)
    gx, gy, gz = g[..., 0], g[..., 1], g[..., 2]
    # I = Re{conj(W) v} makes dI_j/dW = v_j and dI_j/dv_j = W in the
    # packed re+j*im convention, with the real g factors distributing.
    grad = np.empty_like(spec_rec.channels)
    grad[0] = gx * spec_rec.x + gy * spec_rec.y + gz * spec_rec.z
    grad[1] = gy * spec_rec.w
    grad[2] = gz * spec_rec.w
    grad[3] = gx * spec_rec.w
    if not time_domain:
        return grad
    if spec_rec.n_samples is None:
        raise ValidationError("time-domain gradient needs a spectrum with a known sample count")
    out = np.empty((4, spec_rec.n_samples), dtype=np.float64)
    for ch in range(4):
        out[ch] = stft_adjoint(grad[ch], spec_rec.params, spec_rec.n_samples)
    return out


@dataclass(frozen=True, kw_only=True)
class LossWeights:
    """Scale factors for the generator objective.

    adv and feat carry no defaults: they depend on the discriminator
    architecture and must be chosen by the caller.
    """

    q: float = 1000.0
    mel: float = 45.0
    adv: float
    feat: float
    sc: float = 1.0

    def __post_init__(self):
        for name in GENERATOR_COMPONENTS:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"weight {name} must be finite and >= 0, got {v}")


def generator_total(components: dict, lam: LossWeights) -> float:
    """Weighted sum of the five generator loss components.

    components maps each of "q", "mel", "adv", "feat", "sc" to its raw
    loss value; every key must be present and no others.
    """
    got = set(components)
    expected = set(GENERATOR_COMPONENTS)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ValidationError(f"bad component keys: missing {missing}, unexpected {extra}")
    vals = []
    for name in GENERATOR_COMPONENTS:
        v = float(components[name])
        if not math.isfinite(v):
            raise ValidationError(f"component {name} must be finite, got {v}")
        vals.append(getattr(lam, name) * v)
    return math.fsum(vals)


def _as_score_list(scores) -> list:
    if isinstance(scores, (list, tuple)):
        return [np.asarray(s, dtype=np.float64) for s in scores]
    return [np.asarray(scores, dtype=np.float64)]


def hinge_discriminator_loss(real_scores, fake_scores) -> float:
    """Hinge loss over K discriminator outputs: per-output means of
    max(0, 1 - real) and max(0, 1 + fake), averaged over outputs.

    Accepts a single score array or a list of them (one per output).
    """
    reals = _as_score_list(real_scores)
    fakes = _as_score_list(fake_scores)
    if len(reals) != len(fakes) or not reals:
        raise ValidationError(
            f"need matching nonempty score lists, got {len(reals)} real and {len(fakes)} fake"
        )
    terms = []
    for r, f in zip(reals, fakes):
        if r.shape != f.shape:
            raise ShapeMismatchError(f"score shapes differ: {r.shape} vs {f.shape}")
        if r.size == 0:
            raise ValidationError("empty score array")
        terms.append(float(np.mean(np.maximum(0.0, 1.0 - r)))
                     + float(np.mean(np.maximum(0.0, 1.0 + f))))
    return math.fsum(terms) / len(terms)
