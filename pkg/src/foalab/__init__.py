"""First-order ambisonics toolkit: encoding, per-bin directional
analysis, spatial-consistency losses with analytic gradients, vector
quantization, synthetic scene generation, and evaluation metrics."""

from ._backend import HAVE_COMPILED, backend_name
from .errors import (
    FoalabError,
    InsufficientDataError,
    MissingSourceError,
    NoDirectionalEnergyError,
    SampleRateMismatchError,
    ShapeMismatchError,
    ValidationError,
    WavChannelError,
    WavEncodingError,
    WavTruncatedError,
)
from .dirac import (
    DiracField,
    analyze,
    diffuseness,
    energy,
    export_matrix_csv,
    intensity,
    moving_average_frames,
)
from .gradcheck import (
    GradCheckReport,
    check_spectrum_gradient,
    check_time_gradient,
    random_spectrum_pair,
)
from .metrics import (
    EvalReport,
    aggregate_reports,
    angular_error,
    azimuth_error,
    elevation_error,
    estimate_doa,
    evaluate_pair,
    mel_distance,
    stft_distance,
)
from .scene import (
    DiffuseFieldSpec,
    SceneManifest,
    SourceSpec,
    generate_diffuse,
    generate_scene,
    load_manifest,
    save_manifest,
    uniform_sphere_directions,
)
from .scloss import (
    LossWeights,
    ScBreakdown,
    ScConfig,
    alignment,
    generator_total,
    hinge_discriminator_loss,
    mask,
    sc_loss,
    sc_loss_grad,
    weights,
)
from .signal import (
    Direction,
    FoaSignal,
    direction_from_vector,
    encode_source,
    mix,
    rotate_azimuth,
    unit_vector,
    wrap_azimuth,
)
from .tf import (
    FoaSpectrum,
    StftParams,
    foa_istft,
    foa_stft,
    hann_window,
    hz_to_mel,
    istft,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    stft,
    stft_adjoint,
)
from .vq import (
    Codebook,
    LatentBatch,
    codebook_stats,
    ema_update,
    kmeans_init,
    quantize,
    reactivate_dead_codes,
    read_codebook,
    read_latents,
    read_tokens,
    write_codebook,
    write_latents,
    write_tokens,
)
from .wavio import read_mono_wav, read_wav, write_mono_wav, write_wav

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "backend_name",
    "FoalabError",
    "InsufficientDataError",
    "MissingSourceError",
    "NoDirectionalEnergyError",
    "SampleRateMismatchError",
    "ShapeMismatchError",
    "ValidationError",
    "WavChannelError",
    "WavEncodingError",
    "WavTruncatedError",
    "DiracField",
    "analyze",
    "diffuseness",
    "energy",
    "export_matrix_csv",
    "intensity",
    "moving_average_frames",
    "GradCheckReport",
    "check_spectrum_gradient",
    "check_time_gradient",
    "random_spectrum_pair",
    "EvalReport",
    "aggregate_reports",
    "angular_error",
    "azimuth_error",
    "elevation_error",
    "estimate_doa",
    "evaluate_pair",
    "mel_distance",
    "stft_distance",
    "DiffuseFieldSpec",
    "SceneManifest",
    "SourceSpec",
    "generate_diffuse",
    "generate_scene",
    "load_manifest",
    "save_manifest",
    "uniform_sphere_directions",
    "LossWeights",
    "ScBreakdown",
    "ScConfig",
    "alignment",
    "generator_total",
    "hinge_discriminator_loss",
    "mask",
    "sc_loss",
    "sc_loss_grad",
    "weights",
    "Direction",
    "FoaSignal",
    "direction_from_vector",
    "encode_source",
    "mix",
    "rotate_azimuth",
    "unit_vector",
    "wrap_azimuth",
    "FoaSpectrum",
    "StftParams",
    "foa_istft",
    "foa_stft",
    "hann_window",
    "hz_to_mel",
    "istft",
    "mel_filterbank",
    "mel_spectrogram",
    "mel_to_hz",
    "stft",
    "stft_adjoint",
    "Codebook",
    "LatentBatch",
    "codebook_stats",
    "ema_update",
    "kmeans_init",
    "quantize",
    "reactivate_dead_codes",
    "read_codebook",
    "read_latents",
    "read_tokens",
    "write_codebook",
    "write_latents",
    "write_tokens",
    "read_mono_wav",
    "read_wav",
    "write_mono_wav",
    "write_wav",
    "__version__",
]
