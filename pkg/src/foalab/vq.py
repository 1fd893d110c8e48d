"""Single-layer vector quantizer: k-means initialization, nearest-entry
assignment, EMA codebook tracking, and dead-code reactivation.

The production operating point is 4096 entries of dimension 512 at 75
latent vectors per second; everything here is size-agnostic so tests can
run tiny codebooks.  Entries are kept in float64 in memory and stored as
float32 on disk.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InsufficientDataError, ShapeMismatchError, ValidationError
from .wavio import _atomic_write_bytes

DEFAULT_N_CODES = 4096
DEFAULT_DIM = 512
DEFAULT_DECAY = 0.99
DEFAULT_SMOOTHING = 1e-5
DEFAULT_STALENESS_THRESHOLD = 2
DEFAULT_FRAME_RATE = 75.0

CODEBOOK_MAGIC = b"FOCB"
LATENT_MAGIC = b"FOLA"
FORMAT_VERSION = 1
# token streams are raw little-endian uint16, so indices must fit
MAX_TOKEN_CODES = 65536


def _as_matrix(vectors, what: str) -> np.ndarray:
    m = np.ascontiguousarray(vectors, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValidationError(f"{what} must be a nonempty 2-d matrix, got shape {np.shape(vectors)}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} contains non-finite values")
    return m


@dataclass(frozen=True)
class LatentBatch:
    """A batch of latent vectors, one row per analysis frame."""

    vectors: np.ndarray = field(repr=False)
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self):
        object.__setattr__(self, "vectors", _as_matrix(self.vectors, "latents"))
        if not (math.isfinite(self.frame_rate) and self.frame_rate > 0):
            raise ValidationError(f"frame rate must be positive, got {self.frame_rate}")

    @property
    def n_vectors(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class Codebook:
    """Codebook entries plus the EMA state that moves them.

    stale_batches counts consecutive update batches in which a code
    received no assignment; reactivation keys off it.  gamma and eta are
    the EMA decay and Laplace smoothing constants, not serialized.
    """

    entries: np.ndarray = field(repr=False)
    ema_cluster_size: np.ndarray = field(repr=False)
    ema_sum: np.ndarray = field(repr=False)
    stale_batches: np.ndarray = field(repr=False)
    gamma: float = DEFAULT_DECAY
    eta: float = DEFAULT_SMOOTHING
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)

    def __post_init__(self):
        self.entries = _as_matrix(self.entries, "codebook entries")
        n, d = self.entries.shape
        self.ema_cluster_size = np.ascontiguousarray(self.ema_cluster_size, dtype=np.float64)
        self.ema_sum = np.ascontiguousarray(self.ema_sum, dtype=np.float64)
        self.stale_batches = np.ascontiguousarray(self.stale_batches, dtype=np.int64)
        if self.ema_cluster_size.shape != (n,) or self.ema_sum.shape != (n, d) \
                or self.stale_batches.shape != (n,):
            raise ShapeMismatchError(
                f"EMA state shapes do not match {n}x{d} entries: "
                f"sizes {self.ema_cluster_size.shape}, sums {self.ema_sum.shape}, "
                f"stale {self.stale_batches.shape}"
            )
        if not np.all(np.isfinite(self.ema_cluster_size)) or not np.all(np.isfinite(self.ema_sum)):
            raise ValidationError("EMA state contains non-finite values")
        if np.any(self.ema_cluster_size < 0):
            raise ValidationError("ema_cluster_size must be componentwise nonnegative")
        if not (0.0 < self.gamma < 1.0):
            raise ValidationError(f"decay must lie in (0, 1), got {self.gamma}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValidationError(f"smoothing must be > 0, got {self.eta}")

    @property
    def n_codes(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def _sq_dist_to(lat: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = lat - center
    return np.einsum("bd,bd->b", diff, diff)


def _partial_sums(lat: np.ndarray, idx: np.ndarray, n: int):
    counts = np.bincount(idx, minlength=n).astype(np.float64)
    sums = np.zeros((n, lat.shape[1]))
    np.add.at(sums, idx, lat)
    return counts, sums


def kmeans_init(latents: LatentBatch, n_codes: int, iters: int = 25, seed: int = 0) -> Codebook:
    """Build a codebook by k-means++ seeded Lloyd iterations.

    Deterministic for fixed inputs and seed.  EMA state starts from the
    final assignment, so updates continue smoothly from initialization.
    """
    if n_codes < 1:
        raise ValidationError(f"need at least one code, got {n_codes}")
    if iters < 1:
        raise ValidationError(f"need at least one iteration, got {iters}")
    lat = latents.vectors
    b = lat.shape[0]
    if b < n_codes:
        raise InsufficientDataError(
            f"k-means needs at least {n_codes} latent vectors for {n_codes} codes, "
            f"got {b}; supply more data"
        )
    ss = np.random.SeedSequence(seed)
    init_ss, cb_ss = ss.spawn(2)
    rng = np.random.default_rng(init_ss)

    centers = np.empty((n_codes, lat.shape[1]))
    centers[0] = lat[rng.integers(b)]
    d2 = _sq_dist_to(lat, centers[0])
    for j in range(1, n_codes):
        total = d2.sum()
        if total > 0:
            pick = rng.choice(b, p=d2 / total)
        else:
            pick = rng.integers(b)
        centers[j] = lat[pick]
        np.minimum(d2, _sq_dist_to(lat, centers[j]), out=d2)

    idx = None
    for _ in range(iters):
        idx, _dist = _backend.nearest_codes(lat, centers)
        counts, sums = _partial_sums(lat, idx, n_codes)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
    idx, _dist = _backend.nearest_codes(lat, centers)
    counts, sums = _partial_sums(lat, idx, n_codes)
    return Codebook(
        entries=centers,
        ema_cluster_size=counts,
        ema_sum=sums,
        stale_batches=np.zeros(n_codes, dtype=np.int64),
        rng=np.random.default_rng(cb_ss),
    )


def quantize(cb: Codebook, latents: LatentBatch):
    """Map each latent to its nearest entry (squared Euclidean distance,
    ties toward the lowest index).

    Returns (indices, quantized vectors, commitment loss); the loss is
    the batch mean of squared quantization errors.
    """
    if latents.dim != cb.dim:
        raise ShapeMismatchError(
            f"latent dimension {latents.dim} does not match codebook dimension {cb.dim}"
        )
    idx, dist = _backend.nearest_codes(latents.vectors, cb.entries)
    quantized = cb.entries[idx]
    commitment = float(np.mean(dist))
    return idx, quantized, commitment


def ema_update(cb: Codebook, latents: LatentBatch, indices: np.ndarray) -> Codebook:
    """One EMA step: decay the per-code counts and sums toward this
    batch's assignment statistics and move entries to the smoothed means.

    Laplace smoothing keeps the division finite for unassigned codes.
    Mutates cb in place and returns it.
    """
    if latents.dim != cb.dim:
        raise ShapeMismatchError(
            f"latent dimension {latents.dim} does not match codebook dimension {cb.dim}"
        )
    idx = np.asarray(indices)
    if idx.shape != (latents.n_vectors,):
        raise ShapeMismatchError(
            f"need one index per latent: {idx.shape} vs {latents.n_vectors} vectors"
        )
    if idx.size and (idx.min() < 0 or idx.max() >= cb.n_codes):
        raise ValidationError("assignment index out of codebook range")
    counts, sums = _partial_sums(latents.vectors, idx.astype(np.int64), cb.n_codes)
    g = cb.gamma
    cb.ema_cluster_size = g * cb.ema_cluster_size + (1.0 - g) * counts
    cb.ema_sum = g * cb.ema_sum + (1.0 - g) * sums
    total = cb.ema_cluster_size.sum()
    if total > 0:
        smoothed = (cb.ema_cluster_size + cb.eta) / (total + cb.n_codes * cb.eta) * total
        cb.entries = cb.ema_sum / smoothed[:, None]
    assigned = counts > 0
    cb.stale_batches[assigned] = 0
    cb.stale_batches[~assigned] += 1
    return cb


def reactivate_dead_codes(
    cb: Codebook,
    latents: LatentBatch,
    staleness_threshold: int = DEFAULT_STALENESS_THRESHOLD,
):
    """Overwrite every code unassigned for >= staleness_threshold batches
    with a latent drawn uniformly from the batch, resetting its EMA state.

    Returns (cb, number of codes reactivated).
    """
    if staleness_threshold < 1:
        raise ValidationError(f"staleness threshold must be >= 1, got {staleness_threshold}")
    if latents.dim != cb.dim:
        raise ShapeMismatchError(
            f"latent dimension {latents.dim} does not match codebook dimension {cb.dim}"
        )
    dead = np.flatnonzero(cb.stale_batches >= staleness_threshold)
    if dead.size == 0:
        return cb, 0
    picks = cb.rng.integers(0, latents.n_vectors, size=dead.size)
    cb.entries[dead] = latents.vectors[picks]
    cb.ema_cluster_size[dead] = 1.0
    cb.ema_sum[dead] = cb.entries[dead]
    cb.stale_batches[dead] = 0
    return cb, int(dead.size)


def codebook_stats(cb: Codebook, indices: np.ndarray) -> dict:
    """Assignment health: perplexity exp(-sum p ln p) and used/N."""
    idx = np.asarray(indices)
    if idx.size == 0:
        raise ValidationError("cannot compute stats from an empty assignment")
    if idx.min() < 0 or idx.max() >= cb.n_codes:
        raise ValidationError("assignment index out of codebook range")
    counts = np.bincount(idx.ravel().astype(np.int64), minlength=cb.n_codes)
    p = counts / counts.sum()
    nz = p[p > 0]
    perplexity = float(np.exp(-np.sum(nz * np.log(nz))))
    usage_fraction = float(np.count_nonzero(counts)) / cb.n_codes
    return {"perplexity": perplexity, "usage_fraction": usage_fraction}


# ---------------------------------------------------------------------------
# binary formats
#
# codebook:  b"FOCB" | u32 version | u32 N | u32 D | f32 entries (N*D,
#            row-major) | f32 ema_cluster_size (N) | f32 ema_sum (N*D)
#            | u32 stale_batches (N), all little-endian
# latents:   b"FOLA" | u32 version | u32 B | u32 D | f32 vectors (B*D)
# tokens:    raw little-endian u16 stream, no header

_HEADER = struct.Struct("<III")


def write_codebook(path, cb: Codebook) -> None:
    parts = [
        CODEBOOK_MAGIC,
        _HEADER.pack(FORMAT_VERSION, cb.n_codes, cb.dim),
        np.ascontiguousarray(cb.entries, dtype="<f4").tobytes(),
        np.ascontiguousarray(cb.ema_cluster_size, dtype="<f4").tobytes(),
        np.ascontiguousarray(cb.ema_sum, dtype="<f4").tobytes(),
        np.ascontiguousarray(cb.stale_batches, dtype="<u4").tobytes(),
    ]
    _atomic_write_bytes(path, b"".join(parts))


def _read_exact(f, n: int, path, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ValidationError(f"{path}: truncated {what} (wanted {n} bytes, got {len(data)})")
    return data


def read_codebook(path, gamma: float = DEFAULT_DECAY, eta: float = DEFAULT_SMOOTHING,
                  seed: int = 0) -> Codebook:
    """Load a codebook binary.  gamma/eta/seed are runtime knobs not
    stored in the file."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path, "magic")
        if magic != CODEBOOK_MAGIC:
            raise ValidationError(f"{path}: not a codebook file (magic {magic!r})")
        version, n, d = _HEADER.unpack(_read_exact(f, _HEADER.size, path, "header"))
        if version != FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported codebook version {version}")
        if n < 1 or d < 1:
            raise ValidationError(f"{path}: bad codebook shape {n}x{d}")
        entries = np.frombuffer(_read_exact(f, 4 * n * d, path, "entries"), dtype="<f4")
        sizes = np.frombuffer(_read_exact(f, 4 * n, path, "cluster sizes"), dtype="<f4")
        sums = np.frombuffer(_read_exact(f, 4 * n * d, path, "EMA sums"), dtype="<f4")
        stale = np.frombuffer(_read_exact(f, 4 * n, path, "stale counters"), dtype="<u4")
        if f.read(1):
            raise ValidationError(f"{path}: trailing bytes after codebook payload")
    return Codebook(
        entries=entries.astype(np.float64).reshape(n, d),
        ema_cluster_size=sizes.astype(np.float64),
        ema_sum=sums.astype(np.float64).reshape(n, d),
        stale_batches=stale.astype(np.int64),
        gamma=gamma,
        eta=eta,
        rng=np.random.default_rng(seed),
    )


def write_latents(path, batch: LatentBatch) -> None:
    parts = [
        LATENT_MAGIC,
        _HEADER.pack(FORMAT_VERSION, batch.n_vectors, batch.dim),
        np.ascontiguousarray(batch.vectors, dtype="<f4").tobytes(),
    ]
    _atomic_write_bytes(path, b"".join(parts))


def read_latents(path, frame_rate: float = DEFAULT_FRAME_RATE) -> LatentBatch:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path, "magic")
        if magic != LATENT_MAGIC:
            raise ValidationError(f"{path}: not a latent file (magic {magic!r})")
        version, b, d = _HEADER.unpack(_read_exact(f, _HEADER.size, path, "header"))
        if version != FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported latent version {version}")
        if b < 1 or d < 1:
            raise ValidationError(f"{path}: bad latent shape {b}x{d}")
        vecs = np.frombuffer(_read_exact(f, 4 * b * d, path, "vectors"), dtype="<f4")
        if f.read(1):
            raise ValidationError(f"{path}: trailing bytes after latent payload")
    return LatentBatch(vecs.astype(np.float64).reshape(b, d), frame_rate=frame_rate)


def write_tokens(path, indices: np.ndarray, n_codes: int) -> None:
    """Write an index stream as raw little-endian uint16."""
    if n_codes > MAX_TOKEN_CODES:
        raise ValidationError(
            f"token streams are 16-bit: codebook size {n_codes} exceeds {MAX_TOKEN_CODES}"
        )
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() >= n_codes):
        raise ValidationError("token index out of codebook range")
    _atomic_write_bytes(path, np.ascontiguousarray(idx, dtype="<u2").tobytes())


def read_tokens(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) % 2:
        raise ValidationError(f"{path}: odd byte count for a 16-bit token stream")
    return np.frombuffer(data, dtype="<u2").astype(np.int64)
