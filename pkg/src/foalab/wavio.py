"""WAV (RIFF) reading and writing.

FOA signals travel as 4-channel files with the package's ACN channel
order [W, Y, Z, X] on disk; mono source material uses the same container
with one channel.  PCM16 and 32-bit-float encodings are supported; files
are written as 32-bit float by default so round trips are lossless.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .errors import ValidationError, WavChannelError, WavEncodingError, WavTruncatedError
from .signal import FoaSignal

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3
_PCM16_SCALE = 32767.0


def _pack_wav(sample_rate: int, data: np.ndarray, encoding: str) -> bytes:
    """data: (n_channels, n_samples) float64, interleaved on disk."""
    if encoding == "float32":
        fmt_tag, bits = _FORMAT_FLOAT, 32
        frames = data.T.astype("<f4").tobytes()
    elif encoding == "pcm16":
        fmt_tag, bits = _FORMAT_PCM, 16
        clipped = np.clip(data.T, -1.0, 1.0)
        frames = np.round(clipped * _PCM16_SCALE).astype("<i2").tobytes()
    else:
        raise WavEncodingError(f"unsupported encoding {encoding!r}")

    n_ch = data.shape[0]
    block_align = n_ch * bits // 8
    byte_rate = sample_rate * block_align
    fmt_chunk = struct.pack(
        "<HHIIHH", fmt_tag, n_ch, sample_rate, byte_rate, block_align, bits
    )
    chunks = [(b"fmt ", fmt_chunk)]
    if fmt_tag == _FORMAT_FLOAT:
        chunks.append((b"fact", struct.pack("<I", data.shape[1])))
    chunks.append((b"data", frames))

    body = b"WAVE"
    for cid, payload in chunks:
        body += cid + struct.pack("<I", len(payload)) + payload
        if len(payload) % 2:
            body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def _parse_wav(path) -> tuple:
    """Returns (sample_rate, samples) with samples shaped (n_ch, n)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavEncodingError(f"{path}: not a RIFF/WAVE file")
    declared = struct.unpack("<I", raw[4:8])[0]
    if len(raw) < 8 + declared:
        raise WavTruncatedError(
            f"{path}: RIFF payload declares {declared} bytes, file holds {len(raw) - 8}"
        )

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        size = struct.unpack("<I", raw[pos + 4 : pos + 8])[0]
        payload_end = pos + 8 + size
        if payload_end > len(raw):
            raise WavTruncatedError(
                f"{path}: chunk {cid!r} declares {size} bytes past end of file"
            )
        if cid == b"fmt ":
            if size < 16:
                raise WavEncodingError(f"{path}: fmt chunk too small ({size} bytes)")
            fmt = struct.unpack("<HHIIHH", raw[pos + 8 : pos + 24])
        elif cid == b"data":
            data = raw[pos + 8 : payload_end]
        pos = payload_end + (size % 2)

    if fmt is None or data is None:
        raise WavTruncatedError(f"{path}: missing fmt or data chunk")
    fmt_tag, n_ch, rate, _byte_rate, _block_align, bits = fmt
    if n_ch < 1:
        raise WavChannelError(f"{path}: channel count {n_ch}")

    if fmt_tag == _FORMAT_FLOAT and bits == 32:
        flat = np.frombuffer(data[: len(data) - len(data) % 4], dtype="<f4")
        samples = flat.astype(np.float64)
    elif fmt_tag == _FORMAT_PCM and bits == 16:
        flat = np.frombuffer(data[: len(data) - len(data) % 2], dtype="<i2")
        samples = flat.astype(np.float64) / _PCM16_SCALE
    else:
        raise WavEncodingError(
            f"{path}: unsupported encoding (format tag {fmt_tag}, {bits} bits)"
        )
    if samples.size % n_ch:
        raise WavTruncatedError(f"{path}: data chunk ends mid-frame")
    if samples.size == 0:
        raise WavTruncatedError(f"{path}: data chunk holds no frames")
    return int(rate), samples.reshape(-1, n_ch).T


def write_wav(path, s: FoaSignal, encoding: str = "float32") -> None:
    """Write an FOA signal as a 4-channel WAV file.

    encoding: "float32" (default, lossless) or "pcm16".
    The file is written atomically (temp file + rename).
    """
    _atomic_write_bytes(path, _pack_wav(s.sample_rate, s.data, encoding))


def read_wav(path) -> FoaSignal:
    """Read a 4-channel PCM16 or 32-bit-float WAV file as an FoaSignal."""
    rate, samples = _parse_wav(path)
    if samples.shape[0] != 4:
        raise WavChannelError(f"{path}: expected 4 channels, found {samples.shape[0]}")
    return FoaSignal(rate, samples)


def write_mono_wav(path, sample_rate: int, mono, encoding: str = "float32") -> None:
    """Write a mono WAV file (source material for scene construction)."""
    data = np.ascontiguousarray(mono, dtype=np.float64)
    if data.ndim != 1 or data.size == 0:
        raise ValidationError(f"mono audio must be a nonempty 1-d array, got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValidationError("mono audio contains non-finite samples")
    _atomic_write_bytes(path, _pack_wav(int(sample_rate), data[None, :], encoding))


def read_mono_wav(path):
    """Read a mono WAV file; returns (sample_rate, samples)."""
    rate, samples = _parse_wav(path)
    if samples.shape[0] != 1:
        raise WavChannelError(f"{path}: expected 1 channel, found {samples.shape[0]}")
    return rate, samples[0]


def _atomic_write_bytes(path, blob: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".foalab-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
