"""Kernel backend selection.

The hot per-bin and nearest-neighbor loops exist twice: a Cython extension
(foalab._kernels) and a NumPy fallback (foalab._kernels_py).  The compiled
grid kernels are preferred when importable; FOALAB_PURE_PYTHON=1 forces the
fallback.  Both produce the same results up to summation rounding, which the
test suite checks whenever the extension is present.

nearest_codes always runs the NumPy implementation: its distance expansion
is one BLAS matmul, which benchmarks faster than the scalar loop at every
realistic codebook size (see benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_FORCE_PURE = os.environ.get("FOALAB_PURE_PYTHON", "").strip() not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        _impl = _kernels_py
        HAVE_COMPILED = False
else:
    _impl = _kernels_py
    HAVE_COMPILED = False


def backend_name() -> str:
    """Either "compiled" or "python"."""
    return _impl.BACKEND_NAME


def nearest_codes(latents: np.ndarray, entries: np.ndarray):
    """(indices, squared distances) of each latent's nearest codebook entry."""
    latents = np.ascontiguousarray(latents, dtype=np.float64)
    entries = np.ascontiguousarray(entries, dtype=np.float64)
    if latents.ndim != 2 or entries.ndim != 2 or latents.shape[1] != entries.shape[1]:
        raise ValueError(
            f"latents {latents.shape} and entries {entries.shape} are incompatible"
        )
    return _kernels_py.nearest_codes(latents, entries)


def alignment_grid(i_in: np.ndarray, i_rec: np.ndarray, eps: float) -> np.ndarray:
    i_in = np.ascontiguousarray(i_in, dtype=np.float64)
    i_rec = np.ascontiguousarray(i_rec, dtype=np.float64)
    return np.asarray(_impl.alignment_grid(i_in, i_rec, float(eps)))


def intensity_gradient(i_in, i_rec, weights, eps: float, scale: float) -> np.ndarray:
    i_in = np.ascontiguousarray(i_in, dtype=np.float64)
    i_rec = np.ascontiguousarray(i_rec, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return np.asarray(
        _impl.intensity_gradient(i_in, i_rec, weights, float(eps), float(scale))
    )
