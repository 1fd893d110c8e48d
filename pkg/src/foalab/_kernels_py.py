"""Pure-NumPy implementations of the hot kernels.

Selected at import time when the compiled extension is unavailable or when
FOALAB_PURE_PYTHON=1.  Semantics match foalab._kernels; see that module's
docstrings for the contracts.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# cap the transient distance matrix at ~64 MB of float64
_CHUNK_CELLS = 8 * 1024 * 1024


def nearest_codes(latents: np.ndarray, entries: np.ndarray):
    """Exact nearest-neighbor assignment under squared Euclidean distance.

    Returns (indices, distances); ties go to the lowest index.  Distances
    are recomputed directly from the winning entry, so they are exact
    regardless of how the argmin was reached.
    """
    b, d = latents.shape
    n = entries.shape[0]
    idx = np.empty(b, dtype=np.int64)
    ent_sq = np.einsum("nd,nd->n", entries, entries)
    chunk = max(1, _CHUNK_CELLS // max(n, 1))
    for lo in range(0, b, chunk):
        hi = min(b, lo + chunk)
        x = latents[lo:hi]
        d2 = np.einsum("bd,bd->b", x, x)[:, None] - 2.0 * (x @ entries.T) + ent_sq[None, :]
        idx[lo:hi] = np.argmin(d2, axis=1)
    diff = latents - entries[idx]
    dist = np.einsum("bd,bd->b", diff, diff)
    return idx, dist


def alignment_grid(i_in: np.ndarray, i_rec: np.ndarray, eps: float) -> np.ndarray:
    """Per-bin cosine alignment s = (a.b) / (sqrt((a.a)(b.b)) + eps).

    Bins where the denominator is zero (a zero vector with eps == 0) get
    s = 0.  The result is clamped to [-1, 1] to absorb rounding overshoot.
    """
    num = np.einsum("tkc,tkc->tk", i_in, i_rec)
    na = np.einsum("tkc,tkc->tk", i_in, i_in)
    nb = np.einsum("tkc,tkc->tk", i_rec, i_rec)
    den = np.sqrt(na * nb) + eps
    s = np.divide(num, den, out=np.zeros_like(num), where=den > 0.0)
    return np.clip(s, -1.0, 1.0)


def intensity_gradient(
    i_in: np.ndarray,
    i_rec: np.ndarray,
    weights: np.ndarray,
    eps: float,
    scale: float,
) -> np.ndarray:
    """Gradient of scale * sum w (1 - s) with respect to i_rec.

    Per bin, with a = i_in, b = i_rec, q = sqrt((a.a)(b.b)), Q = q + eps:
       ds/db = a/Q - s (a.a) b / (q Q)
       g     = -w scale ds/db
    The second term vanishes in the limit b -> 0 and is dropped where q = 0;
    bins with Q = 0 or w = 0 get a zero gradient.
    """
    num = np.einsum("tkc,tkc->tk", i_in, i_rec)
    na = np.einsum("tkc,tkc->tk", i_in, i_in)
    nb = np.einsum("tkc,tkc->tk", i_rec, i_rec)
    q = np.sqrt(na * nb)
    big_q = q + eps
    safe_q = big_q > 0.0
    s = np.divide(num, big_q, out=np.zeros_like(num), where=safe_q)
    inv_q = np.divide(1.0, big_q, out=np.zeros_like(num), where=safe_q)
    term1 = i_in * inv_q[..., None]
    # coef factored as s * (na/q) * inv_q: at perfect alignment s and na/q
    # are both exactly 1, so term2 cancels term1 bitwise
    ratio = np.divide(na, q, out=np.zeros_like(num), where=q > 0.0)
    coef = s * ratio * inv_q
    term2 = i_rec * coef[..., None]
    return (-scale) * weights[..., None] * (term1 - term2)
