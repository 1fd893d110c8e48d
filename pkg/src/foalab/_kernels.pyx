# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics are shared with foalab._kernels_py; both backends follow the
same arithmetic per element so results agree up to summation rounding:

  nearest_codes:     exact squared-distance argmin, ties to lowest index
  alignment_grid:    s = (a.b) / (sqrt((a.a)(b.b)) + eps), clamped [-1, 1]
  intensity_gradient: g = -w scale (a/Q - s (a.a) b / (q Q)), Q = q + eps
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def nearest_codes(double[:, ::1] latents, double[:, ::1] entries):
    """Nearest codebook entry per latent with an early-abandon inner loop;
    the winner's distance is recomputed in full so it is exact."""
    cdef Py_ssize_t b = latents.shape[0]
    cdef Py_ssize_t dim = latents.shape[1]
    cdef Py_ssize_t n = entries.shape[0]
    idx_arr = np.empty(b, dtype=np.int64)
    dist_arr = np.empty(b, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, k, best_j
    cdef double best, acc, diff

    for i in range(b):
        best = INFINITY
        best_j = 0
        for j in range(n):
            acc = 0.0
            for k in range(dim):
                diff = latents[i, k] - entries[j, k]
                acc += diff * diff
                if acc >= best:
                    break
            if acc < best:
                best = acc
                best_j = j
        acc = 0.0
        for k in range(dim):
            diff = latents[i, k] - entries[best_j, k]
            acc += diff * diff
        idx[i] = best_j
        dist[i] = acc
    return idx_arr, dist_arr


def alignment_grid(double[:, :, ::1] i_in, double[:, :, ::1] i_rec, double eps):
    cdef Py_ssize_t nt = i_in.shape[0]
    cdef Py_ssize_t nk = i_in.shape[1]
    out_arr = np.empty((nt, nk), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, k
    cdef double num, na, nb, den, s

    for t in range(nt):
        for k in range(nk):
            num = (i_in[t, k, 0] * i_rec[t, k, 0]
                   + i_in[t, k, 1] * i_rec[t, k, 1]
                   + i_in[t, k, 2] * i_rec[t, k, 2])
            na = (i_in[t, k, 0] * i_in[t, k, 0]
                  + i_in[t, k, 1] * i_in[t, k, 1]
                  + i_in[t, k, 2] * i_in[t, k, 2])
            nb = (i_rec[t, k, 0] * i_rec[t, k, 0]
                  + i_rec[t, k, 1] * i_rec[t, k, 1]
                  + i_rec[t, k, 2] * i_rec[t, k, 2])
            den = sqrt(na * nb) + eps
            if den > 0.0:
                s = num / den
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
            else:
                s = 0.0
            out[t, k] = s
    return out_arr


def intensity_gradient(double[:, :, ::1] i_in, double[:, :, ::1] i_rec,
                       double[:, ::1] weights, double eps, double scale):
    cdef Py_ssize_t nt = i_in.shape[0]
    cdef Py_ssize_t nk = i_in.shape[1]
    out_arr = np.zeros((nt, nk, 3), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, k, c
    cdef double num, na, nb, q, big_q, s, inv_q, coef, gw

    for t in range(nt):
        for k in range(nk):
            num = (i_in[t, k, 0] * i_rec[t, k, 0]
                   + i_in[t, k, 1] * i_rec[t, k, 1]
                   + i_in[t, k, 2] * i_rec[t, k, 2])
            na = (i_in[t, k, 0] * i_in[t, k, 0]
                  + i_in[t, k, 1] * i_in[t, k, 1]
                  + i_in[t, k, 2] * i_in[t, k, 2])
            nb = (i_rec[t, k, 0] * i_rec[t, k, 0]
                  + i_rec[t, k, 1] * i_rec[t, k, 1]
                  + i_rec[t, k, 2] * i_rec[t, k, 2])
            q = sqrt(na * nb)
            big_q = q + eps
            if big_q > 0.0:
                s = num / big_q
                inv_q = 1.0 / big_q
            else:
                s = 0.0
                inv_q = 0.0
            # coef factored as s * (na/q) * inv_q: at perfect alignment s and
            # na/q are both exactly 1, so the terms below cancel bitwise
            if q > 0.0:
                coef = s * (na / q) * inv_q
            else:
                coef = 0.0
            gw = (-scale) * weights[t, k]
            for c in range(3):
                out[t, k, c] = gw * (i_in[t, k, c] * inv_q - i_rec[t, k, c] * coef)
    return out_arr
