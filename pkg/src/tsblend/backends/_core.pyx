# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the reference kernels.

Semantics and floating point accumulation order match
``tsblend.backends.reference`` exactly: tap-major channel-minor response
accumulation, strict-greater first-max winner selection, identical
threshold expression and gain expression. The reference module carries
the full docstrings; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport NAN, fabs, log, nextafter

cnp.import_array()


def hydra_counts(x, weights, sel, int dilation):
    x = np.ascontiguousarray(x, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    sel = np.ascontiguousarray(sel, dtype=np.int64)

    cdef const double[:, :, ::1] xv = x
    cdef const double[:, :, :, ::1] wv = weights
    cdef const long long[:, ::1] sv = sel

    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t length = xv.shape[2]
    cdef Py_ssize_t g = wv.shape[0]
    cdef Py_ssize_t k = wv.shape[1]
    cdef Py_ssize_t ch_used = wv.shape[2]
    cdef Py_ssize_t klen = wv.shape[3]
    cdef Py_ssize_t half = klen // 2

    hard_arr = np.zeros((n, g, k), dtype=np.int64)
    soft_arr = np.zeros((n, g, k), dtype=np.float64)
    cdef long long[:, :, ::1] hard = hard_arr
    cdef double[:, :, ::1] soft = soft_arr

    cdef Py_ssize_t i, gq, t, kk, c, j, tt, ch, best
    cdef double r, mag, best_mag

    with nogil:
        for i in range(n):
            for gq in range(g):
                for t in range(length):
                    best = 0
                    best_mag = -1.0
                    for kk in range(k):
                        r = 0.0
                        # Tap-major, channel-minor: same order as reference.
                        for j in range(klen):
                            tt = t + (j - half) * dilation
                            if 0 <= tt < length:
                                for c in range(ch_used):
                                    ch = sv[gq, c]
                                    r = r + wv[gq, kk, c, j] * xv[i, ch, tt]
                        mag = fabs(r)
                        if mag > best_mag:
                            best_mag = mag
                            best = kk
                    hard[i, gq, best] += 1
                    soft[i, gq, best] += best_mag
    return hard_arr, soft_arr


def split_scan(x, y, idx, feats, u, int n_classes):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    feats = np.ascontiguousarray(feats, dtype=np.int64)
    u = np.ascontiguousarray(u, dtype=np.float64)

    cdef const double[:, ::1] xv = x
    cdef const long long[::1] yv = y
    cdef const long long[::1] iv = idx
    cdef const long long[::1] fv = feats
    cdef const double[::1] uv = u

    cdef Py_ssize_t n_node = iv.shape[0]
    cdef Py_ssize_t m = fv.shape[0]

    thr_arr = np.empty(m, dtype=np.float64)
    gains_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] thr = thr_arr
    cdef double[::1] gains = gains_arr

    parent_arr = np.zeros(n_classes, dtype=np.int64)
    left_arr = np.zeros(n_classes, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef long long[::1] left = left_arr

    cdef Py_ssize_t i, j, c, f, best
    cdef long long n_left, n_right, rc
    cdef double v, fmin, fmax, t, p, h_parent, h_left, h_right, gain, best_gain
    cdef double nn = <double> n_node

    best = -1
    best_gain = -2.0

    with nogil:
        for i in range(n_node):
            parent[yv[iv[i]]] += 1
        h_parent = 0.0
        for c in range(n_classes):
            if parent[c] > 0:
                p = parent[c] / nn
                h_parent = h_parent - p * log(p)

        for j in range(m):
            f = fv[j]
            fmin = xv[iv[0], f]
            fmax = fmin
            for i in range(1, n_node):
                v = xv[iv[i], f]
                if v < fmin:
                    fmin = v
                elif v > fmax:
                    fmax = v
            if not fmax > fmin:
                thr[j] = NAN
                gains[j] = -1.0
                continue
            t = fmin + uv[j] * (fmax - fmin)
            if t >= fmax:
                t = nextafter(fmax, fmin)
            thr[j] = t

            for c in range(n_classes):
                left[c] = 0
            n_left = 0
            for i in range(n_node):
                if xv[iv[i], f] <= t:
                    left[yv[iv[i]]] += 1
                    n_left += 1
            n_right = n_node - n_left

            h_left = 0.0
            h_right = 0.0
            for c in range(n_classes):
                if left[c] > 0:
                    p = left[c] / (<double> n_left)
                    h_left = h_left - p * log(p)
                rc = parent[c] - left[c]
                if rc > 0:
                    p = rc / (<double> n_right)
                    h_right = h_right - p * log(p)
            gain = h_parent - (n_left / nn) * h_left - (n_right / nn) * h_right
            gains[j] = gain
            if gain > best_gain:
                best_gain = gain
                best = j

    return (best if best >= 0 else -1), thr_arr, gains_arr
