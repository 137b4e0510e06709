# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pixel kernels.

Same call signatures and semantics as :mod:`phsar._fallback`. Every output
pixel is computed independently, so results do not depend on the number
of threads.
"""
import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport atan2, cos, fabs, sin, sqrt
from libc.stdlib cimport free, malloc

cdef int MAX_PATCH = 63

cdef double PI = 3.141592653589793
cdef double EIGEN_FLOOR = 1e-16

BACKEND = "cython"


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t hi) noexcept nogil:
    if v < 0:
        return 0
    if v > hi:
        return hi
    return v


cdef void _feature_at(const double[:, ::1] img, const double[:, ::1] phase, bint use_phase,
                      Py_ssize_t cy, Py_ssize_t cx, int p,
                      double ws, double wc, double wa, double wp,
                      double* buf, double* out) noexcept nogil:
    cdef Py_ssize_t h = img.shape[0] - 1
    cdef Py_ssize_t w = img.shape[1] - 1
    cdef int r = p // 2
    cdef int i, j
    cdef Py_ssize_t yy, xx
    cdef double gx, gy, sxx = 0.0, sxy = 0.0, syy = 0.0, psum = 0.0
    cdef double half_tr, half_diff, disc, l1, l2, s1, s2, coh, ang

    for i in range(p):
        yy = _clamp(cy - r + i, h)
        for j in range(p):
            xx = _clamp(cx - r + j, w)
            buf[i * p + j] = img[yy, xx]
            if use_phase:
                psum = psum + fabs(phase[yy, xx])

    for i in range(p):
        for j in range(p):
            if j == 0:
                gx = buf[i * p + 1] - buf[i * p]
            elif j == p - 1:
                gx = buf[i * p + j] - buf[i * p + j - 1]
            else:
                gx = (buf[i * p + j + 1] - buf[i * p + j - 1]) / 2.0
            if i == 0:
                gy = buf[p + j] - buf[j]
            elif i == p - 1:
                gy = buf[i * p + j] - buf[(i - 1) * p + j]
            else:
                gy = (buf[(i + 1) * p + j] - buf[(i - 1) * p + j]) / 2.0
            sxx = sxx + gx * gx
            sxy = sxy + gx * gy
            syy = syy + gy * gy

    half_tr = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    disc = sqrt(half_diff * half_diff + sxy * sxy)
    l1 = half_tr + disc
    l2 = half_tr - disc
    if l2 < 0.0:
        l2 = 0.0

    if l1 <= EIGEN_FLOOR:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
    else:
        s1 = sqrt(l1)
        s2 = sqrt(l2)
        coh = (s1 - s2) / (s1 + s2)
        ang = 0.5 * atan2(2.0 * sxy, sxx - syy)
        if ang < 0.0:
            ang = ang + PI
        if ang >= PI:
            ang = ang - PI
        ang = ang + 0.0
        out[0] = s1 * ws
        out[1] = coh * wc
        out[2] = cos(2.0 * ang) * wa
        out[3] = sin(2.0 * ang) * wa
    if use_phase:
        out[4] = (psum / (p * p)) / PI * wp
    else:
        out[4] = 0.0


def patch_features(const double[:, ::1] img, phase, int patch_size, weights,
                   Py_ssize_t y0, Py_ssize_t y1, Py_ssize_t x0, Py_ssize_t x1,
                   int threads=1):
    """Embedding for every centre in rows [y0, y1) x columns [x0, x1)."""
    if patch_size < 3 or patch_size % 2 == 0 or patch_size > MAX_PATCH:
        raise ValueError(f"unsupported patch size {patch_size}")
    cdef double ws = weights[0], wc = weights[1], wa = weights[2], wp = weights[3]
    cdef bint use_phase = phase is not None
    cdef const double[:, ::1] ph = phase if use_phase else img
    cdef Py_ssize_t ny = y1 - y0, nx = x1 - x0
    out_arr = np.zeros((ny * nx, 5), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t row, col
    cdef int p = patch_size
    cdef double* buf
    if ny <= 0 or nx <= 0:
        return out_arr
    with nogil:
        for row in prange(ny, num_threads=threads, schedule="static"):
            buf = <double*> malloc(p * p * sizeof(double))
            for col in range(nx):
                _feature_at(img, ph, use_phase, y0 + row, x0 + col, p,
                            ws, wc, wa, wp, buf, &out[row * nx + col, 0])
            free(buf)
    return out_arr


def assign(const double[:, ::1] features, const double[:, ::1] centroids, int threads=1):
    """Index of the nearest centroid per row; ties go to the lowest index."""
    cdef Py_ssize_t n = features.shape[0], k = centroids.shape[0], dim = features.shape[1]
    if centroids.shape[1] != dim:
        raise ValueError("feature and centroid dimensions differ")
    out_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i, q, c
    cdef double best, dist, diff
    cdef long long arg
    with nogil:
        for i in prange(n, num_threads=threads, schedule="static"):
            best = 0.0
            arg = -1
            for q in range(k):
                dist = 0.0
                for c in range(dim):
                    diff = features[i, c] - centroids[q, c]
                    dist = dist + diff * diff
                if arg < 0 or dist < best:
                    best = dist
                    arg = q
            out[i] = arg
    return out_arr


def apply_filters(const double[:, ::1] img, const long long[:, ::1] buckets,
                  const double[:, ::1] filters, int patch_size,
                  Py_ssize_t y0, Py_ssize_t x0, int threads=1):
    """Dot product of each centre's patch with the filter of its bucket."""
    cdef Py_ssize_t ny = buckets.shape[0], nx = buckets.shape[1]
    cdef int p = patch_size, r = patch_size // 2
    if filters.shape[1] != p * p:
        raise ValueError("filter length does not match patch size")
    cdef Py_ssize_t nb = filters.shape[0]
    cdef Py_ssize_t h = img.shape[0] - 1, w = img.shape[1] - 1
    out_arr = np.zeros((ny, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t row, col, cy, cx, yy, q
    cdef int i, j
    cdef double acc
    if ny > 0 and nx > 0:
        b = np.asarray(buckets)
        if b.min() < 0 or b.max() >= nb:
            raise IndexError("bucket index out of range")
    with nogil:
        for row in prange(ny, num_threads=threads, schedule="static"):
            cy = y0 + row
            for col in range(nx):
                cx = x0 + col
                q = buckets[row, col]
                acc = 0.0
                for i in range(p):
                    yy = _clamp(cy - r + i, h)
                    for j in range(p):
                        acc = acc + img[yy, _clamp(cx - r + j, w)] * filters[q, i * p + j]
                out[row, col] = acc
    return out_arr
