# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Same signatures and semantics as ``_pykernels``."""

from libc.math cimport floor, sqrt, fabs, INFINITY

import numpy as np


cdef inline double _sample(const double[:, ::1] img, double x, double y) noexcept nogil:
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef double fx, fy, ax, ay
    cdef Py_ssize_t x0, y0, x1, y1
    if x < 0.0:
        x = 0.0
    elif x > w - 1:
        x = w - 1
    if y < 0.0:
        y = 0.0
    elif y > h - 1:
        y = h - 1
    fx = floor(x)
    fy = floor(y)
    x0 = <Py_ssize_t>fx
    y0 = <Py_ssize_t>fy
    ax = x - fx
    ay = y - fy
    x1 = x0 + 1 if x0 + 1 < w else x0
    y1 = y0 + 1 if y0 + 1 < h else y0
    return ((1.0 - ay) * ((1.0 - ax) * img[y0, x0] + ax * img[y0, x1])
            + ay * ((1.0 - ax) * img[y1, x0] + ax * img[y1, x1]))


def lk_track_level(const double[:, ::1] prev, const double[:, ::1] nxt,
                   const double[:, ::1] grad_x, const double[:, ::1] grad_y,
                   double px, double py, double gx, double gy,
                   int half, int max_iter, double eps):
    """Iterative Lucas-Kanade refinement at one pyramid level.

    Returns ``(vx, vy, min_eig, residual)`` where ``(vx, vy)`` is the flow
    increment on top of the guess ``(gx, gy)``.
    """
    cdef int n = (2 * half + 1) * (2 * half + 1)
    cdef double[::1] tpl = np.empty(n)
    cdef double[::1] ix = np.empty(n)
    cdef double[::1] iy = np.empty(n)
    cdef double gxx = 0.0, gxy = 0.0, gyy = 0.0
    cdef double bx, by, det, tr, disc, min_eig, ex, ey, diff, vx = 0.0, vy = 0.0
    cdef double residual = 0.0
    cdef int i, j, k, it
    with nogil:
        k = 0
        for j in range(-half, half + 1):
            for i in range(-half, half + 1):
                tpl[k] = _sample(prev, px + i, py + j)
                ix[k] = _sample(grad_x, px + i, py + j)
                iy[k] = _sample(grad_y, px + i, py + j)
                gxx += ix[k] * ix[k]
                gxy += ix[k] * iy[k]
                gyy += iy[k] * iy[k]
                k += 1
        det = gxx * gyy - gxy * gxy
        tr = gxx + gyy
        disc = sqrt(fabs(0.25 * tr * tr - det))
        min_eig = 0.5 * tr - disc
        if det > 1e-300:
            for it in range(max_iter):
                bx = 0.0
                by = 0.0
                k = 0
                for j in range(-half, half + 1):
                    for i in range(-half, half + 1):
                        diff = tpl[k] - _sample(nxt, px + i + gx + vx, py + j + gy + vy)
                        bx += diff * ix[k]
                        by += diff * iy[k]
                        k += 1
                ex = (gyy * bx - gxy * by) / det
                ey = (gxx * by - gxy * bx) / det
                vx += ex
                vy += ey
                if ex * ex + ey * ey < eps * eps:
                    break
        k = 0
        for j in range(-half, half + 1):
            for i in range(-half, half + 1):
                diff = tpl[k] - _sample(nxt, px + i + gx + vx, py + j + gy + vy)
                residual += diff * diff
                k += 1
    return vx, vy, min_eig, residual


def viterbi(const double[::1] log_init, const double[:, ::1] log_trans,
            const double[:, ::1] log_emit):
    """Max-product path score in the log domain.

    Returns ``(score, path)``; ties go to the lowest state index.
    """
    cdef Py_ssize_t t_len = log_emit.shape[0]
    cdef Py_ssize_t n = log_emit.shape[1]
    cdef double[:, ::1] delta = np.empty((t_len, n))
    cdef Py_ssize_t[:, ::1] back = np.zeros((t_len, n), dtype=np.intp)
    path_arr = np.zeros(t_len, dtype=np.intp)
    cdef Py_ssize_t[::1] path = path_arr
    cdef Py_ssize_t f, i, j, best_i
    cdef double best, cand, score
    with nogil:
        for j in range(n):
            delta[0, j] = log_init[j] + log_emit[0, j]
        for f in range(1, t_len):
            for j in range(n):
                best = -INFINITY
                best_i = 0
                for i in range(n):
                    cand = delta[f - 1, i] + log_trans[i, j]
                    if cand > best:
                        best = cand
                        best_i = i
                delta[f, j] = best + log_emit[f, j]
                back[f, j] = best_i
        score = -INFINITY
        best_i = 0
        for j in range(n):
            if delta[t_len - 1, j] > score:
                score = delta[t_len - 1, j]
                best_i = j
        path[t_len - 1] = best_i
        for f in range(t_len - 1, 0, -1):
            path[f - 1] = back[f, path[f]]
    return score, path_arr


def jacobi_eigh(double[:, ::1] a, double tol, int max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix, in place.

    Returns ``(diagonal, eigenvectors, sweeps)``; eigenvectors are columns.
    """
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r
    cdef double off, theta, t, c, s, tau, apq, arp, arq, vrp, vrq
    cdef int sweep = 0
    with nogil:
        while sweep < max_sweeps:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += 2.0 * a[p, q] * a[p, q]
            if sqrt(off) <= tol:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    if theta >= 0.0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    a[p, p] = a[p, p] - t * apq
                    a[q, q] = a[q, q] + t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        if r != p and r != q:
                            arp = a[r, p]
                            arq = a[r, q]
                            a[r, p] = arp - s * (arq + tau * arp)
                            a[p, r] = a[r, p]
                            a[r, q] = arq + s * (arp - tau * arq)
                            a[q, r] = a[r, q]
                    for r in range(n):
                        vrp = v[r, p]
                        vrq = v[r, q]
                        v[r, p] = vrp - s * (vrq + tau * vrp)
                        v[r, q] = vrq + s * (vrp - tau * vrq)
            sweep += 1
    diag = np.array([a[p, p] for p in range(n)])
    return diag, v_arr, sweep
