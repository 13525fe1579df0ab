"""Pure-Python/NumPy versions of the compiled kernels in ``_core.pyx``.

Used when the extension is not built, or when ``AUREC_PURE_PYTHON=1``.
"""

import numpy as np


def _sample(img, x, y):
    h, w = img.shape
    x = np.clip(x, 0.0, w - 1)
    y = np.clip(y, 0.0, h - 1)
    fx = np.floor(x)
    fy = np.floor(y)
    x0 = fx.astype(np.intp)
    y0 = fy.astype(np.intp)
    ax = x - fx
    ay = y - fy
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    return ((1.0 - ay) * ((1.0 - ax) * img[y0, x0] + ax * img[y0, x1])
            + ay * ((1.0 - ax) * img[y1, x0] + ax * img[y1, x1]))


def lk_track_level(prev, nxt, grad_x, grad_y, px, py, gx, gy, half, max_iter, eps):
    offs = np.arange(-half, half + 1, dtype=float)
    oy, ox = np.meshgrid(offs, offs, indexing="ij")
    ox = ox.ravel()
    oy = oy.ravel()
    tpl = _sample(prev, px + ox, py + oy)
    ix = _sample(grad_x, px + ox, py + oy)
    iy = _sample(grad_y, px + ox, py + oy)
    gxx = float(np.dot(ix, ix))
    gxy = float(np.dot(ix, iy))
    gyy = float(np.dot(iy, iy))
    det = gxx * gyy - gxy * gxy
    tr = gxx + gyy
    min_eig = 0.5 * tr - np.sqrt(abs(0.25 * tr * tr - det))
    vx = vy = 0.0
    if det > 1e-300:
        for _ in range(max_iter):
            diff = tpl - _sample(nxt, px + ox + gx + vx, py + oy + gy + vy)
            bx = float(np.dot(diff, ix))
            by = float(np.dot(diff, iy))
            ex = (gyy * bx - gxy * by) / det
            ey = (gxx * by - gxy * bx) / det
            vx += ex
            vy += ey
            if ex * ex + ey * ey < eps * eps:
                break
    diff = tpl - _sample(nxt, px + ox + gx + vx, py + oy + gy + vy)
    return vx, vy, float(min_eig), float(np.dot(diff, diff))


def viterbi(log_init, log_trans, log_emit):
    t_len, n = log_emit.shape
    delta = log_init + log_emit[0]
    back = np.zeros((t_len, n), dtype=np.intp)
    for f in range(1, t_len):
        cand = delta[:, None] + log_trans
        # argmax returns the first maximum: ties go to the lowest index
        back[f] = np.argmax(cand, axis=0)
        delta = cand[back[f], np.arange(n)] + log_emit[f]
    path = np.zeros(t_len, dtype=np.intp)
    path[-1] = int(np.argmax(delta))
    for f in range(t_len - 1, 0, -1):
        path[f - 1] = back[f, path[f]]
    return float(delta[path[-1]]), path


def jacobi_eigh(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    sweep = 0
    while sweep < max_sweeps:
        off = np.sqrt(np.sum(a * a) - np.sum(np.diag(a) ** 2))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta or 1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                app = a[p, p] - t * apq
                aqq = a[q, q] + t * apq
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p - s * (col_q + tau * col_p)
                a[:, q] = col_q + s * (col_p - tau * col_q)
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app
                a[q, q] = aqq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp - s * (vq + tau * vp)
                v[:, q] = vq + s * (vp - tau * vq)
        sweep += 1
    return np.diag(a).copy(), v, sweep
