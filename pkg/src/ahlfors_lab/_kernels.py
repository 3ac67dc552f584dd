"""Compiled kernels for sums over the zero locus.

Every per-point reduction runs sequentially in a fixed order inside one thread, so
results are bit-identical for any thread count.  Parallelism is only across points.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

SERIES_CUTOFF = 0.25
SERIES_TERMS = 30


@nb.njit(cache=True, inline="always")
def _neumaier_add(s, comp, x):
    t = s + x
    if abs(s) >= abs(x):
        comp += (s - t) + x
    else:
        comp += (x - t) + s
    return t, comp


@nb.njit(cache=True, inline="always")
def _wrap(x, period):
    """x reduced to [-period/2, period/2]."""
    return x - period * math.floor(x / period + 0.5)


@nb.njit(cache=True)
def log_primary(w):
    """Complex log of (1 - w) exp(w + w^2/2), principal branch of log(1 - w).

    For small |w| the cancelling series -sum_{n>=3} w^n/n is used directly.
    """
    if abs(w) < SERIES_CUTOFF:
        p = w * w * w
        acc = 0j
        for n in range(3, 3 + SERIES_TERMS):
            acc += p / n
            p *= w
        return -acc
    one_minus = 1.0 - w
    if one_minus == 0:
        return complex(-math.inf, 0.0)
    return np.log(one_minus) + w + 0.5 * w * w


@nb.njit(cache=True)
def log_primary_re(w):
    if abs(w) < SERIES_CUTOFF:
        return log_primary(w).real
    one_minus = 1.0 - w
    if one_minus == 0:
        return -math.inf
    return math.log(abs(one_minus)) + w.real + 0.5 * (w * w).real


@nb.njit(parallel=True, cache=True)
def direct_log_psi(z, lam, omit_radius, out_re, out_im, out_omit):
    """log psi by direct compensated summation; factors with |z - lam| < omit_radius
    are skipped and their index reported (-1 if none)."""
    n = z.shape[0]
    for p in nb.prange(n):
        zp = z[p]
        s = 0.0
        cs = 0.0
        a = 0.0
        ca = 0.0
        omit = -1
        hit = False
        for k in range(lam.shape[0]):
            if abs(zp - lam[k]) < omit_radius:
                omit = k
                continue
            if zp == lam[k]:
                hit = True
                continue
            term = log_primary(zp / lam[k])
            s, cs = _neumaier_add(s, cs, term.real)
            a, ca = _neumaier_add(a, ca, term.imag)
        out_re[p] = -math.inf if hit else s + cs
        out_im[p] = _wrap(a + ca, 2 * math.pi)
        out_omit[p] = omit


@nb.njit(parallel=True, cache=True)
def direct_dlog_psi(z, lam, out):
    """sum z^2 / (lam^2 (z - lam)), the termwise derivative of log psi."""
    n = z.shape[0]
    for p in nb.prange(n):
        zp = z[p]
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        for k in range(lam.shape[0]):
            term = zp * zp / (lam[k] * lam[k] * (zp - lam[k]))
            sr, cr = _neumaier_add(sr, cr, term.real)
            si, ci = _neumaier_add(si, ci, term.imag)
        out[p] = complex(sr + cr, si + ci)


# ---------------------------------------------------------------------------
# box expansions: far factors as a Taylor polynomial about each box centre


@nb.njit(cache=True)
def _build_box(ix, iy, half_width, box, near_radius, lam, coef, near_idx, near_cnt, order):
    nside = int(round(2 * half_width / box))
    b = ix * nside + iy
    z0 = complex(-half_width + (ix + 0.5) * box, -half_width + (iy + 0.5) * box)
    c0 = 0.0
    cc0 = 0.0
    for k in range(order + 1):
        coef[b, k] = 0j
    cnt = 0
    for j in range(lam.shape[0]):
        d = lam[j] - z0
        if abs(d) < near_radius:
            near_idx[b, cnt] = j
            cnt += 1
            continue
        # log|1 - z0/lam| ; the exp factors live in the global polynomial part
        c0, cc0 = _neumaier_add(c0, cc0, math.log(abs(1.0 - z0 / lam[j])))
        inv = 1.0 / d
        p = inv
        for k in range(1, order + 1):
            coef[b, k] -= p / k
            p *= inv
    coef[b, 0] = complex(c0 + cc0, 0.0)
    near_cnt[b] = cnt


@nb.njit(parallel=True, cache=True)
def build_boxes(todo, half_width, box, near_radius, lam, coef, near_idx, near_cnt, order):
    nside = int(round(2 * half_width / box))
    for q in nb.prange(todo.shape[0]):
        b = todo[q]
        _build_box(b // nside, b % nside, half_width, box, near_radius, lam, coef,
                   near_idx, near_cnt, order)


@nb.njit(cache=True)
def box_index(z, half_width, box):
    nside = int(round(2 * half_width / box))
    ix = int(math.floor((z.real + half_width) / box))
    iy = int(math.floor((z.imag + half_width) / box))
    ix = min(max(ix, 0), nside - 1)
    iy = min(max(iy, 0), nside - 1)
    return ix * nside + iy


@nb.njit(parallel=True, cache=True)
def box_indices(z, half_width, box, out):
    for p in nb.prange(z.shape[0]):
        out[p] = box_index(z[p], half_width, box)


@nb.njit(cache=True)
def _eval_box_point(zp, b, half_width, box, lam, coef, near_idx, near_cnt, order, s1, s2):
    nside = int(round(2 * half_width / box))
    ix = b // nside
    iy = b % nside
    z0 = complex(-half_width + (ix + 0.5) * box, -half_width + (iy + 0.5) * box)
    dz = zp - z0
    # Horner for value and derivative of the far polynomial
    val = coef[b, order]
    der = 0j
    for k in range(order - 1, -1, -1):
        der = der * dz + val
        val = val * dz + (coef[b, k] if k > 0 else 0j)
    logabs = coef[b, 0].real + val.real
    dlog = der
    best = math.inf
    best_j = -1
    for q in range(near_cnt[b]):
        j = near_idx[b, q]
        d = zp - lam[j]
        ad = abs(d)
        if ad < best:
            best = ad
            best_j = j
        if ad == 0.0:
            logabs = -math.inf
            continue
        logabs += math.log(abs(d / lam[j]))
        dlog += 1.0 / d
    poly = zp * s1 + 0.5 * zp * zp * s2
    logabs += poly.real
    dlog += s1 + zp * s2
    return logabs, dlog, best, best_j


@nb.njit(parallel=True, cache=True)
def eval_boxes(z, boxes, half_width, box, lam, coef, near_idx, near_cnt, order, s1, s2,
               out_logabs, out_dlog, out_dist, out_idx):
    for p in nb.prange(z.shape[0]):
        la, dl, dist, j = _eval_box_point(z[p], boxes[p], half_width, box, lam, coef,
                                          near_idx, near_cnt, order, s1, s2)
        out_logabs[p] = la
        out_dlog[p] = dl
        out_dist[p] = dist
        out_idx[p] = j


# ---------------------------------------------------------------------------
# local expansions: log psi(lam + zeta) = log zeta + sum_k q_k zeta^k


@nb.njit(parallel=True, cache=True)
def local_coefficients(lam, which, order, out):
    """Taylor coefficients of log psi(lam + zeta) - log zeta about lam[which[i]]."""
    for i in nb.prange(which.shape[0]):
        m = which[i]
        l0 = lam[m]
        re0 = 0.0
        cre0 = 0.0
        im0 = 0.0
        cim0 = 0.0
        for k in range(order + 1):
            out[i, k] = 0j
        for j in range(lam.shape[0]):
            if j == m:
                continue
            lj = lam[j]
            d = lj - l0
            t = log_primary(l0 / lj)
            re0, cre0 = _neumaier_add(re0, cre0, t.real)
            im0, cim0 = _neumaier_add(im0, cim0, t.imag)
            out[i, 1] -= l0 * l0 / (lj * lj * d)
            inv = 1.0 / d
            out[i, 2] += -0.5 * l0 * (2 * lj - l0) / (lj * lj * d * d)
            p = inv * inv * inv
            for k in range(3, order + 1):
                out[i, k] -= p / k
                p *= inv
        own = np.log(-1.0 / l0) + 1.5
        out[i, 0] = complex(re0 + cre0 + own.real,
                            _wrap(im0 + cim0 + own.imag, 2 * math.pi))
        out[i, 1] += 2.0 / l0
        out[i, 2] += 0.5 / (l0 * l0)


@nb.njit(cache=True)
def local_eval(q, zeta):
    """Returns (Q(zeta), zeta Q'(zeta)) for coefficient row q."""
    order = q.shape[0] - 1
    val = q[order]
    der = 0j
    for k in range(order - 1, -1, -1):
        der = der * zeta + val
        val = val * zeta + q[k]
    return val, der * zeta
