"""Integration of the pulled-back density over discs and circles.

Disc integrals split the domain with a smooth partition of unity.  Around every zero
lam sits a bump chi_lam (1 on D(lam, rho/2), 0 outside D(lam, rho), rho = the
refinement radius).  Then

* (1 - sum chi) * integrand is smooth and goes to a midpoint polar grid;
* chi_lam * integrand is integrated in log-polar coordinates t = log|z - lam| with
  Gauss-Legendre panels, each ray clipped exactly to the domain;
* the tiny disc D(lam, rho_in) on which f sweeps the whole fiber is never sampled:
  its mass is the Green flux (1/4 pi) of the normal derivative of log(1 + e^{2v})
  around its boundary circle, split between regions by the fiber area formula.

rho_in is chosen so that v is about log M + margin on its boundary, which puts the
fiber transition (radius ~ e^{-h}, h up to thousands) well inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ._kernels import local_eval
from .surface_geometry import SurfaceModel, scaled_density, sigmoid_parts

# panel edges measured down from the outer end of a ray, in units of t = log d
RAY_EDGES = np.array([0.0, 0.35, 0.7, 1.2, 2.0, 3.0, 4.5, 7.0, 11.0, 17.0, 25.0])
SPIKE_HALF_WIDTH = 12
INNER_MARGIN = 20.0
UNRESOLVED_T = 40.0


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar grid of about n_radial x n_angular nodes (two-point Gauss panels in the
    radius, equispaced angles) plus per-zero refinement:
    ``local_angular`` rays with ``local_order``-point Gauss-Legendre panels inside
    D(lam, refinement_radius)."""

    n_radial: int
    n_angular: int
    refinement_radius: float = 1.0
    local_angular: int = 48
    local_order: int = 8

    def __post_init__(self):
        if min(self.n_radial, self.n_angular, self.local_angular, self.local_order) < 1:
            raise ValueError("grid sizes must be positive")
        if not 0 < self.refinement_radius <= 1.2:
            raise ValueError("refinement_radius must lie in (0, 1.2]")

    @classmethod
    def for_radius(cls, r: float, spacing: float = 0.15, **kw) -> "QuadratureGrid":
        n_r = max(4, int(math.ceil(r / spacing)))
        n_t = max(16, 4 * int(math.ceil(2 * math.pi * r / spacing / 4)))
        return cls(n_r, n_t, **kw)

    def coarsened(self) -> "QuadratureGrid":
        return QuadratureGrid(max(2, self.n_radial // 2), max(8, self.n_angular // 2),
                              self.refinement_radius, max(8, self.local_angular // 2),
                              max(4, self.local_order - 2))

    def node_count(self, n_zeros: int) -> int:
        panels = len(RAY_EDGES) + 1
        return self.n_radial * self.n_angular + n_zeros * self.local_angular * panels * self.local_order


@dataclass(frozen=True)
class RegionSpec:
    """U_inf = {v > log M}; tube l = {dist([z], [y_l]) < eps_t} minus U_inf; remainder."""

    log_m: float = math.inf
    eps_t: float = 0.0
    marked: tuple[complex, ...] = ()

    @property
    def n_labels(self) -> int:
        return len(self.marked) + 2


NO_REGIONS = RegionSpec()


@dataclass(frozen=True)
class DiscIntegral:
    masses: np.ndarray
    estimated_error: float
    flagged: bool
    inner_flags: int
    nodes: int

    @property
    def total(self) -> float:
        return float(math.fsum(self.masses))


@dataclass(frozen=True)
class AreaReport:
    area: float
    estimated_error: float
    flagged: bool = False


# ---------------------------------------------------------------------------
# compiled pieces


@nb.njit(cache=True, inline="always")
def bump(x):
    """C-infinity cutoff: 1 for x <= 1/2, 0 for x >= 1."""
    if x <= 0.5:
        return 1.0
    if x >= 1.0:
        return 0.0
    y = 2.0 * (1.0 - x)
    a = math.exp(-1.0 / y)
    b = math.exp(-1.0 / (1.0 - y))
    return a / (a + b)


@nb.njit(cache=True, inline="always")
def _weight(z, wkind, wr):
    if wkind == 0:
        return 1.0
    return math.log(wr / max(abs(z), 1.0))


@nb.njit(cache=True, inline="always")
def _torus_dist(z, y):
    d = z - y
    dx = d.real - math.floor(d.real + 0.5)
    dy = d.imag - math.floor(d.imag + 0.5)
    return math.sqrt(dx * dx + dy * dy)


@nb.njit(cache=True, inline="always")
def _class_label(z, eps_t, marked):
    for l in range(marked.shape[0]):
        if _torus_dist(z, marked[l]) < eps_t:
            return l + 1
    return marked.shape[0] + 1


@nb.njit(cache=True, inline="always")
def _label(z, v, log_m, eps_t, marked):
    if v > log_m:
        return 0
    return _class_label(z, eps_t, marked)


@nb.njit(parallel=True, cache=True)
def global_values(z, logabs, dlog, dist, wnode, rho_loc, m_alpha, eps1, log_m, eps_t,
                  marked, wkind, wr, out_val, out_lab):
    nlab = marked.shape[0] + 2
    for p in nb.prange(z.shape[0]):
        chi = bump(dist[p] / rho_loc)
        if chi >= 1.0:
            out_val[p] = 0.0
            out_lab[p] = nlab - 1
            continue
        zp = z[p]
        v = logabs[p] + m_alpha * (zp.real * zp.real + zp.imag * zp.imag)
        dv = 0.5 * dlog[p] + m_alpha * np.conj(zp)
        dens = scaled_density(v, dv.real * dv.real + dv.imag * dv.imag, 1.0, m_alpha, eps1)
        out_val[p] = (1.0 - chi) * _weight(zp, wkind, wr) * dens * wnode[p]
        out_lab[p] = _label(zp, v, log_m, eps_t, marked)


@nb.njit(cache=True)
def _ray_edges(t_a, t_b, spike_t, edges):
    buf = np.empty(edges.shape[0] + 2 * SPIKE_HALF_WIDTH + 3)
    n = 0
    for e in edges:
        t = t_b - e
        if t > t_a:
            buf[n] = t
            n += 1
    if spike_t - SPIKE_HALF_WIDTH < t_b and spike_t + SPIKE_HALF_WIDTH > t_a:
        for j in range(-SPIKE_HALF_WIDTH, SPIKE_HALF_WIDTH + 1):
            t = spike_t + j
            if t_a < t < t_b:
                buf[n] = t
                n += 1
    buf[n] = t_a
    n += 1
    buf[n] = t_b
    n += 1
    out = np.sort(buf[:n])
    keep = np.ones(n, dtype=np.bool_)
    for k in range(1, n):
        if out[k] - out[k - 1] < 1e-12:
            keep[k] = False
    return out[keep]


@nb.njit(parallel=True, cache=True)
def local_values(lam_sel, qrows, center, radius, rho_loc, t_in_arr, spike_arr, n_theta,
                 gl_x, gl_w, n_inner, m_alpha, eps1, log_m, eps_t, marked, wkind, wr,
                 edges, out, flags):
    """Per zero: bump-weighted log-polar integral plus the inner-disc flux mass."""
    nlab = marked.shape[0] + 2
    dtheta = 2.0 * math.pi / n_theta
    s_m, _ = sigmoid_parts(log_m) if log_m < math.inf else (1.0, 0.0)
    for ii in nb.prange(lam_sel.shape[0]):
        lam = lam_sel[ii]
        q = qrows[ii]
        p = lam - center
        ap = abs(p)
        acc = np.zeros(nlab)
        spike_t = spike_arr[ii]
        t_in = t_in_arr[ii]
        rho_in = math.exp(t_in)
        inner_inside = ap + rho_in < radius
        inner_outside = ap - rho_in >= radius
        flag = 0
        if not inner_inside and not inner_outside:
            # the fiber disc straddles the boundary: resolve the transition on rays
            t_in = spike_t - UNRESOLVED_T
            flag = 2
        for k in range(n_theta):
            th = (k + 0.5) * dtheta
            u = complex(math.cos(th), math.sin(th))
            b = (p * np.conj(u)).real
            cc = ap * ap - radius * radius
            disc = b * b - cc
            if disc <= 0.0:
                continue
            sq = math.sqrt(disc)
            d1 = -b - sq
            d2 = -b + sq
            if d2 <= 0.0:
                continue
            dhi = min(d2, rho_loc)
            t_a = t_in
            if d1 > 0.0:
                t_a = max(t_a, math.log(d1))
            t_b = math.log(dhi)
            if t_a >= t_b:
                continue
            e = _ray_edges(t_a, t_b, spike_t, edges)
            for j in range(e.shape[0] - 1):
                lo = e[j]
                hi = e[j + 1]
                mid = 0.5 * (lo + hi)
                half = 0.5 * (hi - lo)
                for g in range(gl_x.shape[0]):
                    t = mid + half * gl_x[g]
                    d = math.exp(t)
                    zeta = d * u
                    z = lam + zeta
                    qv, zq = local_eval(q, zeta)
                    v = t + qv.real + m_alpha * (z.real * z.real + z.imag * z.imag)
                    zdv = 0.5 * (1.0 + zq) + m_alpha * zeta * np.conj(z)
                    val = scaled_density(v, zdv.real * zdv.real + zdv.imag * zdv.imag,
                                         d * d, m_alpha, eps1)
                    wgt = half * gl_w[g] * dtheta * bump(d / rho_loc) * _weight(z, wkind, wr)
                    acc[_label(z, v, log_m, eps_t, marked)] += wgt * val
        if flag == 0 and inner_inside:
            flux = 0.0
            vmin = math.inf
            vmax = -math.inf
            for k in range(n_inner):
                th = (k + 0.5) * 2.0 * math.pi / n_inner
                u = complex(math.cos(th), math.sin(th))
                zeta = rho_in * u
                z = lam + zeta
                qv, zq = local_eval(q, zeta)
                v = t_in + qv.real + m_alpha * (z.real * z.real + z.imag * z.imag)
                vmin = min(vmin, v)
                vmax = max(vmax, v)
                s, _ = sigmoid_parts(v)
                flux += s * ((1.0 + zq).real + 2.0 * m_alpha * (zeta * np.conj(z)).real)
            flux /= n_inner
            g0 = _weight(lam, wkind, wr)
            base = rho_in * rho_in * g0
            lab = _class_label(lam, eps_t, marked)
            if vmax <= log_m:
                acc[lab] += base + eps1 * g0 * flux
            else:
                # injective sweep of the fiber: {|w| < M} carries M^2 / (1 + M^2)
                low = min(s_m, flux)
                acc[lab] += eps1 * g0 * low
                acc[0] += base + eps1 * g0 * (flux - low)
                if vmin <= log_m:
                    flag = 1
        flags[ii] = flag
        for l in range(nlab):
            out[ii, l] = acc[l]


# ---------------------------------------------------------------------------
# driver


def _inner_radii(model: SurfaceModel, idx: np.ndarray, regions: RegionSpec, rho_loc: float):
    f = model.field
    h = f.local[idx, 0].real + model.m_alpha * np.abs(f.lam[idx]) ** 2
    target = (regions.log_m if math.isfinite(regions.log_m) else 20.0) + INNER_MARGIN
    t_in = np.minimum(target - h, math.log(0.1 * rho_loc))
    return t_in, -h


def _integrate_once(model: SurfaceModel, center: complex, radius: float,
                    grid: QuadratureGrid, wkind: int, wr: float, regions: RegionSpec,
                    chunk: int = 1 << 18):
    nlab = regions.n_labels
    marked = np.asarray(regions.marked, dtype=np.complex128)
    rho_loc = grid.refinement_radius
    eps_t = float(regions.eps_t)
    masses = np.zeros(nlab)
    f = model.field

    # smooth remainder on the polar grid; the log weight has a kink at |z| = 1, which
    # becomes a cell edge
    d_th = 2 * math.pi / grid.n_angular
    th = (np.arange(grid.n_angular) + 0.5) * d_th
    ring = np.exp(1j * th)
    breaks = [0.0, radius]
    if wkind == 1 and center == 0 and 1.0 < radius:
        breaks = [0.0, 1.0, radius]
    h = radius / grid.n_radial
    rho_all, drho_all = [], []
    g = 0.5 / math.sqrt(3.0)
    for a, b in zip(breaks, breaks[1:]):
        # two-point Gauss panels of width ~2h: as many nodes as midpoints, fourth order
        n = max(1, int(math.ceil((b - a) / (2 * h) - 1e-9)))
        w = (b - a) / n
        mid = a + (np.arange(n) + 0.5) * w
        rho_all.append(np.stack([mid - g * w, mid + g * w], axis=1).ravel())
        drho_all.append(np.full(2 * n, 0.5 * w))
    rho_all, drho_all = np.concatenate(rho_all), np.concatenate(drho_all)
    per_chunk = max(1, chunk // grid.n_angular)
    partials = []
    for j0 in range(0, len(rho_all), per_chunk):
        rho = rho_all[j0:j0 + per_chunk]
        z = (center + rho[:, None] * ring[None, :]).ravel()
        wnode = np.repeat(rho * drho_all[j0:j0 + per_chunk] * d_th, grid.n_angular)
        logabs, dlog, dist, _ = f.evaluate(z)
        val = np.empty(len(z))
        lab = np.empty(len(z), dtype=np.int64)
        global_values(z, logabs, dlog, dist, wnode, rho_loc, model.m_alpha, model.eps1,
                      regions.log_m, eps_t, marked, wkind, wr, val, lab)
        partials.append(np.bincount(lab, weights=val, minlength=nlab))
    for part in partials:
        masses += part

    # refinement around zeros whose bump meets the domain
    lam = f.lam
    flags_total = 0
    n_local = 0
    if len(lam):
        idx = np.nonzero(np.abs(lam - center) < radius + rho_loc)[0]
        if len(idx):
            t_in, spike = _inner_radii(model, idx, regions, rho_loc)
            gl_x, gl_w = np.polynomial.legendre.leggauss(grid.local_order)
            out = np.zeros((len(idx), nlab))
            flags = np.zeros(len(idx), dtype=np.int64)
            local_values(np.ascontiguousarray(lam[idx]), np.ascontiguousarray(f.local[idx]),
                         complex(center), float(radius), rho_loc, t_in, spike,
                         grid.local_angular, gl_x, gl_w, 64, model.m_alpha, model.eps1,
                         regions.log_m, eps_t, marked, wkind, wr, RAY_EDGES, out, flags)
            masses += out.sum(axis=0)
            flags_total = int(np.count_nonzero(flags == 1))
            n_local = len(idx)
    return masses, flags_total, grid.node_count(n_local)


def integrate_disc(model: SurfaceModel, center: complex, radius: float,
                   grid: QuadratureGrid, weight: tuple | None = None,
                   regions: RegionSpec = NO_REGIONS, estimate_error: bool = True) -> DiscIntegral:
    """Mass of f(D(center, radius)) per region, optionally with the weight
    log(r / max(|z|, 1)) (``weight=("log", r)``)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    wkind, wr = (0, 1.0) if weight is None else (1, float(weight[1]))
    masses, flags, nodes = _integrate_once(model, center, radius, grid, wkind, wr, regions)
    err = 0.0
    if estimate_error:
        coarse, _, n2 = _integrate_once(model, center, radius, grid.coarsened(), wkind, wr,
                                        regions)
        err = float(abs(math.fsum(masses) - math.fsum(coarse)))
        err = max(err, float(np.max(np.abs(masses - coarse))))
        nodes += n2
    total = math.fsum(masses)
    flagged = bool(total > 0 and err > 0.05 * total)
    return DiscIntegral(masses, err, flagged, flags, nodes)


# ---------------------------------------------------------------------------
# circles


def circle_nodes(center: complex, radius: float, lam: np.ndarray, arc: float = 0.5,
                 order: int = 12, near: float = 1.5, grade_min: float = 1e-14):
    """Composite Gauss-Legendre rule on [0, 2 pi) with panels graded geometrically
    toward the closest point of every zero within ``near`` of the circle."""
    n_uniform = max(8, int(math.ceil(2 * math.pi * radius / arc)))
    breaks = list(np.linspace(0.0, 2 * math.pi, n_uniform + 1))
    if len(lam):
        p = lam - center
        gap = np.abs(np.abs(p) - radius)
        for k in np.nonzero(gap < near)[0]:
            th0 = float(np.angle(p[k])) % (2 * math.pi)
            scale = max(gap[k], grade_min * max(radius, 1.0)) / radius
            step = scale
            width = 2 * math.pi / n_uniform
            while step < width:
                breaks.extend([(th0 - step) % (2 * math.pi), (th0 + step) % (2 * math.pi)])
                step *= 2.0
            breaks.append(th0)
    b = np.unique(np.asarray(breaks))
    b = b[(b >= 0) & (b <= 2 * math.pi)]
    if b[0] > 0:
        b = np.concatenate([[0.0], b])
    if b[-1] < 2 * math.pi:
        b = np.concatenate([b, [2 * math.pi]])
    b = b[np.concatenate([[True], np.diff(b) > 1e-15])]
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = b[:-1], b[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return theta, weights


def circle_mean(fn, center: complex, radius: float, lam: np.ndarray, order: int = 12,
                arc: float = 0.5) -> tuple[float, float]:
    """(1/2 pi) int fn(z) d theta and a gap estimate against a lower-order rule."""
    th, w = circle_nodes(center, radius, lam, arc=arc, order=order)
    val = float(np.dot(w, fn(center + radius * np.exp(1j * th)))) / (2 * math.pi)
    th2, w2 = circle_nodes(center, radius, lam, arc=arc, order=max(4, order // 2))
    val2 = float(np.dot(w2, fn(center + radius * np.exp(1j * th2)))) / (2 * math.pi)
    return val, abs(val - val2)
