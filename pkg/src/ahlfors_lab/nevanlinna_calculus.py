"""Areas, order functions and Jensen boundary integrals of f = [psi s_m : 1].

Every fiber quantity has two routes: quadrature of the pulled-back density (through
``quadrature``), and a boundary integral of L = log(1 + e^{2v}), since
dd^c L is the fiber part of the density.  The boundary routes are cheap and exact up
to circle quadrature, and serve as the cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import AreaReport, QuadratureGrid, circle_mean, integrate_disc
from .surface_geometry import SurfaceModel, fast_density

DEFAULT_SPACING = 0.15
LOG2 = math.log(2.0)


class CircleError(ValueError):
    pass


def default_grid(r: float, grid: QuadratureGrid | None = None,
                 spacing: float = DEFAULT_SPACING) -> QuadratureGrid:
    if grid is not None:
        return grid
    return QuadratureGrid.for_radius(r, spacing)


def nudge_radius(r: float, lam: np.ndarray, center: complex = 0j, tol: float = 1e-9) -> float:
    """r moved outward by 1e-6 r while the circle passes within tol * r of a zero."""
    if len(lam) == 0:
        return r
    d = np.abs(lam - center)
    while np.min(np.abs(d - r)) < tol * r:
        r += 1e-6 * r
    return r


# ---------------------------------------------------------------------------
# potentials on circles


def fiber_potential(z: np.ndarray, model: SurfaceModel) -> np.ndarray:
    """L = log(1 + e^{2v}); its dd^c is the fiber density."""
    la, _, _, _ = model.field.evaluate(z)
    v = la + model.m_alpha * np.abs(z) ** 2
    return np.logaddexp(0.0, 2.0 * v)


def local_fiber_potential(i: int, zeta: np.ndarray, model: SurfaceModel) -> np.ndarray:
    """L at lam_i + zeta through the local expansion (exact for |zeta| far below 1e-8)."""
    f = model.field
    lam = f.lam[i]
    q, _ = f.local_log(i, zeta)
    with np.errstate(divide="ignore"):
        v = np.log(np.abs(zeta)) + q.real + model.m_alpha * np.abs(lam + zeta) ** 2
    return np.logaddexp(0.0, 2.0 * v)


def _mean(fn, center, radius, model):
    return circle_mean(fn, center, radius, model.field.lam)


def circle_mean_log_modulus(center: complex, radius: float, which: str, model: SurfaceModel,
                            lam: complex | None = None) -> float:
    """(1/2 pi) int log|g|(center + radius e^{i theta}) d theta for g = psi,
    g = 1 - z/lam (``psi_factor``) or g = ||s_m|| (``section``)."""
    if radius <= 0:
        raise CircleError("radius must be positive")
    if which == "psi":
        lam_all = model.field.lam
        if len(lam_all) and np.min(np.abs(np.abs(lam_all - center) - radius)) == 0:
            raise CircleError("circle passes through the locus")
        fn = lambda z: model.field.evaluate(z)[0]
    elif which == "psi_factor":
        if lam is None:
            raise CircleError("psi_factor needs the zero lam")
        fn = lambda z: np.log(np.abs(1.0 - z / lam))
    elif which == "section":
        fn = lambda z: model.m_alpha * np.abs(z) ** 2
    else:
        raise CircleError(f"unknown circle integrand {which!r}")
    th = None if which != "psi_factor" else np.array([lam])
    val, _ = circle_mean(fn, center, radius, model.field.lam if th is None else th)
    return val


def two_circle_factor_constant(lam: complex, eps: float, model: SurfaceModel) -> float:
    """-mean_{2 eps} + mean_{eps} of log|1 - z/lam| around lam; equals -log 2."""
    return (-circle_mean_log_modulus(lam, 2 * eps, "psi_factor", model, lam)
            + circle_mean_log_modulus(lam, eps, "psi_factor", model, lam))


# ---------------------------------------------------------------------------
# areas and order functions


def disc_area(r: float, model: SurfaceModel, grid: QuadratureGrid | None = None,
              center: complex = 0j) -> AreaReport:
    """Mass of f_*[D(center, r)] with multiplicity."""
    if r <= 0:
        raise ValueError("radius must be positive")
    res = integrate_disc(model, center, r, default_grid(r, grid))
    return AreaReport(res.total, res.estimated_error, res.flagged)


def flux_disc_area(r: float, model: SurfaceModel, center: complex = 0j) -> AreaReport:
    """Same mass by Green's formula: r^2 + eps1 (1/4 pi) int dL/dn ds."""
    r = nudge_radius(r, model.field.lam, center)
    ma = model.m_alpha

    def fn(z):
        la, dl, _, _ = model.field.evaluate(z)
        v = la + ma * np.abs(z) ** 2
        s = 0.5 * (1.0 + np.tanh(v))
        return s * ((z - center) * (dl + 2 * ma * np.conj(z))).real

    val, err = _mean(fn, center, r, model)
    return AreaReport(r * r + model.eps1 * val, model.eps1 * err)


def base_order(r: float) -> float:
    """Order function of the base form alone: int_1^r t dt = (r^2 - 1) / 2."""
    return (r * r - 1.0) / 2.0


def order_report(r: float, model: SurfaceModel, grid: QuadratureGrid | None = None) -> AreaReport:
    if r < 1:
        raise ValueError("order function needs r >= 1")
    if r == 1:
        return AreaReport(0.0, 0.0)
    res = integrate_disc(model, 0j, r, default_grid(r, grid), weight=("log", r))
    return AreaReport(res.total, res.estimated_error, res.flagged)


def order_function(r: float, model: SurfaceModel, grid: QuadratureGrid | None = None) -> float:
    """T(r) = int_1^r dt/t area f(D_t), as one integral with weight log(r / max(|z|, 1))."""
    return order_report(r, model, grid).area


def jensen_report(r: float, model: SurfaceModel) -> AreaReport:
    if r < 1:
        raise ValueError("jensen_fiber_T needs r >= 1")
    r = nudge_radius(r, model.field.lam)
    outer, e1 = _mean(lambda z: fiber_potential(z, model), 0j, r, model)
    inner, e2 = _mean(lambda z: fiber_potential(z, model), 0j, 1.0, model)
    val = -0.5 * outer + 0.5 * inner
    err = 0.5 * (e1 + e2)
    return AreaReport(val, err, bool(err > 1e-6 * max(1.0, abs(val))))


def jensen_fiber_T(r: float, model: SurfaceModel) -> float:
    """-(1/4 pi) int L(r e^{it}) dt + (1/4 pi) int L(e^{it}) dt, i.e. the order
    function of the (negative) curvature form."""
    return jensen_report(r, model).area


def jensen_order(r: float, model: SurfaceModel) -> float:
    """Order function through the boundary route: base part - eps1 * jensen_fiber_T."""
    return base_order(r) - model.eps1 * jensen_fiber_T(r, model)


def order_by_t_grid(r: float, model: SurfaceModel, n: int = 64) -> float:
    """int_1^r A(t) dt / t with Gauss-Legendre nodes in log t and flux-route areas."""
    if r <= 1:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * math.log(r)
    t = np.exp(half * (x + 1.0))
    areas = np.array([flux_disc_area(float(tt), model).area for tt in t])
    return float(half * np.dot(w, areas))


def ring_mean_log_psi(r: float, model: SurfaceModel) -> tuple[float, float]:
    """Circle mean of log|psi| over |z| = r and its Jensen-formula value
    sum_{|lam| < r} log(r / |lam|)."""
    r = nudge_radius(r, model.field.lam)
    val, _ = _mean(lambda z: model.field.evaluate(z)[0], 0j, r, model)
    lam = model.field.lam
    inside = np.abs(lam[np.abs(lam) < r])
    return val, math.fsum(np.log(r / inside))


# ---------------------------------------------------------------------------
# small discs around zeros


def locus_index(model: SurfaceModel, lam: complex) -> int:
    d = np.abs(model.field.lam - lam)
    i = int(np.argmin(d))
    if d[i] > 1e-9:
        raise ValueError(f"{lam} is not a locus point")
    return i


def small_disc_area(i: int, eps: float, model: SurfaceModel,
                    grid: QuadratureGrid | None = None) -> AreaReport:
    """Mass of f_*[D(lam_i, eps)], eps < 1/2."""
    if not 0 < eps < 0.5:
        raise ValueError("small discs need 0 < eps < 1/2")
    lam = model.field.lam[i]
    res = integrate_disc(model, lam, eps, default_grid(eps, grid, spacing=min(0.02, eps / 4)))
    return AreaReport(res.total, res.estimated_error, res.flagged)


def two_circle_fiber(i: int, a: float, model: SurfaceModel) -> float:
    """int_a^{2a} dt/t (fiber mass of D(lam_i, t)) = (mean_{2a} L - mean_a L) / 2."""
    th, w = np.polynomial.legendre.leggauss(64)
    theta = np.pi * (th + 1.0)
    wt = np.pi * w / (2 * np.pi)

    def mean(rad):
        return float(np.dot(wt, local_fiber_potential(i, rad * np.exp(1j * theta), model)))

    return 0.5 * (mean(2 * a) - mean(a))


@dataclass(frozen=True)
class SmallDiscWindow:
    eps: float
    area: float
    lower: float
    upper: float
    o_upper: float
    o_lower: float
    core: float

    @property
    def inside(self) -> bool:
        return self.lower <= self.area <= self.upper

    @property
    def o_ratio(self) -> float:
        """Largest fitted o(1) relative to the log 2 core."""
        return max(abs(self.o_upper), abs(self.o_lower)) / LOG2


def small_disc_window(i: int, eps: float, model: SurfaceModel,
                      grid: QuadratureGrid | None = None) -> SmallDiscWindow:
    """The window
        (1/log 2)(3 eps^2/8 + eps1 (3 m alpha eps^2/4 + log 2 + o_lo))
          <= area D(lam, eps) <=
        (1/log 2)(3 eps^2/2 + eps1 (3 m alpha eps^2 + log 2 + o_hi)),
    with o_hi, o_lo read off the two-circle fiber integrals over [eps, 2 eps] and
    [eps/2, eps]."""
    ma = model.m_alpha
    e2 = eps * eps
    fib_hi = two_circle_fiber(i, eps, model)
    fib_lo = two_circle_fiber(i, eps / 2, model)
    o_hi = fib_hi - 3 * ma * e2 - LOG2
    o_lo = fib_lo - 0.75 * ma * e2 - LOG2
    upper = (1.5 * e2 + model.eps1 * (3 * ma * e2 + LOG2 + o_hi)) / LOG2
    lower = (0.375 * e2 + model.eps1 * (0.75 * ma * e2 + LOG2 + o_lo)) / LOG2
    area = small_disc_area(i, eps, model, grid).area
    return SmallDiscWindow(eps, area, lower, upper, o_hi, o_lo, model.eps1 * LOG2)


def small_disc_limit(i: int, model: SurfaceModel, eps_values=(0.3, 0.1, 0.03)) -> tuple[float, float]:
    """Least-squares fit area = a + b eps^2 over the given radii; returns (a, b)."""
    e = np.asarray(eps_values, dtype=float)
    areas = np.array([small_disc_area(i, float(x), model).area for x in e])
    design = np.stack([np.ones_like(e), e * e], axis=1)
    (a, b), *_ = np.linalg.lstsq(design, areas, rcond=None)
    return float(a), float(b)


# ---------------------------------------------------------------------------
# length-area


def boundary_length(r: float, model: SurfaceModel) -> float:
    r = nudge_radius(r, model.field.lam)
    val, _ = _mean(lambda z: np.sqrt(fast_density(z, model)[1]), 0j, r, model)
    return 2 * math.pi * r * val


def length_area_ratio(r: float, model: SurfaceModel, grid: QuadratureGrid | None = None,
                      area: float | None = None) -> float:
    """length f(dD_r) / area f(D_r)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    a = disc_area(r, model, grid).area if area is None else area
    return boundary_length(r, model) / a


def log_measure_of_bad_radii(r_values: np.ndarray, ratios: np.ndarray, level: float = 0.5) -> float:
    """Trapezoid estimate of int 1[ratio >= level] dr / r over the scanned ladder."""
    t = np.log(np.asarray(r_values, dtype=float))
    bad = (np.asarray(ratios) >= level).astype(float)
    return float(np.sum(0.5 * (bad[1:] + bad[:-1]) * np.diff(t)))
