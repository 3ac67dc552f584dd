"""Region partitions of X, normalized mass profiles of f(D_r), radii subsequences, the
horizontal probe, contour counts and the chart-ball area check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import _kernels as K
from .lattice_locus import IndexSet, subsequence_index, torus_distance
from .nevanlinna_calculus import default_grid
from .quadrature import QuadratureGrid, RegionSpec, integrate_disc
from .surface_geometry import SurfaceModel


class ProfileRangeError(IndexError):
    pass


class InadmissibleContourError(ValueError):
    pass


class NonConvergedError(RuntimeError):
    pass


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------------------
# partitions and profiles


@dataclass(frozen=True)
class RegionPartition:
    """U_inf = {v > log M}, then tubes {dist([z], [y]) < eps_t} minus U_inf, then the rest."""

    log_m: float = 20.0
    eps_t: float = 0.1
    marked: tuple[complex, ...] = ()
    marked_ids: tuple[int, ...] = ()
    probe: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "marked", tuple(complex(y) for y in self.marked))
        if not self.marked_ids:
            object.__setattr__(self, "marked_ids", tuple(range(1, len(self.marked) + 1)))
        if len(self.marked_ids) != len(self.marked):
            raise ValueError("one id per marked class")
        if self.eps_t <= 0:
            raise ValueError("tube radius must be positive")
        if len(self.marked) > 1:
            ys = np.array(self.marked)
            d = torus_distance(ys[:, None], ys[None, :])
            gap = float(np.min(d[~np.eye(len(ys), dtype=bool)]))
            if not self.eps_t < gap / 2:
                raise ValueError(f"tubes overlap: eps_t = {self.eps_t} >= {gap / 2}")

    @property
    def labels(self) -> tuple[str, ...]:
        return ("U_inf",) + tuple(f"tube_y{k}" for k in self.marked_ids) + ("remainder",)

    def spec(self) -> RegionSpec:
        return RegionSpec(self.log_m, self.eps_t, self.marked)


@dataclass(frozen=True)
class MassProfile:
    radius: float
    total_area: float
    labels: tuple[str, ...]
    fractions: np.ndarray
    estimated_error: float = 0.0
    flagged: bool = False
    weighting: str = "area"

    @property
    def masses(self) -> dict[str, float]:
        return dict(zip(self.labels, (float(x) for x in self.fractions)))

    def fraction(self, label: str) -> float:
        return self.masses[label]

    @property
    def tube_total(self) -> float:
        return float(sum(self.fractions[1:-1]))


def _profile(r, partition, model, grid, weight, weighting):
    if r <= 0:
        raise ValueError("radius must be positive")
    res = integrate_disc(model, 0j, r, default_grid(r, grid), weight=weight,
                         regions=partition.spec())
    total = res.total
    frac = res.masses / total
    return MassProfile(r, total, partition.labels, frac, res.estimated_error / total,
                       res.flagged, weighting)


def mass_profile(r: float, partition: RegionPartition, model: SurfaceModel,
                 grid: QuadratureGrid | None = None) -> MassProfile:
    """Fractions of the mass of f_*[D_r] carried by each region."""
    return _profile(r, partition, model, grid, None, "area")


def nevanlinna_profile(r: float, partition: RegionPartition, model: SurfaceModel,
                       grid: QuadratureGrid | None = None) -> MassProfile:
    """As mass_profile with weight log(r / max(|z|, 1)); the total is T(r)."""
    if r < 1:
        raise ValueError("nevanlinna profiles need r >= 1")
    return _profile(r, partition, model, grid, ("log", r), "log")


@dataclass(frozen=True)
class SubsequenceSelector:
    kind: str  # "THIRD" | "CASE"
    index_set: IndexSet = field(default_factory=IndexSet.empty)
    parity: str = "odd"

    def __post_init__(self):
        if self.kind not in ("THIRD", "CASE"):
            raise ValueError(f"unknown selector kind {self.kind!r}")
        if self.parity not in ("odd", "even"):
            raise ValueError("parity is odd or even")

    @classmethod
    def parse(cls, text: str) -> "SubsequenceSelector":
        t = text.strip()
        if t.upper() == "THIRD":
            return cls("THIRD")
        if t.upper().startswith("CASE(") and t.endswith(")"):
            body = t[5:-1]
            iset, _, parity = body.rpartition(",")
            return cls("CASE", IndexSet.parse(iset), parity.strip().lower())
        raise ValueError(f"cannot parse selector {text!r}")

    def __str__(self):
        return "THIRD" if self.kind == "THIRD" else f"CASE({self.index_set},{self.parity})"

    def entries(self, model: SurfaceModel, limit: int = 64) -> list[tuple[int, float]]:
        """(j, r) along the selected subsequence within the built schedule."""
        locus = model.locus
        if self.kind == "THIRD":
            return [(k + 1, r / 3.0) for k, r in enumerate(locus.radii)]
        built = dict(zip(locus.labels, locus.radii))
        start = 1 if self.parity == "odd" else 2
        out = []
        top = max(built, default=0)
        for j in range(start, limit, 2):
            i = subsequence_index(self.index_set, j)
            if i > top:
                break
            if i in built:
                out.append((j, built[i]))
        if not out:
            raise ProfileRangeError(f"{self} selects no annulus of the built schedule")
        return out


def profile_sequence(selector: SubsequenceSelector, partition: RegionPartition,
                     model: SurfaceModel, spacing: float | None = None
                     ) -> list[tuple[int, MassProfile]]:
    out = []
    for j, r in selector.entries(model):
        grid = None if spacing is None else QuadratureGrid.for_radius(r, spacing)
        out.append((j, mass_profile(r, partition, model, grid)))
    return out


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    measured: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.measured}"


def verdict_third(seq: list[tuple[int, MassProfile]], level: float = 0.9) -> Verdict:
    u = [p.fraction("U_inf") for _, p in seq]
    ok = all(b >= a - 1e-12 for a, b in zip(u, u[1:])) and u[-1] >= level
    return Verdict("escape to C_inf along r_i/3", ok, "U_inf = " + ", ".join(f"{x:.4f}" for x in u))


def verdict_diffuse(p: MassProfile, level: float = 0.05, tube_cap: float = 0.02) -> Verdict:
    u, rem, tube = p.fraction("U_inf"), p.fraction("remainder"), p.tube_total
    ok = u >= level and rem >= level and tube <= tube_cap
    return Verdict("diffuse dichotomy", ok, f"U_inf = {u:.4f}, remainder = {rem:.4f}, tubes = {tube:.4f}")


def verdict_tube(p: MassProfile, label: str, level: float) -> Verdict:
    t = p.fraction(label)
    return Verdict(f"{label} charged", t >= level, f"{label} = {t:.4f}")


def verdict_tube_and_rest(p: MassProfile, label: str, level: float) -> Verdict:
    t, rem = p.fraction(label), p.fraction("remainder")
    return Verdict(f"{label} and remainder charged", t >= level and rem >= level,
                   f"{label} = {t:.4f}, remainder = {rem:.4f}")


# ---------------------------------------------------------------------------
# horizontal probe {w = u0} in the chart around each zero


@nb.njit(cache=True)
def _probe_one(lam, q, u0, eps, delta, r, m_alpha, eps1, xr, wr, n_ang):
    """Mass near {w = u0} over D(lam, delta) cap D_r, integrated in the w plane."""
    base = m_alpha * (lam.real * lam.real + lam.imag * lam.imag)
    acc = 0.0
    comp = 0.0
    tau0 = np.log(u0 if u0 != 0 else complex(eps / 2, 0.0)) - q[0] - base
    for a in range(n_ang):
        phi = 2.0 * math.pi * (a + 0.5) / n_ang
        e = complex(math.cos(phi), math.sin(phi))
        tau = tau0
        for k in range(xr.shape[0]):
            rho = 0.5 * eps * (xr[k] + 1.0)
            w = u0 + rho * e
            if w == 0:
                continue
            lw = np.log(w)
            ok = False
            for _ in range(60):
                zeta = np.exp(tau)
                qv, zq = K.local_eval(q, zeta)
                f = tau + qv + m_alpha * 2.0 * np.conj(lam) * zeta + base - lw
                f = complex(f.real, K._wrap(f.imag, 2.0 * math.pi))
                fp = 1.0 + zq + 2.0 * m_alpha * np.conj(lam) * zeta
                step = f / fp
                tau -= step
                if abs(step) < 1e-13 * max(1.0, abs(tau)):
                    ok = True
                    break
            if not ok:
                return -1.0
            zeta = np.exp(tau)
            z = lam + zeta
            if abs(zeta) >= delta or abs(z) >= r:
                continue
            qv, zq = K.local_eval(q, zeta)
            fp = 1.0 + zq + 2.0 * m_alpha * np.conj(lam) * zeta
            v = tau.real + qv.real + m_alpha * (z.real * z.real + z.imag * z.imag)
            lwr = math.log(abs(w))
            e2v = math.exp(-2.0 * abs(v))
            s = 1.0 / (1.0 + e2v) if v >= 0 else e2v / (1.0 + e2v)
            zdv = 0.5 * (1.0 + zq) + m_alpha * zeta * np.conj(z)
            zdv2 = zdv.real * zdv.real + zdv.imag * zdv.imag
            # s (1 - s) / |w|^2 = e^{2 (v - log|w|)} / (1 + e^{2v})^2, written overflow free
            sps_w = math.exp(2.0 * (v - lwr) - 2.0 * max(v, 0.0)) / (1.0 + e2v) ** 2
            dens = (math.exp(2.0 * (tau.real - lwr)) * (1.0 + 2.0 * eps1 * m_alpha * s)
                    + 4.0 * eps1 * sps_w * zdv2) / math.pi
            val = dens / (fp.real * fp.real + fp.imag * fp.imag)
            wgt = wr[k] * 0.5 * eps * rho * 2.0 * math.pi / n_ang
            acc, comp = K._neumaier_add(acc, comp, wgt * val)
    return acc + comp


@nb.njit(parallel=True, cache=True)
def _probe_all(lam, qrows, u0, eps, delta, r, m_alpha, eps1, xr, wr, n_ang, out):
    for i in nb.prange(lam.shape[0]):
        out[i] = _probe_one(lam[i], qrows[i], u0, eps, delta, r, m_alpha, eps1, xr, wr, n_ang)


def probe_masses(r: float, u0: complex, eps: float, delta_prime: float, model: SurfaceModel,
                 n_radial: int = 16, n_angular: int = 48) -> np.ndarray:
    """Per zero in D_r: mass of f^* omega_X over {z in D(lam, delta') : |Psi_lam(z) - u0| < eps}."""
    if eps <= 0:
        return np.zeros(0)
    f = model.field
    sel = np.nonzero(np.abs(f.lam) < r + delta_prime)[0]
    if not len(sel):
        return np.zeros(0)
    lam = np.ascontiguousarray(f.lam[sel])
    for i in sel[:: max(1, len(sel) // 8)]:
        _boundary_precondition(int(i), delta_prime, abs(u0) + eps, model)
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    out = np.empty(len(sel))
    _probe_all(lam, np.ascontiguousarray(f.local[sel]), complex(u0), float(eps),
               float(delta_prime), float(r), model.m_alpha, model.eps1, xr, wr, n_angular, out)
    if np.any(out < 0):
        raise NonConvergedError("chart inversion did not converge")
    return out


def horizontal_probe_mass(r: float, u0: complex, eps: float, delta_prime: float,
                          model: SurfaceModel) -> float:
    """Mass of f(D_r) within |w - u0| < eps of the horizontal graph {w = u0}, read in
    the chart around each zero."""
    return math.fsum(probe_masses(r, u0, eps, delta_prime, model))


# ---------------------------------------------------------------------------
# argument principle around a zero


def _chart_on_circle(i: int, radius: float, n: int, model: SurfaceModel):
    """(log|Psi|, arg Psi) at n equispaced points of the circle |z - lam_i| = radius."""
    f = model.field
    lam = f.lam[i]
    th = 2 * np.pi * np.arange(n) / n
    z = np.ascontiguousarray(lam + radius * np.exp(1j * th))
    re = np.empty(n)
    im = np.empty(n)
    om = np.empty(n, dtype=np.int64)
    K.direct_log_psi(z, f.lam, 0.0, re, im, om)
    ma = model.m_alpha
    cross = np.conj(lam) * z
    log_mod = re + ma * (2 * cross.real - abs(lam) ** 2)
    arg = im + 2 * ma * cross.imag
    return log_mod, arg


def _boundary_precondition(i: int, radius: float, bound: float, model: SurfaceModel) -> None:
    log_mod, _ = _chart_on_circle(i, radius, 256, model)
    if bound > 0 and not np.min(log_mod) > math.log(bound):
        raise InadmissibleContourError(
            f"|Psi| = {math.exp(np.min(log_mod)):.3g} <= {bound} on the contour around zero {i}")


def argument_principle_count(i: int, delta_prime: float, target: complex, model: SurfaceModel,
                             n0: int = 256, n_max: int = 1 << 20) -> int:
    """Winding number of Psi_lam - target along |z - lam_i| = delta'."""
    n = n0
    while n <= n_max:
        log_mod, arg = _chart_on_circle(i, delta_prime, n, model)
        if target != 0 and not np.min(log_mod) > math.log(abs(target)):
            raise InadmissibleContourError(
                f"|Psi| dips to {math.exp(np.min(log_mod)):.3g} <= |v| = {abs(target)}")
        ratio = target * np.exp(-(log_mod + 1j * arg))
        phase = arg + np.angle(1.0 - ratio)
        step = np.diff(np.concatenate([phase, phase[:1]]))
        step = step - 2 * np.pi * np.round(step / (2 * np.pi))
        if np.max(np.abs(step)) < np.pi / 2:
            return int(round(math.fsum(step) / (2 * np.pi)))
        n *= 2
    raise NonConvergedError("phase increments did not fall below pi/2")


# ---------------------------------------------------------------------------
# area of f(D(lam, delta')) inside a chart ball


def graph_ball_area(chart, rho: float, t_max: float, n_theta: int = 64, t_span: float = 60.0,
                    order: int = 16) -> float:
    """Euclidean area of the graph z -> (z, Psi(z)), z = lam + e^{t + i theta}, inside the
    ball |zeta|^2 + |Psi|^2 < rho^2.  ``chart(t, theta)`` returns (|Psi|^2, |Psi F'|^2)
    where F' = zeta dlog Psi / dzeta."""
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    hi = np.full(n_theta, min(math.log(rho), t_max))

    def excess(t):
        p2, _ = chart(t, th)
        return np.exp(2 * t) + p2 - rho * rho

    a, b = hi - 1.0, hi.copy()
    for k in range(40):
        out = excess(a) >= 0
        if not out.any():
            break
        a = np.where(out, a - 2.0 ** k, a)
    else:
        raise ChartError("the graph never enters the ball")
    inside_hi = excess(b) < 0
    for _ in range(200):
        m = 0.5 * (a + b)
        neg = excess(m) < 0
        a = np.where(neg, m, a)
        b = np.where(neg, b, m)
    t_b = np.where(inside_hi, hi, a)
    lo = t_b - t_span
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    n_pan = 12
    for k in range(n_pan):
        p_lo = lo + (t_b - lo) * k / n_pan
        p_hi = lo + (t_b - lo) * (k + 1) / n_pan
        for xg, wg in zip(x, w):
            t = 0.5 * (p_lo + p_hi) + 0.5 * (p_hi - p_lo) * xg
            _, g2 = chart(t, th)
            val = np.exp(2 * t) + g2
            total += float(np.sum(0.5 * (p_hi - p_lo) * wg * val))
    return total * 2 * np.pi / n_theta


def flat_chart(t, theta):
    """The graph w = 0."""
    z = np.zeros(np.broadcast(t, theta).shape)
    return z, z


def zero_chart(i: int, model: SurfaceModel):
    f = model.field
    lam = f.lam[i]
    ma = model.m_alpha

    def chart(t, theta):
        t = np.broadcast_to(t, np.shape(theta))
        zeta = np.exp(t + 1j * theta)
        q, zq = f.local_log(i, zeta)
        log_mod = t + q.real + ma * (abs(lam) ** 2 + 2 * (np.conj(lam) * zeta).real)
        fp = 1.0 + zq + 2 * ma * np.conj(lam) * zeta
        with np.errstate(over="ignore"):
            p2 = np.exp(2 * log_mod)
        return p2, p2 * np.abs(fp) ** 2

    return chart


@dataclass(frozen=True)
class BallCheck:
    area: float
    flat_area: float
    passed: bool


def ball_area_lower_bound_check(i: int, rho: float, model: SurfaceModel,
                                delta_prime: float = 0.4, tol: float = 0.05) -> BallCheck:
    """Area of f(D(lam, delta')) inside the chart ball B(f(lam), rho) against pi rho^2."""
    if not 0 < rho < delta_prime:
        raise ChartError(f"rho = {rho} must lie in (0, delta' = {delta_prime})")
    if delta_prime > model.field.local_radius():
        raise ChartError("delta' exceeds the local chart radius")
    area = graph_ball_area(zero_chart(i, model), rho, math.log(delta_prime))
    flat = math.pi * rho * rho
    return BallCheck(area, flat, area >= (1 - tol) * flat)
