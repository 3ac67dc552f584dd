"""Metrics on X = P(L_m + C) pulled back to the plane by f = [psi s_m : 1].

Convention: dd^c u corresponds to the Lebesgue density (Laplacian u) / (4 pi), so the
base form dd^c |z|^2 has density 1/pi and D_r has base area r^2.  With
v = log|psi| + m alpha |z|^2 and s = e^{2v} / (1 + e^{2v}) the fiber density is
(2 m alpha s + 4 s (1 - s) |dv/dz|^2) / pi and the total is 1/pi + eps1 * fiber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .canonical_product import log_abs_psi, log_derivative_psi
from .lattice_locus import ZeroLocus
from .psi_field import PsiField


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceModel:
    alpha: float
    m: int
    eps1: float
    locus: ZeroLocus
    kappa_growth: float = 1.5
    _field: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.m < 1 or int(self.m) != self.m:
            raise ModelError("alpha must be positive and m a positive integer")
        # eps1 = 0 is kept as the base-only diagnostic
        if self.eps1 < 0:
            raise ModelError("eps1 must be nonnegative")
        if not self.m * self.alpha - self.kappa_growth / self.locus.c**2 > 0:
            raise ModelError("need m alpha > kappa_growth / c^2")

    @property
    def m_alpha(self) -> float:
        return self.m * self.alpha

    @property
    def c(self) -> int:
        return self.locus.c

    @property
    def field(self) -> PsiField:
        if not self._field:
            self._field.append(PsiField(self.locus))
        return self._field[0]

    def with_locus(self, locus: ZeroLocus) -> "SurfaceModel":
        return SurfaceModel(self.alpha, self.m, self.eps1, locus, self.kappa_growth)

    def with_eps1(self, eps1: float) -> "SurfaceModel":
        out = SurfaceModel(self.alpha, self.m, eps1, self.locus, self.kappa_growth)
        out._field.extend(self._field)
        return out


@dataclass(frozen=True)
class PulledBackDensity:
    value: np.ndarray | float
    base: np.ndarray | float
    fiber: np.ndarray | float


# ---------------------------------------------------------------------------
# pointwise kernels shared with the quadrature code


@nb.njit(cache=True, inline="always")
def sigmoid_parts(v):
    """(s, s (1 - s)) for s = e^{2v} / (1 + e^{2v}), overflow free."""
    e = math.exp(-2.0 * abs(v))
    s = 1.0 / (1.0 + e) if v >= 0 else e / (1.0 + e)
    return s, e / ((1.0 + e) * (1.0 + e))


@nb.njit(cache=True, inline="always")
def scaled_density(v, dv_abs2_scaled, d2, m_alpha, eps1):
    """d^2 times the total density, given |d * dv/dz|^2 (so the pole of dv at a zero
    is cancelled by the caller's choice of d)."""
    s, sps = sigmoid_parts(v)
    fiber = 2.0 * m_alpha * s * d2 + 4.0 * sps * dv_abs2_scaled
    return (d2 + eps1 * fiber) / math.pi


@nb.njit(cache=True, inline="always")
def scaled_fiber(v, dv_abs2_scaled, d2, m_alpha):
    s, sps = sigmoid_parts(v)
    return (2.0 * m_alpha * s * d2 + 4.0 * sps * dv_abs2_scaled) / math.pi


def _as_array(z):
    return np.atleast_1d(np.asarray(z, dtype=np.complex128))


def section_log_norm(z, model: SurfaceModel):
    """log ||s_m|| = m alpha |z|^2."""
    return model.m_alpha * np.abs(z) ** 2


def fiber_log_norm(z, model: SurfaceModel):
    """v = log|psi| + m alpha |z|^2; -inf exactly on the locus."""
    ev = log_abs_psi(z, model.locus)
    return ev.log_abs + section_log_norm(z, model)


def _limit_fiber_at(idx: np.ndarray, model: SurfaceModel) -> np.ndarray:
    """Fiber density at a zero: s |dv|^2 -> e^{2h} / 4 with h = log|F'(lam)|."""
    f = model.field
    h = np.array([f.spike_height(int(i), model.m_alpha) for i in idx])
    with np.errstate(over="ignore"):
        return np.exp(2.0 * h) / math.pi


def pullback_density(z, model: SurfaceModel) -> PulledBackDensity:
    """Density of f^* omega_X with respect to dx dy (direct sums)."""
    zz = _as_array(z)
    lam = model.locus.points
    on = np.isin(zz, lam)
    fiber = np.empty(len(zz))
    if np.any(~on):
        zo = zz[~on]
        v = fiber_log_norm(zo, model)
        dv = 0.5 * log_derivative_psi(zo, model.locus) + model.m_alpha * np.conj(zo)
        fiber[~on] = [scaled_fiber(a, b, 1.0, model.m_alpha)
                      for a, b in zip(v, np.abs(dv) ** 2)]
    if np.any(on):
        idx = np.array([int(np.nonzero(lam == p)[0][0]) for p in zz[on]])
        fiber[on] = _limit_fiber_at(idx, model)
    base = np.full(len(zz), 1.0 / math.pi)
    value = base + model.eps1 * fiber
    if np.ndim(z) == 0:
        return PulledBackDensity(float(value[0]), float(base[0]), float(fiber[0]))
    return PulledBackDensity(value, base, fiber)


def curve_speed(z, model: SurfaceModel):
    """Length element of f along the plane: sqrt of the total density."""
    return np.sqrt(pullback_density(z, model).value)


def fast_density(z: np.ndarray, model: SurfaceModel):
    """(v, total density, fiber density) via the box expansions; for dense grids."""
    la, dl, _, _ = model.field.evaluate(z)
    v = la + model.m_alpha * np.abs(z) ** 2
    dv2 = np.abs(0.5 * dl + model.m_alpha * np.conj(z)) ** 2
    fiber = _fiber_vec(v, dv2, model.m_alpha)
    return v, 1.0 / math.pi + model.eps1 * fiber, fiber


@nb.vectorize(["float64(float64, float64, float64)"], cache=True)
def _fiber_vec(v, dv2, m_alpha):
    if v == -math.inf:
        return 0.0
    return scaled_fiber(v, dv2, 1.0, m_alpha)


# ---------------------------------------------------------------------------
# the chart representative near a zero


def chart_log(zeta, i: int, model: SurfaceModel):
    """log Psi_lam(lam + zeta) for the frame centred at lam = locus point i:
    Psi_lam(z) = psi(z) exp(m alpha (2 conj(lam) z - |lam|^2)), so that
    |Psi_lam| = ||psi s_m|| exp(-m alpha |z - lam|^2).  Frames centred at lattice
    translates of one torus point differ by a constant phase."""
    lam = model.field.lam[i]
    zeta = np.asarray(zeta, dtype=np.complex128)
    q, _ = model.field.local_log(i, zeta)
    with np.errstate(divide="ignore"):
        return np.log(zeta) + q + model.m_alpha * (abs(lam) ** 2 + 2 * np.conj(lam) * zeta)
