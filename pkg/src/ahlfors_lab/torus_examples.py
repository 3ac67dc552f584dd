"""The line z -> ([z], [slope z]) in A = C/Gamma x C/Gamma against the elliptic curve
iota([y]) = ([m1 y + b1], [m2 y + b2]) of C/Gamma_3, with Gamma = Gamma_3 = Z + iZ."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .canonical_product import annulus_samples


class TorusModelError(ValueError):
    pass


@dataclass(frozen=True)
class TorusLineModel:
    slope: float = 1.4142135623730951
    m1: complex = 1.0
    m2: complex = 0.0
    b1: complex = 0.0
    b2: complex = 0.0
    domain_radius: float = 0.71

    def __post_init__(self):
        if self.m1 == 0 and self.m2 == 0:
            raise TorusModelError("(m1, m2) must not both vanish")
        if abs(self.det) < 1e-12:
            raise TorusModelError("m2 - slope * m1 vanishes: the curve is parallel to the line")
        frac = Fraction(self.slope).limit_denominator(10_000)
        if abs(self.slope - frac.numerator / frac.denominator) <= 1e-12:
            raise TorusModelError(f"slope {self.slope} is numerically rational ({frac})")
        if self.domain_radius < math.sqrt(2.0) / 2.0 - 1e-15:
            raise TorusModelError("D_R must contain a fundamental square of Gamma_3")

    @property
    def det(self) -> complex:
        return complex(self.m2) - self.slope * complex(self.m1)


def _gauss_in_disc(center: np.ndarray, radius: float):
    """Gaussian integers in the open discs D(center_k, radius); returns (k, point)."""
    span = int(math.ceil(radius)) + 1
    d = np.arange(-span, span + 1)
    da, db = np.meshgrid(d, d, indexing="ij")
    offs = (da + 1j * db).ravel()
    base = np.round(center.real) + 1j * np.round(center.imag)
    cand = base[:, None] + offs[None, :]
    keep = np.abs(cand - center[:, None]) < radius
    k = np.nonzero(keep)[0]
    return k, cand[keep]


def intersection_pairs(r: float, model: TorusLineModel):
    """All (lam1, lam2) in Gamma^2 whose solved (z, y) lies in D_r x D_R."""
    if r <= 0:
        raise ValueError("radius must be positive")
    m1, m2, b1, b2 = (complex(x) for x in (model.m1, model.m2, model.b1, model.b2))
    s, det, big_r = model.slope, model.det, model.domain_radius
    # |lam1 + b1| = |z - m1 y| <= r + |m1| R
    bound = r + abs(m1) * big_r + abs(b1) + 1
    n = int(math.ceil(bound))
    a = np.arange(-n, n + 1)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    lam1 = (aa + 1j * bb).ravel()
    lam1 = lam1[np.abs(lam1 + b1) <= bound]
    big_a = lam1 + b1
    # y in D_R  <=>  lam2 + b2 in D(slope A, |det| R)
    k, lam2 = _gauss_in_disc(s * big_a - b2, abs(det) * big_r)
    big_b = lam2 + b2
    ak = big_a[k]
    z = (m2 * ak - m1 * big_b) / det
    y = (s * ak - big_b) / det
    ok = (np.abs(z) < r) & (np.abs(y) < big_r)
    return lam1[k][ok], lam2[ok], z[ok], y[ok]


def torus_intersection_count(r: float, model: TorusLineModel) -> int:
    if r < 1:
        raise ValueError("counting needs r >= 1")
    return int(len(intersection_pairs(r, model)[0]))


def fiber_counts(r: float, model: TorusLineModel) -> np.ndarray:
    """Number of admissible lam2 for each lam1 that has at least one."""
    lam1, _, _, _ = intersection_pairs(r, model)
    if not len(lam1):
        return np.zeros(0, dtype=np.int64)
    _, counts = np.unique(lam1, return_counts=True)
    return counts


def brute_force_count(r: float, model: TorusLineModel) -> int:
    """Independent O(r^4) double loop over both lattice factors (small r only)."""
    m1, m2, b1, b2 = (complex(x) for x in (model.m1, model.m2, model.b1, model.b2))
    s, det, big_r = model.slope, model.det, model.domain_radius
    n1 = int(math.ceil(r + abs(m1) * big_r + abs(b1))) + 1
    n2 = int(math.ceil(s * r + abs(m2) * big_r + abs(b2) + s * abs(b1))) + 1
    count = 0
    for p in range(-n1, n1 + 1):
        for q in range(-n1, n1 + 1):
            big_a = complex(p, q) + b1
            for u in range(-n2, n2 + 1):
                for v in range(-n2, n2 + 1):
                    big_b = complex(u, v) + b2
                    z = (m2 * big_a - m1 * big_b) / det
                    y = (s * big_a - big_b) / det
                    if abs(z) < r and abs(y) < big_r:
                        count += 1
    return count


def harmonic_constant(a1: float, a2: float, a3: float, a4: float, slope: float) -> float:
    """K = a1 + a2 slope^2 + slope (a3 + a4)."""
    return a1 + a2 * slope * slope + slope * (a3 + a4)


def harmonic_real_roots(a1: float, a2: float, a3: float, a4: float) -> list[float]:
    """Real slopes with K = 0."""
    b = a3 + a4
    if a2 == 0:
        return [] if b == 0 else [-a1 / b]
    disc = b * b - 4 * a2 * a1
    if disc < 0:
        return []
    if disc == 0:
        return [-b / (2 * a2)]
    sq = math.sqrt(disc)
    return sorted([(-b - sq) / (2 * a2), (-b + sq) / (2 * a2)])


def curve_distance(z: np.ndarray, model: TorusLineModel) -> np.ndarray:
    """Distance in A from ([z], [slope z]) to iota(C / Gamma_3): the complex line
    {(m1 y + b1, m2 y + b2)} minimized over the 9 x 9 nearest translates."""
    m1, m2, b1, b2 = (complex(x) for x in (model.m1, model.m2, model.b1, model.b2))
    z = np.asarray(z, dtype=np.complex128)
    p = z - b1
    q = model.slope * z - b2
    p = p - np.round(p.real) - 1j * np.round(p.imag)
    q = q - np.round(q.real) - 1j * np.round(q.imag)
    norm = math.sqrt(abs(m1) ** 2 + abs(m2) ** 2)
    d = np.arange(-1, 2)
    shifts = (d[:, None] + 1j * d[None, :]).ravel()
    best = np.full(z.shape, np.inf)
    for g1 in shifts:
        for g2 in shifts:
            best = np.minimum(best, np.abs(m2 * (p + g1) - m1 * (q + g2)) / norm)
    return best


def torus_line_mass_near_curve(r: float, model: TorusLineModel, eps: float,
                               n_samples: int = 200_000) -> float:
    """Lebesgue fraction of D_r within distance eps of the curve (the pulled-back flat
    metric is a constant multiple of dx dy)."""
    if eps <= 0:
        return 0.0
    z = annulus_samples(0.0, r, n_samples)
    return float(np.count_nonzero(curve_distance(z, model) < eps)) / n_samples
