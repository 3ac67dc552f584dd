"""Genus-2 canonical product over a finite zero locus, in log space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .lattice_locus import ZeroLocus


class InadmissibleTruncationError(ValueError):
    pass


class PoleError(ValueError):
    pass


@dataclass(frozen=True)
class ProductEvaluation:
    """log|psi| (or psi_1), the accumulated principal argument mod 2 pi, and a bound
    on the contribution of annuli missing from the finite locus.  ``omitted`` holds
    the index of the factor dropped by psi_1 (-1 if none)."""

    log_abs: np.ndarray | float
    arg: np.ndarray | float
    tail_bound: np.ndarray | float
    omitted: np.ndarray | int = -1

    @property
    def on_locus(self):
        return np.isneginf(self.log_abs)


def primary_factor_log(w):
    """log|1 - w| + Re(w + w^2/2); -inf at w = 1."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    out = np.array([K.log_primary_re(x) for x in w_arr])
    return float(out[0]) if np.ndim(w) == 0 else out.reshape(np.shape(w))


def tail_series(q):
    """sum_{n >= 3} q^n / n for 0 <= q < 1."""
    q = np.asarray(q, dtype=float)
    return -np.log1p(-q) - q - q * q / 2


def annulus_tail_bound(z, omitted_radii: Sequence[float], c: float, kappa: float = 3.0):
    """kappa (r/c)^2 sum_{n>=3} (9|z|/r)^n / n summed over omitted annuli of radius r.

    Each omitted batch has at most kappa (r/c)^2 points, all with |lambda| >= r/3, so
    the bound dominates sum |log E(z/lambda)| <= sum_{n>=3} |z/lambda|^n / n.
    """
    az = np.abs(np.asarray(z, dtype=np.complex128))
    total = np.zeros_like(az)
    for r in omitted_radii:
        if not np.all(r / 3 > 3 * az):
            raise InadmissibleTruncationError(
                f"omitted annulus r = {r} is too close: need r/3 > 3|z|, max |z| = {az.max()}")
        total = total + kappa * (r / c) ** 2 * tail_series(9 * az / r)
    return float(total) if np.ndim(z) == 0 else total


def _tail(z, locus: ZeroLocus):
    if not locus.omitted_radii:
        return 0.0 if np.ndim(z) == 0 else np.zeros(np.shape(z))
    return annulus_tail_bound(z, locus.omitted_radii, locus.c, locus.tail_kappa)


def _direct(z, locus: ZeroLocus, omit_radius: float):
    zz = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel())
    re = np.empty(len(zz))
    im = np.empty(len(zz))
    om = np.empty(len(zz), dtype=np.int64)
    lam = np.ascontiguousarray(locus.points, dtype=np.complex128)
    K.direct_log_psi(zz, lam, omit_radius, re, im, om)
    if np.ndim(z) == 0:
        return float(re[0]), float(im[0]), int(om[0])
    shape = np.shape(z)
    return re.reshape(shape), im.reshape(shape), om.reshape(shape)


def log_abs_psi(z, locus: ZeroLocus) -> ProductEvaluation:
    """Sum of primary_factor_log(z/lambda) over the locus (compensated)."""
    re, im, _ = _direct(z, locus, 0.0)
    return ProductEvaluation(re, im, _tail(z, locus))


def log_abs_psi1(z, locus: ZeroLocus) -> ProductEvaluation:
    """As log_abs_psi but without the (at most one) factor with |z - lambda| < 1."""
    re, im, om = _direct(z, locus, 1.0)
    return ProductEvaluation(re, im, _tail(z, locus), om)


def log_derivative_psi(z, locus: ZeroLocus):
    """psi'/psi = sum [1/(z - lam) + 1/lam + z/lam^2], summed as z^2/(lam^2 (z - lam))."""
    zz = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel())
    lam = np.ascontiguousarray(locus.points, dtype=np.complex128)
    if len(lam) and np.any(np.isin(zz, lam)):
        raise PoleError("psi'/psi has a pole on the locus")
    out = np.empty(len(zz), dtype=np.complex128)
    K.direct_dlog_psi(zz, lam, out)
    return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


# ---------------------------------------------------------------------------
# growth-window diagnostics


def halton(n: int, base: int, skip: int = 1) -> np.ndarray:
    """Radical-inverse sequence; fixed and reproducible."""
    out = np.empty(n)
    for k in range(n):
        i = k + skip
        f, x = 1.0, 0.0
        while i:
            f /= base
            x += f * (i % base)
            i //= base
        out[k] = x
    return out


def annulus_samples(r_lo: float, r_hi: float, n: int, skip: int = 1) -> np.ndarray:
    """Low-discrepancy points uniform in area on r_lo <= |z| <= r_hi."""
    u, v = halton(n, 2, skip), halton(n, 3, skip)
    rho = np.sqrt(r_lo**2 + u * (r_hi**2 - r_lo**2))
    return rho * np.exp(2j * np.pi * v)


@dataclass(frozen=True)
class GrowthWindow:
    kappa_up: float
    kappa_low: float
    n_samples: int


def growth_window(locus: ZeroLocus, n_per_annulus: int = 200) -> GrowthWindow:
    """Fitted constants of the two growth estimates with the tail bound taken worst case.

    Upper: log|psi(z)| c^2 / r_i^2 over r_i/3 <= |z| <= 3 r_i.
    Lower: -log|psi_1(z)| c^2 / |z|^2 over the same rings, which contain both the
    gaps between annuli and the annuli themselves.
    """
    c = locus.c
    up, low = -math.inf, -math.inf
    count = 0
    for k, r in enumerate(locus.radii):
        z = annulus_samples(r / 3, 3 * r, n_per_annulus, skip=1 + 1000 * k)
        ev = log_abs_psi(z, locus)
        ev1 = log_abs_psi1(z, locus)
        finite = np.isfinite(ev.log_abs)
        up = max(up, float(np.max((ev.log_abs + ev.tail_bound)[finite] * c * c / r**2)))
        low = max(low, float(np.max(-(ev1.log_abs - ev1.tail_bound) * c * c / np.abs(z) ** 2)))
        count += len(z)
    return GrowthWindow(up, low, count)


def stirling_product_bound(r: float, c: int, eta: float) -> float:
    """min over mu0 in c Gamma cap D_r of
    log prod_{mu != mu0, mu in c Gamma cap D(mu0, eta r)} |mu - mu0| / |mu|,
    scaled by c^2 / r^2 (the fitted -kappa_S).  Exact brute-force product."""
    n = int(r // c)
    a = np.arange(-n, n + 1)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    grid = c * (aa + 1j * bb).ravel()
    grid = grid[np.abs(grid) <= r]
    m = int(math.ceil(eta * r / c)) + 1
    b = np.arange(-m, m + 1)
    ba, bbb = np.meshgrid(b, b, indexing="ij")
    offs = c * (ba + 1j * bbb).ravel()
    offs = offs[(np.abs(offs) <= eta * r) & (offs != 0)]
    worst = math.inf
    for mu0 in grid:
        mu = mu0 + offs
        mu = mu[mu != 0]
        val = math.fsum(np.log(np.abs(mu - mu0) / np.abs(mu)))
        worst = min(worst, val)
    return worst * c * c / r**2
