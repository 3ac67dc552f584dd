"""Fast evaluation of log psi for dense point sets.

Two expansions back the quadrature code:

* box expansions: the plane is tiled by square boxes; factors whose zero lies farther
  than ``2 * box`` from a box centre are replaced by a Taylor polynomial about that
  centre, the rest are summed directly;
* local expansions: about each zero lam, log psi(lam + zeta) = log zeta + Q(zeta) with
  Q a polynomial, valid for |zeta| below the distance to the next zero.  These stay
  accurate at scales far below the spacing of floating-point numbers near lam.

The direct sums in ``canonical_product`` are the reference these are tested against.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .lattice_locus import ZeroLocus


def _csum(values: np.ndarray) -> complex:
    values = np.asarray(values)
    return complex(math.fsum(values.real), math.fsum(values.imag))


class PsiField:
    """Cached expansions of log psi for one locus."""

    def __init__(self, locus: ZeroLocus, box: float = 8.0, order: int = 36,
                 local_order: int = 36, max_near: int = 256):
        self.locus = locus
        self.lam = np.ascontiguousarray(locus.points, dtype=np.complex128)
        self.box = float(box)
        self.order = int(order)
        self.local_order = int(local_order)
        self.max_near = int(max_near)
        if len(self.lam):
            self.s1 = _csum(1.0 / self.lam)
            self.s2 = _csum(self.lam**-2)
        else:
            self.s1 = 0j
            self.s2 = 0j
        self._half_width = 0.0
        self._local = None
        self._alloc(64.0)

    # -- box expansions -------------------------------------------------------

    def _alloc(self, half_width: float) -> None:
        nside = int(math.ceil(2 * half_width / self.box))
        self._half_width = nside * self.box / 2
        nb_ = nside * nside
        self._coef = np.zeros((nb_, self.order + 1), dtype=np.complex128)
        self._near_idx = np.zeros((nb_, self.max_near), dtype=np.int64)
        self._near_cnt = np.zeros(nb_, dtype=np.int64)
        self._built = np.zeros(nb_, dtype=bool)

    def _prepare(self, z: np.ndarray) -> np.ndarray:
        extent = float(np.max(np.maximum(np.abs(z.real), np.abs(z.imag)))) if len(z) else 0.0
        if extent + self.box >= self._half_width:
            self._alloc(2 * (extent + self.box))
        boxes = np.empty(len(z), dtype=np.int64)
        K.box_indices(z, self._half_width, self.box, boxes)
        needed = np.unique(boxes)
        todo = needed[~self._built[needed]]
        if len(todo):
            K.build_boxes(todo, self._half_width, self.box, 2 * self.box, self.lam,
                          self._coef, self._near_idx, self._near_cnt, self.order)
            if self._near_cnt[todo].max(initial=0) > self.max_near:
                raise RuntimeError("near-list overflow; lower the box size")
            self._built[todo] = True
        return boxes

    def evaluate(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(log|psi|, psi'/psi, distance to nearest zero, its index) at points z.

        The nearest-zero data is exact whenever that distance is below ``box``.
        """
        z = np.ascontiguousarray(np.atleast_1d(z), dtype=np.complex128).ravel()
        n = len(z)
        logabs = np.empty(n)
        dlog = np.empty(n, dtype=np.complex128)
        dist = np.empty(n)
        idx = np.empty(n, dtype=np.int64)
        if len(self.lam) == 0:
            logabs[:] = 0.0
            dlog[:] = 0.0
            dist[:] = np.inf
            idx[:] = -1
            return logabs, dlog, dist, idx
        boxes = self._prepare(z)
        K.eval_boxes(z, boxes, self._half_width, self.box, self.lam, self._coef,
                     self._near_idx, self._near_cnt, self.order, self.s1, self.s2,
                     logabs, dlog, dist, idx)
        return logabs, dlog, dist, idx

    # -- local expansions -----------------------------------------------------

    @property
    def local(self) -> np.ndarray:
        """Row i: coefficients q_k with log psi(lam_i + zeta) = log zeta + sum q_k zeta^k."""
        if self._local is None:
            n = len(self.lam)
            out = np.zeros((n, self.local_order + 1), dtype=np.complex128)
            if n:
                K.local_coefficients(self.lam, np.arange(n, dtype=np.int64),
                                     self.local_order, out)
            self._local = out
        return self._local

    def local_radius(self) -> float:
        """Radius within which the local expansions are trusted (ratio <= 1/3)."""
        sep = self.locus.min_separation()
        return min(1.2, sep / 3.0) if math.isfinite(sep) else 1.2

    def local_log(self, i: int, zeta) -> tuple[np.ndarray, np.ndarray]:
        """(log psi(lam_i + zeta) - log zeta, zeta * d/dzeta of it) at array zeta."""
        zeta = np.asarray(zeta, dtype=np.complex128)
        q = self.local[i]
        val = np.zeros_like(zeta)
        der = np.zeros_like(zeta)
        for k in range(len(q) - 1, -1, -1):
            der = der * zeta + val
            val = val * zeta + q[k]
        return val, der * zeta

    def spike_height(self, i: int, m_alpha: float) -> float:
        """h = log |F'(lam)|, where |F| = |psi| e^{m alpha |z|^2}; the fiber spike at lam
        has radius about e^{-h}."""
        lam = self.lam[i]
        return float(self.local[i, 0].real + m_alpha * abs(lam) ** 2)
