"""Perturbed Gaussian-lattice zero loci.

The locus is a finite union of batches B_i = {mu + x_mu : mu in A_{r_i} cap c*Gamma},
where A_r is the closed annulus r/2 <= |z| <= r, Gamma = Z + iZ and the offsets
x_mu live in the unit square [0, 1)^2.  Offsets follow one of five rules selected by
the index label of the annulus through the sigma encoding below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

CASE_TAGS = ("I", "II", "II_prime", "III", "III_prime")


class LocusError(ValueError):
    """Raised on malformed lattice, schedule or offset input."""


class EmptyAnnulusError(LocusError):
    pass


class InfeasibleOffsetsError(LocusError):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class LatticeConfig:
    """Scale factor of the sublattice c*Gamma.  Gamma is always Gaussian."""

    c: int = 5
    tau: complex = 1j

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 5:
            raise LocusError(f"c must be an integer >= 5, got {self.c}")
        if self.tau != 1j:
            raise LocusError("only the Gaussian lattice (tau = i) is supported")

    @property
    def min_separation(self) -> float:
        return self.c - math.sqrt(2.0)


@dataclass(frozen=True)
class RadiiSchedule:
    """Annulus radii with their logical index labels.

    ``labels[k]`` is the annulus index i (in the sense of the sigma bookkeeping) that
    the k-th built annulus plays.  Labels default to 1, 2, 3, ...
    """

    radii: tuple[float, ...]
    growth_law: str = "factor"  # "factor": r_{k+1} >= g r_k ; "power": r_{k+1} >= r_k**g
    growth: float = 4.0
    base_multiplier: float = 8.0
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(1, len(radii) + 1)))
        else:
            object.__setattr__(self, "labels", tuple(int(i) for i in self.labels))
        if len(self.labels) != len(radii):
            raise LocusError("labels and radii differ in length")
        if self.growth_law not in ("factor", "power"):
            raise LocusError(f"unknown growth law {self.growth_law!r}")
        if self.growth_law == "factor" and self.growth <= 2.0:
            # annuli [r/2, r] must not overlap, else mu could be used twice
            raise LocusError("factor growth must exceed 2")
        if self.growth_law == "power" and self.growth < 1.0:
            raise LocusError("growth exponent must be >= 1")
        if self.base_multiplier <= 0:
            raise LocusError("base_multiplier must be positive")
        if any(r <= 0 for r in radii):
            raise LocusError("radii must be positive")
        for a, b in zip(radii, radii[1:]):
            if not b > a:
                raise LocusError("radii must be strictly increasing")
            bound = self.growth * a if self.growth_law == "factor" else a ** self.growth
            if b < bound * (1 - 1e-12):
                raise LocusError(f"radius {b} violates the growth law after {a}")
            if not b / 2 > a:
                raise LocusError("consecutive annuli overlap")
        if any(i < 1 for i in self.labels):
            raise LocusError("labels must be positive")
        if any(b <= a for a, b in zip(self.labels, self.labels[1:])):
            raise LocusError("labels must be strictly increasing")

    def validate_for(self, cfg: LatticeConfig) -> None:
        if self.radii and self.radii[0] < self.base_multiplier * cfg.c * (1 - 1e-12):
            raise LocusError(
                f"r_1 = {self.radii[0]} is below base_multiplier * c = {self.base_multiplier * cfg.c}"
            )

    @classmethod
    def desk(cls, c: int, count: int, labels: Sequence[int] | None = None,
             factor: float = 4.0, base_multiplier: float = 8.0) -> "RadiiSchedule":
        radii = tuple(base_multiplier * c * factor**k for k in range(count))
        return cls(radii, "factor", factor, base_multiplier,
                   None if labels is None else tuple(labels))

    @classmethod
    def faithful(cls, c: int, count: int, base_multiplier: float = 2020.0,
                 exponent: float = 4.0) -> "RadiiSchedule":
        radii = [base_multiplier * c]
        for _ in range(count - 1):
            radii.append(radii[-1] ** exponent)
        return cls(tuple(radii), "power", exponent, base_multiplier)

    def __len__(self):
        return len(self.radii)

    def radius_of_label(self, label: int) -> float:
        try:
            return self.radii[self.labels.index(label)]
        except ValueError:
            raise LocusError(f"annulus label {label} is not in the schedule") from None


# ---------------------------------------------------------------------------
# index sets and the sigma encoding

@dataclass(frozen=True)
class IndexSet:
    """One of: the empty symbol, all of Z+, or a finite nonempty subset of Z+."""

    kind: str  # "empty" | "all" | "finite"
    elements: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("empty", "all", "finite"):
            raise LocusError(f"unknown index-set kind {self.kind!r}")
        if self.kind == "finite":
            if not self.elements:
                raise LocusError("finite index set must be nonempty (use IndexSet.empty())")
            if any(int(e) != e or e < 1 for e in self.elements):
                raise LocusError("index-set elements must be positive integers")
        elif self.elements:
            raise LocusError(f"{self.kind} index set carries no elements")

    @classmethod
    def empty(cls) -> "IndexSet":
        return cls("empty")

    @classmethod
    def all(cls) -> "IndexSet":
        return cls("all")

    @classmethod
    def of(cls, elements: Iterable[int]) -> "IndexSet":
        return cls("finite", frozenset(int(e) for e in elements))

    @classmethod
    def parse(cls, text: str) -> "IndexSet":
        t = text.strip().lower()
        if t in ("empty", "{}", "none", "∅"):
            return cls.empty()
        if t in ("all", "z+", "zplus"):
            return cls.all()
        t = t.strip("{}")
        try:
            return cls.of(int(s) for s in t.replace(";", ",").split(",") if s.strip())
        except ValueError:
            raise LocusError(f"cannot parse index set {text!r}") from None

    def sorted(self) -> list[int]:
        return sorted(self.elements)

    def __str__(self):
        if self.kind == "empty":
            return "empty"
        if self.kind == "all":
            return "all"
        return "{" + ",".join(map(str, self.sorted())) + "}"


def sigma(index_set: IndexSet) -> int:
    """sigma(empty) = 1, sigma(Z+) = 2, finite sets by (max, binary code) from 3."""
    if index_set.kind == "empty":
        return 1
    if index_set.kind == "all":
        return 2
    return 2 + sum(1 << (e - 1) for e in index_set.elements)


def sigma_inverse(n: int) -> IndexSet:
    if n < 1:
        raise LocusError("sigma values start at 1")
    if n == 1:
        return IndexSet.empty()
    if n == 2:
        return IndexSet.all()
    code = n - 2
    return IndexSet.of(b + 1 for b in range(code.bit_length()) if code >> b & 1)


def subsequence_index(index_set: IndexSet, j: int) -> int:
    """j-th smallest element of Z_{sigma(I)}, with Z_n = {2^(n-1) (2k-1) : k >= 1}."""
    if j < 1:
        raise LocusError("j must be >= 1")
    return (1 << (sigma(index_set) - 1)) * (2 * j - 1)


def decode_annulus_index(i: int) -> tuple[IndexSet, int]:
    """Inverse of subsequence_index: annulus index -> (I, j)."""
    if i < 1:
        raise LocusError("annulus index must be >= 1")
    v = (i & -i).bit_length() - 1
    return sigma_inverse(v + 1), ((i >> v) + 1) // 2


# ---------------------------------------------------------------------------
# offsets

def marked_points(k_max: int) -> np.ndarray:
    """y_i = 1/6 + (i - 1)/(2 k_max) * i, i = 1..k_max, all inside the y-strip."""
    if k_max < 1:
        raise LocusError("need at least one marked point")
    i = np.arange(1, k_max + 1)
    return 1.0 / 6.0 + 1j * (i - 1) / (2.0 * k_max)


def geometric_weights(count: int) -> np.ndarray:
    """alpha_l = 2^-l, with the last weight absorbing the tail so they sum to 1."""
    w = 0.5 ** np.arange(1, count + 1)
    w[-1] += 1.0 - w.sum()
    return w


@dataclass(frozen=True)
class OffsetCase:
    tag: str
    index_set: IndexSet = field(default_factory=IndexSet.empty)
    weights: tuple[float, ...] = ()
    marked: tuple[complex, ...] = ()

    def __post_init__(self):
        if self.tag not in CASE_TAGS:
            raise LocusError(f"unknown offset case {self.tag!r}")
        for y in self.marked:
            if not (1 / 6 - 1e-15 <= y.real < 1 / 3 and 0 <= y.imag < 1):
                raise LocusError(f"marked point {y} outside the strip 1/6 <= Re < 1/3")
        if len(set(self.marked)) != len(self.marked):
            raise LocusError("marked points must be distinct")
        if self.tag in ("II", "II_prime"):
            if self.index_set.kind != "finite":
                raise LocusError("cases II/II' need a finite index set")
            if max(self.index_set.elements) > len(self.marked):
                raise LocusError("index set refers to missing marked points")
        if self.tag in ("III", "III_prime"):
            if len(self.weights) == 0 or any(w <= 0 for w in self.weights):
                raise LocusError("case III weights must be positive")
            if abs(sum(self.weights) - 1.0) > 1e-12:
                raise LocusError("case III weights must sum to 1")
            if len(self.weights) > len(self.marked):
                raise LocusError("more weights than marked points")

    @classmethod
    def for_label(cls, label: int, marked: Sequence[complex]) -> "OffsetCase":
        """Offset rule dictated by the sigma decoding of an annulus label."""
        index_set, j = decode_annulus_index(label)
        marked = tuple(complex(y) for y in marked)
        if index_set.kind == "empty":
            return cls("I", index_set, (), marked)
        if index_set.kind == "finite":
            return cls("II" if j % 2 else "II_prime", index_set, (), marked)
        return cls("III" if j % 2 else "III_prime", index_set,
                   tuple(geometric_weights(len(marked))), marked)


def sparse_grid(n: int) -> np.ndarray:
    """First n points, row-major in (l1, l2), of the grid
    ((k + 1 + l1)/(2k + 2) + i l2/(k + 1)), 0 <= l1, l2 <= k, k = floor(sqrt(n))."""
    if n < 1:
        raise LocusError("sparse_grid needs n >= 1")
    k = math.isqrt(n)
    assert (k + 1) ** 2 >= n
    l1, l2 = np.divmod(np.arange(n), k + 1)
    return (k + 1 + l1) / (2.0 * k + 2.0) + 1j * l2 / (k + 1.0)


def _counts_for_case(n: int, case: OffsetCase) -> tuple[list[complex], list[int], int]:
    """Marked values, their hit counts, and the number of sparse leftovers."""
    tag = case.tag
    if tag == "I":
        return [], [], n
    if tag in ("II", "II_prime"):
        ys = [case.marked[e - 1] for e in case.index_set.sorted()]
        k = len(ys)
        if tag == "II":
            q, rem = divmod(n, k)
            # leftovers go round-robin, so every value keeps at least floor(n/k)
            return ys, [q + (1 if l < rem else 0) for l in range(k)], 0
        counts = [n // (2 * k)] * k
        return ys, counts, n - sum(counts)
    w = np.asarray(case.weights)
    if tag == "III":
        counts = [int(math.floor(a * n)) for a in w]
    else:
        counts = [int(math.floor(a * n / 2)) for a in w]
    keep = [l for l, q in enumerate(counts) if q >= 1]
    ys = [case.marked[l] for l in keep]
    counts = [counts[l] for l in keep]
    if sum(counts) > n:
        raise InfeasibleOffsetsError(f"requested {sum(counts)} slots among {n} lattice points")
    if tag == "III":
        if not ys:
            raise InfeasibleOffsetsError("annulus too small for any case III slot")
        counts[0] += n - sum(counts)
        return ys, counts, 0
    return ys, counts, n - sum(counts)


def assign_offsets(lattice_points: np.ndarray, case: OffsetCase,
                   seed: int | None = None) -> np.ndarray:
    """Offsets x_mu aligned with ``lattice_points``.

    Points are consumed in the given (lexicographic) order, marked values in blocks
    y_{i_1} first, sparse leftovers last.  A non-None seed permutes the consumption
    order reproducibly.
    """
    pts = np.asarray(lattice_points)
    n = len(pts)
    if n == 0:
        raise EmptyAnnulusError("cannot assign offsets on an empty annulus")
    ys, counts, n_sparse = _counts_for_case(n, case)
    values = np.empty(n, dtype=complex)
    pos = 0
    for y, q in zip(ys, counts):
        values[pos:pos + q] = y
        pos += q
    if n_sparse:
        values[pos:] = sparse_grid(n_sparse)
    if seed is None:
        return values
    order = np.random.default_rng(seed).permutation(n)
    out = np.empty(n, dtype=complex)
    out[order] = values
    return out


# ---------------------------------------------------------------------------
# lattice enumeration and the locus

def enumerate_annulus_lattice(r: float, cfg: LatticeConfig | int) -> np.ndarray:
    """Points of c*Gamma with r/2 <= |mu| <= r, sorted by (Re, Im).  A bare integer c
    skips the c >= 5 model check (used for small exhaustive examples)."""
    c = cfg if isinstance(cfg, int) else cfg.c
    if not r > 2 * c:
        raise EmptyAnnulusError(f"annulus radius {r} must exceed 2c = {2 * c}")
    n = int(math.floor(r / c))
    a = np.arange(-n, n + 1)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    norm2 = (c * c) * (aa * aa + bb * bb)
    keep = (4 * norm2 >= r * r) & (norm2 <= r * r)
    # meshgrid with ij indexing is already lexicographic in (Re, Im)
    return c * (aa[keep] + 1j * bb[keep]).astype(complex)


@dataclass(frozen=True)
class ZeroLocus:
    """Finite truncation of the zero set, one record per point.

    ``annulus`` holds the logical label of the batch, ``position`` its place in the
    schedule.  ``omitted_radii`` lists annuli that belong to the model but were not
    built; products carry a tail bound for them.
    """

    points: np.ndarray
    lattice: np.ndarray
    offsets: np.ndarray
    annulus: np.ndarray
    position: np.ndarray
    case_tag: tuple[str, ...]
    c: int = 5
    radii: tuple[float, ...] = ()
    labels: tuple[int, ...] = ()
    omitted_radii: tuple[float, ...] = ()
    tail_kappa: float = 3.0

    def __len__(self):
        return len(self.points)

    def batch(self, label: int) -> np.ndarray:
        return self.points[self.annulus == label]

    def min_separation(self) -> float:
        if len(self.points) < 2:
            return math.inf
        return min_pairwise_distance(self.points)


def empty_locus(c: int = 5) -> ZeroLocus:
    z = np.zeros(0, dtype=complex)
    i = np.zeros(0, dtype=np.int64)
    return ZeroLocus(z, z.copy(), z.copy(), i, i.copy(), (), c)


def min_pairwise_distance(points: np.ndarray) -> float:
    """Exact minimum distance via a sort-and-sweep on the real part."""
    pts = np.asarray(points)
    order = np.argsort(pts.real, kind="stable")
    p = pts[order]
    best = math.inf
    for k in range(1, len(p)):
        # compare against a window of predecessors, pruned by the real gap
        j = k - 1
        while j >= 0 and p[k].real - p[j].real < best:
            best = min(best, abs(p[k] - p[j]))
            j -= 1
    return best


def build_zero_locus(schedule: RadiiSchedule, cases: Mapping[int, OffsetCase] | None,
                     cfg: LatticeConfig, n_built: int | None = None,
                     seed: int | None = None, marked_count: int = 16,
                     tail_kappa: float = 3.0) -> ZeroLocus:
    """Union of offset batches over the first ``n_built`` annuli of the schedule.

    ``cases`` maps annulus labels to offset rules; missing labels use the rule read
    off the label by the sigma decoding.
    """
    schedule.validate_for(cfg)
    n_built = len(schedule) if n_built is None else n_built
    ys = marked_points(marked_count)
    pts, lat, offs, ann, posn, tags = [], [], [], [], [], []
    for k in range(n_built):
        r, label = schedule.radii[k], schedule.labels[k]
        case = (cases or {}).get(label) or OffsetCase.for_label(label, ys)
        mu = enumerate_annulus_lattice(r, cfg)
        x = assign_offsets(mu, case, seed)
        pts.append(mu + x)
        lat.append(mu)
        offs.append(x)
        ann.append(np.full(len(mu), label, dtype=np.int64))
        posn.append(np.full(len(mu), k + 1, dtype=np.int64))
        tags.extend([case.tag] * len(mu))
    if not pts:
        out = empty_locus(cfg.c)
        return ZeroLocus(out.points, out.lattice, out.offsets, out.annulus, out.position,
                         (), cfg.c, schedule.radii[:0], schedule.labels[:0],
                         tuple(schedule.radii), tail_kappa)
    locus = ZeroLocus(np.concatenate(pts), np.concatenate(lat), np.concatenate(offs),
                      np.concatenate(ann), np.concatenate(posn), tuple(tags), cfg.c,
                      tuple(schedule.radii[:n_built]), tuple(schedule.labels[:n_built]),
                      tuple(schedule.radii[n_built:]), tail_kappa)
    assert locus.min_separation() >= cfg.min_separation - 1e-12
    return locus


def torus_distance(z, y) -> np.ndarray:
    """Distance between classes [z] and [y] in C / (Z + iZ)."""
    d = np.asarray(z) - np.asarray(y)
    dx = d.real - np.round(d.real)
    dy = d.imag - np.round(d.imag)
    return np.hypot(dx, dy)


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float


@dataclass(frozen=True)
class Batch:
    """The batch B_{r_i} of a given annulus label."""

    label: int


def count_in_class(locus: ZeroLocus, y: complex, region: Disc | Batch) -> int:
    """Number of locus points in ``region`` whose torus class equals [y]."""
    if isinstance(region, Disc):
        inside = np.abs(locus.points - region.center) < region.radius
    elif isinstance(region, Batch):
        inside = locus.annulus == region.label
    else:
        raise LocusError(f"unsupported region {region!r}")
    same = torus_distance(locus.offsets, y) < 1e-9
    return int(np.count_nonzero(inside & same))


def lattice_sums(locus: ZeroLocus) -> dict[int, tuple[float, float]]:
    """Per batch: (|sum 1/lambda| c^2, |sum 1/lambda^2| c^2 r_i)."""
    out = {}
    c = locus.c
    for label, r in zip(locus.labels, locus.radii):
        lam = locus.batch(label)
        s1 = abs(math.fsum((1 / lam).real) + 1j * math.fsum((1 / lam).imag))
        s2 = abs(math.fsum((lam**-2).real) + 1j * math.fsum((lam**-2).imag))
        out[label] = (s1 * c * c, s2 * c * c * r)
    return out


def sparse_bound_violations(points: np.ndarray, kappa: float, radii: Sequence[float],
                            step: float = 0.01) -> list[tuple[complex, float, int, float]]:
    """Exhaustive disc scan: centres on a ``step`` grid over [0, 1]^2 (the points lie in
    D_R), returns (centre, r, count, bound) for every disc with count > max(1, kappa r^2 N)."""
    pts = np.asarray(points)
    n = len(pts)
    g = np.arange(-0.5, 1.5 + step / 2, step)
    cx, cy = np.meshgrid(g, g, indexing="ij")
    centres = (cx + 1j * cy).ravel()
    dist = np.abs(centres[:, None] - pts[None, :])
    out = []
    for r in radii:
        counts = np.count_nonzero(dist < r, axis=1)
        bound = max(1.0, kappa * r * r * n)
        # relative slack so a fitted kappa reproduces its own worst disc
        bad = np.nonzero(counts > bound * (1 + 1e-12))[0]
        out.extend((complex(centres[b]), r, int(counts[b]), bound) for b in bad)
    return out


def fitted_sparse_kappa(points: np.ndarray, radii: Sequence[float], step: float = 0.01) -> float:
    """Smallest kappa with count <= max(1, kappa r^2 N) over the scan."""
    pts = np.asarray(points)
    n = len(pts)
    g = np.arange(-0.5, 1.5 + step / 2, step)
    cx, cy = np.meshgrid(g, g, indexing="ij")
    centres = (cx + 1j * cy).ravel()
    dist = np.abs(centres[:, None] - pts[None, :])
    kappa = 0.0
    for r in radii:
        worst = int(np.count_nonzero(dist < r, axis=1).max())
        if worst > 1:
            kappa = max(kappa, worst / (r * r * n))
    return kappa
