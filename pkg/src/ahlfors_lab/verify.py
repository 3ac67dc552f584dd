"""Self-contained invariant suite behind ``ahlfors-lab verify``.

Builds its own two-annulus locus (r = 40, 160, c = 5) and reports one named check per
invariant with the measured constant.  Nothing here reads the clock, so the output is
a pure function of the code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import canonical_product as cp
from . import current_profiler as prof
from . import lattice_locus as ll
from . import nevanlinna_calculus as nc
from . import surface_geometry as sg
from . import torus_examples as tx
from .quadrature import QuadratureGrid


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    bound: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: measured {self.measured:.6g} ({self.bound})"


class Context:
    """Shared loci and models, built lazily."""

    def __init__(self):
        self.cfg = ll.LatticeConfig(5)
        self.ys = ll.marked_points(16)
        self._cache = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def locus(self) -> ll.ZeroLocus:
        return self._get("locus", lambda: ll.build_zero_locus(
            ll.RadiiSchedule.desk(5, 2, labels=(1, 3)), None, self.cfg))

    @property
    def model(self) -> sg.SurfaceModel:
        return self._get("model", lambda: sg.SurfaceModel(0.05, 4, 0.1, self.locus))

    @property
    def model_case2(self) -> sg.SurfaceModel:
        def make():
            loc = ll.build_zero_locus(ll.RadiiSchedule((40.0,), labels=(4,)), None, self.cfg)
            return sg.SurfaceModel(0.05, 4, 0.1, loc)
        return self._get("case2", make)

    @property
    def empty_model(self) -> sg.SurfaceModel:
        return self._get("empty", lambda: sg.SurfaceModel(0.05, 4, 0.1, ll.empty_locus(5)))

    def top(self, k: int = 5) -> np.ndarray:
        idx = np.nonzero(self.locus.annulus == self.locus.labels[-1])[0]
        return idx[np.linspace(0, len(idx) - 1, k).astype(int)]


CHECKS: list[tuple[str, Callable[[Context], tuple[float, bool, str]]]] = []


def check(name: str):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


# ---------------------------------------------------------------------------
# lattice_locus


@check("annulus count matches brute-force scan (r=100, c=5)")
def _(ctx):
    pts = ll.enumerate_annulus_lattice(100.0, ctx.cfg)
    brute = sum(1 for a in range(-100, 101, 5) for b in range(-100, 101, 5)
                if 2500 <= a * a + b * b <= 10000)
    diff = abs(len(pts) - brute)
    return diff, diff == 0, "difference = 0"


@check("annulus set closed under negation and rotation by i")
def _(ctx):
    pts = ll.enumerate_annulus_lattice(100.0, ctx.cfg)
    key = lambda s: set(zip(np.round(s.real).astype(int), np.round(s.imag).astype(int)))
    base = key(pts)
    bad = len(base ^ key(-pts)) + len(base ^ key(1j * pts))
    return bad, bad == 0, "mismatches = 0"


@check("unit-disc separation of the locus")
def _(ctx):
    sep = ctx.locus.min_separation()
    return sep, sep >= 5 - math.sqrt(2) - 1e-12, "min distance >= c - sqrt 2"


def _lattice_sum_values(ctx):
    out = []
    for c in (5, 10):
        cfg = ll.LatticeConfig(c)
        for labels in ((1, 3), (4, 12)):
            loc = ll.build_zero_locus(ll.RadiiSchedule.desk(c, 2, labels=labels), None, cfg)
            out.extend(ll.lattice_sums(loc).values())
    return out


@check("first lattice sum |sum 1/lam| c^2 (c = 5, 10; cases I, II)")
def _(ctx):
    v = max(a for a, _ in _lattice_sum_values(ctx))
    return v, v <= 25, "<= 25"


@check("second lattice sum |sum 1/lam^2| c^2 r (c = 5, 10; cases I, II)")
def _(ctx):
    v = max(b for _, b in _lattice_sum_values(ctx))
    return v, v <= 25, "<= 25"


@check("sparse grid fitted constant, N in {10, 50, 100, 400}")
def _(ctx):
    k = max(ll.fitted_sparse_kappa(ll.sparse_grid(n), (0.05, 0.1, 0.2)) for n in (10, 50, 100, 400))
    return k, k <= 20, "fitted kappa <= 20"


@check("subsequence index sets pairwise disjoint (sigma <= 5, j <= 20)")
def _(ctx):
    seen = set()
    clash = 0
    for n in range(1, 6):
        iset = ll.sigma_inverse(n)
        for j in range(1, 21):
            i = ll.subsequence_index(iset, j)
            clash += i in seen
            seen.add(i)
            back, jj = ll.decode_annulus_index(i)
            clash += (ll.sigma(back) != n) or jj != j
    return clash, clash == 0, "collisions = 0"


@check("offset floor counts (II' n=10, III n=100)")
def _(ctx):
    ys = tuple(complex(y) for y in ctx.ys)
    mu = np.arange(10, dtype=complex)
    x = ll.assign_offsets(mu, ll.OffsetCase("II_prime", ll.IndexSet.of([1, 2]), (), ys))
    c1, c2 = (int(np.sum(np.abs(x - y) < 1e-12)) for y in ys[:2])
    w = tuple(ll.geometric_weights(16))
    x3 = ll.assign_offsets(np.arange(100, dtype=complex), ll.OffsetCase("III", ll.IndexSet.all(), w, ys))
    short = sum(max(0, int(math.floor(a * 100)) - int(np.sum(np.abs(x3 - y) < 1e-12)))
                for a, y in zip(w, ys))
    bad = abs(c1 - 2) + abs(c2 - 2) + short
    return bad, bad == 0, "deviations = 0"


@check("class counts: case I avoids y1, case II is all y1")
def _(ctx):
    n1 = ll.count_in_class(ctx.locus, ctx.ys[0], ll.Batch(1))
    loc2 = ctx.model_case2.locus
    n2 = ll.count_in_class(loc2, ctx.ys[0], ll.Batch(4))
    bad = n1 + abs(n2 - len(loc2))
    return bad, bad == 0, "deviations = 0"


# ---------------------------------------------------------------------------
# canonical_product


@check("log|psi(10)| against a scalar reference loop")
def _(ctx):
    loc = ll.build_zero_locus(ll.RadiiSchedule((40.0,)), None, ctx.cfg)
    lam = loc.points
    ref = math.fsum(math.log(abs(1 - 10 / l)) + (10 / l + 50 / l**2).real for l in lam)
    got = cp.log_abs_psi(10.0, loc).log_abs
    rel = abs(got - ref) / abs(ref)
    return rel, rel <= 1e-9, "relative <= 1e-9"


@check("box expansions against direct sums")
def _(ctx):
    z = cp.annulus_samples(1.0, 200.0, 2000, skip=7)
    direct = cp.log_abs_psi(z, ctx.locus).log_abs
    fast, _, _, _ = ctx.model.field.evaluate(z)
    err = float(np.max(np.abs(fast - direct) / np.maximum(1.0, np.abs(direct))))
    return err, err <= 1e-10, "scaled error <= 1e-10"


@check("growth window kappa_up")
def _(ctx):
    g = cp.growth_window(ctx.locus)
    return g.kappa_up, g.kappa_up <= 50, "<= 50"


@check("growth window kappa_low")
def _(ctx):
    g = cp.growth_window(ctx.locus)
    return g.kappa_low, g.kappa_low <= 50, "<= 50"


@check("log-derivative against central differences")
def _(ctx):
    z = cp.annulus_samples(5.0, 150.0, 100, skip=11)
    z = z[np.min(np.abs(z[:, None] - ctx.locus.points[None, :]), axis=1) > 0.5]
    h = 1e-5
    re_p, im_p, _ = cp._direct(z + h, ctx.locus, 0.0)
    re_m, im_m, _ = cp._direct(z - h, ctx.locus, 0.0)
    dim = (im_p - im_m + np.pi) % (2 * np.pi) - np.pi
    fd = ((re_p - re_m) + 1j * dim) / (2 * h)
    an = cp.log_derivative_psi(z, ctx.locus)
    err = float(np.max(np.abs(fd - an) / np.maximum(1.0, np.abs(an))))
    return err, err <= 1e-6, "relative <= 1e-6"


@check("tail bound dominates an omitted synthetic annulus")
def _(ctx):
    cfg = ll.LatticeConfig(5)
    far = ll.build_zero_locus(ll.RadiiSchedule((1000.0,), base_multiplier=8.0), None, cfg)
    z = 10 * np.exp(2j * np.pi * np.arange(16) / 16)
    actual = np.abs(cp.log_abs_psi(z, far).log_abs)
    bound = cp.annulus_tail_bound(z, (1000.0,), 5)
    ratio = float(np.max(actual / bound))
    return ratio, ratio <= 1.0, "actual / bound <= 1"


@check("Stirling product bound (r = 100, c = 5, eta = 1/4)")
def _(ctx):
    k = -cp.stirling_product_bound(100.0, 5, 0.25)
    return k, 0 <= k <= 50, "fitted kappa_S in [0, 50]"


# ---------------------------------------------------------------------------
# surface_geometry


@check("pullback density positive on a grid")
def _(ctx):
    g = np.linspace(-170, 170, 121)
    z = (g[:, None] + 1j * g[None, :]).ravel()
    _, total, _ = sg.fast_density(z, ctx.model)
    m = float(np.min(total))
    return m, m > 0, "min > 0"


@check("empty locus: density at 0 equals (1 + eps1 m alpha) / pi")
def _(ctx):
    d = sg.pullback_density(0j, ctx.empty_model).value
    err = abs(d - (1 + 0.1 * 0.2) / math.pi)
    return err, err <= 1e-15, "error <= 1e-15"


@check("fiber density against the finite-difference Laplacian")
def _(ctx):
    z = cp.annulus_samples(3.0, 120.0, 100, skip=3)
    z = z[np.min(np.abs(z[:, None] - ctx.locus.points[None, :]), axis=1) > 0.3]
    h = 5e-3

    def pot(w):
        v = sg.fiber_log_norm(w, ctx.model)
        return np.logaddexp(0.0, 2 * v)

    # fourth-order stencil in each direction
    lap = -60 * pot(z)
    for d in (h, 1j * h):
        lap = lap + 16 * (pot(z + d) + pot(z - d)) - (pot(z + 2 * d) + pot(z - 2 * d))
    lap = lap / (12 * h * h)
    fd = lap / (4 * math.pi)
    an = sg.pullback_density(z, ctx.model).fiber
    err = float(np.max(np.abs(fd - an) / np.maximum(an, 1e-3)))
    return err, err <= 1e-5, "relative <= 1e-5"


@check("near-infinity criterion in the top annulus")
def _(ctx):
    z = cp.annulus_samples(80.0, 160.0, 400, skip=5)
    d = np.min(np.abs(z[:, None] - ctx.locus.points[None, :]), axis=1)
    eps = 0.1
    z = z[d >= eps]
    v = sg.fiber_log_norm(z, ctx.model)
    worst = float(np.min((v - math.log(eps)) / np.abs(z) ** 2))
    return worst, worst > 0, "(v + log 1/eps) / |z|^2 > 0"


# ---------------------------------------------------------------------------
# nevanlinna_calculus


@check("empty locus disc area against the closed form")
def _(ctx):
    m = ctx.empty_model
    worst = 0.0
    for r in (5.0, 20.0):
        a = nc.disc_area(r, m, QuadratureGrid.for_radius(r, 0.05)).area
        exact = r * r + m.eps1 * 2 * m.m_alpha * r * r / (1 + math.exp(-2 * m.m_alpha * r * r))
        worst = max(worst, abs(a - exact) / exact)
    return worst, worst <= 1e-6, "relative <= 1e-6"


@check("Jensen identity for the order function, 10 radii in [5, 55]")
def _(ctx):
    worst = 0.0
    for r in np.linspace(5.0, 55.0, 10):
        t = nc.order_function(float(r), ctx.model)
        j = nc.jensen_order(float(r), ctx.model)
        worst = max(worst, abs(t - j) / abs(j))
    return worst, worst <= 0.01, "relative <= 1%"


@check("two-circle constant equals -log 2 at 5 zeros")
def _(ctx):
    lam = ctx.model.field.lam[ctx.top()]
    err = max(abs(nc.two_circle_factor_constant(l, 0.2, ctx.model) + math.log(2)) for l in lam)
    return err, err <= 1e-6, "error <= 1e-6"


@check("circle mean of the section term")
def _(ctx):
    lam = ctx.model.field.lam[ctx.top(1)[0]]
    got = nc.circle_mean_log_modulus(lam, 0.3, "section", ctx.model)
    err = abs(got - ctx.model.m_alpha * (abs(lam) ** 2 + 0.09))
    return err, err <= 1e-9 * abs(lam) ** 2, "relative <= 1e-9"


@check("Jensen formula for the circle mean of log|psi|")
def _(ctx):
    worst = 0.0
    for r in (30.0, 70.0, 150.0):
        got, want = nc.ring_mean_log_psi(r, ctx.model)
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst, worst <= 1e-8, "relative <= 1e-8"


def _sandwich(ctx):
    m = ctx.model
    ka, kb = 0.0, math.inf
    for r in m.locus.radii:
        big = nc.disc_area(2 * r, m, QuadratureGrid.for_radius(2 * r, 0.3)).area
        small = nc.disc_area(r / 3, m).area
        ka, kb = max(ka, big / r**2), min(kb, small / r**2)
    return ka, kb


@check("area upper constant kappa_A over both annuli")
def _(ctx):
    ka, kb = ctx._get("sandwich", lambda: _sandwich(ctx))
    return ka, ka / kb <= 1e3, "kappa_A / kappa_B <= 1e3"


@check("area lower constant kappa_B over both annuli")
def _(ctx):
    ka, kb = ctx._get("sandwich", lambda: _sandwich(ctx))
    return kb, kb > 0, "> 0"


@check("quadrature against the boundary-flux area")
def _(ctx):
    worst = 0.0
    for r in (30.0, 45.0):
        a = nc.disc_area(r, ctx.model).area
        b = nc.flux_disc_area(r, ctx.model).area
        worst = max(worst, abs(a - b) / b)
    return worst, worst <= 1e-4, "relative <= 1e-4"


@check("small-disc window at 5 top-annulus zeros (eps = 0.25)")
def _(ctx):
    bad = 0
    ratio = 0.0
    for i in ctx.top():
        w = nc.small_disc_window(int(i), 0.25, ctx.model)
        bad += not w.inside
        ratio = max(ratio, w.o_ratio)
    return ratio, bad == 0 and ratio <= 0.3, "inside window, o(1) <= 0.3 log 2"


@check("small-disc area has a positive eps -> 0 limit")
def _(ctx):
    a, _ = nc.small_disc_limit(int(ctx.top(1)[0]), ctx.model)
    return a, a >= 0.5 * ctx.model.eps1, ">= eps1 / 2"


@check("order function: weighted integral against a t-grid")
def _(ctx):
    r = 30.0
    a = nc.order_function(r, ctx.model)
    b = nc.order_by_t_grid(r, ctx.model)
    rel = abs(a - b) / b
    return rel, rel <= 0.005, "relative <= 0.5%"


@check("length-area: log measure of radii with ratio >= 0.5 in [1, 160]")
def _(ctx):
    r = np.exp(np.linspace(0.0, math.log(160.0), 200))
    ratios = [nc.boundary_length(float(x), ctx.model) / nc.flux_disc_area(float(x), ctx.model).area
              for x in r]
    meas = nc.log_measure_of_bad_radii(r, ratios)
    ok = min(ratios) > 0 and meas <= 3.0
    return meas, ok, "<= 3 and ratios > 0"


# ---------------------------------------------------------------------------
# current_profiler


def _part(ctx, eps_t=0.1):
    return prof.RegionPartition(20.0, eps_t, (complex(ctx.ys[0]),))


@check("profile fractions sum to one")
def _(ctx):
    p = prof.mass_profile(40.0, _part(ctx), ctx.model)
    err = abs(math.fsum(p.fractions) - 1.0)
    return err, err <= 1e-9, "<= 1e-9"


@check("escape to C_inf along r_i / 3")
def _(ctx):
    seq = prof.profile_sequence(prof.SubsequenceSelector("THIRD"), _part(ctx), ctx.model)
    v = prof.verdict_third(seq)
    return seq[-1][1].fraction("U_inf"), v.passed, "nondecreasing, last >= 0.9"


@check("diffuse dichotomy on case I (eps_t = 0.05)")
def _(ctx):
    sel = prof.SubsequenceSelector("CASE", ll.IndexSet.empty(), "odd")
    (_, p), *_ = prof.profile_sequence(sel, _part(ctx, 0.05), ctx.model)
    v = prof.verdict_diffuse(p)
    return min(p.fraction("U_inf"), p.fraction("remainder")), v.passed, "both >= 0.05, tubes <= 0.02"


@check("tube fractions shrink with eps_t")
def _(ctx):
    t = [prof.mass_profile(40.0, _part(ctx, e), ctx.model_case2).tube_total for e in (0.1, 0.05, 0.025)]
    ok = t[0] >= t[1] >= t[2]
    return t[2], ok, "nonincreasing in eps_t"


@check("case II tube charged by its zeros")
def _(ctx):
    m = ctx.model_case2
    p = prof.mass_profile(40.0, _part(ctx), m)
    n = ll.count_in_class(m.locus, ctx.ys[0], ll.Disc(0j, 40.0))
    want = 0.5 * m.eps1 * n / p.total_area
    t = p.fraction("tube_y1")
    return t, t >= want, f">= eps1 * count / (2 area) = {want:.4g}"


@check("Nevanlinna profile lags the Ahlfors profile (empty locus)")
def _(ctx):
    part = prof.RegionPartition(10.0, 0.1, ())
    a = prof.mass_profile(10.0, part, ctx.empty_model).fraction("U_inf")
    n = prof.nevanlinna_profile(10.0, part, ctx.empty_model)
    s = abs(math.fsum(n.fractions) - 1)
    return n.fraction("U_inf"), n.fraction("U_inf") < a and s <= 1e-9, "below the area profile"


@check("argument principle count is 1 (5 zeros x 5 targets)")
def _(ctx):
    targets = (0, 0.5, 1j, -1.5 + 0.5j, 2.0)
    counts = [prof.argument_principle_count(int(i), 0.4, v, ctx.model)
              for i in ctx.top() for v in targets]
    bad = sum(c != 1 for c in counts)
    return bad, bad == 0, "mismatches = 0"


@check("chart-ball area at least pi rho^2 (rho = 0.1)")
def _(ctx):
    worst = math.inf
    for i in ctx.top(3):
        b = prof.ball_area_lower_bound_check(int(i), 0.1, ctx.model)
        worst = min(worst, b.area / b.flat_area)
    flat = prof.graph_ball_area(prof.flat_chart, 0.1, 0.0) / (math.pi * 0.01)
    return worst, worst >= 0.95 and abs(flat - 1) <= 1e-9, "area / pi rho^2 >= 0.95"


@check("horizontal probe mass scales like eps^2")
def _(ctx):
    a = prof.horizontal_probe_mass(40.0, 0.5, 0.1, 0.4, ctx.model)
    b = prof.horizontal_probe_mass(40.0, 0.5, 0.05, 0.4, ctx.model)
    q = b / a
    return q, 0.2 <= q <= 0.3, "mass(eps/2) / mass(eps) in [0.2, 0.3]"


# ---------------------------------------------------------------------------
# torus_examples


@check("torus counts over r^2 within a factor-2 band (r = 20, 40, 80)")
def _(ctx):
    m = tx.TorusLineModel()
    q = [tx.torus_intersection_count(r, m) / r**2 for r in (20.0, 40.0, 80.0)]
    band = max(q) / min(q)
    return band, band <= 2.0, "max / min <= 2"


@check("torus per-lam1 fiber count")
def _(ctx):
    k = int(tx.fiber_counts(80.0, tx.TorusLineModel()).max())
    return k, k <= 5, "<= 5"


@check("torus count against the four-fold brute-force loop")
def _(ctx):
    m = tx.TorusLineModel(m1=1.0, m2=1j, b1=0.3, b2=0.1j)
    d = abs(tx.torus_intersection_count(3.7, m) - tx.brute_force_count(3.7, m))
    return d, d == 0, "difference = 0"


@check("harmonic constant examples")
def _(ctx):
    err = abs(tx.harmonic_constant(1, 0, 0, 0, 0.7) - 1) + abs(
        tx.harmonic_constant(0, 1, 0, 0, math.sqrt(2)) - 2)
    return err, err <= 1e-12, "error <= 1e-12"


@check("torus mass near the curve shrinks with eps")
def _(ctx):
    m = tx.TorusLineModel()
    f = [tx.torus_line_mass_near_curve(40.0, m, e, 50_000) for e in (0.2, 0.1, 0.05)]
    ok = f[0] > f[1] > f[2] and tx.torus_line_mass_near_curve(40.0, m, 1.5, 5_000) == 1.0
    return f[2], ok, "decreasing, 1 at eps >= diameter"


def run_suite(progress: Callable[[Check], None] | None = None,
              select: Callable[[str], bool] | None = None) -> list[Check]:
    ctx = Context()
    out = []
    for name, fn in CHECKS:
        if select is not None and not select(name):
            continue
        try:
            measured, passed, bound = fn(ctx)
            res = Check(name, bool(passed), float(measured), bound)
        except Exception as exc:  # a crashing check is a failing check
            res = Check(name, False, math.nan, f"error: {type(exc).__name__}: {exc}")
        out.append(res)
        if progress is not None:
            progress(res)
    return out

