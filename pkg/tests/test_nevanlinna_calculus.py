import math

import numpy as np
import pytest

from ahlfors_lab import nevanlinna_calculus as nc
from ahlfors_lab.quadrature import QuadratureGrid, circle_mean, integrate_disc


def _empty_area(r, m):
    ma = m.m_alpha
    return r * r + m.eps1 * 2 * ma * r * r / (1 + math.exp(-2 * ma * r * r))


@pytest.mark.parametrize("r", [2.0, 5.0, 20.0])
def test_empty_locus_area_closed_form(empty_model, r):
    a = nc.disc_area(r, empty_model, QuadratureGrid.for_radius(r, 0.05)).area
    assert a == pytest.approx(_empty_area(r, empty_model), rel=1e-6)


def test_base_only_area(empty_model):
    flat = empty_model.with_eps1(0.0)
    assert nc.disc_area(7.0, flat).area == pytest.approx(49.0, rel=1e-6)
    assert nc.base_order(7.0) == 24.0


def test_area_monotone(model):
    a = [nc.flux_disc_area(r, model).area for r in (5.0, 10.0, 20.0, 40.0, 80.0)]
    assert all(b > x for x, b in zip(a, a[1:]))


def test_quadrature_matches_flux(model):
    for r in (30.0, 45.0):
        q = nc.disc_area(r, model)
        f = nc.flux_disc_area(r, model)
        assert q.area == pytest.approx(f.area, rel=1e-4)
        assert not q.flagged


def test_off_center_disc_matches_flux(model, locus):
    c = locus.points[40] + 0.3
    q = nc.disc_area(3.0, model, QuadratureGrid.for_radius(3.0, 0.05), center=c).area
    f = nc.flux_disc_area(3.0, model, center=c).area
    assert q == pytest.approx(f, rel=1e-5)


def test_order_at_one(model):
    assert nc.order_function(1.0, model) == 0.0
    assert nc.jensen_fiber_T(1.0, model) == pytest.approx(0.0, abs=1e-15)


def test_empty_order_closed_form(empty_model):
    flat = empty_model.with_eps1(0.0)
    assert nc.order_function(9.0, flat) == pytest.approx(40.0, rel=1e-6)


@pytest.mark.parametrize("r", [7.5, 25.0, 47.0])
def test_jensen_identity(model, r):
    t = nc.order_function(r, model)
    assert t == pytest.approx(nc.jensen_order(r, model), rel=1e-3)
    assert t == pytest.approx(nc.order_by_t_grid(r, model), rel=1e-4)


def test_ring_bound(model):
    for r in np.linspace(2.0, 20.0, 20):
        r = float(r)
        assert nc.jensen_order(3 * r, model) >= math.log(1.5) * nc.flux_disc_area(2 * r, model).area


def test_deep_ring_mean_is_harmonic(model):
    # between the annuli v >> 1, so log(1 + e^{2v}) ~ 2v and the circle mean is
    # 2 m alpha r^2 plus twice the Jensen sum of log|psi|
    r = 60.0
    mean_l, _ = circle_mean(lambda z: nc.fiber_potential(z, model), 0j, r, model.field.lam)
    _, jensen = nc.ring_mean_log_psi(r, model)
    assert mean_l == pytest.approx(2 * model.m_alpha * r * r + 2 * jensen, rel=1e-10)


def test_ring_mean_log_psi(model):
    for r in (30.0, 70.0, 150.0):
        got, want = nc.ring_mean_log_psi(r, model)
        assert got == pytest.approx(want, rel=1e-9)


def test_circle_mean_psi_small_radius(model):
    assert nc.circle_mean_log_modulus(0j, 5.0, "psi", model) == pytest.approx(0.0, abs=1e-12)


def test_circle_mean_section(model, locus):
    lam = locus.points[100]
    got = nc.circle_mean_log_modulus(lam, 0.3, "section", model)
    assert got == pytest.approx(model.m_alpha * (abs(lam) ** 2 + 0.09), rel=1e-13)


def test_circle_mean_errors(model, locus):
    with pytest.raises(nc.CircleError):
        nc.circle_mean_log_modulus(0j, abs(locus.points[0]), "psi", model)
    with pytest.raises(nc.CircleError):
        nc.circle_mean_log_modulus(0j, 1.0, "bogus", model)


def test_two_circle_constant(model, top_zeros):
    for i in top_zeros:
        lam = model.field.lam[i]
        assert nc.two_circle_factor_constant(lam, 0.2, model) == pytest.approx(-math.log(2), abs=1e-8)


def test_small_disc_exact_value(model, top_zeros):
    # the fiber mass of D(lam, eps) tends to eps1 plus the section term; the flux route
    # around an isolated zero gives eps^2 + eps1 (1 + 2 m alpha eps^2) up to e^{-2h}
    i = int(top_zeros[2])
    for eps in (0.25, 0.1):
        a = nc.small_disc_area(i, eps, model).area
        assert a == pytest.approx(eps * eps + model.eps1 * (1 + 2 * model.m_alpha * eps * eps),
                                  rel=1e-6)


def test_small_disc_window(model, top_zeros):
    for i in top_zeros:
        w = nc.small_disc_window(int(i), 0.25, model)
        assert w.inside and w.o_ratio <= 0.3


def test_small_disc_limit(model, top_zeros):
    a, _ = nc.small_disc_limit(int(top_zeros[0]), model)
    assert a >= 0.5 * model.eps1


def test_small_disc_additive(model, top_zeros):
    i = int(top_zeros[1])
    assert nc.small_disc_area(i, 0.1, model).area <= nc.small_disc_area(i, 0.2, model).area


def test_small_disc_domain(model):
    with pytest.raises(ValueError):
        nc.small_disc_area(0, 0.6, model)


def test_length_area_empty(empty_model):
    flat = empty_model.with_eps1(0.0)
    r = 10.0
    ratio = nc.length_area_ratio(r, flat)
    assert ratio == pytest.approx(2 * math.sqrt(math.pi) / r, rel=1e-6)


def test_length_area_scan(model):
    r = np.exp(np.linspace(0.0, math.log(160.0), 200))
    ratios = [nc.length_area_ratio(float(x), model, area=nc.flux_disc_area(float(x), model).area)
              for x in r]
    assert min(ratios) > 0
    assert nc.log_measure_of_bad_radii(r, ratios) <= math.log(8.0)


def test_quadrature_error_estimate_is_honest(model):
    r = 40.0
    res = integrate_disc(model, 0j, r, QuadratureGrid.for_radius(r, 0.3))
    exact = nc.flux_disc_area(r, model).area
    assert abs(res.total - exact) <= 10 * res.estimated_error + 1e-9 * exact
