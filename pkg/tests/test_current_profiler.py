import math

import numpy as np
import pytest

from ahlfors_lab import current_profiler as prof
from ahlfors_lab import lattice_locus as ll
from ahlfors_lab.surface_geometry import SurfaceModel


@pytest.fixture(scope="module")
def case2_model(cfg):
    loc = ll.build_zero_locus(ll.RadiiSchedule((40.0,), labels=(4,)), None, cfg)
    return SurfaceModel(0.05, 4, 0.1, loc)


@pytest.fixture(scope="module")
def case3_model(cfg):
    loc = ll.build_zero_locus(ll.RadiiSchedule((40.0,), labels=(2,)), None, cfg)
    return SurfaceModel(0.05, 4, 0.1, loc)


def _part(ys, eps_t=0.1, log_m=20.0):
    return prof.RegionPartition(log_m, eps_t, (complex(ys[0]),))


def test_fractions_sum_to_one(model, ys):
    p = prof.mass_profile(40.0, _part(ys), model)
    assert math.fsum(p.fractions) == pytest.approx(1.0, abs=1e-12)
    assert p.labels == ("U_inf", "tube_y1", "remainder")
    assert np.all(p.fractions >= 0)


def test_empty_locus_escapes(empty_model):
    part = prof.RegionPartition(10.0, 0.1, ())
    u = [prof.mass_profile(r, part, empty_model).fraction("U_inf") for r in (5.0, 10.0, 20.0)]
    assert u[0] == 0.0 and u[0] < u[1] < u[2]
    assert u[2] > 0.7


def test_nevanlinna_profile_lags(empty_model):
    part = prof.RegionPartition(10.0, 0.1, ())
    for r in (10.0, 20.0):
        a = prof.mass_profile(r, part, empty_model).fraction("U_inf")
        n = prof.nevanlinna_profile(r, part, empty_model)
        assert math.fsum(n.fractions) == pytest.approx(1.0, abs=1e-12)
        assert n.fraction("U_inf") < a


def test_nevanlinna_total_is_order(model, ys):
    from ahlfors_lab.nevanlinna_calculus import order_function

    n = prof.nevanlinna_profile(30.0, _part(ys), model)
    assert n.total_area == pytest.approx(order_function(30.0, model), rel=1e-12)


def test_case_two_tube_is_charged(case2_model, ys):
    p = prof.mass_profile(40.0, _part(ys), case2_model)
    n = ll.count_in_class(case2_model.locus, ys[0], ll.Disc(0j, 40.0))
    # every zero carries about eps1 of fiber mass inside its tube
    assert p.fraction("tube_y1") >= 0.5 * case2_model.eps1 * n / p.total_area
    assert p.fraction("U_inf") > 0


def test_case_one_tube_is_thin(model, ys):
    p = prof.mass_profile(40.0, _part(ys), model)
    assert p.fraction("tube_y1") < 0.02


def test_tubes_shrink(case2_model, ys):
    t = [prof.mass_profile(40.0, _part(ys, e), case2_model).fraction("tube_y1")
         for e in (0.2, 0.1, 0.05)]
    assert t[0] >= t[1] >= t[2] > 0


def test_case_three_log_averaged_tube(case3_model, ys):
    r = 40.0
    m = case3_model
    n = prof.nevanlinna_profile(r, _part(ys), m)
    tube_mass = n.fraction("tube_y1") * n.total_area
    lam = m.locus.points
    in_class = (ll.torus_distance(m.locus.offsets, ys[0]) < 1e-9) & (np.abs(lam) < 0.9 * r)
    assert ll.count_in_class(m.locus, ys[0], ll.Disc(0j, 0.9 * r)) == int(np.sum(in_class))
    bound = 0.5 * m.eps1 * math.fsum(np.log(r / np.abs(lam[in_class])))
    assert tube_mass >= bound > 0


def test_third_trend(model, ys):
    seq = prof.profile_sequence(prof.SubsequenceSelector("THIRD"), _part(ys), model)
    assert [j for j, _ in seq] == [1, 2]
    u = [p.fraction("U_inf") for _, p in seq]
    assert u[1] > u[0]


def test_diffuse_remainder(model, ys):
    sel = prof.SubsequenceSelector.parse("CASE(empty,odd)")
    seq = prof.profile_sequence(sel, _part(ys, 0.05), model)
    assert [r for _, r in sel.entries(model)] == [40.0]
    assert seq[0][1].fraction("remainder") > 0.05


def test_selector_parse_and_range(model):
    s = prof.SubsequenceSelector.parse("CASE({1},even)")
    assert s.index_set == ll.IndexSet.of([1]) and s.parity == "even"
    with pytest.raises(prof.ProfileRangeError):
        s.entries(model)
    with pytest.raises(ValueError):
        prof.SubsequenceSelector.parse("HALF")


def test_overlapping_tubes_rejected():
    ys = (0.2 + 0.0j, 0.2 + 0.1j)
    with pytest.raises(ValueError):
        prof.RegionPartition(20.0, 0.1, ys)


def test_probe_vanishes_with_eps(model):
    assert prof.horizontal_probe_mass(40.0, 0.5, 0.0, 0.4, model) == 0.0
    a = prof.horizontal_probe_mass(40.0, 0.5, 0.01, 0.4, model)
    b = prof.horizontal_probe_mass(40.0, 0.5, 0.1, 0.4, model)
    assert 0 < a < 0.02 * b


def test_probe_per_zero_bound(model):
    eps, delta = 0.1, 0.4
    per = prof.probe_masses(160.0, 0.5, eps, delta, model)
    kappa = float(np.max(per)) / (eps * eps + delta * delta)
    assert kappa < 1.0
    # the isolated-zero mass is eps1 times the spherical area of the w-disc
    fs = model.eps1 * eps * eps / (1 + abs(0.5) ** 2) / (1 + abs(0.5 + eps) ** 2)
    assert np.median(per) == pytest.approx(fs, rel=0.2)


def test_argument_principle(model, top_zeros):
    for i in top_zeros:
        for v in (0, 0.5, 1j, -1.5 + 0.5j, 2.0):
            assert prof.argument_principle_count(int(i), 0.4, v, model) == 1


def test_argument_principle_rejects_large_target(model, locus):
    # a first-annulus zero has |Psi| ~ e^{h} delta' on the contour with h of a few hundred
    i = int(np.nonzero(locus.annulus == 1)[0][0])
    with pytest.raises(prof.InadmissibleContourError):
        prof.argument_principle_count(i, 0.4, 1e300, model)


def test_ball_area_flat():
    for rho in (0.05, 0.1, 0.3):
        a = prof.graph_ball_area(prof.flat_chart, rho, math.log(0.4))
        assert a == pytest.approx(math.pi * rho * rho, rel=1e-12)


def test_ball_area_at_zeros(model, locus):
    i = int(np.nonzero(locus.annulus == 1)[0][7])
    b = prof.ball_area_lower_bound_check(i, 0.1, model)
    assert b.passed and b.area >= b.flat_area * 0.95


def test_ball_area_precondition(model):
    with pytest.raises(prof.ChartError):
        prof.ball_area_lower_bound_check(0, 0.5, model, delta_prime=0.4)
