import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlfors_lab import torus_examples as tx


def test_trivial_solution_at_tiny_radius():
    lam1, lam2, z, _ = tx.intersection_pairs(0.1, tx.TorusLineModel())
    assert len(lam1) >= 1
    assert np.any((lam1 == 0) & (lam2 == 0) & (z == 0))


def test_count_precondition():
    with pytest.raises(ValueError):
        tx.torus_intersection_count(0.5, tx.TorusLineModel())


@pytest.mark.parametrize("r", [1.3, 3.7, 5.2])
def test_count_against_brute_force(r):
    assert tx.torus_intersection_count(r, tx.TorusLineModel()) == tx.brute_force_count(r, tx.TorusLineModel())


def test_count_against_brute_force_general_map():
    m = tx.TorusLineModel(m1=1.0, m2=1j, b1=0.3, b2=0.1j)
    for r in (1.7, 3.1):
        assert tx.torus_intersection_count(r, m) == tx.brute_force_count(r, m)


def test_quadratic_growth():
    m = tx.TorusLineModel()
    counts = {r: tx.torus_intersection_count(r, m) for r in (20.0, 40.0, 80.0, 160.0)}
    for r in (20.0, 40.0, 80.0):
        assert counts[2 * r] / counts[r] <= 5.0
    q = [c / r**2 for r, c in counts.items()]
    assert max(q) / min(q) <= 2.0


def test_fiber_bound():
    m = tx.TorusLineModel()
    fibers = tx.fiber_counts(80.0, m)
    # admissible lam2 lie in a disc of radius |det| R: at most the Gaussian integers in it
    disc = abs(m.det) * m.domain_radius
    cap = sum(1 for a in range(-3, 4) for b in range(-3, 4) if a * a + b * b < (disc + 1) ** 2)
    assert fibers.max() <= min(5, cap)


def test_solutions_are_consistent():
    m = tx.TorusLineModel(m1=1.0, m2=1j, b1=0.3, b2=0.1j)
    lam1, lam2, z, y = tx.intersection_pairs(10.0, m)
    assert np.allclose(z, m.m1 * y + lam1 + m.b1, atol=1e-12)
    assert np.allclose(m.slope * z, m.m2 * y + lam2 + m.b2, atol=1e-12)


def test_model_guards():
    with pytest.raises(tx.TorusModelError):
        tx.TorusLineModel(slope=1.5)
    with pytest.raises(tx.TorusModelError):
        tx.TorusLineModel(m1=0, m2=0)
    with pytest.raises(tx.TorusModelError):
        tx.TorusLineModel(m1=1.0, m2=1.4142135623730951)
    with pytest.raises(tx.TorusModelError):
        tx.TorusLineModel(domain_radius=0.5)


def test_harmonic_constant_examples():
    assert tx.harmonic_constant(1, 0, 0, 0, 0.37) == 1
    assert tx.harmonic_constant(0, 1, 0, 0, math.sqrt(2)) == pytest.approx(2.0, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(*[st.integers(min_value=-9, max_value=9)] * 4)
def test_harmonic_roots(a1, a2, a3, a4):
    if a1 == a2 == 0 and a3 + a4 == 0:
        return
    roots = tx.harmonic_real_roots(a1, a2, a3, a4)
    assert len(roots) <= 2
    for s in roots:
        assert abs(tx.harmonic_constant(a1, a2, a3, a4, s)) <= 1e-9 * (1 + s * s) * 20
    if a2 != 0:
        disc = (a3 + a4) ** 2 - 4 * a1 * a2
        assert len(roots) == (0 if disc < 0 else 1 if disc == 0 else 2)


def test_mass_near_curve_trend():
    m = tx.TorusLineModel()
    f = [tx.torus_line_mass_near_curve(40.0, m, e) for e in (0.2, 0.1, 0.05)]
    assert all(0 <= x <= 1 for x in f)
    assert f[0] > f[1] > f[2]
    # a complex curve in a complex surface has real codimension two: tube area ~ eps^2
    assert 3.0 < f[0] / f[1] < 5.0 and 3.0 < f[1] / f[2] < 5.0
    assert tx.torus_line_mass_near_curve(40.0, m, 1.5, 5000) == 1.0
    assert tx.torus_line_mass_near_curve(40.0, m, 0.0) == 0.0


def test_curve_distance_on_curve():
    m = tx.TorusLineModel(m1=1.0, m2=1j)
    # z = y with slope z = i y + lattice is on the curve only at special points; z = 0 is one
    assert tx.curve_distance(np.array([0j]), m)[0] == pytest.approx(0.0, abs=1e-15)
