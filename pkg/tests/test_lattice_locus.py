import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlfors_lab import lattice_locus as ll


def _key(points):
    return set(zip(np.round(points.real, 9), np.round(points.imag, 9)))


def test_small_exhaustive_annulus():
    r = 2.83
    pts = ll.enumerate_annulus_lattice(r, 1)
    want = {complex(a, b) for a in range(-3, 4) for b in range(-3, 4)
            if r * r / 4 <= a * a + b * b <= r * r}
    assert set(pts.tolist()) == want
    # r/2 = 1.415 just misses 1 + i; the ring keeps |mu|^2 in {4, 5, 8}
    assert len(pts) == 16 and 1 + 1j not in want and 2 + 2j in want


def test_count_against_double_loop(cfg):
    pts = ll.enumerate_annulus_lattice(100.0, cfg)
    brute = sum(1 for a in range(-100, 101, 5) for b in range(-100, 101, 5)
                if 2500 <= a * a + b * b <= 10000)
    assert len(pts) == brute


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=11.0, max_value=300.0), st.integers(min_value=5, max_value=12))
def test_annulus_symmetry(r, c):
    if not r > 2 * c:
        return
    pts = ll.enumerate_annulus_lattice(r, c)
    base = _key(pts)
    assert base == _key(-pts) == _key(1j * pts)
    assert np.all(np.abs(pts) <= r) and np.all(np.abs(pts) >= r / 2)


def test_rejects_small_annulus(cfg):
    with pytest.raises(ll.EmptyAnnulusError):
        ll.enumerate_annulus_lattice(10.0, cfg)


def test_config_rejects_small_c():
    with pytest.raises(ll.LocusError):
        ll.LatticeConfig(4)


def test_sparse_grid_first_points():
    assert ll.sparse_grid(1)[0] == pytest.approx(0.5)
    p4 = ll.sparse_grid(4)
    # k = 2: spacing 1/6 along Re and 1/3 along Im
    d = np.abs(p4[:, None] - p4[None, :])
    assert np.min(d[~np.eye(4, dtype=bool)]) == pytest.approx(1 / 6)
    assert np.all(p4.real >= 0.5) and np.all(p4.real < 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=2000))
def test_sparse_grid_stays_in_strip(n):
    p = ll.sparse_grid(n)
    assert len(p) == n and len(set(p.tolist())) == n
    assert np.all((p.real >= 0.5) & (p.real < 1) & (p.imag >= 0) & (p.imag < 1))


def test_sparse_grid_scan_large_n():
    assert ll.sparse_bound_violations(ll.sparse_grid(400), 8.0, (0.05, 0.1, 0.2)) == []


def test_fitted_sparse_kappa_matches_scan():
    pts = ll.sparse_grid(50)
    k = ll.fitted_sparse_kappa(pts, (0.05, 0.1, 0.2))
    assert ll.sparse_bound_violations(pts, k, (0.05, 0.1, 0.2)) == []
    assert ll.sparse_bound_violations(pts, k - 0.5, (0.05, 0.1, 0.2)) != []


def test_subsequence_index_examples():
    assert [ll.subsequence_index(ll.IndexSet.empty(), j) for j in (1, 2, 3)] == [1, 3, 5]
    assert ll.subsequence_index(ll.IndexSet.all(), 1) == 2
    assert ll.subsequence_index(ll.IndexSet.all(), 2) == 6


def test_subsequence_partition():
    seen = set()
    for n in range(1, 6):
        for j in range(1, 21):
            i = ll.subsequence_index(ll.sigma_inverse(n), j)
            assert i not in seen
            seen.add(i)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=1 << 40))
def test_decode_inverts_index(i):
    iset, j = ll.decode_annulus_index(i)
    assert ll.subsequence_index(iset, j) == i


@settings(max_examples=100, deadline=None)
@given(st.frozensets(st.integers(min_value=1, max_value=12), min_size=1))
def test_sigma_round_trip(elements):
    iset = ll.IndexSet.of(elements)
    assert ll.sigma_inverse(ll.sigma(iset)) == iset


def test_index_set_parse():
    assert ll.IndexSet.parse("empty") == ll.IndexSet.empty()
    assert ll.IndexSet.parse("all") == ll.IndexSet.all()
    assert ll.IndexSet.parse("{1,3}") == ll.IndexSet.of([1, 3])


def _case(tag, elements=(), weights=(), ys=None):
    ys = tuple(complex(y) for y in (ll.marked_points(16) if ys is None else ys))
    iset = ll.IndexSet.of(elements) if elements else (
        ll.IndexSet.all() if tag.startswith("III") else ll.IndexSet.empty())
    return ll.OffsetCase(tag, iset, tuple(weights), ys)


def _hits(x, y):
    return int(np.sum(np.abs(x - y) < 1e-12))


def test_case_two_single_class(ys):
    x = ll.assign_offsets(np.arange(10, dtype=complex), _case("II", [1]))
    assert _hits(x, ys[0]) == 10


def test_case_two_prime_floor_counts(ys):
    x = ll.assign_offsets(np.arange(10, dtype=complex), _case("II_prime", [1, 2]))
    assert _hits(x, ys[0]) == 2 and _hits(x, ys[1]) == 2
    assert np.sum(x.real >= 0.5) == 6


def test_case_three_floor_counts(ys):
    w = ll.geometric_weights(16)
    x = ll.assign_offsets(np.arange(100, dtype=complex), _case("III", weights=w))
    for a, y in zip(w, ys):
        assert _hits(x, y) >= math.floor(a * 100)
    assert 50 <= _hits(x, ys[0]) <= 100


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=500), st.integers(min_value=0, max_value=2**31))
def test_seed_only_permutes(n, seed):
    case = _case("II_prime", [1, 2, 3])
    a = ll.assign_offsets(np.arange(n, dtype=complex), case)
    b = ll.assign_offsets(np.arange(n, dtype=complex), case, seed=seed)
    assert sorted(a.tolist(), key=lambda z: (z.real, z.imag)) == \
        sorted(b.tolist(), key=lambda z: (z.real, z.imag))


def test_marked_points_in_strip():
    y = ll.marked_points(16)
    assert np.all((y.real >= 1 / 6) & (y.real < 1 / 3) & (y.imag >= 0) & (y.imag < 1))


def test_single_annulus_locus(cfg):
    loc = ll.build_zero_locus(ll.RadiiSchedule((40.0,)), None, cfg)
    assert len(loc) == len(ll.enumerate_annulus_lattice(40.0, cfg))
    assert loc.min_separation() > 2


def test_empty_schedule(cfg):
    loc = ll.build_zero_locus(ll.RadiiSchedule(()), None, cfg)
    assert len(loc) == 0


def test_second_batch_radius(locus):
    assert np.all(np.abs(locus.batch(3)) >= 80 - math.sqrt(2))


def test_separation(locus, cfg):
    assert locus.min_separation() >= cfg.min_separation
    brute = min(np.min(np.abs(locus.points[k] - np.delete(locus.points, k)))
                for k in range(0, len(locus), 37))
    assert locus.min_separation() <= brute


def test_schedule_validation(cfg):
    with pytest.raises(ll.LocusError):
        ll.RadiiSchedule((40.0, 60.0))
    with pytest.raises(ll.LocusError):
        ll.RadiiSchedule((40.0, 160.0), labels=(3, 1))
    with pytest.raises(ll.LocusError):
        ll.RadiiSchedule((20.0,)).validate_for(cfg)


def test_class_counts(cfg, locus, ys):
    assert ll.count_in_class(locus, ys[0], ll.Batch(1)) == 0
    loc2 = ll.build_zero_locus(ll.RadiiSchedule((40.0,), labels=(4,)), None, cfg)
    assert set(loc2.case_tag) == {"II"}
    assert ll.count_in_class(loc2, ys[0], ll.Batch(4)) == len(loc2)


def test_class_count_case_three(ys):
    mu = np.arange(100, dtype=complex) * 10
    x = ll.assign_offsets(mu, _case("III", weights=ll.geometric_weights(16)))
    loc = ll.ZeroLocus(mu + x, mu, x, np.full(100, 2), np.ones(100, dtype=int),
                       ("III",) * 100, 5, (40.0,), (2,))
    assert 50 <= ll.count_in_class(loc, ys[0], ll.Batch(2)) <= 100


def test_torus_distance():
    assert ll.torus_distance(3.25 + 7j, 0.25) == pytest.approx(0.0)
    assert ll.torus_distance(0.9, 0.1) == pytest.approx(0.2)


@pytest.mark.parametrize("c", [5, 10])
@pytest.mark.parametrize("labels", [(1, 3), (4, 12)])
def test_lattice_sums(c, labels):
    loc = ll.build_zero_locus(ll.RadiiSchedule.desk(c, 2, labels=labels), None, ll.LatticeConfig(c))
    for s1, s2 in ll.lattice_sums(loc).values():
        assert s1 <= 25 and s2 <= 25
