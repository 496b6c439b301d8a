import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beerindex.constructions import (
    GeneralPositionError,
    NetConstructionError,
    PuncturedBox,
    comb_polygon,
    comb_tooth,
    cone_lift,
    ellipsoid_contains,
    hyperplane_partition,
    jensen_check,
    load_box,
    net_size,
    punctured_box_net,
    sample_ellipsoid,
    vc_bound,
    verify_net,
)
from beerindex.fixtures import unit_square
from beerindex.geom_core import Segment


def test_comb_small_cases():
    P = comb_polygon(1, 0.1)
    assert {tuple(v) for v in P.vertices} == {(0, 0), (0, 1), (1, 1)}
    P = comb_polygon(2, 0.01)
    assert len(P) == 7
    assert {tuple(v) for v in P.vertices} == {(0, 0), (0, 1), (1, 1), (0.01, 0.01), (0.02, 0.01), (2, 1), (3, 1)}


def _shrunk(a, b, eps=1e-9):
    # notch vertices such as ((2i+1)delta, delta) are rounded, so sight lines that run
    # exactly along a tooth edge are tested a hair inside
    a, b = np.asarray(a, float), np.asarray(b, float)
    return Segment(tuple(a + eps * (b - a)), tuple(b + eps * (a - b)))


@pytest.mark.parametrize("n,delta", [(2, 0.1), (4, 1e-3), (8, 1e-4), (16, 1e-4), (5, 0.09)])
def test_comb_invariants(n, delta):
    P = comb_polygon(n, delta)
    assert len(P) == 4 * n - 1
    assert abs(P.area - n / 2) <= 3 * n * delta
    # every tooth triangle lies in the comb
    for i in range(n):
        T = comb_tooth(i)
        c = T.mean(axis=0)
        T = c + (1 - 1e-9) * (T - c)
        for a, b in ((0, 1), (1, 2), (2, 0)):
            assert P.contains_segment(Segment(tuple(T[a]), tuple(T[b])))


def test_comb_rejects_wide_sliver():
    with pytest.raises(ValueError):
        comb_polygon(4, 0.125)
    with pytest.raises(ValueError):
        comb_polygon(0, 0.01)


def test_comb_star_shaped_from_apex():
    # all tooth edges lie on lines through the origin, so the kernel is the single
    # point (0,0); sampled points near it fail, the apex itself sees every point
    P = comb_polygon(6, 1e-3)
    X = P.sample_points(5000, np.random.default_rng(1))
    assert P.segments_inside(np.zeros_like(X), X).all()
    rng = np.random.default_rng(0)
    cands = np.c_[rng.random(200), rng.random(200)] * 1e-3
    cands = cands[P.contains_points(cands)]
    assert len(cands)
    assert not any(all(P.contains_segment(_shrunk(c, v)) for v in P.vertices) for c in cands)


def test_net_sizes():
    assert vc_bound(2) == 6 and vc_bound(3) == 10
    assert net_size(2, 16) == 768
    assert net_size(2, 64) == 4608
    assert net_size(3, 16) == 1280


def test_punctured_box_net():
    B = punctured_box_net(2, 16, seed=7)
    assert len(B.points) == 768
    assert np.all((B.points > 0) & (B.points < 1))
    assert B.report["violations"] == 0 and B.report["trials"] == 1000
    assert B.epsilon == 0.25
    B2 = punctured_box_net(2, 16, seed=7)
    assert np.array_equal(B.points, B2.points)
    assert not np.array_equal(B.points, punctured_box_net(2, 16, seed=8).points)


def test_net_construction_failure_reports():
    # an absurdly demanding adversary: ellipsoids of volume 1/r can be so thin that a
    # tiny net misses them; with r = 2 the net is large enough, so force failure by trials on an empty box
    B = PuncturedBox(2, 16, np.empty((0, 2)))
    rep = verify_net(B, 50, np.random.default_rng(0))
    assert rep["violations"] == 50
    with pytest.raises(ValueError):
        punctured_box_net(1, 16, 0)
    err = NetConstructionError("x", {"violations": 3})
    assert err.report["violations"] == 3


def test_grid_net_stabs_round_ellipsoids():
    # a 32x32 lattice has spacing 1/32; a disc of area 1/16 has radius 0.141 >> spacing
    g = (np.arange(32) + 0.5) / 32
    pts = np.array([(x, y) for x in g for y in g])
    B = PuncturedBox(2, 16, pts)
    rep = verify_net(B, 300, np.random.default_rng(1), max_ratio=1.0)
    assert rep["violations"] == 0


def test_ellipsoids_have_target_volume_and_fit():
    rng = np.random.default_rng(2)
    for d in (2, 3):
        for _ in range(20):
            c, Q, ax = sample_ellipsoid(d, 1 / 16, rng)
            unit_ball = np.pi if d == 2 else 4 * np.pi / 3
            assert unit_ball * np.prod(ax) == pytest.approx(1 / 16, rel=1e-12)
            assert 1 <= ax.max() / ax.min() <= 8 + 1e-9
            # extreme points along each coordinate stay inside the box
            half = np.sqrt(((Q * ax) ** 2).sum(axis=1))
            assert np.all(c - half >= 0) and np.all(c + half <= 1)
            assert ellipsoid_contains(c, Q, ax, c[None])[0]


def test_box_json(tmp_path):
    B = punctured_box_net(2, 8, seed=3)
    f = tmp_path / "b.json"
    f.write_text(json.dumps(B.to_json()))
    B2 = load_box(f)
    assert np.array_equal(B.points, B2.points) and B2.r == 8 and B2.seed == 3


def test_grid_matches_naive_scan():
    B = punctured_box_net(2, 16, seed=1)
    T = np.random.default_rng(3).random((10000, 3, 2))
    assert np.array_equal(B.hull_hits(T), B.hull_hits(T, naive=True))
    B3 = punctured_box_net(3, 8, seed=1)
    T = np.random.default_rng(4).random((10000, 4, 3))
    assert np.array_equal(B3.hull_hits(T), B3.hull_hits(T, naive=True))
    assert np.array_equal(B3.hull_hits(T[:, :3]), B3.hull_hits(T[:, :3], naive=True))


def test_partition_single_line():
    cells = hyperplane_partition([(0.25, 0.75)], [(0.5, 0.5)])
    assert len(cells) == 2
    assert sum(c.exact_area for c in cells) == 1
    assert sorted(c.area for c in cells) == [0.5, 0.5]


def test_partition_three_points():
    rng = np.random.default_rng(0)
    cells = hyperplane_partition([rng.random(2)], rng.random((3, 2)))
    assert len(cells) == 6
    assert sum(c.exact_area for c in cells) == Fraction(1)
    assert all(c.is_convex() for c in cells)
    assert sum(c.area**2 for c in cells) >= 1 / 6


def test_partition_random_configurations():
    rng = np.random.default_rng(18)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        cells = hyperplane_partition([rng.random(2)], rng.random((n, 2)))
        j = jensen_check(cells)
        assert j["cells"] == 2 * n
        assert abs(j["area_sum"] - 1) <= 1e-9
        assert j["ok"] and j["sum_sq"] >= 1 / (2 * n)
        assert all(c.is_convex() for c in cells)


def test_partition_general_position_error():
    with pytest.raises(GeneralPositionError):
        hyperplane_partition([(0.25, 0.25)], [(0.5, 0.5)])  # line through the origin
    with pytest.raises(GeneralPositionError):
        hyperplane_partition([(0.2, 0.6)], [(0.4, 0.6), (0.8, 0.6)])  # collinear with A1


def test_partition_mc_in_3d():
    rng = np.random.default_rng(1)
    cells = hyperplane_partition(rng.random((2, 3)), rng.random((3, 3)), rng=rng, samples=50000)
    assert sum(c.area for c in cells) == pytest.approx(1.0)
    assert jensen_check(cells)["ok"]


def test_cone_membership():
    C = cone_lift(unit_square())
    assert C.contains([(0.25, 0.25, 0.5)])[0]
    assert C.contains([(0, 0, 0)])[0]
    assert not C.contains([(0.6, 0.1, 0.5)])[0]
    assert not C.contains([(0.5, 0.5, 1.5)])[0]
    assert C.volume == pytest.approx(1 / 3)


def test_cone_sampler_t_law():
    C = cone_lift(comb_polygon(4, 1e-3))
    X = C.sample(100000, np.random.default_rng(5))
    assert C.contains(X).all()
    t = np.sort(X[:, 2])
    n = len(t)
    emp_hi = np.arange(1, n + 1) / n
    D = max(np.max(emp_hi - t**3), np.max(t**3 - (emp_hi - 1 / n)))
    # Kolmogorov distribution: P(sqrt(n) D > 1.949) = 0.001
    assert np.sqrt(n) * D < 1.949


def test_cone_over_convex_base_is_convex():
    C = cone_lift(unit_square())
    T = C.sample(3000, np.random.default_rng(0)).reshape(1000, 3, 3)
    assert C.hulls_inside(T, 2).all()


@given(st.integers(2, 6), st.integers(0, 1000))
def test_partition_cell_count_property(n, seed):
    rng = np.random.default_rng(seed)
    try:
        cells = hyperplane_partition([rng.random(2)], rng.random((n, 2)))
    except GeneralPositionError:
        return
    assert len(cells) == 2 * n
    assert sum(c.exact_area for c in cells) == 1
