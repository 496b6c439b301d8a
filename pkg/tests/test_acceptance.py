"""End-to-end acceptance criteria at their stated sizes and tolerances.

Every test records one PASS/FAIL line; pytest prints them together in an
"acceptance criteria" section at the end of the run.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import verdict
from beerindex.constructions import (
    GeneralPositionError,
    comb_polygon,
    cone_lift,
    hyperplane_partition,
    jensen_check,
    net_size,
    punctured_box_net,
)
from beerindex.cover2d import CoverContext, align_to_x_axis, coefficient_minimum, crossing_region_check, verify_cover
from beerindex.estimators import (
    PolygonRegion,
    UnitBox,
    estimate_beer_index,
    estimate_convexity_ratio,
    estimate_k_chain,
    estimate_k_index,
    inequality_report,
    k_chain_acceptance,
    net_lower_bound,
)
from beerindex.fixtures import (
    l_shape,
    regular_polygon,
    rooted_l_shape,
    rooted_on_edge,
    rooted_spiral,
    rooted_square,
    spiral,
    t_shape,
    unit_square,
)
from beerindex.geom_core import Segment
from beerindex.polygon import RootedPolygon
from beerindex.simplex_boxes import one_sided_box_volume, two_sided_box_volume, verify_box_containment
from beerindex.visibility import StructuralViolationError, base_segment, level_decomposition, sees_root

from oracles.l_shape_grid import grid_oracle

L_SHAPE_GRID_ORACLE = 0.8888983313888889  # exact 400x400 grid value, frozen before the estimator existed


def comb_halves():
    return comb_polygon(4, 1e-3).split_by_diagonal(Segment((0, 0), (2.5, 1)))


def rooted_fixtures():
    h1, h2 = comb_halves()
    return {
        "square": rooted_square(),
        "hexagon": rooted_on_edge(regular_polygon(6), 0),
        "comb_half_a": h1,
        "comb_half_b": h2,
        "spiral": rooted_spiral(),
        "L": rooted_l_shape(),
        "T_stem": RootedPolygon(t_shape(), Segment((1, 3), (2, 3))),
        "comb_notch": RootedPolygon(comb_polygon(3, 0.01), Segment((0.01, 0.01), (0.02, 0.01))),
    }


def test_01_convex_sanity():
    t0 = time.perf_counter()
    P = unit_square()
    b = estimate_beer_index(P, 100000, 1)
    c = estimate_convexity_ratio(P, seed=1)
    b1, b2 = estimate_k_chain(P, 100000, 2)
    dt = time.perf_counter() - t0
    ok = b.value == 1.0 and c.lower >= 0.5 - 1e-12 and b1.value == b2.value == 1.0 and dt < 5
    assert verdict(1, "convex sanity", ok,
                   f"b={b.value}, c_lower={c.lower:.6f}, b1={b1.value}, b2={b2.value}, {dt:.2f}s")


@pytest.mark.parametrize("n", [4, 8, 16])
def test_02_comb_reproduction(n):
    t0 = time.perf_counter()
    P = comb_polygon(n, 1e-4)
    b = estimate_beer_index(P, 10**6, 100 + n)
    c = estimate_convexity_ratio(P, seed=n)
    rows = inequality_report(b=b, c=c)
    dt = time.perf_counter() - t0
    ok = 0.9 <= b.value * n <= 1.1 and 0.9 <= c.lower * n <= 1.05 and all(r["pass"] for r in rows) and dt < 120
    assert verdict(2, f"comb n={n}", ok,
                   f"b*n={b.value * n:.4f}, c_lower*n={c.lower * n:.4f}, "
                   + ", ".join(f"{r['name']}:{'ok' if r['pass'] else 'FAIL'}" for r in rows) + f", {dt:.1f}s")


def test_03_l_shape_oracle():
    t0 = time.perf_counter()
    ref, _ = grid_oracle(400)
    t_oracle = time.perf_counter() - t0
    t0 = time.perf_counter()
    e = estimate_beer_index(l_shape(), 10**6, 2024)
    t_est = time.perf_counter() - t0
    sigma = math.sqrt(ref * (1 - ref) / e.samples)
    z = abs(e.value - ref) / sigma
    ok = ref == L_SHAPE_GRID_ORACLE and z <= 3 and t_oracle < 300 and t_est < 30
    assert verdict(3, "L-shape vs grid oracle", ok,
                   f"b={e.value:.6f}, oracle={ref:.6f}, |diff|={z:.2f} sigma, "
                   f"oracle {t_oracle:.1f}s, estimator {t_est:.1f}s")


def test_04_cover_property():
    g, cmin = coefficient_minimum()
    ok = 86.70 < cmin < 86.71
    details = []
    for i, (name, R) in enumerate(rooted_fixtures().items()):
        rep = verify_cover(R, CoverContext.for_polygon(R), 10000, np.random.default_rng(40 + i))
        ok &= rep.checked == 10000 and rep.violations == 0 and rep.max_cover_area_ratio <= 87
        details.append(f"{name} {rep.violations}/{rep.checked} max {rep.max_cover_area_ratio:.1f}K")
    assert verdict(4, "trapezoid cover", ok, f"coefficient min {cmin:.5f} at gamma={g:.4f}; " + "; ".join(details))


def crossing_cases():
    comb = comb_polygon(8, 1e-4)
    L, T, sp = l_shape(), t_shape(), spiral()
    return {
        "square": (unit_square(), Segment((0, 0.5), (1, 0.5))),
        "comb8": (comb, comb.extend_to_diagonal(Segment((0, 0), (7.25, 0.5)))),
        "L": (L, L.extend_to_diagonal(Segment((0.1, 0.1), (0.4, 0.4)))),
        "T": (T, T.extend_to_diagonal(Segment((1.5, 0.5), (1.5, 2.5)))),
        "spiral": (sp, sp.extend_to_diagonal(Segment((0.2, 0.0), (3.0, 0.0)))),
    }


def test_05_crossing_region():
    ok, details = True, []
    rng = np.random.default_rng(5)
    for name, (S, ell) in crossing_cases().items():
        S2, ell2, _ = align_to_x_axis(S, ell)
        worst = 0.0
        for A in S2.sample_points(10, rng):
            rep = crossing_region_check(S2, ell2, A, S2.area, 20000, rng)
            ok &= rep["ok"]
            worst = max(worst, rep["mc_area"] / rep["bound"])
        details.append(f"{name} max mc/3K={worst:.3f}")
    assert verdict(5, "crossing region <= 3K + 3 sigma", ok, "; ".join(details))


def test_06_body_tree_invariants():
    ok, details = True, []
    rng = np.random.default_rng(6)
    for name, R in rooted_fixtures().items():
        T = level_decomposition(R)
        P = R.polygon
        X = P.sample_points(10000, rng)
        member = np.array([b.region.contains_points(X) for b in T.bodies]).sum(axis=0)
        near = np.min([b.region.boundary_distance(X) for b in T.bodies], axis=0) <= 1e-9 * P.scale
        part = bool(np.all(member[~near] == 1) and np.all(member >= 1))
        star = all(bool(sees_root(b.rooted, b.region.sample_points(1000, rng)).all()) for b in T.bodies)
        viol = checked = 0
        while checked < 10000:
            A, B = P.sample_points(4096, rng), P.sample_points(4096, rng)
            inside = P.segments_inside(A, B)
            for a, b in zip(A[inside][: 10000 - checked], B[inside][: 10000 - checked]):
                checked += 1
                try:
                    base_segment(T, Segment(tuple(a), tuple(b)))
                except StructuralViolationError:
                    viol += 1
        ok &= part and star and viol == 0
        details.append(f"{name} bodies={len(T.bodies)} partition={part} star={star} violations={viol}/{checked}")
    assert verdict(6, "body-tree invariants", ok, "; ".join(details))


def test_07_box_chain():
    ok, details = True, []
    for d, n in ((2, 10000), (3, 1000)):
        rep = verify_box_containment(UnitBox(d), 1.0, n, np.random.default_rng(70 + d))
        ok &= (rep.checked >= 0.99 * n and rep.containment_failures == 0 and rep.projection_failures == 0
               and rep.observation_max_rel_err <= 1e-9 and rep.volume_max_rel_err <= 1e-9)
        details.append(f"d={d} tuples={rep.checked} projection_failures={rep.projection_failures} "
                       f"last_point_failures={rep.containment_failures}/{rep.hull_in_S_count} "
                       f"obs_err={rep.observation_max_rel_err:.1e} vol_err={rep.volume_max_rel_err:.1e} "
                       f"(box volume {two_sided_box_volume(d, 1.0):g}*budget; "
                       f"one-sided formula would give {one_sided_box_volume(d, 1.0):g})")
    assert verdict(7, "box-chain machinery", ok, "; ".join(details))


def test_08_partition_and_punctured_box():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    ok, configs, tight = True, 0, math.inf
    while configs < 100:
        n = int(rng.integers(1, 9))
        try:
            cells = hyperplane_partition([rng.random(2)], rng.random((n, 2)))
        except GeneralPositionError:
            continue
        j = jensen_check(cells)
        configs += 1
        ok &= j["cells"] == 2 * n and abs(j["area_sum"] - 1) <= 1e-9 and j["ok"]
        tight = min(tight, j["sum_sq"] / j["bound"])
    B = punctured_box_net(2, 16, seed=2016)
    e = estimate_k_index(B, 2, 10**6, 16)
    lb_net, lb_thm = 1 / (2 * len(B.points)), net_lower_bound(2, 16)
    dt = time.perf_counter() - t0
    ok &= len(B.points) == 768 and e.ci_low >= lb_net and e.ci_low >= lb_thm and dt < 600
    assert verdict(8, "wedge partition + punctured box", ok,
                   f"{configs} partitions, min sum(l^2)/bound={tight:.3f}; |N|={len(B.points)} "
                   f"b2={e.value:.5f} CI=[{e.ci_low:.5f}, {e.ci_high:.5f}] vs 1/1536={lb_thm:.6f} "
                   f"and 1/(2|N|)={lb_net:.6f}, {dt:.1f}s")


def test_09_epsilon_net():
    B = punctured_box_net(2, 16, seed=99, max_retries=5, trials=1000)
    rep = B.report
    ok = rep["violations"] == 0 and rep["trials"] == 1000 and rep["attempt"] < 5 and len(B.points) == net_size(2, 16)
    assert verdict(9, "epsilon-net", ok,
                   f"|N|={len(B.points)}, empty ellipsoids {rep['violations']}/{rep['trials']}, "
                   f"retries used {rep['attempt']}")


def test_10_cone():
    base = comb_polygon(4, 1e-3)
    a = estimate_k_index(cone_lift(base), 1, 100000, 10)
    b = estimate_k_index(PolygonRegion(base), 1, 100000, 11)
    sig = math.hypot(a.sigma, b.sigma)
    ok = abs(a.value - b.value) <= 3 * sig
    assert verdict(10, "cone preserves b_1", ok,
                   f"cone={a.value:.5f}, base={b.value:.5f}, |diff|={abs(a.value - b.value) / sig:.2f} sigma")


def test_11_monotone_chain():
    B = punctured_box_net(3, 8, seed=11)
    T = np.random.default_rng(11).random((200000, 4, 3))
    acc = k_chain_acceptance(B, T, 3)
    samplewise = bool(np.all(acc[:, 0] >= acc[:, 1]) and np.all(acc[:, 1] >= acc[:, 2]))
    b = acc.mean(axis=0)
    ok = samplewise and b[0] >= b[1] >= b[2]
    assert verdict(11, "monotone k-chain", ok,
                   f"b1={b[0]:.5f} >= b2={b[1]:.5f} >= b3={b[2]:.5f} on {len(T)} shared tuples, samplewise={samplewise}")
