import math

import numpy as np
import pytest

from perclab import events as ev
from perclab.errors import ModeMismatch, UnsupportedPattern
from perclab.lattice import (Window, dist, neighbors, site_to_point,
                             window_for_disk)
from perclab.sampler import BLACK, WHITE, Coloring, RngSpec, sample_coloring


def grid_coloring(window, black_sites):
    bits = np.zeros(window.shape, dtype=np.uint8)
    for s in black_sites:
        bits[window.grid_of(s)] = 1
    return Coloring(window, bits)


def greedy_path(a, b):
    """A lattice path from a to b (each step reduces the distance)."""
    path = [a]
    cur = a
    while cur != b:
        cur = min(neighbors(cur), key=lambda t: dist(t, b))
        path.append(cur)
    return path


def all_black(window):
    return Coloring(window, np.ones(window.shape, dtype=np.uint8))


def all_white(window):
    return Coloring(window, np.zeros(window.shape, dtype=np.uint8))


# --- arm events -------------------------------------------------------------


def test_all_black_disk_arm_words():
    w = window_for_disk((0.0, 0.0), 6.0)
    c = all_black(w)
    assert ev.arm_event(c, ev.ArmEvent((0, 0), 0.0, 5.0, ev.ArmPattern("B")))
    assert not ev.arm_event(c, ev.ArmEvent((0, 0), 0.0, 5.0,
                                           ev.ArmPattern("BWBW")))


def test_painted_sectors_bwbw():
    w = window_for_disk((0.0, 0.0), 6.0)
    bits = np.zeros(w.shape, dtype=np.uint8)
    for s in w.sites():
        x, y = site_to_point(s)
        ang = math.degrees(math.atan2(y, x)) % 360.0
        sector = int(((ang + 45.0) % 360.0) // 90.0)
        if sector in (0, 2):
            bits[w.grid_of(s)] = 1
    c = Coloring(w, bits)
    spec = ev.ArmEvent((0, 0), 0.0, 5.0, ev.ArmPattern("BWBW"))
    assert ev.arm_event(c, spec)
    from perclab.oracle import _Bits, naive_arm_event
    colors = {s: (BLACK if bits[w.grid_of(s)] else WHITE) for s in w.sites()}
    assert naive_arm_event(_Bits(w, colors), spec)


def test_cyclic_subsequence_monotonicity():
    # BWBW implies BW implies B, per configuration
    w = window_for_disk((0.0, 0.0), 5.0)
    rng = RngSpec(13)
    hits = 0
    for i in range(400):
        c = sample_coloring(w, rng.with_stream(i))
        s4 = ev.arm_event(c, ev.ArmEvent((0, 0), 1.2, 4.0, ev.ArmPattern("BWBW")))
        s2 = ev.arm_event(c, ev.ArmEvent((0, 0), 1.2, 4.0, ev.ArmPattern("BW")))
        s1 = ev.arm_event(c, ev.ArmEvent((0, 0), 1.2, 4.0, ev.ArmPattern("B")))
        if s4:
            hits += 1
            assert s2
        if s2:
            assert s1
    assert hits > 0


def test_color_flip_equivariance_counts():
    # flipping colors swaps the pattern letters with equal counts
    from perclab.oracle import enumerate_event_probability
    w = Window(-4, 4, -4, 4, mode="plane")
    a = enumerate_event_probability(
        ev.ArmEvent((0, 0), 0.5, 1.9, ev.ArmPattern("BWB")), w)
    b = enumerate_event_probability(
        ev.ArmEvent((0, 0), 0.5, 1.9, ev.ArmPattern("WBW")), w)
    assert a.count == b.count


def test_unsupported_pattern():
    with pytest.raises(UnsupportedPattern):
        ev.ArmPattern("BWBWBWB")  # length 7
    with pytest.raises(UnsupportedPattern):
        ev.ArmPattern("BX")


def test_half_plane_pattern_needs_half_plane_window():
    w = window_for_disk((0.0, 0.0), 5.0)
    c = all_black(w)
    with pytest.raises(ModeMismatch):
        ev.arm_event(c, ev.ArmEvent((0, 0), 0.0, 4.0,
                                    ev.ArmPattern("B", "half_plane")))


# --- connectivity observables ----------------------------------------------


def test_spin_product_rules():
    w = Window(0, 7, 0, 5)
    pts = [(0, 0), (2, 0), (4, 0), (6, 0)]
    c = all_black(w)
    assert ev.spin_product_expectation(c, pts) == 1  # one cluster, 4 points
    c2 = all_white(w)
    assert ev.spin_product_expectation(c2, pts) == 0
    # three in one cluster, one isolated black elsewhere: odd parity kills it
    blob = [(q, r) for q in range(0, 5) for r in range(0, 2)]
    c3 = grid_coloring(w, blob + [(6, 0)])
    assert ev.spin_product_expectation(c3, pts) == 0


def test_partition_and_spin_identity():
    w = window_for_disk((0.0, 0.0), 5.0)
    pts = [(-3, 0), (-1, 0), (1, 0), (3, 0)]
    rng = RngSpec(3)
    seen = set()
    for i in range(300):
        c = sample_coloring(w, rng.with_stream(i))
        lab = ev.connection_partition(c, pts)
        seen.add(lab)
        indicator = int(lab in ("ALL", "P12_34", "P13_24", "P14_23"))
        assert ev.spin_product_expectation(c, pts) == indicator
    assert "NONE" in seen and "ALL" in seen


def test_partition_two_blobs():
    w = Window(-6, 6, -2, 2)
    blob1 = [(q, 0) for q in range(-5, -1)]
    blob2 = [(q, 0) for q in range(2, 6)]
    c = grid_coloring(w, blob1 + blob2)
    assert ev.connection_partition(c, [(-5, 0), (-2, 0), (2, 0), (5, 0)]) == "P12_34"


# --- pivotal ----------------------------------------------------------------


THETAS = (0.4, 1.2, 1.9, 2.7)


def test_pivotal_all_black_false():
    w = window_for_disk((0.0, 0.0), 4.0)
    assert not ev.pivotal_event(all_black(w), ev.Pivotal((0, 0), THETAS, 3.0))


def test_pivotal_corridor_true():
    w = window_for_disk((0.0, 0.0), 4.0)
    arcs = ev._arc_site_lists(w, (0.0, 0.0), 3.0, THETAS)
    s1, s3 = arcs[0][len(arcs[0]) // 2], arcs[2][len(arcs[2]) // 2]
    corridor = greedy_path(s1, (0, 0)) + greedy_path((0, 0), s3)
    c = grid_coloring(w, [s for s in corridor if s != (0, 0)])
    assert ev.pivotal_event(c, ev.Pivotal((0, 0), THETAS, 3.0))


# --- backbone ---------------------------------------------------------------


def test_backbone_all_black():
    w = Window(-8, 8, 0, 8, mode="half_plane")
    assert ev.backbone_event(all_black(w), (-4, 0), (4, 0), (0, 2))


def test_backbone_width_one_path_through_z():
    w = Window(-8, 8, 0, 8, mode="half_plane")
    left = [(-4, 0), (-4, 1), (-3, 1), (-2, 1), (-1, 1), (-1, 2)]
    right = [(4, 0), (4, 1), (3, 1), (2, 1), (1, 1), (1, 2)]
    z = (0, 2)
    sites = left + right + [z]
    c = grid_coloring(w, sites)
    assert ev.backbone_event(c, (-4, 0), (4, 0), z)
    # removing z separates the two legs
    c2 = grid_coloring(w, left + right)
    from perclab.clusters import connected_query, label_clusters
    cm = label_clusters(c2, BLACK)
    assert not connected_query(cm, (-4, 0), (4, 0))


def test_backbone_forces_arm_events():
    w = Window(-10, 10, 0, 10, mode="half_plane")
    rng = RngSpec(44)
    x1, x2, z = (-6, 0), (6, 0), (0, 3)
    hits = 0
    for i in range(400):
        c = sample_coloring(w, rng.with_stream(i))
        if not ev.backbone_event(c, x1, x2, z):
            continue
        hits += 1
        assert ev.arm_event(c, ev.ArmEvent(x1, 0.0, 2.0,
                                           ev.ArmPattern("B", "half_plane")))
        assert ev.arm_event(c, ev.ArmEvent(x2, 0.0, 2.0,
                                           ev.ArmPattern("B", "half_plane")))
        assert ev.arm_event(c, ev.ArmEvent(z, 0.0, 2.4, ev.ArmPattern("BB")))
    assert hits > 0


# --- R events ---------------------------------------------------------------


def _r3_triangle_coloring():
    w = Window(-4, 12, -3, 11, mode="plane")
    x1, x2, x3 = (0, 0), (8, 0), (0, 8)
    path_a = [(q, 0) for q in range(1, 8)]
    path_b = [(8 - k, 1 + k) for k in range(8)]  # (8,1) ... (1,8)
    path_c = [(-1, r) for r in range(1, 9)]
    c = grid_coloring(w, path_a + path_b + path_c)
    return w, c, (x1, x2, x3)


def test_r3_constructed_configuration():
    w, c, pts = _r3_triangle_coloring()
    spec = ev.REvent(3, pts, min_separation=2.0)
    assert ev.r_event(c, spec)
    from perclab.oracle import _Bits, naive_r_event
    colors = {s: c.color_of(s) for s in w.sites()}
    assert naive_r_event(_Bits(w, colors), spec)
    # merging two arcs at a junction kills distinctness
    c2 = c.with_overrides({(0, 1): BLACK})
    assert not ev.r_event(c2, spec)
    assert not naive_r_event(_Bits(w, {s: c2.color_of(s) for s in w.sites()}),
                             spec)


def test_r3_trivial_cases():
    w = Window(-4, 12, -3, 11, mode="plane")
    pts = ((0, 0), (8, 0), (0, 8))
    spec = ev.REvent(3, pts, min_separation=2.0)
    assert not ev.r_event(all_black(w), spec)  # one cluster only
    assert not ev.r_event(all_white(w), spec)


def test_r3_separation_guard():
    from perclab.errors import MarkedSitesTooClose
    w = Window(-4, 12, -3, 11, mode="plane")
    c = all_black(w)
    with pytest.raises(MarkedSitesTooClose):
        ev.r_event(c, ev.REvent(3, ((0, 0), (8, 0), (0, 8))))  # default 10


def test_r3_random_agreement_with_oracle():
    # pure-random windows plus noisy perturbations of the hand-built
    # triangle (the event is too rare to appear spontaneously at this size)
    from perclab.oracle import _Bits, naive_r_event
    wt, ct, pts_t = _r3_triangle_coloring()
    spec_t = ev.REvent(3, pts_t, min_separation=2.0)
    noise = np.random.default_rng(4242)
    hits = 0
    for i in range(400):
        flip = noise.random(wt.shape) < 0.08
        bits = np.where(flip, 1 - ct.bits, ct.bits).astype(np.uint8)
        c = Coloring(wt, bits)
        got = ev.r_event(c, spec_t)
        want = naive_r_event(_Bits(wt, {s: c.color_of(s)
                                        for s in wt.sites()}), spec_t)
        assert got == want
        hits += got
    assert hits > 0
    w = Window(-2, 8, -2, 8, mode="plane")
    pts = ((0, 0), (5, 0), (0, 5))
    spec = ev.REvent(3, pts, min_separation=2.0)
    rng = RngSpec(88)
    for i in range(400):
        c = sample_coloring(w, rng.with_stream(i))
        got = ev.r_event(c, spec)
        want = naive_r_event(_Bits(w, {s: c.color_of(s)
                                       for s in w.sites()}), spec)
        assert got == want


# --- K, L, M ----------------------------------------------------------------


def test_k_event_sandwich_and_trivial():
    w = Window(-8, 8, 0, 6, mode="half_plane")
    pts = ((-3, 0), (-1, 0), (1, 0), (3, 0))
    assert not ev.k_event(all_black(w), pts)
    assert not ev.k_event(all_white(w), pts)
    c = grid_coloring(w, [(q, 0) for q in range(-4, 5)])
    assert ev.k_event(c, pts)  # black boundary row, white everywhere above


def test_l_event_condition3_by_construction():
    # L never holds together with a black path x1 -> segment
    from perclab.clusters import label_clusters
    w = Window(-8, 8, 0, 5, mode="half_plane")
    pts = ((-5, 0), (-3, 0), (0, 0), (4, 0))
    rng = RngSpec(19)
    hits = 0
    for i in range(600):
        c = sample_coloring(w, rng.with_stream(i))
        if not ev.l_event(c, pts):
            continue
        hits += 1
        cm = label_clusters(c, BLACK)
        cid = cm.id_of((-5, 0))
        assert all(cm.id_of((q, 0)) != cid for q in range(0, 5))
    assert hits > 0


def test_m_event_requires_structures():
    w = Window(-8, 8, 0, 5, mode="half_plane")
    pts = ((-5, 0), (-3, 0), (0, 0), (4, 0))
    assert not ev.m_event(all_white(w), pts)
    assert not ev.m_event(all_black(w), pts)  # no white path from x2+1


def test_m_hat_distinct_y_disjoint_random():
    w = Window(-6, 6, 0, 3, mode="half_plane")
    x1, x2 = (-4, 0), (-2, 0)
    ys = [(1, 0), (3, 0), (5, 0)]
    rng = RngSpec(23)
    fired = 0
    for i in range(800):
        c = sample_coloring(w, rng.with_stream(i))
        hits = [y for y in ys if ev.m_hat_event(c, x1, x2, y, strict=True)]
        assert len(hits) <= 1
        fired += bool(hits)
    assert fired > 0


# --- event spec JSON ---------------------------------------------------------


def test_spec_json_roundtrip():
    specs = [
        ev.ArmEvent((0, 0), 0.0, 4.0, ev.ArmPattern("BWBW")),
        ev.ArmEvent((2, 0), 1.0, 8.0, ev.ArmPattern("BW", "half_plane")),
        ev.ConnectionPartition(((0, 0), (1, 0), (2, 0), (3, 0)), "P12_34"),
        ev.SpinProduct(((0, 0), (2, 0))),
        ev.Pivotal((0, 0), THETAS, 6.0),
        ev.Backbone((-3, 0), (3, 0), (0, 2)),
        ev.REvent(3, ((0, 0), (10, 0), (0, 10))),
        ev.KEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))),
        ev.LEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))),
        ev.MEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))),
        ev.MHatEvent((-3, 0), (-1, 0), (2, 0), strict=False),
    ]
    for spec in specs:
        assert ev.spec_from_json(ev.spec_to_json(spec)) == spec


def test_spec_json_rejects_unknown_fields():
    d = ev.spec_to_json(ev.KEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))))
    d["bogus"] = 1
    with pytest.raises(ValueError, match="bogus"):
        ev.spec_from_json(d)
    with pytest.raises(ValueError):
        ev.spec_from_json({"type": "martian"})
