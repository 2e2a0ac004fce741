from fractions import Fraction

import pytest

from perclab import events as ev
from perclab.errors import WindowTooLarge
from perclab.lattice import Window
from perclab.oracle import (certify_agreement, enumerate_event_probability,
                            enumerate_npoint, event_support)
from perclab.oracle_suite import CERTIFICATIONS, run_certifications


@pytest.mark.parametrize("name,spec,window", CERTIFICATIONS,
                         ids=[c[0] for c in CERTIFICATIONS])
def test_certification(name, spec, window):
    count, total, mismatches = certify_agreement(spec, window)
    assert mismatches == [], f"{name}: {mismatches[:3]}"


def test_trivial_probabilities():
    w1 = Window(0, 0, 0, 0)
    one = enumerate_event_probability(ev.SpinProduct(((0, 0), (0, 0))), w1)
    assert one.probability == Fraction(1, 2)  # site black (even parity x2)
    w2 = Window(0, 1, 0, 0)
    both = enumerate_event_probability(ev.SpinProduct(((0, 0), (1, 0))), w2)
    assert both.probability == Fraction(1, 4)  # two adjacent sites both black


def test_one_arm_seven_site_disk_exact():
    w = Window(-3, 3, -3, 3, mode="plane")
    res = enumerate_event_probability(
        ev.ArmEvent((0, 0), 0.0, 1.0, ev.ArmPattern("B")), w)
    # center black and at least one of its six neighbors black
    assert res.probability == Fraction(1, 2) * (1 - Fraction(1, 2) ** 6)


def test_enumeration_order_independence():
    w = Window(-3, 3, 0, 1, mode="half_plane")
    spec = ev.KEvent(((-3, 0), (-1, 0), (1, 0), (3, 0)))
    fwd = enumerate_event_probability(spec, w)
    rev = enumerate_event_probability(spec, w, reverse=True)
    assert fwd.count == rev.count


def test_window_cap():
    w = Window(0, 5, 0, 4, mode="plane")  # 30 sites
    with pytest.raises(WindowTooLarge):
        enumerate_event_probability(
            ev.SpinProduct(((0, 0), (5, 4))), w)


def test_npoint_equals_partition_sum():
    w = Window(0, 3, 0, 2, mode="plane")
    pts = ((0, 0), (3, 0), (0, 2), (3, 2))
    total = enumerate_npoint(pts, w)
    parts = Fraction(0)
    for label in ("ALL", "P12_34", "P13_24", "P14_23"):
        res = enumerate_event_probability(
            ev.ConnectionPartition(pts, label), w)
        parts += res.probability
    assert total == parts


def test_half_plane_p13_24_vanishes():
    # ordered boundary points can never pair as (1,3)(2,4) in the half-plane
    w = Window(-3, 3, 0, 1, mode="half_plane")
    pts = ((-3, 0), (-1, 0), (1, 0), (3, 0))
    res = enumerate_event_probability(
        ev.ConnectionPartition(pts, "P13_24"), w)
    assert res.count == 0
    w2 = Window(-2, 2, 0, 2, mode="half_plane")
    pts2 = ((-2, 0), (-1, 0), (1, 0), (2, 0))
    res2 = enumerate_event_probability(
        ev.ConnectionPartition(pts2, "P13_24"), w2)
    assert res2.count == 0


def test_l_equals_m_on_three_geometries():
    geoms = [
        (Window(-3, 3, 0, 1, mode="half_plane"),
         ((-3, 0), (-1, 0), (1, 0), (3, 0))),
        (Window(-2, 2, 0, 2, mode="half_plane"),
         ((-2, 0), (-1, 0), (0, 0), (2, 0))),
        (Window(0, 6, 0, 1, mode="half_plane"),
         ((0, 0), (2, 0), (4, 0), (6, 0))),
    ]
    for w, pts in geoms:
        l_res = enumerate_event_probability(ev.LEvent(pts), w)
        m_res = enumerate_event_probability(ev.MEvent(pts), w)
        assert l_res.count == m_res.count
        assert l_res.count > 0


def test_m_hat_disjoint_and_covers_m():
    # distinct-y M-hat events are pairwise disjoint, and their union
    # contains the exploration-flip M event
    from perclab.oracle import _bits_of_code, naive_m_event, naive_m_hat_event
    w = Window(-2, 2, 0, 2, mode="half_plane")
    pts = ((-2, 0), (-1, 0), (0, 0), (2, 0))
    ys = [(q, 0) for q in range(1, 3)]
    support = event_support(ev.MEvent(pts), w)
    union = 0
    m_count = 0
    for code in range(2 ** len(support)):
        bits = _bits_of_code(code, support, w)
        fires = [y for y in ys
                 if naive_m_hat_event(bits, pts[0], pts[1], y, strict=True)]
        assert len(fires) <= 1
        m = naive_m_event(bits, pts)
        m_count += m
        union += bool(fires)
        if m:
            assert fires, "M configuration outside the union of M-hat slices"
    assert union >= m_count > 0


def test_certification_suite_runner():
    results = run_certifications(subset={"K", "L"})
    assert all(ok for _, ok, _ in results)
    assert len(results) == 2
