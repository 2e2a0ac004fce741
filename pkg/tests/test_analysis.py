import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perclab.analysis import conformal as cf
from perclab.analysis import fitting as ft
from perclab.analysis import montecarlo as mc
from perclab.errors import DegenerateInput, DomainError, PoleError
from perclab.lattice import Window, window_for_disk
from perclab.sampler import RngSpec


# --- hypergeometric / Cardy --------------------------------------------------


def test_h_at_one_is_gauss_value():
    assert abs(cf.hyp2f1_weight(1.0)
               - math.gamma(4 / 3) * math.gamma(1 / 3) / math.gamma(2 / 3)) < 1e-14


def test_h_matches_mpmath_grid():
    mpmath = pytest.importorskip("mpmath")
    for z in np.arange(0.01, 0.999, 0.017):
        ref = float(mpmath.hyp2f1(2 / 3, 1 / 3, 4 / 3, float(z)))
        assert abs(cf.hyp2f1_weight(float(z)) - ref) < 1e-12


def test_cardy_weights_identity_and_symmetry():
    for chi in np.arange(0.05, 0.951, 0.05):
        z1, z2 = cf.cardy_weights(float(chi))
        assert abs(z1 + z2 - 1.0) < 1e-10
        z1r, z2r = cf.cardy_weights(1.0 - float(chi))
        assert abs(z1 - z2r) < 1e-12  # Z1(chi) = Z2(1-chi) by construction
    z1, z2 = cf.cardy_weights(0.5)
    assert abs(z1 - 0.5) < 1e-12 and abs(z2 - 0.5) < 1e-12


def test_cardy_small_chi_limit():
    z1, _ = cf.cardy_weights(1e-9)
    assert z1 < 1e-2
    with pytest.raises(DomainError):
        cf.cardy_weights(1.5)


# --- cross-ratio and Moebius maps -------------------------------------------


def test_cross_ratio_examples():
    assert abs(cf.cross_ratio(0, 1, 2, 3) - 0.25) < 1e-15
    assert abs(cf.cross_ratio(0, 1, 3, 4) - 1.0 / 9.0) < 1e-15
    with pytest.raises(DegenerateInput):
        cf.cross_ratio(0, 0, 1, 2)


def test_cross_ratio_affine_invariance():
    base = cf.cross_ratio(0.0, 1.0, 2.0, 3.0)
    mapped = cf.cross_ratio(*(2.0 * x + 1.0 for x in (0.0, 1.0, 2.0, 3.0)))
    assert abs(base - mapped) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-4, 4), st.tuples(*[st.floats(0.1, 2.5) for _ in range(3)]),
       st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_cross_ratio_moebius_invariance(x0, gaps, a, b):
    pts = [x0]
    for g in gaps:
        pts.append(pts[-1] + g)
    m = cf.MobiusMap.half_plane(a, b, 0.0, 1.0)
    imgs = [float(np.real(m(x))) for x in pts]
    assert abs(cf.cross_ratio(*pts) - cf.cross_ratio(*imgs)) < 1e-9


def test_mobius_examples():
    ident = cf.MobiusMap.identity()
    assert ident.deriv_mod(3.7 + 0.5j) == 1.0
    inv = cf.MobiusMap(0.0, 1.0, 1.0, 0.0)  # z -> 1/z
    assert abs(inv.deriv_mod(2.0) - 0.25) < 1e-15
    with pytest.raises(PoleError):
        inv(0.0)


def test_mobius_composition_chain_rule():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = cf.MobiusMap(*(complex(a, b) for a, b in rng.normal(size=(4, 2))))
        g = cf.MobiusMap(*(complex(a, b) for a, b in rng.normal(size=(4, 2))))
        z = complex(*rng.normal(size=2))
        try:
            lhs = f.compose(g).deriv_mod(z)
            rhs = f.deriv_mod(g(z)) * g.deriv_mod(z)
        except PoleError:
            continue
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_disk_map_from_origin():
    z = 0.3 + 0.4j
    phi = cf.disk_map_from_origin(z)
    assert abs(phi(0.0) - z) < 1e-15
    d = (phi(1e-8) - phi(0.0)) / 1e-8
    assert abs(d.imag) < 1e-6 and d.real > 0  # phi'(0) > 0


# --- closed forms -------------------------------------------------------------


def test_pivotal_symmetric_value():
    thetas = (math.pi / 8, 3 * math.pi / 8, 5 * math.pi / 8, 7 * math.pi / 8)
    assert abs(cf.pivotal_weight(thetas) - 4.0 ** (-1.0 / 3.0)) < 1e-14


def test_l_log_closed_form_example():
    val = cf.closed_form_eval("l_log", (0.0, 1.0, 2.0, 3.0), 1.0)
    assert abs(val - math.log(4.0 / 3.0)) < 1e-14


def test_r3_scaling_under_dilation():
    pts = (0.0 + 0.0j, 2.0 + 1.0j, -1.0 + 2.0j)
    lam = 1.7
    base = cf.closed_form_eval("r3", pts, 1.0)
    scaled = cf.closed_form_eval("r3", tuple(lam * p for p in pts), 1.0)
    assert abs(scaled - base * lam ** (-15.0 / 4.0)) < 1e-12 * base


def test_covariance_verifier_all_formulas():
    cases = [
        ("bulk_two_point", (0.3 + 0.2j, 1.5 - 0.7j)),
        ("r3", (0.0 + 0.0j, 2.0 + 1.0j, -1.0 + 2.0j)),
        ("l_log", (0.0, 1.0, 2.0, 3.5)),
        ("mhat_three_point", (0.0, 1.0, 2.5)),
        ("k_fusion", (0.0, 1.3, 3.0)),
        ("bulk_ope_kernel", (0.1 + 0.1j, 2.0 + 0.0j, 1.0 + 1.5j)),
        ("boundary_ope_kernel", (0.0, 1.5, 3.0)),
    ]
    for formula, args in cases:
        worst = cf.verify_covariance(formula, args, n_maps=100, tol=1e-10)
        assert worst < 1e-10
    worst = cf.verify_covariance(
        "pivotal_domain",
        (0.2 + 0.1j, np.exp(0.5j), np.exp(1.5j), np.exp(3.0j), np.exp(5.0j)),
        n_maps=100, tol=1e-10)
    assert worst < 1e-10


def test_angles_for_chi_roundtrip():
    for chi in (0.1, 0.25, 0.5, 0.75, 0.9):
        ts = cf.angles_for_chi(chi)
        pts = [np.exp(2j * t) for t in ts]
        got = cf.cross_ratio_points(*pts)
        assert abs(got.real - chi) < 1e-12 and abs(got.imag) < 1e-12


# --- fitting -------------------------------------------------------------------


def test_fit_power_law_exact_recovery():
    scales = [8, 16, 32, 64, 128]
    vals = [float(L) ** (-1.25) for L in scales]
    fit = ft.fit_power_law(scales, vals)
    assert abs(fit.exponent + 1.25) < 1e-12


def test_fit_power_law_scale_equivariance():
    scales = [8, 16, 32, 64]
    vals = [0.7 * float(L) ** (-0.33) for L in scales]
    f1 = ft.fit_power_law(scales, vals)
    f2 = ft.fit_power_law(scales, [17.0 * v for v in vals])
    assert abs(f1.exponent - f2.exponent) < 1e-12


def test_fit_power_law_guards():
    with pytest.raises(DegenerateInput):
        ft.fit_power_law([8, 16], [1.0, 0.5])
    with pytest.raises(DegenerateInput):
        ft.fit_power_law([8, 16, 32], [0.5, 0.0, 0.1])


def test_ratio_exponent():
    slope, err = ft.ratio_exponent(0.25, 16.0, 0.5, 4.0)
    assert abs(slope + 0.5) < 1e-12 and err == 0.0


def test_log_slope_synthetic():
    seps = [8, 16, 32, 64]
    x = [math.log(1.0 / s) for s in seps]
    c = 0.37
    y = [c * xx for xx in x]
    fit = ft.fit_log_slope(x, y)
    assert abs(fit.exponent - c) < 1e-12
    y0 = [0.11 for _ in x]  # no log term: slope 0
    fit0 = ft.fit_log_slope(x, y0)
    assert abs(fit0.exponent) < 1e-12


def test_estimate_merge_laws():
    a = ft.Estimate.from_hits(10, 100)
    b = ft.Estimate.from_hits(30, 200)
    c = ft.Estimate.from_hits(5, 50)
    ab_c = a.merged(b).merged(c)
    a_bc = a.merged(b.merged(c))
    assert (ab_c.hits, ab_c.n) == (a_bc.hits, a_bc.n) == (45, 350)
    ba = b.merged(a)
    assert (ba.hits, ba.n) == (40, 300)
    assert abs(a.stderr - math.sqrt(0.1 * 0.9 / 100)) < 1e-15


# --- Monte Carlo driver ---------------------------------------------------------


def test_run_estimate_site_black():
    w = Window(-3, 3, -3, 3)
    est = mc.run_estimate(lambda c: c.is_black((0, 0)), w, 4000, RngSpec(5))
    assert abs(est.mean - 0.5) < 3.5 * est.stderr + 1e-12


def test_run_estimate_merge_equals_single_run():
    from perclab import events as ev
    w = window_for_disk((0.0, 0.0), 4.0)
    spec = ev.ArmEvent((0, 0), 0.0, 3.0, ev.ArmPattern("B"))
    full = mc.run_estimate(spec, w, 600, RngSpec(42))
    p1 = mc.run_estimate(spec, w, 250, RngSpec(42))
    p2 = mc.run_estimate(spec, w, 350, RngSpec(42), stream_offset=250)
    merged = p1.merged(p2)
    assert (merged.hits, merged.n) == (full.hits, full.n)


def test_run_estimate_thread_determinism():
    from perclab import events as ev
    w = window_for_disk((0.0, 0.0), 4.0)
    spec = ev.ArmEvent((0, 0), 0.0, 3.0, ev.ArmPattern("BW"))
    runs = [mc.run_estimate(spec, w, 400, RngSpec(9), threads=t)
            for t in (1, 3, 7)]
    assert runs[0].hits == runs[1].hits == runs[2].hits


def test_tiny_window_mc_matches_enumeration():
    from perclab import events as ev
    from perclab.oracle import enumerate_event_probability
    w = Window(-4, 4, -4, 4, mode="plane")
    spec = ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("BW"))
    exact = enumerate_event_probability(spec, w).probability_float
    est = mc.run_estimate(spec, w, 3000, RngSpec(33))
    assert abs(est.mean - exact) < 5.0 * est.stderr


def test_norm_table_monotone_by_construction():
    tab = mc.norm_constants([4, 8, 16], 500, RngSpec(3),
                            families=["pi", "iota"])
    for fam, col in tab.entries.items():
        vals = [col[L].mean for L in sorted(col)]
        assert all(vals[i] >= vals[i + 1] for i in range(len(vals) - 1))
        assert all(0.0 < v <= 1.0 for v in vals)


def test_norm_table_normalizer_propagation():
    tab = mc.norm_constants([8], 2000, RngSpec(21), families=["iota"])
    e = tab.value("iota", 8)
    nrm, rel = tab.normalizer("iota", 8, -2)
    assert abs(nrm - e.mean ** -2) < 1e-15
    assert abs(rel - 2 * e.stderr / e.mean) < 1e-15
