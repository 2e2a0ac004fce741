"""Normalized estimators for the limit theorems, the Cardy crossing check,
the logarithmic-divergence probe and auxiliary symmetry probes.

Geometry is supplied in continuum coordinates; marked points are placed at
round(L * x) and the realized lattice displacement is recorded in the
metadata.  Every estimator is normalized by same-scale arm probabilities
from a NormTable (which cancels the leading lattice effects, so ratio
tests against the closed forms are meaningful at desk scales).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import events as ev
from ..clusters import max_vertex_disjoint
from ..errors import DegenerateInput, DomainError
from ..lattice import (Window, disk, mask_sites, neighbors, point_to_site,
                       region_mask, ring_mask, site_to_point)
from ..sampler import BLACK, WHITE, Coloring, RngSpec, sample_bits
from .conformal import angles_for_chi, cardy_weights
from .fitting import Estimate, fit_log_slope
from .montecarlo import (_STRUCT2, default_threads, indicator_evaluator,
                         run_monte_carlo)

# --------------------------------------------------------------------------
# geometry helpers
# --------------------------------------------------------------------------


def boundary_site(x, L):
    """Row-0 lattice site for continuum boundary coordinate x at scale L."""
    return (int(round(x * L)), 0)


def interior_site(z, L):
    """Nearest lattice site to the continuum point z (complex) at scale L."""
    z = complex(z)
    return point_to_site(z.real * L, z.imag * L)


def half_plane_window(q_values, L, height_factor=0.75, pad_factor=1.0):
    """Half-plane box around boundary points with O(L) padding."""
    q_lo = min(q_values) - int(pad_factor * L)
    q_hi = max(q_values) + int(pad_factor * L)
    height = int(height_factor * (q_hi - q_lo))
    return Window(q_lo, q_hi, 0, height, mode="half_plane", scale=L)


# --------------------------------------------------------------------------
# L theorem estimator (boundary logarithmic four-point)
# --------------------------------------------------------------------------


def _check_increasing(sites, what):
    from ..errors import SiteOutOfRegion
    qs = [s[0] for s in sites]
    if any(qs[i] >= qs[i + 1] for i in range(len(qs) - 1)):
        raise SiteOutOfRegion(f"{what}: boundary sites must be strictly "
                              f"increasing, got {sites}")


class BoundaryLEvaluator:
    """L-event indicators for several (x3, x4) segment choices sharing one
    (x1, x2) pair and one coloring per sample."""

    def __init__(self, x1x2, segments, L, height_factor=0.6):
        self.L = L
        x1, x2 = x1x2
        self.x1 = boundary_site(x1, L)
        self.x2 = boundary_site(x2, L)
        self.segs = [(boundary_site(a, L), boundary_site(b, L))
                     for a, b in segments]
        for seg in self.segs:
            _check_increasing([self.x1, self.x2, seg[0], seg[1]], "L event")
        qs = [self.x1[0], self.x2[0]] + [s[1][0] for s in self.segs]
        self.window = half_plane_window(qs, L, height_factor=height_factor,
                                        pad_factor=0.75)
        w = self.window
        self.p1 = w.grid_of(self.x1)
        self.p2 = w.grid_of(self.x2)
        self.seg_flat = []
        nq = w.shape[1]
        for a, b in self.segs:
            cols = np.arange(w.grid_of(a)[1], w.grid_of(b)[1] + 1)
            self.seg_flat.append(w.grid_of(a)[0] * nq + cols)
        self.nb1 = [s for s in neighbors(self.x1) if s[1] >= 0]
        self.right = (self.x2[0] + 1, 0)
        self.seg_sites = [[(int(q), 0) for q in range(a[0], b[0] + 1)]
                          for a, b in self.segs]

    def __call__(self, stack):
        nsamp = stack.shape[0]
        out = {i: np.zeros(nsamp, dtype=np.int64)
               for i in range(len(self.segs))}
        for b in range(nsamp):
            bits = stack[b]
            lab, _ = ndimage.label(bits, structure=_STRUCT2)
            cid = lab[self.p1]
            if cid == 0 or lab[self.p2] != cid:
                continue
            flat = lab.ravel()
            coloring = None
            for i, segf in enumerate(self.seg_flat):
                if (flat[segf] == cid).any():
                    continue  # black x1 -> segment path: condition (3) fails
                if coloring is None:
                    coloring = Coloring(self.window, bits)
                ok = max_vertex_disjoint(
                    coloring, WHITE, None, sources=None,
                    sinks=self.seg_sites[i], k=2,
                    source_groups=[{"sites": self.nb1, "cap": 1},
                                   {"sites": [self.right], "cap": 1}],
                    sink_groups=[{"sites": self.seg_sites[i], "cap": 2}],
                    mask=~bits.astype(bool))
                if ok:
                    out[i][b] = 1
        return out


def l_theorem_estimates(x1x2, segments, L, n, rng, norms=None, threads=None,
                        batch=16, stream_offset=0):
    """Normalized L estimates (iota^-2 P[L]) for several segment choices."""
    evaluator = BoundaryLEvaluator(x1x2, segments, L)
    hits = run_monte_carlo(evaluator.window, evaluator, n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = {i: Estimate.from_hits(hits[i], n, scale=L, segment=segments[i])
           for i in range(len(segments))}
    if norms is None:
        return raw, None
    nrm, rel = norms.normalizer("iota", L, -2)
    return raw, {i: raw[i].scaled(nrm, rel) for i in raw}


# --------------------------------------------------------------------------
# M-hat three-point estimator
# --------------------------------------------------------------------------


class MHatEvaluator:
    """Strict M-hat indicators at several y positions per coloring."""

    def __init__(self, x1, x2, ys, L, height_factor=0.8):
        self.L = L
        self.x1 = boundary_site(x1, L)
        self.x2 = boundary_site(x2, L)
        self.ys = [boundary_site(y, L) for y in ys]
        for y in self.ys:
            _check_increasing([self.x1, self.x2, y], "M-hat event")
        qs = [self.x1[0], self.x2[0]] + [y[0] for y in self.ys]
        self.window = half_plane_window(qs, L, height_factor=height_factor,
                                        pad_factor=0.75)
        w = self.window
        self.p1 = w.grid_of(self.x1)
        self.p2 = w.grid_of(self.x2)
        self.py = [w.grid_of(y) for y in self.ys]
        self.pright = w.grid_of((self.x2[0] + 1, 0))
        self.plefts = [w.grid_of((y[0] - 1, 0)) for y in self.ys]

    def __call__(self, stack):
        nsamp = stack.shape[0]
        out = {i: np.zeros(nsamp, dtype=np.int64) for i in range(len(self.ys))}
        for b in range(nsamp):
            bits = stack[b]
            lab, _ = ndimage.label(bits, structure=_STRUCT2)
            cid = lab[self.p1]
            if cid == 0 or lab[self.p2] != cid:
                continue
            wlab, _ = ndimage.label(1 - bits, structure=_STRUCT2)
            wid = wlab[self.pright]
            coloring = None
            for i, y in enumerate(self.ys):
                if lab[self.py[i]] != cid:
                    continue
                if wid == 0 or wlab[self.plefts[i]] != wid:
                    continue
                if coloring is None:
                    coloring = Coloring(self.window, bits)
                if ev.m_hat_event(coloring, self.x1, self.x2, y, strict=True):
                    out[i][b] = 1
        return out


def m_hat_estimates(x1, x2, ys, L, n, rng, norms=None, threads=None,
                    batch=16, stream_offset=0):
    """Normalized M-hat estimates (iota^-3 P[M-hat(y)]) at several y."""
    evaluator = MHatEvaluator(x1, x2, ys, L)
    hits = run_monte_carlo(evaluator.window, evaluator, n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = {ys[i]: Estimate.from_hits(hits[i], n, scale=L, y=ys[i])
           for i in range(len(ys))}
    if norms is None:
        return raw, None
    nrm, rel = norms.normalizer("iota", L, -3)
    return raw, {y: raw[y].scaled(nrm, rel) for y in raw}


# --------------------------------------------------------------------------
# R3 estimator
# --------------------------------------------------------------------------


class R3Evaluator:
    """R3 indicator at one triangle of marked interior points."""

    def __init__(self, points, L, pad_factor=0.6, min_separation=10.0):
        from ..lattice import dist
        self.L = L
        self.sites = tuple(interior_site(z, L) for z in points)
        for i in range(3):
            for j in range(i + 1, 3):
                if dist(self.sites[i], self.sites[j]) < min_separation:
                    from ..errors import MarkedSitesTooClose
                    raise MarkedSitesTooClose(
                        f"triangle sides must be >= {min_separation} lattice "
                        f"units at scale {L}")
        xs = [site_to_point(s)[0] for s in self.sites]
        ys = [site_to_point(s)[1] for s in self.sites]
        span = max(max(xs) - min(xs), max(ys) - min(ys))
        pad = pad_factor * span + 8
        r_lo = math.floor((min(ys) - pad) / (math.sqrt(3) / 2))
        r_hi = math.ceil((max(ys) + pad) / (math.sqrt(3) / 2))
        q_lo = math.floor(min(xs) - pad - 0.5 * r_hi)
        q_hi = math.ceil(max(xs) + pad - 0.5 * r_lo)
        self.window = Window(q_lo, q_hi, r_lo, r_hi, mode="plane", scale=L)
        self.spec = ev.REvent(3, self.sites, min_separation=0.0)
        w = self.window
        self.nbr_flat = []
        nq = w.shape[1]
        for s in self.sites:
            idx = [w.grid_of(t)[0] * nq + w.grid_of(t)[1]
                   for t in neighbors(s) if w.contains(t)]
            self.nbr_flat.append(np.array(idx, dtype=np.int64))
        self.punct = [w.grid_of(s) for s in self.sites]

    def __call__(self, stack):
        nsamp = stack.shape[0]
        out = {"r3": np.zeros(nsamp, dtype=np.int64)}
        for b in range(nsamp):
            bits = stack[b].copy()
            for rc in self.punct:
                bits[rc] = 0
            lab, nlab = ndimage.label(bits, structure=_STRUCT2)
            if nlab == 0:
                continue
            flat = lab.ravel()
            link_ids = []
            ok = True
            for j in range(3):
                a = set(int(v) for v in flat[self.nbr_flat[j]]) - {0}
                bb = set(int(v) for v in flat[self.nbr_flat[(j + 1) % 3]]) - {0}
                link = a & bb
                if not link:
                    ok = False
                    break
                link_ids.append(link)
            if not ok:
                continue
            if ev._distinct_representatives(link_ids):
                out["r3"][b] = 1
        return out


def r3_estimate(points, L, n, rng, norms=None, threads=None, batch=16,
                stream_offset=0):
    """Normalized R3 estimate (rho_bar^-3 P[R3]) at one triangle."""
    evaluator = R3Evaluator(points, L)
    hits = run_monte_carlo(evaluator.window, evaluator, n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = Estimate.from_hits(hits["r3"], n, scale=L,
                             points=[str(p) for p in points])
    if norms is None:
        return raw, None
    nrm, rel = norms.normalizer("rho_bar", L, -3)
    return raw, raw.scaled(nrm, rel)


# --------------------------------------------------------------------------
# backbone point estimator
# --------------------------------------------------------------------------


def backbone_estimate(x1, x2, z, L, n, rng, norms=None, threads=None,
                      batch=16, stream_offset=0, height_factor=1.0):
    """Normalized backbone estimate (pi_bar^-2 rho^-1 P[backbone])."""
    s1 = boundary_site(x1, L)
    s2 = boundary_site(x2, L)
    sz = interior_site(z, L)
    window = half_plane_window([s1[0], s2[0], sz[0]], L,
                               height_factor=height_factor)

    def indicator(coloring):
        return ev.backbone_event(coloring, s1, s2, sz)

    hits = run_monte_carlo(window, indicator_evaluator(indicator, window),
                           n, rng, threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = Estimate.from_hits(hits["event"], n, scale=L)
    if norms is None:
        return raw, None
    n1, r1 = norms.normalizer("pi_bar", L, -2)
    n2, r2 = norms.normalizer("rho", L, -1)
    return raw, raw.scaled(n1 * n2, math.hypot(r1, r2))


# --------------------------------------------------------------------------
# pivotal estimator
# --------------------------------------------------------------------------


def pivotal_estimate(thetas, L, n, rng, norms=None, threads=None, batch=16,
                     stream_offset=0):
    """Normalized pivotal-density estimate (rho_bar^-1 P[center pivotal])."""
    spec = ev.Pivotal((0, 0), tuple(thetas), float(L))
    from ..lattice import window_for_disk
    window = window_for_disk((0.0, 0.0), L, margin=3, scale=L)
    hits = run_monte_carlo(window, indicator_evaluator(spec, window), n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = Estimate.from_hits(hits["event"], n, scale=L, thetas=list(thetas))
    if norms is None:
        return raw, None
    nrm, rel = norms.normalizer("rho_bar", L, -1)
    return raw, raw.scaled(nrm, rel)


# --------------------------------------------------------------------------
# Cardy crossing check
# --------------------------------------------------------------------------


class CardyEvaluator:
    """Black crossing between two forced-black boundary arcs of a disk."""

    def __init__(self, chi, L):
        self.chi = chi
        self.L = L
        thetas = angles_for_chi(chi)
        from ..lattice import window_for_disk
        self.window = window_for_disk((0.0, 0.0), L, margin=3, scale=L)
        w = self.window
        self.disk_mask = region_mask(disk((0.0, 0.0), float(L)), w)
        arcs = ev._arc_site_lists(w, (0.0, 0.0), float(L), thetas)
        nq = w.shape[1]
        flat = lambda sites: np.array(
            [w.grid_of(s)[0] * nq + w.grid_of(s)[1] for s in sites],
            dtype=np.int64)
        self.black_arcs = np.concatenate([flat(arcs[0]), flat(arcs[2])])
        self.white_arcs = np.concatenate([flat(arcs[1]), flat(arcs[3])]) \
            if arcs[1] or arcs[3] else np.empty(0, dtype=np.int64)
        self.arc1 = flat(arcs[0])
        self.arc3 = flat(arcs[2])

    def __call__(self, stack):
        nsamp = stack.shape[0]
        out = {"crossing": np.zeros(nsamp, dtype=np.int64)}
        for b in range(nsamp):
            bits = stack[b].copy()
            fb = bits.ravel()
            fb[self.black_arcs] = 1
            if len(self.white_arcs):
                fb[self.white_arcs] = 0
            mask = bits.astype(bool) & self.disk_mask
            lab, _ = ndimage.label(mask, structure=_STRUCT2)
            flat = lab.ravel()
            ids1 = set(int(v) for v in np.unique(flat[self.arc1])) - {0}
            if not ids1:
                continue
            ids3 = set(int(v) for v in np.unique(flat[self.arc3])) - {0}
            if ids1 & ids3:
                out["crossing"][b] = 1
        return out


def cardy_crossing_check(chis, L, n, rng, threads=None, batch=16,
                         stream_offset=0):
    """MC crossing probabilities against the analytic weights Z_a1(chi).

    Returns {chi: (Estimate, Z_a1)}.
    """
    out = {}
    for k, chi in enumerate(chis):
        evaluator = CardyEvaluator(chi, L)
        hits = run_monte_carlo(evaluator.window, evaluator, n, rng,
                               threads=threads, batch=batch,
                               stream_offset=stream_offset + k * n)
        est = Estimate.from_hits(hits["crossing"], n, chi=chi, scale=L)
        out[chi] = (est, cardy_weights(chi)[0])
    return out


# --------------------------------------------------------------------------
# logarithmic divergence probe
# --------------------------------------------------------------------------


class _LogProbeEvaluator:
    def __init__(self, window, pair_cols, fixed_pts):
        self.window = window
        self.pair_rc = pair_cols  # {s: (rc1, rc2)}
        self.fixed = fixed_pts    # (rc3, rc4)

    def __call__(self, stack):
        nsamp = stack.shape[0]
        keys = list(self.pair_rc)
        out = {("joint", s): np.zeros(nsamp, dtype=np.int64) for s in keys}
        out.update({("p12", s): np.zeros(nsamp, dtype=np.int64) for s in keys})
        out[("p34", None)] = np.zeros(nsamp, dtype=np.int64)
        rc3, rc4 = self.fixed
        for b in range(nsamp):
            lab, _ = ndimage.label(stack[b], structure=_STRUCT2)
            i34 = lab[rc3] != 0 and lab[rc3] == lab[rc4]
            if i34:
                out[("p34", None)][b] = 1
            for s in keys:
                rc1, rc2 = self.pair_rc[s]
                i12 = lab[rc1] != 0 and lab[rc1] == lab[rc2]
                if i12:
                    out[("p12", s)][b] = 1
                    if i34:
                        out[("joint", s)][b] = 1
        return out


def covariance_log_probe(separations, window_scale, n, rng, far=0.45,
                         threads=None, batch=8, n_blocks=20,
                         stream_offset=0):
    """Estimate D(s) = P(x1<->x2, x3<->x4) - P(x1<->x2) P(x3<->x4) for a
    merging pair at separations s, regress D(s)/s^{25/24} on log(1/s).

    x3, x4 sit at -+far*window_scale on the real axis; the pair straddles
    the origin.  The product term uses disjoint halves of each block (kept
    unbiased); the slope stderr comes from a delete-one-block jackknife.
    Returns (FitResult, {s: D estimate}, diagnostics dict).
    """
    separations = sorted(separations, reverse=True)
    if len(separations) < 3:
        raise DegenerateInput("need at least 3 separations")
    Lw = int(window_scale)
    half = Lw  # scale = lattice-unit radius of the window
    window = Window(-half - 4, half + 4, -int(half / math.sqrt(3.0)) - 4,
                    int(half / math.sqrt(3.0)) + 4, mode="plane", scale=Lw)
    R = int(far * Lw)
    rc3 = window.grid_of((-R, 0))
    rc4 = window.grid_of((R, 0))
    pair_rc = {}
    for s in separations:
        a = (-(s // 2), 0)
        bpt = (s - s // 2, 0)
        pair_rc[s] = (window.grid_of(a), window.grid_of(bpt))
    evaluator = _LogProbeEvaluator(window, pair_rc, (rc3, rc4))

    per_block = max(1, n // n_blocks)
    counts = {}
    sizes = []
    for j in range(n_blocks):
        hits = run_monte_carlo(window, evaluator, per_block, rng,
                               threads=threads, batch=batch,
                               stream_offset=stream_offset + j * per_block)
        sizes.append(per_block)
        for k, v in hits.items():
            counts.setdefault(k, []).append(v)
    sizes = np.asarray(sizes, dtype=float)

    def block_D(jblocks):
        """Pooled D(s) over the given block indices (split product)."""
        idx = np.asarray(jblocks)
        even = idx[::2]
        odd = idx[1::2]
        res = {}
        for s in separations:
            joint = sum(counts[("joint", s)][i] for i in idx) / sizes[idx].sum()
            pa = sum(counts[("p12", s)][i] for i in even) / sizes[even].sum()
            pb = sum(counts[("p34", None)][i] for i in odd) / sizes[odd].sum()
            res[s] = joint - pa * pb
        return res

    all_blocks = list(range(n_blocks))
    D_full = block_D(all_blocks)
    x = np.array([math.log(1.0 / s) for s in separations])

    def slope_from(blocks):
        D = block_D(blocks)
        y = np.array([D[s] / s ** (25.0 / 24.0) for s in separations])
        return fit_log_slope(x, y).exponent

    full = slope_from(all_blocks)
    loo = np.array([slope_from([b for b in all_blocks if b != i])
                    for i in all_blocks])
    var = (n_blocks - 1) / n_blocks * ((loo - loo.mean()) ** 2).sum()
    stderr = math.sqrt(var)
    y_full = [D_full[s] / s ** (25.0 / 24.0) for s in separations]
    fit = fit_log_slope(x, y_full)
    monotone = all(y_full[i] <= y_full[i + 1] for i in range(len(y_full) - 1))
    from .fitting import FitResult
    result = FitResult(exponent=fit.exponent, stderr=stderr,
                       intercept=fit.intercept, residuals=fit.residuals,
                       meta={"separations": separations, "n": n,
                             "window_scale": Lw})
    diagnostics = {"D": D_full, "y": dict(zip(separations, y_full)),
                   "monotone_in_log": monotone}
    return result, D_full, diagnostics


# --------------------------------------------------------------------------
# spin four-point estimators and the connection-partition table
# --------------------------------------------------------------------------


def spin_four_point_estimate(points, L, n, rng, half_plane=True, norms=None,
                             threads=None, batch=16, stream_offset=0):
    """Normalized spin four-point function (per-sample exact conditional
    expectation): pi_bar^-4 (boundary) or pi^-4 (bulk)."""
    if half_plane:
        sites = [boundary_site(x, L) for x in points]
        window = half_plane_window([s[0] for s in sites], L)
        fam = "pi_bar"
    else:
        sites = [interior_site(z, L) for z in points]
        xs = [site_to_point(s)[0] for s in sites]
        pad = int(0.75 * L)
        window = Window(int(min(xs)) - pad, int(max(xs)) + pad,
                        -pad, pad, mode="plane", scale=L)
        fam = "pi"
    spec = ev.SpinProduct(tuple(sites))
    hits = run_monte_carlo(window, indicator_evaluator(spec, window), n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    raw = Estimate.from_hits(hits["event"], n, scale=L)
    if norms is None:
        return raw, None
    nrm, rel = norms.normalizer(fam, L, -4)
    return raw, raw.scaled(nrm, rel)


def connection_partition_counts(points_sites, window, n, rng, threads=None,
                                batch=16, stream_offset=0):
    """Counts of each four-point connection pattern."""
    labels = ["ALL", "P12_34", "P13_24", "P14_23", "NONE"]

    def evaluator(stack):
        out = {lab: np.zeros(stack.shape[0], dtype=np.int64) for lab in labels}
        for b in range(stack.shape[0]):
            coloring = Coloring(window, stack[b])
            out[ev.connection_partition(coloring, points_sites)][b] = 1
        return out

    hits = run_monte_carlo(window, evaluator, n, rng, threads=threads,
                           batch=batch, stream_offset=stream_offset)
    return {lab: Estimate.from_hits(hits[lab], n) for lab in labels}


# --------------------------------------------------------------------------
# V2 symmetry probe
# --------------------------------------------------------------------------


def v2_symmetry_probe(d, m, n, rng, threads=None, batch=16, stream_offset=0):
    """Conditional probability that two marked points whose clusters reach a
    small middle ball from outside (without joining outside it) are joined
    through the ball; tends to 1/2 at criticality.

    d: half-distance of the marked points; m: middle ball radius.
    """
    if not (0 < m < d / 3):
        raise DomainError("need 0 < m < d/3")
    pad = int(0.8 * d)
    window = Window(-d - pad, d + pad, -pad, pad, mode="plane", scale=d)
    x3 = (-d, 0)
    x4 = (d, 0)
    ball = region_mask(disk((0.0, 0.0), float(m)), window)
    # sites just outside the ball (adjacent to it): where outside clusters
    # must arrive to "reach" the ball
    from ..lattice import NEIGHBOR_OFFSETS
    near = np.zeros_like(ball)
    nr, nq = ball.shape
    for dq, dr in NEIGHBOR_OFFSETS:
        sh = np.zeros_like(ball)
        rs = slice(max(0, dr), min(nr, nr + dr))
        rd = slice(max(0, -dr), min(nr, nr - dr))
        qs = slice(max(0, dq), min(nq, nq + dq))
        qd = slice(max(0, -dq), min(nq, nq - dq))
        sh[rd, qd] = ball[rs, qs]
        near |= sh
    near &= ~ball
    ring_flat = np.flatnonzero(near.ravel())
    rc3 = window.grid_of(x3)
    rc4 = window.grid_of(x4)

    def evaluator(stack):
        cond = np.zeros(stack.shape[0], dtype=np.int64)
        joined = np.zeros(stack.shape[0], dtype=np.int64)
        for b in range(stack.shape[0]):
            outside = stack[b].astype(bool) & ~ball
            lab, _ = ndimage.label(outside, structure=_STRUCT2)
            c3, c4 = lab[rc3], lab[rc4]
            if c3 == 0 or c4 == 0 or c3 == c4:
                continue
            flat = lab.ravel()
            ring_ids = set(int(v) for v in np.unique(flat[ring_flat])) - {0}
            if c3 not in ring_ids or c4 not in ring_ids:
                continue
            cond[b] = 1
            full, _ = ndimage.label(stack[b], structure=_STRUCT2)
            if full[rc3] == full[rc4]:
                joined[b] = 1
        return {"cond": cond, "joined": joined}

    hits = run_monte_carlo(window, evaluator, n, rng, threads=threads,
                           batch=batch, stream_offset=stream_offset)
    n_cond = hits["cond"]
    if n_cond == 0:
        raise DegenerateInput("conditioning event never occurred")
    return Estimate.from_hits(hits["joined"], n_cond, d=d, m=m)
