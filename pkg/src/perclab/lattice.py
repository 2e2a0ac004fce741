"""Triangular-lattice geometry: sites, embedding, regions and windows.

Sites live on axial integer coordinates (q, r).  The planar embedding is
``(q + r/2, r*sqrt(3)/2)`` with unit edge length, one lattice edge along the
positive real axis and a vertex at the origin.  Row r = 0 is the real axis;
in half-plane mode every site with r < 0 is deterministically white and is
never enumerated as a random site.

Everything in this module is pure data + geometry; it is reused by the
sampler/cluster/event layers and (deliberately) also by the brute-force
oracle, which shares nothing else with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import RegionOutOfWindow, SiteOutOfRegion

SQRT3_2 = math.sqrt(3.0) / 2.0

# Axial offsets of the six neighbors, fixed order (CCW starting at +q).
NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

# 3x3 stencil (indexed [dr+1][dq+1]) encoding the same six offsets; used by
# raster-based cluster labeling.
HEX_STRUCTURE = np.array([[0, 1, 1],
                          [1, 1, 1],
                          [1, 1, 0]], dtype=np.uint8)

Site = tuple  # (q, r) integer axial coordinates


def site_to_point(s):
    """Planar embedding of an axial site: (q + r/2, r*sqrt(3)/2)."""
    q, r = s
    return (q + 0.5 * r, r * SQRT3_2)


def point_to_site(x, y):
    """Nearest lattice site to an embedded point (rounding in axial coords)."""
    r = round(y / SQRT3_2)
    q = round(x - 0.5 * r)
    return (int(q), int(r))


def neighbors(s):
    """The six axial neighbors of a site."""
    q, r = s
    return [(q + dq, r + dr) for dq, dr in NEIGHBOR_OFFSETS]


def rotate60(s):
    """Rotate a site by +60 degrees about the origin (lattice symmetry)."""
    q, r = s
    return (-r, q + r)


def dist(a, b):
    """Euclidean distance between the embeddings of two sites."""
    ax, ay = site_to_point(a)
    bx, by = site_to_point(b)
    return math.hypot(ax - bx, ay - by)


@dataclass(frozen=True)
class Region:
    """A discrete region on which an event lives.

    kind: 'disk' | 'annulus' | 'half_plane_disk' | 'real_segment'
          | 'boundary_arc' | 'full_window'
    center is an embedded point (pair of floats); radii are in lattice units.
    Disk/annulus membership uses closed inequalities (<= radius).
    """

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    r_in: float = 0.0
    r_out: float = 0.0
    q_lo: int = 0
    q_hi: int = 0
    angles: tuple = ()  # (lo, hi) for boundary_arc, radians in [0, 2*pi)

    def __post_init__(self):
        if self.kind == "annulus" and not (0.0 <= self.r_in < self.r_out):
            raise ValueError("annulus needs 0 <= r_in < r_out")
        if self.kind not in ("disk", "annulus", "half_plane_disk",
                             "real_segment", "boundary_arc", "full_window"):
            raise ValueError(f"unknown region kind {self.kind!r}")

    def contains(self, s, mode="plane"):
        if mode == "half_plane" and s[1] < 0:
            return False
        if self.kind == "full_window":
            return True
        x, y = site_to_point(s)
        cx, cy = self.center
        d = math.hypot(x - cx, y - cy)
        if self.kind == "disk":
            return d <= self.radius
        if self.kind == "half_plane_disk":
            return d <= self.radius and s[1] >= 0
        if self.kind == "annulus":
            return self.r_in <= d <= self.r_out
        if self.kind == "real_segment":
            return s[1] == 0 and self.q_lo <= s[0] <= self.q_hi
        if self.kind == "boundary_arc":
            # handled via boundary_arc_sites; membership alone is radial
            return abs(d - self.radius) < 1.0
        raise AssertionError


def disk(center, radius):
    return Region("disk", center=tuple(center), radius=float(radius))


def half_plane_disk(center, radius):
    return Region("half_plane_disk", center=tuple(center), radius=float(radius))


def annulus(center, r_in, r_out):
    return Region("annulus", center=tuple(center), r_in=float(r_in),
                  r_out=float(r_out))


def real_segment(q_lo, q_hi):
    return Region("real_segment", q_lo=int(q_lo), q_hi=int(q_hi))


def full_window():
    return Region("full_window")


@dataclass(frozen=True)
class Window:
    """Axial bounding box of materialized sites plus the percolation mode.

    In half_plane mode r_lo is clamped to 0; sites below the real axis are
    deterministically white and never materialized.  ``scale`` records the
    lattice-unit radius L standing for 1/a (metadata only).
    """

    q_lo: int
    q_hi: int
    r_lo: int
    r_hi: int
    mode: str = "plane"
    scale: int = 0

    def __post_init__(self):
        if self.mode not in ("plane", "half_plane"):
            raise ValueError("mode must be 'plane' or 'half_plane'")
        if self.mode == "half_plane" and self.r_lo < 0:
            object.__setattr__(self, "r_lo", 0)
        if self.q_hi < self.q_lo or self.r_hi < self.r_lo:
            raise ValueError("empty window")

    @property
    def shape(self):
        return (self.r_hi - self.r_lo + 1, self.q_hi - self.q_lo + 1)

    @property
    def n_sites(self):
        nr, nq = self.shape
        return nr * nq

    def index_of(self, s):
        """Row-major flat index of a site; raises if outside the box."""
        q, r = s
        if not (self.q_lo <= q <= self.q_hi and self.r_lo <= r <= self.r_hi):
            raise SiteOutOfRegion(f"site {s} outside window box")
        return (r - self.r_lo) * (self.q_hi - self.q_lo + 1) + (q - self.q_lo)

    def grid_of(self, s):
        """(row, col) grid coordinates of a site inside the box."""
        q, r = s
        if not (self.q_lo <= q <= self.q_hi and self.r_lo <= r <= self.r_hi):
            raise SiteOutOfRegion(f"site {s} outside window box")
        return (r - self.r_lo, q - self.q_lo)

    def contains(self, s):
        q, r = s
        return self.q_lo <= q <= self.q_hi and self.r_lo <= r <= self.r_hi

    def sites(self):
        """All window sites in canonical (r, q) row-major order."""
        return [(q, r)
                for r in range(self.r_lo, self.r_hi + 1)
                for q in range(self.q_lo, self.q_hi + 1)]

    # cached geometry grids -------------------------------------------------

    def xy_grids(self):
        """Embedded x/y coordinate arrays of shape ``self.shape``."""
        rs = np.arange(self.r_lo, self.r_hi + 1, dtype=np.float64)[:, None]
        qs = np.arange(self.q_lo, self.q_hi + 1, dtype=np.float64)[None, :]
        return qs + 0.5 * rs, rs * SQRT3_2


def window_for_disk(center, radius, mode="plane", margin=3, scale=0):
    """Smallest window box holding a disk of given radius plus margin."""
    cx, cy = center
    r_c = cy / SQRT3_2
    rad = float(radius)
    r_lo = math.floor(r_c - rad / SQRT3_2) - margin
    r_hi = math.ceil(r_c + rad / SQRT3_2) + margin
    if mode == "half_plane":
        r_lo = max(r_lo, 0)
    # q + r/2 in [cx - rad, cx + rad]  ->  q range depends on r range
    q_lo = math.floor(cx - rad - 0.5 * r_hi) - margin
    q_hi = math.ceil(cx + rad - 0.5 * r_lo) + margin
    return Window(q_lo, q_hi, r_lo, r_hi, mode=mode, scale=scale or int(radius))


def region_mask(region, window):
    """Boolean membership grid of a region inside a window (no margin check)."""
    nr, nq = window.shape
    if region.kind == "full_window":
        return np.ones((nr, nq), dtype=bool)
    if region.kind == "real_segment":
        m = np.zeros((nr, nq), dtype=bool)
        if window.r_lo <= 0 <= window.r_hi:
            row = -window.r_lo
            lo = max(region.q_lo, window.q_lo) - window.q_lo
            hi = min(region.q_hi, window.q_hi) - window.q_lo
            if hi >= lo:
                m[row, lo:hi + 1] = True
        return m
    xg, yg = window.xy_grids()
    cx, cy = region.center
    d = np.hypot(xg - cx, yg - cy)
    if region.kind == "disk":
        return d <= region.radius
    if region.kind == "half_plane_disk":
        m = d <= region.radius
        if window.r_lo < 0:
            m[:-window.r_lo, :] = False
        return m
    if region.kind == "annulus":
        return (d >= region.r_in) & (d <= region.r_out)
    if region.kind == "boundary_arc":
        ring = ring_mask(disk(region.center, region.radius), window)
        ang = np.arctan2(yg - cy, xg - cx) % (2.0 * math.pi)
        lo, hi = region.angles
        lo %= 2.0 * math.pi
        hi %= 2.0 * math.pi
        if lo <= hi:
            sel = (ang > lo) & (ang < hi)
        else:
            sel = (ang > lo) | (ang < hi)
        return ring & sel
    raise AssertionError(region.kind)


def ring_mask(region, window):
    """Sites of a disk/half-disk adjacent to at least one site outside it."""
    m = region_mask(region, window)
    outside = ~m
    ring = np.zeros_like(m)
    nr, nq = m.shape
    for dq, dr in NEIGHBOR_OFFSETS:
        shifted = np.ones_like(m)  # out-of-window counts as outside
        rs = slice(max(0, dr), min(nr, nr + dr))
        rd = slice(max(0, -dr), min(nr, nr - dr))
        qs = slice(max(0, dq), min(nq, nq + dq))
        qd = slice(max(0, -dq), min(nq, nq - dq))
        shifted[rd, qd] = outside[rs, qs]
        ring |= m & shifted
    if region.kind == "half_plane_disk":
        # the real-axis row is a model boundary, not a truncation: only the
        # curved part of the half-disk counts as its outer ring
        xg, yg = window.xy_grids()
        cx, cy = region.center
        d = np.hypot(xg - cx, yg - cy)
        ring &= d > region.radius - 1.0
    return ring


def check_fits(region, window, margin=2):
    """Raise RegionOutOfWindow unless the region fits with the margin.

    The margin is demanded on box edges that truncate the lattice; the real
    axis in half-plane mode is a true model boundary and is exempt.
    """
    m = region_mask(region, window)
    if not m.any():
        return
    rows, cols = np.nonzero(m)
    nr, nq = m.shape
    bad = (cols.min() < margin or cols.max() > nq - 1 - margin
           or rows.max() > nr - 1 - margin)
    top_ok = (window.mode == "half_plane" and window.r_lo == 0)
    if rows.min() < margin and not top_ok:
        bad = True
    if bad:
        raise RegionOutOfWindow(
            f"{region.kind} region does not fit window with margin {margin}")


def mask_sites(mask, window):
    """Sites of a boolean grid in canonical (r, q) row-major order."""
    rows, cols = np.nonzero(mask)
    return [(int(c) + window.q_lo, int(r) + window.r_lo)
            for r, c in zip(rows, cols)]


def region_sites(region, window, margin=2):
    """Deterministic row-major enumeration of a region's member sites."""
    check_fits(region, window, margin=margin)
    return mask_sites(region_mask(region, window), window)


def angular_order(sites, center):
    """Sites sorted CCW by atan2 angle about an embedded center point.

    Ties (exactly equal angles) break by (q, r) lexicographic order.
    """
    cx, cy = center

    def key(s):
        x, y = site_to_point(s)
        a = math.atan2(y - cy, x - cx) % (2.0 * math.pi)
        return (a, s[0], s[1])

    return sorted(sites, key=key)


def boundary_rings(region, window):
    """Inner and outer boundary rings of an annulus region.

    Inner ring: annulus sites adjacent to a site strictly inside the hole.
    Outer ring: annulus sites adjacent to a site strictly outside.
    The inner ring is returned in counterclockwise angular order.
    """
    if region.kind != "annulus":
        raise ValueError("boundary_rings needs an annulus region")
    check_fits(region, window)
    m = region_mask(region, window)
    sites = mask_sites(m, window)
    cx, cy = region.center
    inner, outer = [], []
    member = set(sites)
    for s in sites:
        for t in neighbors(s):
            if t in member:
                continue
            x, y = site_to_point(t)
            d = math.hypot(x - cx, y - cy)
            if d < region.r_in:
                inner.append(s)
                break
    for s in sites:
        for t in neighbors(s):
            if t in member:
                continue
            x, y = site_to_point(t)
            d = math.hypot(x - cx, y - cy)
            if d > region.r_out:
                outer.append(s)
                break
    return angular_order(inner, region.center), angular_order(outer, region.center)
