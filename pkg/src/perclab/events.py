"""Boolean detectors for every event family, evaluated on one coloring.

Conventions that fix the discrete meaning of the continuum events:

* Site-rooted single-color arms ("B"): the root itself carries the color
  and its cluster inside the closed disk reaches the disk's outer ring.
* Site-rooted multi-color arms: the arms start at the root's neighbors and
  live in the punctured disk; the root's own color is unconstrained.
* Annulus patterns: the cyclic (interior) or linear (half-plane) word of
  ring-to-ring crossing clusters, read along the inner ring in angular
  order, must contain the pattern as a subsequence over pairwise distinct
  clusters.  Half-plane words match the pattern or its reversal (the
  half-plane two-arm event is unordered).
* Monochromatic multi-arm patterns ("BB") use exact vertex-disjoint path
  counts (max-flow), not words.
* "Below"/"lowest path" notions are realized by a wall-following leftmost
  exploration of the cluster's lower boundary (loop-erased), or by the
  equivalent under-territory reachability set where only the territory is
  needed.

Every detector is certified per-configuration against the independent
brute-force implementations in oracle.py on exhaustively enumerated tiny
windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clusters import (color_mask, crossing_clusters, label_clusters,
                       label_grid, max_vertex_disjoint)
from .errors import (MarkedSitesTooClose, ModeMismatch, SiteOutOfRegion,
                     UnsupportedPattern)
from .lattice import (NEIGHBOR_OFFSETS, angular_order, annulus, check_fits,
                      disk, dist, full_window, half_plane_disk, mask_sites,
                      neighbors, region_mask, ring_mask, site_to_point)
from .sampler import BLACK, WHITE, Coloring

_COLOR_OF_LETTER = {"B": BLACK, "W": WHITE}


# --------------------------------------------------------------------------
# event specs (tagged union with canonical JSON form)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ArmPattern:
    word: str
    mode: str = "interior"  # interior | half_plane

    def __post_init__(self):
        if not (1 <= len(self.word) <= 6) or any(c not in "BW" for c in self.word):
            raise UnsupportedPattern(f"unsupported arm pattern {self.word!r}")
        if self.mode not in ("interior", "half_plane"):
            raise UnsupportedPattern(f"bad pattern mode {self.mode!r}")

    @property
    def monochromatic(self):
        return len(set(self.word)) == 1


@dataclass(frozen=True)
class ArmEvent:
    center: tuple
    r_in: float
    r_out: float
    pattern: ArmPattern


@dataclass(frozen=True)
class ConnectionPartition:
    points: tuple  # 4 sites
    label: str = "ALL"  # partition used when the spec serves as an indicator


@dataclass(frozen=True)
class SpinProduct:
    points: tuple  # 2n sites


@dataclass(frozen=True)
class Pivotal:
    center: tuple
    thetas: tuple  # 4 strictly increasing angles in (0, pi)
    radius: float

    def __post_init__(self):
        t = self.thetas
        if len(t) != 4 or not all(t[i] < t[i + 1] for i in range(3)) \
                or t[0] <= 0 or t[3] >= math.pi:
            raise ValueError("need 0 < theta1 < ... < theta4 < pi")


@dataclass(frozen=True)
class Backbone:
    x1: tuple
    x2: tuple
    z: tuple


@dataclass(frozen=True)
class REvent:
    i: int
    points: tuple
    min_separation: float = 10.0

    def __post_init__(self):
        if self.i not in (3, 4) or len(self.points) != self.i:
            raise ValueError("REvent needs i in {3,4} matching points")


@dataclass(frozen=True)
class KEvent:
    points: tuple  # x1 < x2 < x3 < x4 boundary sites


@dataclass(frozen=True)
class LEvent:
    points: tuple


@dataclass(frozen=True)
class MEvent:
    points: tuple


@dataclass(frozen=True)
class MHatEvent:
    x1: tuple
    x2: tuple
    y: tuple
    strict: bool = True


_SPEC_TYPES = {
    "arm": ArmEvent, "connection": ConnectionPartition, "spin_product": SpinProduct,
    "pivotal": Pivotal, "backbone": Backbone, "r": REvent, "k": KEvent,
    "l": LEvent, "m": MEvent, "m_hat": MHatEvent,
}


def spec_to_json(spec):
    """Canonical JSON-ready dict for an EventSpec."""
    if isinstance(spec, ArmEvent):
        return {"type": "arm", "center": list(spec.center), "r_in": spec.r_in,
                "r_out": spec.r_out, "pattern": spec.pattern.word,
                "mode": spec.pattern.mode}
    if isinstance(spec, ConnectionPartition):
        return {"type": "connection", "points": [list(p) for p in spec.points],
                "label": spec.label}
    if isinstance(spec, SpinProduct):
        return {"type": "spin_product", "points": [list(p) for p in spec.points]}
    if isinstance(spec, Pivotal):
        return {"type": "pivotal", "center": list(spec.center),
                "thetas": list(spec.thetas), "radius": spec.radius}
    if isinstance(spec, Backbone):
        return {"type": "backbone", "x1": list(spec.x1), "x2": list(spec.x2),
                "z": list(spec.z)}
    if isinstance(spec, REvent):
        return {"type": "r", "i": spec.i, "points": [list(p) for p in spec.points],
                "min_separation": spec.min_separation}
    if isinstance(spec, KEvent):
        return {"type": "k", "points": [list(p) for p in spec.points]}
    if isinstance(spec, LEvent):
        return {"type": "l", "points": [list(p) for p in spec.points]}
    if isinstance(spec, MEvent):
        return {"type": "m", "points": [list(p) for p in spec.points]}
    if isinstance(spec, MHatEvent):
        return {"type": "m_hat", "x1": list(spec.x1), "x2": list(spec.x2),
                "y": list(spec.y), "strict": spec.strict}
    raise TypeError(f"not an event spec: {spec!r}")


def spec_from_json(d):
    """Parse the canonical JSON dict; unknown fields are rejected."""
    d = dict(d)
    kind = d.pop("type", None)
    if kind not in _SPEC_TYPES:
        raise ValueError(f"unknown event type {kind!r}")
    site = lambda v: (int(v[0]), int(v[1]))
    pts = lambda v: tuple(site(p) for p in v)
    known = {
        "arm": lambda: ArmEvent(site(d.pop("center")), float(d.pop("r_in")),
                                float(d.pop("r_out")),
                                ArmPattern(d.pop("pattern"), d.pop("mode", "interior"))),
        "connection": lambda: ConnectionPartition(pts(d.pop("points")),
                                                  d.pop("label", "ALL")),
        "spin_product": lambda: SpinProduct(pts(d.pop("points"))),
        "pivotal": lambda: Pivotal(site(d.pop("center")),
                                   tuple(float(t) for t in d.pop("thetas")),
                                   float(d.pop("radius"))),
        "backbone": lambda: Backbone(site(d.pop("x1")), site(d.pop("x2")),
                                     site(d.pop("z"))),
        "r": lambda: REvent(int(d.pop("i")), pts(d.pop("points")),
                            float(d.pop("min_separation", 10.0))),
        "k": lambda: KEvent(pts(d.pop("points"))),
        "l": lambda: LEvent(pts(d.pop("points"))),
        "m": lambda: MEvent(pts(d.pop("points"))),
        "m_hat": lambda: MHatEvent(site(d.pop("x1")), site(d.pop("x2")),
                                   site(d.pop("y")), bool(d.pop("strict", True))),
    }
    spec = known[kind]()
    if d:
        raise ValueError(f"unknown fields for event {kind!r}: {sorted(d)}")
    return spec


# --------------------------------------------------------------------------
# word matching
# --------------------------------------------------------------------------


def _match_from(runs, pattern, start, cyclic):
    n = len(runs)
    used = [runs[start][1]]

    def rec(pi, pos):
        if pi == len(pattern):
            return True
        limit = start + n if cyclic else n
        p = pos
        while p < limit:
            col, cid = runs[p % n]
            if col == pattern[pi] and cid not in used:
                used.append(cid)
                if rec(pi + 1, p + 1):
                    return True
                used.pop()
            p += 1
        return False

    return rec(1, start + 1)


def word_contains(runs, word, cyclic):
    """Does the run word contain ``word`` as a (cyclic) subsequence over
    pairwise distinct clusters?  ``runs`` is a list of (color, cluster id).

    Half-plane (linear) matching additionally accepts the reversed word,
    matching the unordered definition of the boundary multi-arm events.
    """
    pattern = [_COLOR_OF_LETTER[c] for c in word]
    n = len(runs)
    if n < len(word):
        return False
    candidates = [pattern] if cyclic else [pattern, pattern[::-1]]
    seen = set()
    for pat in candidates:
        key = tuple(pat)
        if key in seen:
            continue
        seen.add(key)
        for s in range(n):
            if runs[s][0] == pat[0]:
                if len(pat) == 1 or _match_from(runs, pat, s, cyclic):
                    return True
    return False


def _runs_from_positions(entries):
    """Collapse per-position (color, id) entries (None for non-crossing)
    into a run word."""
    runs = []
    for e in entries:
        if e is None:
            continue
        if runs and runs[-1] == e:
            continue
        runs.append(e)
    return runs


def _merge_cyclic(runs):
    if len(runs) >= 2 and runs[0] == runs[-1]:
        runs = runs[:-1]
    return runs


# --------------------------------------------------------------------------
# arm events
# --------------------------------------------------------------------------


def _disk_region(center_pt, r_out, half_plane):
    return half_plane_disk(center_pt, r_out) if half_plane else disk(center_pt, r_out)


def _site_neighbors_ring(center, half_plane):
    nb = [s for s in neighbors(center) if not (half_plane and s[1] < 0)]
    return angular_order(nb, site_to_point(center))


def _crossing_word(coloring, region, inner_sites, outer_ring_sites,
                   exclude=(), margin=2):
    """Per-position (color, id) entries along inner_sites for both colors."""
    window = coloring.window
    base = region_mask(region, window)
    for s in exclude:
        base[window.grid_of(s)] = False
    words = []
    entries = [None] * len(inner_sites)
    for color in (BLACK, WHITE):
        cm = coloring.bits.astype(bool) if color == BLACK else ~coloring.bits.astype(bool)
        raw, n = label_grid(base & cm)
        if n == 0:
            continue
        outer = set()
        for s in outer_ring_sites:
            v = int(raw[window.grid_of(s)])
            if v > 0:
                outer.add(v)
        for i, s in enumerate(inner_sites):
            v = int(raw[window.grid_of(s)])
            if v > 0 and v in outer:
                entries[i] = (color, (color, v))
    return entries


def arm_event(coloring, spec: ArmEvent, margin=2):
    """Arm event detector; see the module docstring for the conventions."""
    pattern = spec.pattern
    window = coloring.window
    half = pattern.mode == "half_plane"
    if half and window.mode != "half_plane":
        raise ModeMismatch("half-plane arm pattern needs a half-plane window")
    if half and spec.center[1] != 0 and spec.r_in == 0:
        raise ModeMismatch("half-plane site-rooted arm needs a boundary root")
    center_pt = site_to_point(spec.center)
    region = _disk_region(center_pt, spec.r_out, half) if spec.r_in == 0 \
        else annulus(center_pt, spec.r_in, spec.r_out)
    check_fits(region, window, margin=margin)

    if spec.r_in == 0:
        outer_sites = mask_sites(ring_mask(_disk_region(center_pt, spec.r_out, half),
                                           window), window)
        word = pattern.word
        if len(word) == 1:
            color = _COLOR_OF_LETTER[word]
            if coloring.color_of(spec.center) != color:
                return False
            cmap = label_clusters(coloring, color, region, margin=margin)
            cid = cmap.id_of(spec.center)
            return any(cmap.id_of(s) == cid for s in outer_sites)
        if pattern.monochromatic:
            color = _COLOR_OF_LETTER[word[0]]
            if coloring.color_of(spec.center) != color:
                return False
            return max_vertex_disjoint(coloring, color, region,
                                       sources=[spec.center], sinks=outer_sites,
                                       k=len(word), shared=spec.center,
                                       margin=margin)
        inner = _site_neighbors_ring(spec.center, half)
        entries = _crossing_word(coloring, region, inner, outer_sites,
                                 exclude=[spec.center], margin=margin)
    else:
        from .lattice import boundary_rings
        inner, outer_sites = boundary_rings(region, window)
        if not inner or not outer_sites:
            return False
        word = pattern.word
        if pattern.monochromatic and len(word) > 1:
            color = _COLOR_OF_LETTER[word[0]]
            return max_vertex_disjoint(coloring, color, region,
                                       sources=inner, sinks=outer_sites,
                                       k=len(word), margin=margin)
        entries = _crossing_word(coloring, region, inner, outer_sites,
                                 margin=margin)

    runs = _runs_from_positions(entries)
    if not half:
        runs = _merge_cyclic(runs)
    return word_contains(runs, pattern.word, cyclic=not half)


# --------------------------------------------------------------------------
# connectivity observables
# --------------------------------------------------------------------------


def spin_product_expectation(coloring, points):
    """Exact conditional expectation of the spin product given the coloring.

    1 iff every marked point is black and each black cluster holds an even
    number of marked points; 0 otherwise.
    """
    cmap = label_clusters(coloring, BLACK)
    counts = {}
    for p in points:
        cid = cmap.id_of(p)
        if cid < 0:
            return 0
        counts[cid] = counts.get(cid, 0) + 1
    return 1 if all(v % 2 == 0 for v in counts.values()) else 0


def connection_partition(coloring, points):
    """Four-point connection pattern: ALL / P12_34 / P13_24 / P14_23 / NONE."""
    if len(points) != 4:
        raise ValueError("connection_partition needs 4 points")
    cmap = label_clusters(coloring, BLACK)
    ids = [cmap.id_of(p) for p in points]
    if min(ids) < 0:
        return "NONE"
    if len(set(ids)) == 1:
        return "ALL"
    for label, (a, b, c, d) in (("P12_34", (0, 1, 2, 3)),
                                ("P13_24", (0, 2, 1, 3)),
                                ("P14_23", (0, 3, 1, 2))):
        if ids[a] == ids[b] and ids[c] == ids[d] and ids[a] != ids[c]:
            return label
    return "NONE"


# --------------------------------------------------------------------------
# pivotal
# --------------------------------------------------------------------------


def _arc_site_lists(window, center_pt, radius, thetas):
    ring = mask_sites(ring_mask(disk(center_pt, radius), window), window)
    cx, cy = center_pt
    phis = [2.0 * t for t in thetas]  # boundary points sit at exp(2 i theta)
    arcs = [[] for _ in range(4)]
    for s in ring:
        x, y = site_to_point(s)
        a = math.atan2(y - cy, x - cx) % (2.0 * math.pi)
        for j in range(4):
            lo = phis[j]
            hi = phis[(j + 1) % 4] + (2.0 * math.pi if j == 3 else 0.0)
            aa = a + (2.0 * math.pi if j == 3 and a < lo else 0.0)
            if lo < aa < hi:
                arcs[j].append(s)
                break
    return arcs


def _disk_crossing(coloring, region, arc_a, arc_b, margin):
    cmap = label_clusters(coloring, BLACK, region, margin=margin)
    ids_a = cmap.touch_ids(arc_a)
    if not ids_a:
        return False
    return bool(ids_a & cmap.touch_ids(arc_b))


def pivotal_event(coloring, spec: Pivotal, margin=2):
    """Is the center pivotal for the black crossing between opposite arcs?

    Evaluates the crossing with the center forced black and forced white;
    pivotal means it holds in the first case and fails in the second.
    """
    center_pt = site_to_point(spec.center)
    region = disk(center_pt, spec.radius)
    check_fits(region, coloring.window, margin=margin)
    arcs = _arc_site_lists(coloring.window, center_pt, spec.radius, spec.thetas)
    black = coloring.with_overrides({spec.center: BLACK})
    if not _disk_crossing(black, region, arcs[0], arcs[2], margin):
        return False
    white = coloring.with_overrides({spec.center: WHITE})
    return not _disk_crossing(white, region, arcs[0], arcs[2], margin)


# --------------------------------------------------------------------------
# backbone
# --------------------------------------------------------------------------


def backbone_event(coloring, x1, x2, z, margin=0):
    """z belongs to the backbone joining boundary sites x1 and x2:
    two black paths z->x1 and z->x2, disjoint except at z."""
    if coloring.window.mode != "half_plane":
        raise ModeMismatch("backbone event needs a half-plane window")
    if x1[1] != 0 or x2[1] != 0 or z[1] <= 0:
        raise SiteOutOfRegion("x1, x2 on the boundary row and z strictly inside")
    if not (coloring.is_black(x1) and coloring.is_black(x2) and coloring.is_black(z)):
        return False
    return max_vertex_disjoint(
        coloring, BLACK, full_window(), sources=[z], sinks=None, k=2, shared=z,
        sink_groups=[{"sites": [x1], "cap": 1}, {"sites": [x2], "cap": 1}],
        margin=margin)


# --------------------------------------------------------------------------
# R events (several four-arm junctions joined pairwise)
# --------------------------------------------------------------------------


def _distinct_representatives(sets):
    """Backtracking system-of-distinct-representatives over <= 4 sets."""
    order = sorted(range(len(sets)), key=lambda j: len(sets[j]))
    used = set()

    def rec(k):
        if k == len(order):
            return True
        for cid in sets[order[k]]:
            if cid not in used:
                used.add(cid)
                if rec(k + 1):
                    return True
                used.remove(cid)
        return False

    return rec(0)


def r_event(coloring, spec: REvent, margin=0):
    """i black paths in i pairwise different black clusters joining the
    marked sites cyclically, clusters taken in the punctured lattice."""
    pts = spec.points
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            if dist(pts[a], pts[b]) < spec.min_separation:
                raise MarkedSitesTooClose(
                    f"marked sites {pts[a]} and {pts[b]} closer than "
                    f"{spec.min_separation}")
    window = coloring.window
    mask = coloring.bits.astype(bool).copy()
    for p in pts:
        mask[window.grid_of(p)] = False
    raw, n = label_grid(mask)
    if n == 0:
        return False
    link_sets = []
    for j in range(spec.i):
        a, b = pts[j], pts[(j + 1) % spec.i]
        ids_a = {int(raw[window.grid_of(s)]) for s in neighbors(a)
                 if window.contains(s) and raw[window.grid_of(s)] > 0}
        ids_b = {int(raw[window.grid_of(s)]) for s in neighbors(b)
                 if window.contains(s) and raw[window.grid_of(s)] > 0}
        link = ids_a & ids_b
        if not link:
            return False
        link_sets.append(link)
    return _distinct_representatives(link_sets)


# --------------------------------------------------------------------------
# lowest paths and the boundary events built on them (K, L, M, M-hat)
# --------------------------------------------------------------------------


def _require_boundary_points(coloring, pts):
    if coloring.window.mode != "half_plane":
        raise ModeMismatch("boundary event needs a half-plane window")
    qs = [p[0] for p in pts]
    if any(p[1] != 0 for p in pts) or any(qs[i] >= qs[i + 1] for i in range(len(qs) - 1)):
        raise SiteOutOfRegion("need strictly ordered boundary sites on row 0")


def _component(mask, window, seed):
    """Boolean grid of the connected component of seed within mask."""
    raw, n = label_grid(mask)
    r, c = window.grid_of(seed)
    v = raw[r, c]
    if v == 0:
        return None
    return raw == v


def _reach(mask, window, seeds):
    """Boolean grid of mask sites reachable from the seed sites."""
    raw, n = label_grid(mask)
    keep = set()
    for s in seeds:
        try:
            rc = window.grid_of(s)
        except SiteOutOfRegion:
            continue
        v = raw[rc]
        if v > 0:
            keep.add(int(v))
    if not keep:
        return np.zeros_like(mask)
    return np.isin(raw, sorted(keep))


def under_territory(coloring, cluster_grid, q_lo, q_hi):
    """Sites reachable from the row-0 gaps strictly between q_lo and q_hi
    without entering the given cluster: the territory below its lowest
    crossing between the two endpoints."""
    window = coloring.window
    seeds = [(q, 0) for q in range(q_lo + 1, q_hi)
             if window.contains((q, 0)) and not cluster_grid[window.grid_of((q, 0))]]
    if not seeds:
        return np.zeros(window.shape, dtype=bool)
    return _reach(~cluster_grid, window, seeds)


def _step(site, d):
    dq, dr = NEIGHBOR_OFFSETS[d]
    return (site[0] + dq, site[1] + dr)


def lowest_path(allowed, window, start, targets):
    """Loop-erased wall-following walk along the lower boundary of the
    start site's cluster, stopped at the first target hit.

    ``allowed`` is a boolean grid; the walk hugs the forbidden region
    below/right, which realizes the lowest (leftmost-exploration) path from
    a boundary site to a set of boundary targets.  Returns the site list or
    None when no target is reachable.
    """

    def ok(s):
        if not window.contains(s) or s[1] < 0:
            return False
        return bool(allowed[window.grid_of(s)])

    targets = set(targets)
    if not ok(start):
        return None
    if start in targets:
        return [start]
    stack = [start]
    pos = {start: 0}
    cur = start
    d_in = 0  # fictitious incoming step pointing +q keeps the wall below
    seen_states = set()
    while True:
        moved = False
        for k in range(6):
            d = (d_in - 2 + k) % 6
            nxt = _step(cur, d)
            if not ok(nxt):
                continue
            state = (cur, d)
            if state in seen_states:
                return None
            seen_states.add(state)
            if nxt in pos:  # loop erasure
                cut = pos[nxt]
                for s in stack[cut + 1:]:
                    del pos[s]
                del stack[cut + 1:]
            else:
                stack.append(nxt)
                pos[nxt] = len(stack) - 1
            if nxt in targets:
                return stack
            cur, d_in = nxt, d
            moved = True
            break
        if not moved:
            return None


def _k_pair_ok(coloring, xa, xb, margin):
    """One K-pair: xa, xb black-connected with a white path above the
    connection's lower envelope joining their neighborhoods."""
    window = coloring.window
    if not (coloring.is_black(xa) and coloring.is_black(xb)):
        return False
    black = coloring.bits.astype(bool)
    comp = _component(black, window, xa)
    if comp is None or not comp[window.grid_of(xb)]:
        return False
    under = under_territory(coloring, comp, xa[0], xb[0])
    white_ok = (~black) & (~under)
    src = [s for s in neighbors(xa) if s[1] >= 0]
    dst = [s for s in neighbors(xb) if s[1] >= 0]
    reach = _reach(white_ok, window, src)
    return any(window.contains(s) and reach[window.grid_of(s)] for s in dst)


def k_event(coloring, points, margin=2):
    """Nested boundary two-arm event: for (x1,x2) and (x3,x4) separately, a
    black connection with a white path strictly above its lowest crossing."""
    _require_boundary_points(coloring, points)
    x1, x2, x3, x4 = points
    return _k_pair_ok(coloring, x1, x2, margin) and _k_pair_ok(coloring, x3, x4, margin)


def _segment_sites(window, q_lo, q_hi):
    return [(q, 0) for q in range(q_lo, q_hi + 1) if window.contains((q, 0))]


def l_event(coloring, points, margin=0):
    """(1) two disjoint white paths from N(x1) and x2+1 to [x3,x4];
    (2) black path x1<->x2; (3) no black path x1<->[x3,x4]."""
    _require_boundary_points(coloring, points)
    x1, x2, x3, x4 = points
    window = coloring.window
    cmap = label_clusters(coloring, BLACK)
    cid = cmap.id_of(x1)
    if cid < 0 or cmap.id_of(x2) != cid:
        return False
    seg = _segment_sites(window, x3[0], x4[0])
    if any(cmap.id_of(s) == cid for s in seg):
        return False
    nb1 = [s for s in neighbors(x1) if s[1] >= 0]
    right = (x2[0] + 1, 0)
    return max_vertex_disjoint(
        coloring, WHITE, full_window(), sources=None, sinks=seg, k=2,
        source_groups=[{"sites": nb1, "cap": 1}, {"sites": [right], "cap": 1}],
        margin=margin)


def enclosed_territory(window, path_sites):
    """Sites cut off from the window border by a boundary-anchored path
    (the real-axis row never seeds the sweep in half-plane mode)."""
    blocked = np.zeros(window.shape, dtype=bool)
    for s in path_sites:
        blocked[window.grid_of(s)] = True
    free = ~blocked
    raw, n = label_grid(free)
    border_labels = set(np.unique(raw[0, :])) if window.mode != "half_plane" \
        else set()
    border_labels |= set(np.unique(raw[-1, :]))
    border_labels |= set(np.unique(raw[:, 0]))
    border_labels |= set(np.unique(raw[:, -1]))
    border_labels.discard(0)
    enclosed = free.copy()
    for lab in border_labels:
        enclosed &= raw != lab
    return enclosed


def exploration_flip(coloring, x1, x2, seg_lo, seg_hi):
    """The color flip of the L<->M correspondence.

    Explores the lowest black path x1 -> x2 and the lowest white path
    x2+1 -> [seg_lo, seg_hi] together with the territories they enclose
    against the real axis, then flips every color outside the explored set.
    Returns None when either lowest path does not exist; the map is an
    involution on the configurations where both exist.
    """
    window = coloring.window
    black = coloring.bits.astype(bool)
    gb = lowest_path(black, window, x1, {x2})
    if gb is None:
        return None
    seg = _segment_sites(window, seg_lo, seg_hi)
    gw = lowest_path(~black, window, (x2[0] + 1, 0), set(seg))
    if gw is None:
        return None
    keep = enclosed_territory(window, gb) | enclosed_territory(window, gw)
    for s in gb + gw:
        keep[window.grid_of(s)] = True
    bits = np.where(keep, coloring.bits, 1 - coloring.bits).astype(np.uint8)
    return Coloring(window, bits)


def m_event(coloring, points, margin=0):
    """Image of the L event under the exploration flip.

    Requires the two explored structures (black x1<->x2 connection, white
    x2+1 <-> [x3,x4] connection); the event holds iff flipping all colors
    outside the explored set produces a configuration in the L event.  This
    realizes the disjoint black paths x1->[x3,x4] / x1->x2, the white path
    x2+1->[x3,x4], and the black attachment of the lowest white path, and
    is exactly in bijection with the L event.
    """
    _require_boundary_points(coloring, points)
    x1, x2, x3, x4 = points
    flipped = exploration_flip(coloring, x1, x2, x3[0], x4[0])
    if flipped is None:
        return False
    return l_event(flipped, points, margin=margin)


def m_hat_event(coloring, x1, x2, y, strict=True, margin=0):
    """(1) disjoint-except-x1 black paths x1->x2 and x1->y; (2) white path
    x2+1 <-> y-1; (3, strict only) the lowest white path x2+1 -> y-1 is
    adjacent to the black cluster of x1."""
    _require_boundary_points(coloring, (x1, x2, y))
    window = coloring.window
    if not coloring.is_black(x1):
        return False
    if not max_vertex_disjoint(
            coloring, BLACK, full_window(), sources=[x1], sinks=None, k=2,
            shared=x1,
            sink_groups=[{"sites": [x2], "cap": 1}, {"sites": [y], "cap": 1}],
            margin=margin):
        return False
    right = (x2[0] + 1, 0)
    left = (y[0] - 1, 0)
    white = ~coloring.bits.astype(bool)
    wmap = label_clusters(coloring, WHITE)
    wid = wmap.id_of(right)
    if wid < 0 or wmap.id_of(left) != wid:
        return False
    if not strict:
        return True
    gamma = lowest_path(white, window, right, {left})
    if gamma is None:
        return False
    cmap = label_clusters(coloring, BLACK)
    cid = cmap.id_of(x1)
    for s in gamma:
        for t in neighbors(s):
            if t[1] >= 0 and window.contains(t) and cmap.id_of(t) == cid:
                return True
    return False


# --------------------------------------------------------------------------
# dispatcher
# --------------------------------------------------------------------------


def evaluate(coloring, spec, margin=2):
    """Evaluate any EventSpec as a 0/1 indicator on one coloring."""
    if isinstance(spec, ArmEvent):
        return int(arm_event(coloring, spec, margin=margin))
    if isinstance(spec, ConnectionPartition):
        return int(connection_partition(coloring, spec.points) == spec.label)
    if isinstance(spec, SpinProduct):
        return spin_product_expectation(coloring, spec.points)
    if isinstance(spec, Pivotal):
        return int(pivotal_event(coloring, spec, margin=margin))
    if isinstance(spec, Backbone):
        return int(backbone_event(coloring, spec.x1, spec.x2, spec.z))
    if isinstance(spec, REvent):
        return int(r_event(coloring, spec))
    if isinstance(spec, KEvent):
        return int(k_event(coloring, spec.points))
    if isinstance(spec, LEvent):
        return int(l_event(coloring, spec.points))
    if isinstance(spec, MEvent):
        return int(m_event(coloring, spec.points))
    if isinstance(spec, MHatEvent):
        return int(m_hat_event(coloring, spec.x1, spec.x2, spec.y, spec.strict))
    raise TypeError(f"not an event spec: {spec!r}")
