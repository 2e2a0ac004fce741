"""Exact brute-force authority for tiny windows.

Everything here is written against plain Python sets and dicts with naive
BFS / simple-path enumeration, sharing only the lattice geometry with the
production detectors.  ``enumerate_event_probability`` walks all colorings
of an event's support and counts with the naive detector;
``certify_agreement`` additionally runs the production detector on every
configuration and reports mismatches (the master correctness gate).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import events as ev
from .errors import WindowTooLarge
from .lattice import (angular_order, annulus, disk, half_plane_disk,
                      mask_sites, neighbors, region_mask, ring_mask,
                      site_to_point)
from .sampler import BLACK, WHITE, Coloring

HARD_CAP = 24
DEFAULT_CAP = 16


# --------------------------------------------------------------------------
# naive primitives (sets + BFS + path enumeration)
# --------------------------------------------------------------------------


def _flood(allowed, start):
    """BFS component of start within the ``allowed`` site set."""
    if start not in allowed:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        for t in neighbors(s):
            if t in allowed and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def _flood_many(allowed, starts):
    seen = set()
    stack = [s for s in starts if s in allowed]
    seen.update(stack)
    while stack:
        s = stack.pop()
        for t in neighbors(s):
            if t in allowed and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def _exists_path(allowed, sources, targets):
    targets = set(targets)
    return bool(_flood_many(allowed, sources) & targets)


def _simple_paths(allowed, start, targets, forbid_interior_targets=True):
    """All simple paths from start ending at the first target they touch."""
    targets = set(targets)
    out = []
    if start not in allowed:
        return out
    if start in targets:
        return [[start]]
    path = [start]
    on = {start}

    def rec(cur):
        for t in neighbors(cur):
            if t not in allowed or t in on:
                continue
            path.append(t)
            if t in targets:
                out.append(list(path))
            else:
                on.add(t)
                rec(t)
                on.remove(t)
            path.pop()

    rec(start)
    return out


def _two_disjoint(allowed, start_a, targets_a, start_b, targets_b, shared=None):
    """Two vertex-disjoint (except ``shared``) paths, found by enumerating
    simple paths for the first link and BFS for the second.  ``start_a`` and
    ``start_b`` are single sites."""
    for p in _simple_paths(allowed, start_a, targets_a):
        rest = allowed - set(p)
        if shared is not None and shared in allowed:
            rest = rest | ({shared} & set(p))
        if _exists_path(rest, [start_b], targets_b):
            return True
    return False


def _under_region(window, path_sites):
    """Sites not reachable from the window border without touching the path
    (the territory enclosed by the path and the real axis).

    In half-plane windows the bottom row is the model's own boundary, not a
    truncation, so it does not seed the reachability sweep."""
    blocked = set(path_sites)
    border = []
    for q in range(window.q_lo, window.q_hi + 1):
        border.append((q, window.r_hi))
        if window.mode != "half_plane" or window.r_lo > 0:
            border.append((q, window.r_lo))
    for r in range(window.r_lo, window.r_hi + 1):
        border.append((window.q_lo, r))
        border.append((window.q_hi, r))
    allowed = {s for s in window.sites() if s not in blocked}
    reach = _flood_many(allowed, [b for b in border if b not in blocked])
    return allowed - reach


def naive_lowest_path(window, allowed, start, targets):
    """Brute-force lowest path: among simple first-hit paths with
    inclusion-minimal enclosed territory, the one with inclusion-minimal
    site set.  None if no path; AssertionError if the minimum is not
    unique (would indicate the convention is ill-posed)."""
    cands = _simple_paths(allowed, start, set(targets))
    if not cands:
        return None
    unders = [frozenset(_under_region(window, p)) for p in cands]
    low = [p for p, u in zip(cands, unders) if all(u <= v for v in unders)]
    if not low:
        raise AssertionError("no inclusion-minimal territory; ill-defined")
    sets = [frozenset(p) for p in low]
    for p, ps in zip(low, sets):
        if all(ps <= o for o in sets):
            return p
    raise AssertionError("no site-minimal lowest path; ill-defined")


# --------------------------------------------------------------------------
# a naive view of one coloring
# --------------------------------------------------------------------------


class _Bits:
    """Site -> color mapping restricted to a window (half-plane aware)."""

    def __init__(self, window, colors):
        self.window = window
        self.colors = colors  # dict site -> BLACK/WHITE

    def black(self):
        return {s for s, c in self.colors.items() if c == BLACK}

    def white(self):
        return {s for s, c in self.colors.items() if c == WHITE}

    def is_black(self, s):
        return self.colors.get(s, WHITE) == BLACK


# --------------------------------------------------------------------------
# naive detectors (independent implementations of the same definitions)
# --------------------------------------------------------------------------


def _region_set(region, window):
    return set(mask_sites(region_mask(region, window), window))


def _naive_crossing_ids(bits, region_set, color, inner_sites, outer_sites):
    """Per-inner-position (color, frozen cluster) entries via flood fill."""
    pool = (bits.black() if color == BLACK else bits.white()) & region_set
    outer = set(outer_sites)
    entries = {}
    seen = {}
    for i, s in enumerate(inner_sites):
        if s not in pool:
            continue
        if s not in seen:
            comp = frozenset(_flood(pool, s))
            for t in comp:
                seen[t] = comp
        comp = seen[s]
        if comp & outer:
            entries[i] = (color, comp)
    return entries


def _naive_word_match(entries, word, cyclic):
    """Brute-force subsequence search over position tuples."""
    positions = sorted(entries)
    k = len(word)
    colors = [ev._COLOR_OF_LETTER[c] for c in word]
    wordlists = [colors] if cyclic else [colors, colors[::-1]]

    def try_linear(pat):
        for combo in itertools.combinations(positions, k):
            ids = [entries[p] for p in combo]
            if all(ids[j][0] == pat[j] for j in range(k)) and \
                    len({x[1] for x in ids}) == k:
                return True
        return False

    if not cyclic:
        return any(try_linear(p) for p in wordlists)
    # cyclic: rotate the starting position around the ring
    for combo in itertools.combinations(positions, k):
        ids = [entries[p] for p in combo]
        if len({x[1] for x in ids}) != k:
            continue
        for rot in range(k):
            if all(ids[(rot + j) % k][0] == colors[j] for j in range(k)):
                return True
    return False


def naive_arm_event(bits, spec: ev.ArmEvent):
    window = bits.window
    half = spec.pattern.mode == "half_plane"
    center_pt = site_to_point(spec.center)
    if spec.r_in == 0:
        region = half_plane_disk(center_pt, spec.r_out) if half \
            else disk(center_pt, spec.r_out)
        rset = _region_set(region, window)
        outer = mask_sites(ring_mask(region, window), window)
        word = spec.pattern.word
        if len(word) == 1:
            color = ev._COLOR_OF_LETTER[word]
            if bits.colors.get(spec.center) != color:
                return False
            pool = (bits.black() if color == BLACK else bits.white()) & rset
            return bool(_flood(pool, spec.center) & set(outer))
        if spec.pattern.monochromatic:
            color = ev._COLOR_OF_LETTER[word[0]]
            if bits.colors.get(spec.center) != color:
                return False
            pool = (bits.black() if color == BLACK else bits.white()) & rset
            return _two_disjoint(pool, spec.center, outer, spec.center, outer,
                                 shared=spec.center)
        inner = [s for s in neighbors(spec.center) if not (half and s[1] < 0)]
        inner = angular_order(inner, center_pt)
        rset = rset - {spec.center}
    else:
        region = annulus(center_pt, spec.r_in, spec.r_out)
        rset = _region_set(region, window)
        from .lattice import boundary_rings
        inner, outer = boundary_rings(region, window)
        if not inner or not outer:
            return False
        word = spec.pattern.word
        if spec.pattern.monochromatic and len(word) > 1:
            color = ev._COLOR_OF_LETTER[word[0]]
            pool = (bits.black() if color == BLACK else bits.white()) & rset
            if len(word) != 2:
                raise NotImplementedError("naive monochromatic arms only up to 2")
            return _two_disjoint_sets(pool, inner, outer)
    entries = {}
    for color in (BLACK, WHITE):
        entries.update(_naive_crossing_ids(bits, rset, color, inner, outer))
    return _naive_word_match(entries, spec.pattern.word, cyclic=not half)


def _two_disjoint_sets(pool, sources, targets):
    """Two fully vertex-disjoint paths from a source set to a target set."""
    for s in sources:
        for p in _simple_paths(pool, s, set(targets)):
            rest = pool - set(p)
            if _exists_path(rest, [t for t in sources if t in rest], targets):
                return True
    return False


def naive_spin_product(bits, points):
    black = bits.black()
    comps = []
    for p in points:
        if p not in black:
            return 0
        comps.append(frozenset(_flood(black, p)))
    for comp in set(comps):
        if comps.count(comp) % 2 == 1:
            return 0
    return 1


def naive_connection_partition(bits, points):
    black = bits.black()
    if any(p not in black for p in points):
        return "NONE"
    comp = [frozenset(_flood(black, p)) for p in points]
    if comp[0] == comp[1] == comp[2] == comp[3]:
        return "ALL"
    for label, (a, b, c, d) in (("P12_34", (0, 1, 2, 3)),
                                ("P13_24", (0, 2, 1, 3)),
                                ("P14_23", (0, 3, 1, 2))):
        if comp[a] == comp[b] and comp[c] == comp[d] and comp[a] != comp[c]:
            return label
    return "NONE"


def naive_pivotal(bits, spec: ev.Pivotal):
    window = bits.window
    center_pt = site_to_point(spec.center)
    rset = _region_set(disk(center_pt, spec.radius), window)
    arcs = ev._arc_site_lists(window, center_pt, spec.radius, spec.thetas)

    def crossing(colors):
        black = {s for s in rset if colors.get(s) == BLACK}
        return _exists_path(black, [a for a in arcs[0] if a in black], arcs[2])

    with_black = dict(bits.colors)
    with_black[spec.center] = BLACK
    with_white = dict(bits.colors)
    with_white[spec.center] = WHITE
    return crossing(with_black) and not crossing(with_white)


def naive_backbone(bits, x1, x2, z):
    black = bits.black()
    if not {x1, x2, z} <= black:
        return False
    return _two_disjoint(black, z, {x1}, z, {x2}, shared=z)


def naive_r_event(bits, spec: ev.REvent):
    pts = list(spec.points)
    black = bits.black() - set(pts)
    comp_of = {}
    for s in black:
        if s not in comp_of:
            c = frozenset(_flood(black, s))
            for t in c:
                comp_of[t] = c
    links = []
    for j in range(spec.i):
        a, b = pts[j], pts[(j + 1) % spec.i]
        ca = {comp_of[t] for t in neighbors(a) if t in comp_of}
        cb = {comp_of[t] for t in neighbors(b) if t in comp_of}
        link = ca & cb
        if not link:
            return False
        links.append(sorted(link, key=lambda c: sorted(c)[0]))
    for choice in itertools.product(*links):
        if len(set(choice)) == spec.i:
            return True
    return False


def _naive_k_pair(bits, xa, xb):
    window = bits.window
    black = bits.black()
    if xa not in black or xb not in black:
        return False
    comp = _flood(black, xa)
    if xb not in comp:
        return False
    sites = set(window.sites())
    seeds = [(q, 0) for q in range(xa[0] + 1, xb[0])
             if (q, 0) in sites and (q, 0) not in comp]
    territory = _flood_many(sites - comp, seeds)
    white_ok = bits.white() - territory
    src = [s for s in neighbors(xa) if s in white_ok]
    dst = {s for s in neighbors(xb)}
    return bool(_flood_many(white_ok, src) & dst)


def naive_k_event(bits, points):
    x1, x2, x3, x4 = points
    return _naive_k_pair(bits, x1, x2) and _naive_k_pair(bits, x3, x4)


def naive_l_event(bits, points):
    x1, x2, x3, x4 = points
    window = bits.window
    black = bits.black()
    if x1 not in black:
        return False
    comp = _flood(black, x1)
    if x2 not in comp:
        return False
    seg = [(q, 0) for q in range(x3[0], x4[0] + 1) if window.contains((q, 0))]
    if any(s in comp for s in seg):
        return False
    white = bits.white()
    nb1 = [s for s in neighbors(x1) if s in white]
    right = (x2[0] + 1, 0)
    for s in nb1:
        for p in _simple_paths(white, s, set(seg)):
            rest = white - set(p)
            if _exists_path(rest, [right], seg):
                return True
    return False


def _naive_m_condition3(bits, right, targets, x1):
    window = bits.window
    white = bits.white()
    gamma = naive_lowest_path(window, white, right, targets)
    if gamma is None:
        return False
    comp = _flood(bits.black(), x1)
    return any(t in comp for s in gamma for t in neighbors(s))


def naive_exploration_flip(bits, x1, x2, seg):
    """Naive counterpart of the L<->M exploration flip (or None)."""
    window = bits.window
    gb = naive_lowest_path(window, bits.black(), x1, {x2})
    if gb is None:
        return None
    gw = naive_lowest_path(window, bits.white(), (x2[0] + 1, 0), set(seg))
    if gw is None:
        return None
    keep = set(gb) | set(gw) | _under_region(window, gb) | _under_region(window, gw)
    return _Bits(window, {s: (c if s in keep else 1 - c)
                          for s, c in bits.colors.items()})


def naive_m_event(bits, points):
    x1, x2, x3, x4 = points
    window = bits.window
    seg = [(q, 0) for q in range(x3[0], x4[0] + 1) if window.contains((q, 0))]
    flipped = naive_exploration_flip(bits, x1, x2, seg)
    if flipped is None:
        return False
    return naive_l_event(flipped, points)


def naive_m_hat_event(bits, x1, x2, y, strict=True):
    black = bits.black()
    if x1 not in black:
        return False
    if not _two_disjoint(black, x1, {x2}, x1, {y}, shared=x1):
        return False
    right = (x2[0] + 1, 0)
    left = (y[0] - 1, 0)
    white = bits.white()
    if left not in _flood(white, right):
        return False
    if not strict:
        return True
    return _naive_m_condition3(bits, right, {left}, x1)


def naive_evaluate(bits, spec):
    if isinstance(spec, ev.ArmEvent):
        return int(naive_arm_event(bits, spec))
    if isinstance(spec, ev.ConnectionPartition):
        return int(naive_connection_partition(bits, spec.points) == spec.label)
    if isinstance(spec, ev.SpinProduct):
        return naive_spin_product(bits, spec.points)
    if isinstance(spec, ev.Pivotal):
        return int(naive_pivotal(bits, spec))
    if isinstance(spec, ev.Backbone):
        return int(naive_backbone(bits, spec.x1, spec.x2, spec.z))
    if isinstance(spec, ev.REvent):
        return int(naive_r_event(bits, spec))
    if isinstance(spec, ev.KEvent):
        return int(naive_k_event(bits, spec.points))
    if isinstance(spec, ev.LEvent):
        return int(naive_l_event(bits, spec.points))
    if isinstance(spec, ev.MEvent):
        return int(naive_m_event(bits, spec.points))
    if isinstance(spec, ev.MHatEvent):
        return int(naive_m_hat_event(bits, spec.x1, spec.x2, spec.y, spec.strict))
    raise TypeError(f"not an event spec: {spec!r}")


# --------------------------------------------------------------------------
# exhaustive enumeration
# --------------------------------------------------------------------------


@dataclass
class EnumerationResult:
    window: object
    event: str
    count: int
    total: int

    @property
    def probability(self):
        return Fraction(self.count, self.total)

    @property
    def probability_float(self):
        return self.count / self.total


def event_support(spec, window):
    """Sites whose colors can influence the event (others are irrelevant)."""
    if isinstance(spec, ev.ArmEvent):
        center_pt = site_to_point(spec.center)
        half = spec.pattern.mode == "half_plane"
        if spec.r_in == 0:
            region = half_plane_disk(center_pt, spec.r_out) if half \
                else disk(center_pt, spec.r_out)
        else:
            region = annulus(center_pt, spec.r_in, spec.r_out)
        sites = _region_set(region, window)
        if spec.r_in == 0 and not spec.pattern.monochromatic and \
                len(spec.pattern.word) > 1:
            sites.discard(spec.center)
        return sorted(sites, key=lambda s: (s[1], s[0]))
    if isinstance(spec, ev.Pivotal):
        sites = _region_set(disk(site_to_point(spec.center), spec.radius), window)
        sites.discard(spec.center)
        return sorted(sites, key=lambda s: (s[1], s[0]))
    if isinstance(spec, ev.REvent):
        sites = set(window.sites()) - set(spec.points)
        return sorted(sites, key=lambda s: (s[1], s[0]))
    return window.sites()


def _colorings(support, reverse=False):
    n = len(support)
    order = range(2 ** n - 1, -1, -1) if reverse else range(2 ** n)
    for code in order:
        yield code


def _bits_of_code(code, support, window):
    colors = {}
    for i, s in enumerate(support):
        colors[s] = BLACK if (code >> i) & 1 else WHITE
    return _Bits(window, colors)


def enumerate_event_probability(spec, window, cap=DEFAULT_CAP, reverse=False):
    """Exact probability of an event by full enumeration of its support."""
    support = event_support(spec, window)
    if len(support) > min(cap, HARD_CAP):
        raise WindowTooLarge(f"{len(support)} random sites exceeds cap")
    count = 0
    for code in _colorings(support, reverse=reverse):
        bits = _bits_of_code(code, support, window)
        count += naive_evaluate(bits, spec)
    return EnumerationResult(window=window, event=str(spec),
                             count=count, total=2 ** len(support))


def enumerate_npoint(points, window, cap=DEFAULT_CAP):
    """Exact spin n-point function (parity rule) by full enumeration."""
    support = window.sites()
    if len(support) > min(cap, HARD_CAP):
        raise WindowTooLarge(f"{len(support)} random sites exceeds cap")
    num = 0
    for code in _colorings(support):
        bits = _bits_of_code(code, support, window)
        num += naive_spin_product(bits, points)
    return Fraction(num, 2 ** len(support))


def _coloring_from_bits(bits, window):
    grid = np.zeros(window.shape, dtype=np.uint8)
    for s, c in bits.colors.items():
        if window.contains(s):
            grid[window.grid_of(s)] = c
    return Coloring(window, grid)


def certify_agreement(spec, window, cap=DEFAULT_CAP, max_mismatches=5):
    """Run production detector and naive oracle on every coloring of the
    event's support; return (count, total, mismatches)."""
    support = event_support(spec, window)
    if len(support) > min(cap, HARD_CAP):
        raise WindowTooLarge(f"{len(support)} random sites exceeds cap")
    count = 0
    mismatches = []
    for code in _colorings(support):
        bits = _bits_of_code(code, support, window)
        want = naive_evaluate(bits, spec)
        got = ev.evaluate(_coloring_from_bits(bits, window), spec)
        if want != got:
            if len(mismatches) < max_mismatches:
                mismatches.append((code, want, got))
        count += want
    return count, 2 ** len(support), mismatches
