import itertools

import numpy as np
import pytest

from perclab.clusters import (connected_query, crossing_clusters,
                              label_clusters, max_vertex_disjoint)
from perclab.errors import SiteOutOfRegion
from perclab.lattice import (Window, annulus, boundary_rings, disk,
                             full_window, neighbors, window_for_disk)
from perclab.sampler import BLACK, WHITE, Coloring, RngSpec, sample_coloring


def grid_coloring(window, black_sites):
    bits = np.zeros(window.shape, dtype=np.uint8)
    for s in black_sites:
        bits[window.grid_of(s)] = 1
    return Coloring(window, bits)


def flood_fill_partition(coloring, color):
    """Independent BFS flood fill returning site -> canonical id."""
    w = coloring.window
    want = [s for s in w.sites()
            if (coloring.is_black(s) if color == BLACK else not coloring.is_black(s))]
    want_set = set(want)
    ids = {}
    next_id = 0
    for s in want:  # canonical enumeration order
        if s in ids:
            continue
        stack = [s]
        ids[s] = next_id
        while stack:
            u = stack.pop()
            for v in neighbors(u):
                if v in want_set and v not in ids:
                    ids[v] = next_id
                    stack.append(v)
        next_id += 1
    return ids


def test_all_black_single_cluster():
    w = Window(0, 4, 0, 4)
    c = Coloring(w, np.ones(w.shape, dtype=np.uint8))
    cm = label_clusters(c, BLACK)
    assert cm.count == 1


def test_singleton_cluster():
    w = Window(0, 4, 0, 4)
    c = grid_coloring(w, [(2, 2)])
    cm = label_clusters(c, BLACK)
    assert cm.count == 1 and cm.id_of((2, 2)) == 0


def test_partition_matches_flood_fill_oracle():
    w = Window(0, 4, 0, 4)
    rng = RngSpec(31)
    for i in range(200):
        c = sample_coloring(w, rng.with_stream(i))
        for color in (BLACK, WHITE):
            cm = label_clusters(c, color)
            oracle = flood_fill_partition(c, color)
            got = {s: cm.id_of(s) for s in w.sites() if cm.id_of(s) >= 0}
            assert got == oracle


def test_connected_query_basics_and_errors():
    w = Window(0, 3, 0, 3)
    c = grid_coloring(w, [(0, 0), (1, 0)])
    cm = label_clusters(c, BLACK)
    assert connected_query(cm, (0, 0), (0, 0))
    assert connected_query(cm, (0, 0), (1, 0))
    assert not connected_query(cm, (0, 0), (3, 3))  # white endpoint
    with pytest.raises(SiteOutOfRegion):
        cm.id_of((9, 9))


def test_connected_query_exhaustive_4x4():
    # every coloring of a 4x4 window against the BFS oracle
    w = Window(0, 3, 0, 3)
    a, b = (0, 0), (3, 3)
    sites = w.sites()
    for code in range(1 << 16):
        bits = np.array([(code >> i) & 1 for i in range(16)],
                        dtype=np.uint8).reshape(w.shape)
        c = Coloring(w, bits)
        cm = label_clusters(c, BLACK)
        oracle = flood_fill_partition(c, BLACK)
        got = connected_query(cm, a, b)
        want = a in oracle and b in oracle and oracle[a] == oracle[b]
        assert got == want


def _k1(coloring, region, srcs, dsts):
    return max_vertex_disjoint(coloring, BLACK, region, srcs, dsts, k=1)


def test_menger_consistency_exhaustive():
    # k=2 <=> k=1 holds and no single vertex cut, on a 3x4 window
    w = Window(0, 3, 0, 2)
    src, dst = (0, 0), (3, 2)
    sites = w.sites()
    reg = full_window()
    for code in range(1 << 12):
        bits = np.array([(code >> i) & 1 for i in range(12)],
                        dtype=np.uint8).reshape(w.shape)
        c = Coloring(w, bits)
        if not (c.is_black(src) and c.is_black(dst)):
            continue
        got2 = max_vertex_disjoint(c, BLACK, reg, [src], [dst], k=2,
                                   shared=None)
        k1 = _k1(c, reg, [src], [dst])
        cut_free = k1
        if k1:
            for v in sites:
                if v in (src, dst) or not c.is_black(v):
                    continue
                bits2 = bits.copy()
                bits2[w.grid_of(v)] = 0
                if not _k1(Coloring(w, bits2), reg, [src], [dst]):
                    cut_free = False
                    break
        # two fully vertex-disjoint paths between single endpoints cannot
        # exist unless they are adjacent (endpoints are themselves shared),
        # so Menger is stated with the endpoints exempted
        got2_shared = max_vertex_disjoint(c, BLACK, reg, [src], [dst], k=2,
                                          shared=None,
                                          source_groups=[{"sites": [src], "cap": 2}],
                                          sink_groups=[{"sites": [dst], "cap": 2}])
        assert got2 == got2_shared
        # Menger: internally-disjoint two-path existence needs vertex caps
        # exempting the endpoints; emulate by boosting their capacity
        bits3 = bits.copy()
        c3 = Coloring(w, bits3)
        got_int = _two_internally_disjoint(c3, w, src, dst)
        assert got_int == cut_free


def _two_internally_disjoint(coloring, w, src, dst):
    """Two black paths src->dst sharing only the endpoints (flow trick:
    route two units src -> dst with both endpoint capacities lifted)."""
    from perclab.clusters import _flow_graph
    from scipy.sparse.csgraph import maximum_flow
    mask = coloring.bits.astype(bool)
    if not (mask[w.grid_of(src)] and mask[w.grid_of(dst)]):
        return False
    g, S, T = _flow_graph(mask, w, 2, src,
                          [{"sites": [src], "cap": 2}],
                          [{"sites": [dst], "cap": 2}])
    if g is None:
        return False
    # lift dst's vertex capacity as well
    idx = np.full(mask.shape, -1, dtype=np.int64)
    idx[np.nonzero(mask)] = np.arange(mask.sum())
    dn = idx[w.grid_of(dst)]
    g = g.tolil()
    g[2 * dn, 2 * dn + 1] = 2
    return maximum_flow(g.tocsr(), S, T, method="dinic").flow_value >= 2


def test_width_one_corridor():
    w = Window(0, 6, 0, 2)
    c = grid_coloring(w, [(q, 1) for q in range(7)])
    reg = full_window()
    assert max_vertex_disjoint(c, BLACK, reg, [(0, 1)], [(6, 1)], k=1)
    assert not max_vertex_disjoint(c, BLACK, reg, [(0, 1)], [(6, 1)], k=2,
                                   shared=(0, 1))


def test_monotone_in_black_promotions():
    w = window_for_disk((0.0, 0.0), 4.0)
    rng = np.random.default_rng(5)
    reg = disk((0.0, 0.0), 4.0)
    inner, outer = boundary_rings(annulus((0.0, 0.0), 1.0, 4.0), w)
    spec = RngSpec(91)
    for i in range(25):
        c = sample_coloring(w, spec.with_stream(i))
        before = max_vertex_disjoint(c, BLACK, annulus((0.0, 0.0), 1.0, 4.0),
                                     inner, outer, k=2)
        if not before:
            continue
        whites = [s for s in w.sites() if not c.is_black(s)]
        if not whites:
            continue
        v = whites[rng.integers(len(whites))]
        c2 = c.with_overrides({v: BLACK})
        after = max_vertex_disjoint(c2, BLACK, annulus((0.0, 0.0), 1.0, 4.0),
                                    inner, outer, k=2)
        assert after


def test_crossing_clusters_all_black_annulus():
    w = window_for_disk((0.0, 0.0), 5.0)
    c = Coloring(w, np.ones(w.shape, dtype=np.uint8))
    reg = annulus((0.0, 0.0), 1.2, 3.8)
    inner, outer = boundary_rings(reg, w)
    got = crossing_clusters(c, BLACK, reg, inner, outer)
    assert len(got) == 1
    cid, runs = got[0]
    assert runs == [(0, len(inner) - 1)]
    assert crossing_clusters(c, WHITE, reg, inner, outer) == []


def test_crossing_clusters_alternating_interleave():
    # random colorings: black and white crossing runs must interleave
    w = window_for_disk((0.0, 0.0), 6.0)
    reg = annulus((0.0, 0.0), 1.5, 5.0)
    inner, outer = boundary_rings(reg, w)
    rng = RngSpec(17)
    checked = 0
    for i in range(120):
        c = sample_coloring(w, rng.with_stream(i))
        blacks = crossing_clusters(c, BLACK, reg, inner, outer)
        if len(blacks) < 2:
            continue
        whites = crossing_clusters(c, WHITE, reg, inner, outer)
        # between two distinct black crossing clusters there is a white one
        assert whites, "two black crossings force a white crossing between"
        checked += 1
    assert checked > 0
