"""Connected components of colorings on regions, plus Menger-type queries.

Labeling is delegated to scipy.ndimage.label with the triangular-lattice
stencil (a C implementation of the classic union-find/Hoshen-Kopelman
sweep); ids are then canonicalized so that clusters are numbered 0,1,... by
their smallest member site in row-major enumeration order.  An independent
flood-fill oracle certifies the partition per configuration (see oracle.py).

``max_vertex_disjoint`` answers "k vertex-disjoint monochromatic paths"
questions exactly, via unit-vertex-capacity max-flow (vertex splitting) on
top of scipy's integral maximum_flow.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .errors import SiteOutOfRegion
from .lattice import (HEX_STRUCTURE, NEIGHBOR_OFFSETS, check_fits,
                      full_window, region_mask)
from .sampler import BLACK

_STRUCT = HEX_STRUCTURE.astype(np.int32)


def color_mask(coloring, color, region=None, margin=2):
    """Boolean grid of region sites carrying the queried color."""
    m = coloring.bits.astype(bool) if color == BLACK else ~coloring.bits.astype(bool)
    if region is not None and region.kind != "full_window":
        check_fits(region, coloring.window, margin=margin)
        m = m & region_mask(region, coloring.window)
    return m


def label_grid(mask):
    """Raw raster labels (1..n) of a boolean grid under hex adjacency."""
    labels, n = ndimage.label(mask, structure=_STRUCT)
    return labels, n


class ClusterMap:
    """Partition of a region's sites of one color into connected clusters.

    ``labels`` holds canonical ids per grid cell (-1 where the site is not
    in the region or not of the queried color).  Canonical id k is the k-th
    cluster encountered in row-major enumeration order, i.e. clusters are
    ordered by their smallest member site.
    """

    __slots__ = ("window", "labels", "count", "color", "region")

    def __init__(self, window, labels, count, color, region):
        self.window = window
        self.labels = labels
        self.count = count
        self.color = color
        self.region = region

    def id_of(self, site):
        try:
            rc = self.window.grid_of(site)
        except SiteOutOfRegion:
            raise
        return int(self.labels[rc])

    def id_grid(self):
        return self.labels

    def sites_of(self, cluster_id):
        from .lattice import mask_sites
        return mask_sites(self.labels == cluster_id, self.window)

    def touch_ids(self, sites):
        """Canonical ids of clusters touching any of the given sites."""
        out = set()
        for s in sites:
            cid = self.id_of(s)
            if cid >= 0:
                out.add(cid)
        return out


def _canonicalize(raw_labels, n):
    """Relabel raster labels to 0..count-1 by first row-major occurrence."""
    if n == 0:
        return np.full(raw_labels.shape, -1, dtype=np.int32), 0
    flat = raw_labels.ravel()
    nz = np.nonzero(flat)[0]
    first = np.full(n + 1, flat.size, dtype=np.int64)
    # reversed so earlier indices overwrite later ones
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    remap = np.empty(n + 1, dtype=np.int32)
    remap[0] = -1
    remap[1 + order] = np.arange(n, dtype=np.int32)
    return remap[raw_labels], n


def label_clusters(coloring, color, region=None, margin=2):
    """ClusterMap of the coloring's given color restricted to a region."""
    if region is None:
        region = full_window()
    mask = color_mask(coloring, color, region, margin=margin)
    raw, n = label_grid(mask)
    labels, count = _canonicalize(raw, n)
    return ClusterMap(coloring.window, labels, count, color, region)


def connected_query(cmap: ClusterMap, a, b):
    """True iff both sites carry the queried color and share a cluster."""
    ia, ib = cmap.id_of(a), cmap.id_of(b)
    return ia >= 0 and ia == ib


def crossing_clusters(coloring, color, region, inner_ring, outer_ring,
                      margin=2):
    """Clusters of a color inside an annular region touching both rings.

    Returns a list of (cluster id, [(start, stop), ...]) where the runs are
    maximal stretches of consecutive inner_ring positions (in the given
    cyclic order) occupied by that cluster.  ``inner_ring`` must already be
    in angular order.
    """
    cmap = label_clusters(coloring, color, region, margin=margin)
    inner_ids = [cmap.id_of(s) for s in inner_ring]
    outer_ids = cmap.touch_ids(outer_ring)
    crossing = [cid for cid in set(inner_ids) if cid >= 0 and cid in outer_ids]
    runs = {cid: [] for cid in crossing}
    npos = len(inner_ring)
    i = 0
    while i < npos:
        cid = inner_ids[i]
        if cid in runs:
            j = i
            while j + 1 < npos and inner_ids[j + 1] == cid:
                j += 1
            runs[cid].append((i, j))
            i = j + 1
        else:
            i += 1
    # cyclic wrap: merge a run ending at npos-1 with one starting at 0
    for cid, rr in runs.items():
        if len(rr) >= 2 and rr[0][0] == 0 and rr[-1][1] == npos - 1:
            s, _ = rr[-1]
            rr[0] = (s, rr[0][1])
            rr.pop()
    order = {cid: k for k, cid in enumerate(sorted(runs))}
    return sorted(((cid, runs[cid]) for cid in runs), key=lambda t: order[t[0]])


# --- vertex-disjoint path queries (unit-capacity max flow) -----------------


def _flow_graph(mask, window, k, shared, source_groups, sink_groups):
    """CSR capacity matrix for the vertex-split flow network.

    Nodes: 2 per allowed site (in/out), one gate per gated group, plus
    source S and sink T (last two indices).
    """
    nr, nq = mask.shape
    idx = np.full(mask.shape, -1, dtype=np.int64)
    ii = np.nonzero(mask)
    nsite = len(ii[0])
    if nsite == 0:
        return None, None, None
    idx[ii] = np.arange(nsite)

    n_gates = len(source_groups) + len(sink_groups)
    S = 2 * nsite + n_gates
    T = S + 1
    rows, cols, caps = [], [], []

    # vertex capacities (in -> out)
    vin = 2 * np.arange(nsite)
    vout = vin + 1
    vcap = np.ones(nsite, dtype=np.int32)
    if shared is not None:
        srow, scol = window.grid_of(shared)
        if mask[srow, scol]:
            vcap[idx[srow, scol]] = k
    rows.append(vin)
    cols.append(vout)
    caps.append(vcap)

    # adjacency (out -> in), both directions handled by offset loop
    for dq, dr in NEIGHBOR_OFFSETS:
        rs = slice(max(0, -dr), min(nr, nr - dr))
        qs = slice(max(0, -dq), min(nq, nq - dq))
        rt = slice(max(0, dr), min(nr, nr + dr))
        qt = slice(max(0, dq), min(nq, nq + dq))
        src = idx[rs, qs]
        dst = idx[rt, qt]
        ok = (src >= 0) & (dst >= 0)
        a = src[ok]
        b = dst[ok]
        rows.append(2 * a + 1)
        cols.append(2 * b)
        caps.append(np.ones(len(a), dtype=np.int32))

    gate = 2 * nsite

    def site_nodes(sites):
        out = []
        for s in sites:
            try:
                r, c = window.grid_of(s)
            except SiteOutOfRegion:
                continue
            if mask[r, c]:
                out.append(idx[r, c])
        return out

    for grp in source_groups:
        nodes = site_nodes(grp["sites"])
        cap = grp.get("cap", k)
        if not nodes:
            return None, None, None  # a mandatory group with no usable site
        rows.append(np.array([S], dtype=np.int64))
        cols.append(np.array([gate], dtype=np.int64))
        caps.append(np.array([cap], dtype=np.int32))
        rows.append(np.full(len(nodes), gate, dtype=np.int64))
        cols.append(2 * np.asarray(nodes, dtype=np.int64))
        caps.append(np.full(len(nodes), k, dtype=np.int32))
        gate += 1
    for grp in sink_groups:
        nodes = site_nodes(grp["sites"])
        cap = grp.get("cap", k)
        if not nodes:
            return None, None, None
        rows.append(2 * np.asarray(nodes, dtype=np.int64) + 1)
        cols.append(np.full(len(nodes), gate, dtype=np.int64))
        caps.append(np.full(len(nodes), k, dtype=np.int32))
        rows.append(np.array([gate], dtype=np.int64))
        cols.append(np.array([T], dtype=np.int64))
        caps.append(np.array([cap], dtype=np.int32))
        gate += 1

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    caps = np.concatenate(caps)
    g = csr_matrix((caps, (rows, cols)), shape=(T + 1, T + 1), dtype=np.int32)
    return g, S, T


def max_vertex_disjoint(coloring, color, region, sources, sinks, k,
                        shared=None, source_groups=None, sink_groups=None,
                        margin=2, mask=None):
    """True iff k monochromatic paths exist, pairwise vertex-disjoint
    except possibly at ``shared``.

    ``sources``/``sinks`` are site iterables; alternatively pass
    ``source_groups``/``sink_groups`` as lists of {'sites': [...], 'cap': c}
    to enforce per-group path counts (e.g. one path must end at each of two
    marked sites).  Exact integral max-flow; k in {1, 2, 3}.  A prebuilt
    boolean site mask may be passed to skip the region/color lookup.
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    if mask is None:
        mask = color_mask(coloring, color, region, margin=margin)
    if source_groups is None:
        source_groups = [{"sites": list(sources), "cap": k}]
    if sink_groups is None:
        sink_groups = [{"sites": list(sinks), "cap": k}]
    g, S, T = _flow_graph(mask, coloring.window, k, shared,
                          source_groups, sink_groups)
    if g is None:
        return False
    res = maximum_flow(g, S, T, method="dinic")
    return res.flow_value >= k
