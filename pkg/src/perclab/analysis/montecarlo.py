"""Replica-parallel Monte Carlo driver and the arm-probability ladders.

Every sample is keyed by its stream id alone (counter-based RNG), so the
driver can chunk streams across threads and still produce bit-identical
aggregates: per-stream indicators are integers and the merge is a sum in
stream order.  Evaluators are callables mapping a stacked batch of bit
grids to {key: int array}; the ladder evaluators amortize one coloring
across all scales of a site-rooted arm family (the events are nested, so
per-coloring results are monotone in the scale).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .. import events as ev
from ..clusters import max_vertex_disjoint
from ..errors import DegenerateInput
from ..lattice import (HEX_STRUCTURE, angular_order, disk, half_plane_disk,
                       mask_sites, neighbors, region_mask, ring_mask,
                       site_to_point, window_for_disk)
from ..sampler import BLACK, Coloring, RngSpec, sample_bits
from .fitting import Estimate

_STRUCT2 = HEX_STRUCTURE.astype(np.int32)
_STRUCT3 = np.zeros((3, 3, 3), dtype=np.int32)
_STRUCT3[1] = _STRUCT2  # no connectivity across the batch axis


def default_threads():
    try:
        return max(1, int(os.environ.get("PERC_LAB_THREADS", "1")))
    except ValueError:
        return 1


def label_stack(mask_stack):
    """Label each slice of a boolean (B, nr, nq) stack in one C call."""
    labels, _ = ndimage.label(mask_stack, structure=_STRUCT3)
    return labels


def run_monte_carlo(window, evaluator, n, rng: RngSpec, threads=None,
                    batch=16, stream_offset=0):
    """Evaluate ``evaluator`` on n i.i.d. colorings; returns {key: hits}.

    ``evaluator(bits_stack) -> {key: int array}``.  Results are exactly
    reproducible for fixed (rng, n, stream_offset) whatever the thread
    count or batch size.
    """
    threads = default_threads() if threads is None else max(1, threads)
    chunks = [(s, min(s + batch, n)) for s in range(0, n, batch)]

    def work(bounds):
        lo, hi = bounds
        stack = np.empty((hi - lo,) + window.shape, dtype=np.uint8)
        for i, sid in enumerate(range(lo, hi)):
            stack[i] = sample_bits(window, rng.with_stream(stream_offset + sid))
        out = evaluator(stack)
        return {k: int(np.asarray(v).sum()) for k, v in out.items()}

    hits = {}
    if threads == 1:
        parts = map(work, chunks)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        parts = pool.map(work, chunks)
    for part in parts:
        for k, v in part.items():
            hits[k] = hits.get(k, 0) + v
    if threads != 1:
        pool.shutdown()
    return hits


def indicator_evaluator(spec, window, margin=2):
    """Generic per-sample evaluator for any EventSpec or callable."""

    def evaluate(stack):
        out = np.zeros(stack.shape[0], dtype=np.int64)
        for i in range(stack.shape[0]):
            coloring = Coloring(window, stack[i])
            if callable(spec):
                out[i] = int(spec(coloring))
            else:
                out[i] = ev.evaluate(coloring, spec, margin=margin)
        return {"event": out}

    return evaluate


def run_estimate(spec, window, n, rng: RngSpec, threads=None, batch=16,
                 stream_offset=0, margin=2):
    """Monte Carlo estimate of one event spec (or callable observable)."""
    if n < 1:
        raise DegenerateInput("need n >= 1")
    hits = run_monte_carlo(window, indicator_evaluator(spec, window, margin),
                           n, rng, threads=threads, batch=batch,
                           stream_offset=stream_offset)
    meta = {"master_seed": rng.master_seed, "stream_offset": stream_offset}
    if not callable(spec):
        meta["spec"] = ev.spec_to_json(spec)
    return Estimate.from_hits(hits["event"], n, **meta)


# --------------------------------------------------------------------------
# site-rooted arm ladders
# --------------------------------------------------------------------------

LADDER_FAMILIES = {
    # family: (pattern word, half_plane?)
    "pi": ("B", False),
    "pi_bar": ("B", True),
    "iota": ("BW", True),
    "iota_bar": ("BWB", True),
    "rho": ("BB", False),
    "rho_bar": ("BWBW", False),
}


class ArmLadderEvaluator:
    """Evaluates one site-rooted arm family at every scale per coloring."""

    def __init__(self, family, scales, margin=3):
        word, half = LADDER_FAMILIES[family]
        self.family = family
        self.word = word
        self.half = half
        self.scales = sorted(scales)
        mode = "half_plane" if half else "plane"
        self.window = window_for_disk((0.0, 0.0), max(self.scales),
                                      mode=mode, margin=margin)
        w = self.window
        self.center = (0, 0)
        self.center_rc = w.grid_of(self.center)
        mk_region = half_plane_disk if half else disk
        self.masks, self.rings, self.ring_sites = {}, {}, {}
        for L in self.scales:
            reg = mk_region((0.0, 0.0), float(L))
            m = region_mask(reg, w)
            rmask = ring_mask(reg, w)
            if word not in ("B", "BB"):
                m = m.copy()
                m[self.center_rc] = False
            self.masks[L] = m
            self.rings[L] = np.flatnonzero(rmask.ravel())
            self.ring_sites[L] = mask_sites(rmask, w)
        nbrs = [s for s in neighbors(self.center) if not (half and s[1] < 0)]
        nbrs = angular_order(nbrs, (0.0, 0.0))
        self.nbr_flat = np.array([w.grid_of(s)[0] * w.shape[1] + w.grid_of(s)[1]
                                  for s in nbrs], dtype=np.int64)
        self.cyclic = not half
        self.mono = len(set(word)) == 1

    # -- single-color reach ladder -------------------------------------------
    # clusters restricted to the largest disk give the same ring-reach
    # answers at every smaller scale (first-exit argument)

    def _eval_reach(self, stack):
        out = {L: np.zeros(stack.shape[0], dtype=np.int64) for L in self.scales}
        big = self.masks[self.scales[-1]]
        r0, c0 = self.center_rc
        for b in range(stack.shape[0]):
            lab, nlab = ndimage.label(stack[b].astype(bool) & big,
                                      structure=_STRUCT2)
            cid = lab[r0, c0]
            if cid == 0:
                continue
            flat = lab.ravel()
            for L in self.scales:
                if (flat[self.rings[L]] == cid).any():
                    out[L][b] = 1
                else:
                    break
        return out

    # -- monochromatic two-arm ladder (flow per scale) -----------------------

    def _eval_bb(self, stack):
        out = {L: np.zeros(stack.shape[0], dtype=np.int64) for L in self.scales}
        w = self.window
        big = self.masks[self.scales[-1]]
        r0, c0 = self.center_rc
        for b in range(stack.shape[0]):
            bits_bool = stack[b].astype(bool)
            lab, _ = ndimage.label(bits_bool & big, structure=_STRUCT2)
            cid = lab[r0, c0]
            if cid == 0:
                continue
            flat = lab.ravel()
            coloring = Coloring(w, stack[b])
            for L in self.scales:
                if not (flat[self.rings[L]] == cid).any():
                    break
                ok = max_vertex_disjoint(
                    coloring, BLACK, None,
                    sources=[self.center], sinks=self.ring_sites[L], k=2,
                    shared=self.center, mask=bits_bool & self.masks[L])
                if not ok:
                    break
                out[L][b] = 1
        return out

    # -- multicolor word ladders ---------------------------------------------

    def _word_at_scale(self, bits_bool, L):
        m = self.masks[L]
        ring = self.rings[L]
        entries = []
        for color, grid in ((BLACK, bits_bool), (ev.WHITE, ~bits_bool)):
            lab, nlab = ndimage.label(grid & m, structure=_STRUCT2)
            if nlab == 0:
                entries.append(None)
                continue
            flat = lab.ravel()
            ring_ids = set(int(v) for v in np.unique(flat[ring])) - {0}
            at_nbr = flat[self.nbr_flat]
            entries.append((at_nbr, ring_ids))
        word_entries = [None] * len(self.nbr_flat)
        for ci, pack in enumerate(entries):
            if pack is None:
                continue
            at_nbr, ring_ids = pack
            color = BLACK if ci == 0 else ev.WHITE
            for i, v in enumerate(at_nbr):
                if v > 0 and int(v) in ring_ids:
                    word_entries[i] = (color, (color, int(v)))
        runs = ev._runs_from_positions(word_entries)
        if self.cyclic:
            runs = ev._merge_cyclic(runs)
        return ev.word_contains(runs, self.word, cyclic=self.cyclic)

    def _eval_word(self, stack):
        out = {L: np.zeros(stack.shape[0], dtype=np.int64) for L in self.scales}
        for b in range(stack.shape[0]):
            bits_bool = stack[b].astype(bool)
            for L in self.scales:
                if not self._word_at_scale(bits_bool, L):
                    break
                out[L][b] = 1
        return out

    def __call__(self, stack):
        if self.word in ("B",):
            return self._eval_reach(stack)
        if self.mono:
            return self._eval_bb(stack)
        return self._eval_word(stack)


@dataclass
class NormTable:
    """Per-scale arm-probability estimates used as estimator normalizers."""

    entries: dict = field(default_factory=dict)  # family -> {L: Estimate}

    def value(self, family, L):
        return self.entries[family][L]

    def normalizer(self, family, L, power):
        """(value^power, relative stderr of value^power)."""
        e = self.entries[family][L]
        if e.mean <= 0:
            raise DegenerateInput(f"normalizer {family}@{L} is zero")
        rel = e.stderr / e.mean
        return e.mean ** power, abs(power) * rel

    def families(self):
        return sorted(self.entries)


def arm_ladder(family, scales, n, rng: RngSpec, threads=None, batch=16,
               stream_offset=0, margin=3):
    """Nested-ladder estimates {L: Estimate} for one arm family."""
    evaluator = ArmLadderEvaluator(family, scales, margin=margin)
    hits = run_monte_carlo(evaluator.window, evaluator, n, rng,
                           threads=threads, batch=batch,
                           stream_offset=stream_offset)
    return {L: Estimate.from_hits(hits[L], n, family=family, scale=L,
                                  master_seed=rng.master_seed,
                                  stream_offset=stream_offset)
            for L in evaluator.scales}


def norm_constants(scales, n, rng: RngSpec, families=None, threads=None,
                   batch=16, stream_offset=0):
    """NormTable of site-rooted arm probabilities over a scale ladder.

    Uses one nested run per family (shared colorings across scales), so
    each family's column is surely non-increasing in L.
    """
    scales = sorted(scales)
    if any(s2 <= s1 for s1, s2 in zip(scales, scales[1:])):
        raise DegenerateInput("scales must be strictly increasing")
    families = list(LADDER_FAMILIES) if families is None else list(families)
    table = NormTable()
    for k, fam in enumerate(families):
        table.entries[fam] = arm_ladder(
            fam, scales, n, rng, threads=threads, batch=batch,
            stream_offset=stream_offset + k * n)
    return table
