"""Critical colorings (p = 1/2) with counter-based, stream-indexed RNG.

Every coloring is a pure function of (master_seed, stream_id, window): the
bits for the whole window are drawn in one shot from a Philox counter-based
generator keyed by (master_seed, stream_id, purpose).  Iteration order and
thread scheduling therefore cannot affect any sample, and distinct streams
are independent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Window

BLACK = 1
WHITE = 0

# purpose tags keep the coloring / spin / auxiliary draws on distinct keys
_PURPOSE_COLORING = 0
_PURPOSE_SPINS = 1


@dataclass(frozen=True)
class RngSpec:
    """Seed pair identifying one replica stream."""

    master_seed: int
    stream_id: int = 0

    def with_stream(self, stream_id):
        return RngSpec(self.master_seed, stream_id)

    def generator(self, purpose=_PURPOSE_COLORING):
        # 128-bit Philox key: (master ^ purpose-tag, stream); counter-based,
        # so draws depend only on (key, draw index)
        hi = (self.master_seed ^ (purpose * 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
        key = np.array([hi, self.stream_id & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


class Coloring:
    """Immutable black/white assignment over a window.

    ``bits`` is a uint8 grid of shape window.shape (1 = black).  In
    half-plane mode sites with r < 0 are not materialized and always read
    white.
    """

    __slots__ = ("window", "bits")

    def __init__(self, window: Window, bits: np.ndarray):
        if bits.shape != window.shape:
            raise ValueError("bits shape does not match window")
        self.window = window
        self.bits = bits
        bits.setflags(write=False)

    def is_black(self, site):
        q, r = site
        if r < 0 and self.window.mode == "half_plane":
            return False
        return bool(self.bits[self.window.grid_of(site)])

    def color_of(self, site):
        return BLACK if self.is_black(site) else WHITE

    def with_overrides(self, overrides):
        """New coloring with some sites forced to given colors."""
        bits = self.bits.copy()
        for site, color in overrides.items():
            bits[self.window.grid_of(site)] = color
        return Coloring(self.window, bits)

    def flipped(self):
        """Color-flipped copy (black <-> white on every materialized site)."""
        return Coloring(self.window, (1 - self.bits).astype(np.uint8))


def sample_bits(window: Window, rng: RngSpec) -> np.ndarray:
    """Raw i.i.d. fair bits for every window site (row-major order)."""
    n = window.n_sites
    gen = rng.generator(_PURPOSE_COLORING)
    raw = gen.integers(0, 256, size=(n + 7) // 8, dtype=np.uint8)
    bits = np.unpackbits(raw)[:n]
    return bits.reshape(window.shape)


def sample_coloring(window: Window, rng: RngSpec) -> Coloring:
    """One critical coloring: each site black with probability 1/2."""
    return Coloring(window, sample_bits(window, rng))


def sample_coloring_batch(window: Window, rng: RngSpec, streams) -> np.ndarray:
    """Stacked bit grids for several stream ids, shape (len(streams), nr, nq)."""
    out = np.empty((len(streams),) + window.shape, dtype=np.uint8)
    for i, sid in enumerate(streams):
        out[i] = sample_bits(window, rng.with_stream(sid))
    return out


class SpinAssignment:
    """Random +/-1 spin per black cluster id; white sites carry spin 0."""

    __slots__ = ("spins",)

    def __init__(self, spins):
        self.spins = dict(spins)

    def spin_of_cluster(self, cluster_id):
        return self.spins[cluster_id]

    def site_spin(self, clusters, site):
        cid = clusters.id_of(site)
        return self.spins[cid] if cid >= 0 else 0

    def __len__(self):
        return len(self.spins)


def assign_spins(coloring: Coloring, clusters, rng: RngSpec) -> SpinAssignment:
    """Symmetric i.i.d. +/-1 spins, one per black cluster (canonical order)."""
    k = clusters.count
    gen = rng.generator(_PURPOSE_SPINS)
    if k == 0:
        return SpinAssignment({})
    raw = gen.integers(0, 2, size=k, dtype=np.uint8)
    return SpinAssignment({cid: (1 if b else -1) for cid, b in enumerate(raw)})
