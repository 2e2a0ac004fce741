"""The standard certification suite: every event family checked
per-configuration against the brute-force oracle on exhaustively
enumerated tiny windows.  Used by the test suite and by ``perclab
--oracle``."""

from __future__ import annotations

import time

from . import events as ev
from .lattice import Window
from .oracle import certify_agreement

_WP = Window(-4, 4, -4, 4, mode="plane")
_WB = Window(-5, 5, 0, 5, mode="half_plane")
_W2 = Window(-3, 3, 0, 1, mode="half_plane")
_W3 = Window(-2, 2, 0, 2, mode="half_plane")
_W34 = Window(0, 3, 0, 2, mode="plane")
_W44 = Window(0, 3, 0, 3, mode="plane")

CERTIFICATIONS = [
    ("arm B site-rooted", ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("B")), _WP),
    ("arm BB site-rooted", ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("BB")), _WP),
    ("arm BW site-rooted", ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("BW")), _WP),
    ("arm BWB site-rooted", ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("BWB")), _WP),
    ("arm BWBW site-rooted", ev.ArmEvent((0, 0), 0.0, 1.9, ev.ArmPattern("BWBW")), _WP),
    ("arm B annulus", ev.ArmEvent((0, 0), 0.5, 1.9, ev.ArmPattern("B")), _WP),
    ("arm BB annulus", ev.ArmEvent((0, 0), 0.5, 1.9, ev.ArmPattern("BB")), _WP),
    ("arm BWBW annulus", ev.ArmEvent((0, 0), 0.5, 1.9, ev.ArmPattern("BWBW")), _WP),
    ("boundary B", ev.ArmEvent((0, 0), 0.0, 2.2, ev.ArmPattern("B", "half_plane")), _WB),
    ("boundary BW", ev.ArmEvent((0, 0), 0.0, 2.2, ev.ArmPattern("BW", "half_plane")), _WB),
    ("boundary BWB", ev.ArmEvent((0, 0), 0.0, 2.2, ev.ArmPattern("BWB", "half_plane")), _WB),
    ("pivotal", ev.Pivotal((0, 0), (0.4, 1.2, 1.9, 2.7), 1.9), _WP),
    ("connection partition", ev.ConnectionPartition(((0, 0), (2, 0), (0, 2), (2, 2)), "P12_34"), _W34),
    ("spin product", ev.SpinProduct(((0, 0), (2, 0), (0, 2), (2, 2))), _W34),
    ("R3", ev.REvent(3, ((0, 0), (3, 0), (0, 3)), min_separation=2.0), _W44),
    ("backbone", ev.Backbone((-2, 0), (2, 0), (0, 1)), _W3),
    ("K", ev.KEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))), _W2),
    ("L", ev.LEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))), _W2),
    ("M", ev.MEvent(((-3, 0), (-1, 0), (1, 0), (3, 0))), _W2),
    ("M-hat", ev.MHatEvent((-3, 0), (-1, 0), (2, 0), strict=True), _W2),
]


def run_certifications(verbose=False, subset=None):
    """Run (name, ok, details) for each certification entry."""
    results = []
    for name, spec, window in CERTIFICATIONS:
        if subset is not None and name not in subset:
            continue
        t0 = time.time()
        count, total, mismatches = certify_agreement(spec, window)
        ok = not mismatches
        details = f"{count}/{total} in {time.time() - t0:.1f}s"
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'} {name:24s} {details}"
                  + ("" if ok else f" mismatches {mismatches[:3]}"))
        results.append((name, ok, details))
    return results
