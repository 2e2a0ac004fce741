"""Estimates, merging, and weighted power-law / log regressions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInput


@dataclass(frozen=True)
class Estimate:
    """Bernoulli Monte Carlo estimate: mean = hits/n, binomial stderr."""

    mean: float
    stderr: float
    n: int
    hits: int
    meta: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def from_hits(hits, n, **meta):
        if n <= 0:
            raise DegenerateInput("need n >= 1")
        p = hits / n
        return Estimate(mean=p, stderr=math.sqrt(max(p * (1.0 - p), 0.0) / n),
                        n=n, hits=int(hits), meta=meta)

    def merged(self, other):
        """Pooled estimate; associative and commutative on (n, hits)."""
        return Estimate.from_hits(self.hits + other.hits, self.n + other.n,
                                  **{**other.meta, **self.meta})

    def scaled(self, factor, factor_rel_err=0.0):
        """mean * factor with independent relative errors combined."""
        mean = self.mean * factor
        rel = 0.0 if self.mean == 0 else self.stderr / self.mean
        err = abs(mean) * math.sqrt(rel ** 2 + factor_rel_err ** 2)
        return Estimate(mean=mean, stderr=err, n=self.n, hits=self.hits,
                        meta=dict(self.meta))


def merge_estimates(parts):
    out = None
    for p in parts:
        out = p if out is None else out.merged(p)
    return out


@dataclass(frozen=True)
class FitResult:
    """Weighted least-squares fit result (slope convention: y ~ x^slope)."""

    exponent: float
    stderr: float
    intercept: float
    residuals: tuple
    meta: dict = field(default_factory=dict, compare=False)


def _wls(x, y, w):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    sw = w.sum()
    xb = (w * x).sum() / sw
    yb = (w * y).sum() / sw
    sxx = (w * (x - xb) ** 2).sum()
    if sxx == 0:
        raise DegenerateInput("degenerate abscissae")
    slope = (w * (x - xb) * (y - yb)).sum() / sxx
    intercept = yb - slope * xb
    # stderr from the weight model (w = 1/sigma_y^2)
    slope_err = math.sqrt(1.0 / sxx)
    resid = y - (intercept + slope * x)
    return slope, intercept, slope_err, resid


def fit_power_law(scales, estimates, stderrs=None):
    """Weighted LLS of log(p) against log(L); returns slope (negative for
    decaying laws), its stderr, and residual diagnostics.

    Exact power-law input reproduces the exponent to machine precision.
    """
    scales = list(scales)
    if len(scales) < 3:
        raise DegenerateInput("need at least 3 scales")
    vals = [e.mean if isinstance(e, Estimate) else float(e) for e in estimates]
    if any(v <= 0 for v in vals):
        raise DegenerateInput("estimates must be positive for a log fit")
    if stderrs is None:
        stderrs = [e.stderr if isinstance(e, Estimate) else 0.0
                   for e in estimates]
    x = np.log(np.asarray(scales, dtype=float))
    y = np.log(np.asarray(vals, dtype=float))
    sig = np.asarray([s / v if v > 0 else 0.0
                      for s, v in zip(stderrs, vals)], dtype=float)
    if (sig > 0).all():
        w = 1.0 / sig ** 2
    else:
        w = np.ones_like(sig)  # unweighted for exact/synthetic input
    slope, intercept, err, resid = _wls(x, y, w)
    if not (sig > 0).all():
        err = float("nan")
    return FitResult(exponent=float(slope), stderr=float(err),
                     intercept=float(intercept),
                     residuals=tuple(float(r) for r in resid),
                     meta={"scales": scales, "values": vals})


def ratio_exponent(p1, L1, p2, L2):
    """Pairwise exponent from p(L1)/p(L2) = (L1/L2)^slope (slope < 0 for
    decaying laws); returns (slope, stderr) with independent-sample errors."""
    v1 = p1.mean if isinstance(p1, Estimate) else float(p1)
    v2 = p2.mean if isinstance(p2, Estimate) else float(p2)
    if v1 <= 0 or v2 <= 0:
        raise DegenerateInput("positive estimates required")
    s1 = p1.stderr / v1 if isinstance(p1, Estimate) else 0.0
    s2 = p2.stderr / v2 if isinstance(p2, Estimate) else 0.0
    dl = math.log(L1 / L2)
    return math.log(v1 / v2) / dl, math.sqrt(s1 ** 2 + s2 ** 2) / abs(dl)


def fit_log_slope(inv_log_args, values, stderrs=None):
    """WLS of values against log(1/s): slope + free intercept.

    ``inv_log_args`` are the log(1/s) abscissae; used by the logarithmic
    divergence probe where a positive slope certifies the log term."""
    x = np.asarray(inv_log_args, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(x) < 3:
        raise DegenerateInput("need at least 3 separations")
    if stderrs is None or any(s <= 0 for s in stderrs):
        w = np.ones_like(x)
        slope, intercept, _, resid = _wls(x, y, w)
        return FitResult(float(slope), float("nan"), float(intercept),
                         tuple(map(float, resid)))
    w = 1.0 / np.asarray(stderrs, dtype=float) ** 2
    slope, intercept, err, resid = _wls(x, y, w)
    return FitResult(float(slope), float(err), float(intercept),
                     tuple(map(float, resid)))


def jackknife_slope(x, block_values, weights=None, transform=None):
    """Delete-one-block jackknife for a slope over correlated estimates.

    ``block_values``: array (n_blocks, n_points) of per-block means. The
    slope functional is an unweighted (or weighted) LLS of
    transform(est) against x, where est pools all retained blocks.
    """
    bv = np.asarray(block_values, dtype=float)
    nb = bv.shape[0]
    if nb < 4:
        raise DegenerateInput("need >= 4 blocks for a jackknife")
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, float)

    def slope_of(means):
        y = transform(means) if transform is not None else means
        s, _, _, _ = _wls(x, y, w)
        return s

    full = slope_of(bv.mean(axis=0))
    loo = np.array([slope_of(np.delete(bv, i, axis=0).mean(axis=0))
                    for i in range(nb)])
    var = (nb - 1) / nb * ((loo - loo.mean()) ** 2).sum()
    return full, math.sqrt(var)
