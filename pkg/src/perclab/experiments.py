"""Experiment registry: config dicts -> counter state -> result rows.

A run accumulates integer counters ("state"): for every raw event key the
pair [hits, n], normalizer counters included.  Rows are rebuilt from the
state deterministically, so resuming with disjoint stream ranges and then
rebuilding gives byte-identical CSV output to a single larger run.

CSV column contract:

    experiment_id, theorem, scale, event, n, hits, mean, stderr,
    normalizer, normalized_mean, normalized_stderr

Fit rows use scale = "fit", mean = fitted slope, stderr = its error and
normalized_mean = intercept.
"""

from __future__ import annotations

import math

from .analysis import montecarlo as mc, theorems as th
from .analysis.fitting import Estimate, fit_power_law
from .errors import DegenerateInput
from .sampler import RngSpec

CSV_COLUMNS = ["experiment_id", "theorem", "scale", "event", "n", "hits",
               "mean", "stderr", "normalizer", "normalized_mean",
               "normalized_stderr"]

ARM_EXPONENTS = {
    "pi": 5.0 / 48.0,
    "pi_bar": 1.0 / 3.0,
    "iota": 1.0,
    "iota_bar": 2.0,
    "rho_bar": 5.0 / 4.0,
    "rho": None,  # backbone exponent: no closed form, fitted only
}

NORM_OFFSET = 10 ** 7  # stream namespace for normalizer runs


def _est(state, key):
    hits, n = state[key]
    return Estimate.from_hits(hits, n)


def _merge_hits(state, key, hits, n):
    h0, n0 = state.get(key, (0, 0))
    state[key] = [h0 + int(hits), n0 + int(n)]


def _remaining(cfg, state, key):
    done = state.get(key, (0, 0))[1]
    want = int(cfg["samples"])
    return done, max(0, want - done)


def _row(cfg, theorem, scale, event, est, normalizer="", normalized=None):
    return {
        "experiment_id": cfg["experiment_id"],
        "theorem": theorem,
        "scale": scale,
        "event": event,
        "n": est.n,
        "hits": est.hits,
        "mean": repr(est.mean),
        "stderr": repr(est.stderr),
        "normalizer": normalizer if normalizer == "" else repr(normalizer),
        "normalized_mean": "" if normalized is None else repr(normalized.mean),
        "normalized_stderr": "" if normalized is None else repr(normalized.stderr),
    }


def _fit_row(cfg, theorem, event, fit):
    return {
        "experiment_id": cfg["experiment_id"], "theorem": theorem,
        "scale": "fit", "event": event, "n": "", "hits": "",
        "mean": repr(fit.exponent), "stderr": repr(fit.stderr),
        "normalizer": "", "normalized_mean": repr(fit.intercept),
        "normalized_stderr": "",
    }


def _ensure_norm(cfg, state, rng, families, L, threads):
    """Run (once) the same-scale normalizer ladders recorded in the state."""
    n_norm = int(cfg.get("norm_samples", 20000))
    for k, fam in enumerate(families):
        key = f"norm:{fam}:{L}"
        if key in state:
            continue
        ests = mc.arm_ladder(fam, [L], n_norm, rng, threads=threads,
                             stream_offset=NORM_OFFSET + k * n_norm)
        _merge_hits(state, key, ests[L].hits, ests[L].n)


def _normalizer(state, fam, L, power):
    e = _est(state, f"norm:{fam}:{L}")
    if e.mean <= 0:
        raise DegenerateInput(f"normalizer {fam}@{L} vanishes")
    return e.mean ** power, abs(power) * e.stderr / e.mean


# --- experiment kinds -------------------------------------------------------


def _run_arm_ladder(cfg, state, rng, threads):
    scales = [int(s) for s in cfg["scales"]]
    done, todo = _remaining(cfg, state, f"scale:{scales[0]}")
    if todo:
        ests = mc.arm_ladder(cfg["family"], scales, todo, rng,
                             threads=threads, stream_offset=done)
        for L, e in ests.items():
            _merge_hits(state, f"scale:{L}", e.hits, e.n)


def _rows_arm_ladder(cfg, state):
    scales = [int(s) for s in cfg["scales"]]
    family = cfg["family"]
    ests = {L: _est(state, f"scale:{L}") for L in scales}
    rows = [_row(cfg, f"arm:{family}", L, family, e) for L, e in ests.items()]
    drop = int(cfg.get("fit_drop_smallest", 2))
    drop = max(0, min(drop, len(scales) - 3))  # keep >= 3 points fittable
    fit_scales = scales[drop:]
    if len(fit_scales) >= 3 and all(ests[L].mean > 0 for L in fit_scales):
        fit = fit_power_law(fit_scales, [ests[L] for L in fit_scales])
        rows.append(_fit_row(cfg, f"arm:{family}", f"{family}_exponent", fit))
    return rows


def _run_cardy(cfg, state, rng, threads):
    L = int(cfg["scale"])
    for k, chi in enumerate(cfg["chis"]):
        key = f"chi:{chi}"
        done, todo = _remaining(cfg, state, key)
        if not todo:
            continue
        out = th.cardy_crossing_check([float(chi)], L, todo, rng,
                                      threads=threads,
                                      stream_offset=k * 10 ** 6 + done)
        est, _ = out[float(chi)]
        _merge_hits(state, key, est.hits, est.n)


def _rows_cardy(cfg, state):
    from .analysis.conformal import cardy_weights
    L = int(cfg["scale"])
    rows = []
    for chi in cfg["chis"]:
        est = _est(state, f"chi:{chi}")
        z1 = cardy_weights(float(chi))[0]
        rows.append(_row(cfg, "cardy", L, f"crossing@chi={chi}", est,
                         normalizer=z1, normalized=est.scaled(1.0 / z1, 0.0)))
    return rows


def _run_l_theorem(cfg, state, rng, threads):
    L = int(cfg["scale"])
    _ensure_norm(cfg, state, rng, ["iota"], L, threads)
    done, todo = _remaining(cfg, state, "segment:0")
    if todo:
        raw, _ = th.l_theorem_estimates(tuple(cfg["x1x2"]),
                                        [tuple(s) for s in cfg["segments"]],
                                        L, todo, rng, threads=threads,
                                        stream_offset=done)
        for i, e in raw.items():
            _merge_hits(state, f"segment:{i}", e.hits, e.n)


def _rows_l_theorem(cfg, state):
    L = int(cfg["scale"])
    nrm, rel = _normalizer(state, "iota", L, -2)
    rows = []
    for i in range(len(cfg["segments"])):
        est = _est(state, f"segment:{i}")
        rows.append(_row(cfg, "boundary_log_L", L, f"L_segment_{i}", est,
                         normalizer=nrm, normalized=est.scaled(nrm, rel)))
    return rows


def _run_m_hat(cfg, state, rng, threads):
    L = int(cfg["scale"])
    _ensure_norm(cfg, state, rng, ["iota"], L, threads)
    done, todo = _remaining(cfg, state, f"y:{cfg['ys'][0]}")
    if todo:
        raw, _ = th.m_hat_estimates(float(cfg["x1"]), float(cfg["x2"]),
                                    [float(y) for y in cfg["ys"]], L, todo,
                                    rng, threads=threads, stream_offset=done)
        for y, e in raw.items():
            _merge_hits(state, f"y:{y}", e.hits, e.n)


def _rows_m_hat(cfg, state):
    L = int(cfg["scale"])
    nrm, rel = _normalizer(state, "iota", L, -3)
    rows = []
    for y in cfg["ys"]:
        est = _est(state, f"y:{float(y)}")
        rows.append(_row(cfg, "m_hat_three_point", L, f"m_hat@y={float(y)}",
                         est, normalizer=nrm, normalized=est.scaled(nrm, rel)))
    return rows


def _run_r3(cfg, state, rng, threads):
    L = int(cfg["scale"])
    _ensure_norm(cfg, state, rng, ["rho_bar"], L, threads)
    done, todo = _remaining(cfg, state, "r3")
    if todo:
        pts = [complex(p[0], p[1]) for p in cfg["points"]]
        raw, _ = th.r3_estimate(pts, L, todo, rng, threads=threads,
                                stream_offset=done)
        _merge_hits(state, "r3", raw.hits, raw.n)


def _rows_r3(cfg, state):
    L = int(cfg["scale"])
    nrm, rel = _normalizer(state, "rho_bar", L, -3)
    est = _est(state, "r3")
    return [_row(cfg, "r3", L, "r3_triangle", est, normalizer=nrm,
                 normalized=est.scaled(nrm, rel))]


def _run_log_probe(cfg, state, rng, threads):
    done, todo = _remaining(cfg, state, "probe_runs")
    if todo:
        fit, D, diag = th.covariance_log_probe(
            [int(s) for s in cfg["separations"]], int(cfg["scale"]),
            int(cfg["samples"]), rng, threads=threads)
        state["probe_runs"] = [1, int(cfg["samples"])]
        state["slope"] = [repr(fit.exponent), repr(fit.stderr)]
        state["D"] = {str(s): repr(d) for s, d in D.items()}
        state["y"] = {str(s): repr(v) for s, v in diag["y"].items()}
        state["monotone"] = bool(diag["monotone_in_log"])


def _rows_log_probe(cfg, state):
    rows = []
    for s in cfg["separations"]:
        rows.append({
            "experiment_id": cfg["experiment_id"], "theorem": "bulk_log_ope",
            "scale": s, "event": "covariance_D", "n": cfg["samples"],
            "hits": "", "mean": state["D"][str(s)], "stderr": "",
            "normalizer": "", "normalized_mean": state["y"][str(s)],
            "normalized_stderr": "",
        })
    rows.append({
        "experiment_id": cfg["experiment_id"], "theorem": "bulk_log_ope",
        "scale": "fit", "event": "log_slope", "n": "", "hits": "",
        "mean": state["slope"][0], "stderr": state["slope"][1],
        "normalizer": "", "normalized_mean": "",
        "normalized_stderr": "",
    })
    return rows


RUNNERS = {
    "arm_ladder": (_run_arm_ladder, _rows_arm_ladder),
    "cardy": (_run_cardy, _rows_cardy),
    "l_theorem": (_run_l_theorem, _rows_l_theorem),
    "m_hat": (_run_m_hat, _rows_m_hat),
    "r3": (_run_r3, _rows_r3),
    "log_probe": (_run_log_probe, _rows_log_probe),
}


def run_experiment(cfg, state=None, threads=None):
    """Run (or extend) one experiment; returns (rows, state)."""
    kind = cfg["kind"]
    if kind not in RUNNERS:
        raise DegenerateInput(f"unknown experiment kind {kind!r}")
    state = {} if state is None else state
    rng = RngSpec(int(cfg["seed"]))
    run, rows = RUNNERS[kind]
    run(cfg, state, rng, threads)
    return rows(cfg, state), state
