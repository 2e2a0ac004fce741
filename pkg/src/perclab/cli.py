"""Experiment orchestration CLI.

Usage:  perclab --config cfg.json --out results/ [--seed N] [--threads N]
                [--resume] [--oracle] [--list-experiments]

Writes results.csv (fixed column contract), meta.json (expanded config,
seeds, per-experiment counter state) and optional plot_<id>.svg.  Exit
codes: 0 success, 2 config validation error, 3 detector/geometry error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import jsonschema

from . import __version__
from .analysis import montecarlo as mc
from .errors import PercLabError
from .experiments import CSV_COLUMNS, RUNNERS, run_experiment

_BASE_KEYS = {
    "experiment_id": {"type": "string", "minLength": 1},
    "kind": {"enum": sorted(RUNNERS)},
    "seed": {"type": "integer", "minimum": 0},
    "samples": {"type": "integer", "minimum": 1},
    "plot": {"type": "boolean"},
}

_KIND_KEYS = {
    "arm_ladder": {
        "family": {"enum": sorted(mc.LADDER_FAMILIES)},
        "scales": {"type": "array", "minItems": 1,
                   "items": {"type": "integer", "minimum": 1}},
        "fit_drop_smallest": {"type": "integer", "minimum": 0},
    },
    "cardy": {
        "scale": {"type": "integer", "minimum": 8},
        "chis": {"type": "array", "minItems": 1,
                 "items": {"type": "number", "exclusiveMinimum": 0,
                           "exclusiveMaximum": 1}},
    },
    "l_theorem": {
        "scale": {"type": "integer", "minimum": 8},
        "x1x2": {"type": "array", "minItems": 2, "maxItems": 2,
                 "items": {"type": "number"}},
        "segments": {"type": "array", "minItems": 1,
                     "items": {"type": "array", "minItems": 2, "maxItems": 2,
                               "items": {"type": "number"}}},
        "norm_samples": {"type": "integer", "minimum": 1},
    },
    "m_hat": {
        "scale": {"type": "integer", "minimum": 8},
        "x1": {"type": "number"},
        "x2": {"type": "number"},
        "ys": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "norm_samples": {"type": "integer", "minimum": 1},
    },
    "r3": {
        "scale": {"type": "integer", "minimum": 4},
        "points": {"type": "array", "minItems": 3, "maxItems": 3,
                   "items": {"type": "array", "minItems": 2, "maxItems": 2,
                             "items": {"type": "number"}}},
        "norm_samples": {"type": "integer", "minimum": 1},
    },
    "log_probe": {
        "scale": {"type": "integer", "minimum": 32},
        "separations": {"type": "array", "minItems": 3,
                        "items": {"type": "integer", "minimum": 2}},
    },
}


def config_schema():
    """The published JSON schema for experiment configs."""
    experiment_schemas = []
    for kind, extra in sorted(_KIND_KEYS.items()):
        props = dict(_BASE_KEYS)
        props["kind"] = {"const": kind}
        props.update(extra)
        required = ["experiment_id", "kind", "samples"] + sorted(extra.keys()
                    - {"fit_drop_smallest", "norm_samples"})
        experiment_schemas.append({
            "type": "object",
            "properties": props,
            "required": required,
            "additionalProperties": False,
        })
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {
            "seed": {"type": "integer", "minimum": 0},
            "threads": {"type": "integer", "minimum": 1},
            "experiments": {"type": "array", "minItems": 1,
                            "items": {"oneOf": experiment_schemas}},
        },
        "required": ["seed", "experiments"],
        "additionalProperties": False,
    }


def validate_config(cfg):
    """jsonschema validation with unknown-key rejection; raises ValueError
    whose message names the offending key/path."""
    schema = config_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if not errors:
        return
    e = errors[0]
    # for oneOf failures report the branch matching the declared kind
    if e.validator == "oneOf" and isinstance(e.instance, dict):
        kinds = sorted(_KIND_KEYS)
        kind = e.instance.get("kind")
        if kind in kinds:
            branch = kinds.index(kind)
            subs = [s for s in e.context
                    if list(s.schema_path)[:1] == [branch]
                    and s.validator != "const"]
            if subs:
                e = subs[0]
    path = "/".join(str(p) for p in e.absolute_path) or "<root>"
    raise ValueError(f"config invalid at {path}: {e.message}")


def _expand_defaults(cfg):
    out = {"seed": int(cfg["seed"]), "threads": cfg.get("threads"),
           "experiments": []}
    for exp in cfg["experiments"]:
        e = dict(exp)
        e.setdefault("seed", out["seed"])
        e.setdefault("plot", False)
        if e["kind"] == "arm_ladder":
            e.setdefault("fit_drop_smallest", 2)
            e["scales"] = sorted(int(s) for s in e["scales"])
        if e["kind"] in ("l_theorem", "m_hat", "r3"):
            e.setdefault("norm_samples", 20000)
        out["experiments"].append(e)
    return out


def write_csv(path, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def plot_svg(path, rows, experiment_id):
    """Log-log scatter of mean vs scale with the fitted line, plain SVG."""
    pts = [(float(r["scale"]), float(r["mean"])) for r in rows
           if r["experiment_id"] == experiment_id and r["scale"] != "fit"
           and float(r["mean"]) > 0]
    fit = [r for r in rows if r["experiment_id"] == experiment_id
           and r["scale"] == "fit"]
    if len(pts) < 2:
        return
    W, H, pad = 480, 360, 50
    xs = [math.log10(p[0]) for p in pts]
    ys = [math.log10(p[1]) for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    sx = lambda x: pad + (x - x0) / (x1 - x0) * (W - 2 * pad)
    sy = lambda y: H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W/2}" y="20" text-anchor="middle" font-size="13">'
             f'{experiment_id}: log10(mean) vs log10(scale)</text>']
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3.5" '
                     'fill="steelblue"/>')
    if fit:
        slope = float(fit[0]["mean"])
        inter = float(fit[0]["normalized_mean"]) / math.log(10.0)
        yl = inter + slope * x0 * 1.0
        yr = inter + slope * x1 * 1.0
        parts.append(f'<line x1="{sx(x0):.1f}" y1="{sy(yl):.1f}" '
                     f'x2="{sx(x1):.1f}" y2="{sy(yr):.1f}" '
                     'stroke="crimson" stroke-width="1.5"/>')
        parts.append(f'<text x="{W/2}" y="{H-12}" text-anchor="middle" '
                     f'font-size="12">fitted slope {slope:.4f}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def run_all(cfg, out_dir, resume=False, threads=None):
    cfg = _expand_defaults(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta_path = os.path.join(out_dir, "meta.json")
    states = {}
    if resume and os.path.exists(meta_path):
        with open(meta_path) as fh:
            old = json.load(fh)
        states = old.get("state", {})
    all_rows = []
    threads = threads if threads is not None else cfg.get("threads")
    for exp in cfg["experiments"]:
        state = states.get(exp["experiment_id"], {})
        rows, state = run_experiment(exp, state=state, threads=threads)
        states[exp["experiment_id"]] = state
        all_rows.extend(rows)
        if exp.get("plot"):
            plot_svg(os.path.join(out_dir, f"plot_{exp['experiment_id']}.svg"),
                     rows, exp["experiment_id"])
    write_csv(os.path.join(out_dir, "results.csv"), all_rows)
    meta = {"version": __version__, "config": cfg, "state": states}
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return all_rows


def run_oracle_suite(verbose=True):
    """The enumeration certification suite (same families as the tests)."""
    from .oracle_suite import CERTIFICATIONS, run_certifications
    results = run_certifications(verbose=verbose)
    return all(ok for _, ok, _ in results)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="perclab", description=__doc__)
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--out", default="perclab_out", help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int,
                        default=None, help="worker threads "
                        "(default: env PERC_LAB_THREADS or 1)")
    parser.add_argument("--resume", action="store_true",
                        help="merge with existing partial results")
    parser.add_argument("--oracle", action="store_true",
                        help="run the enumeration certification suite")
    parser.add_argument("--list-experiments", action="store_true")
    args = parser.parse_args(argv)

    if args.list_experiments:
        for kind in sorted(RUNNERS):
            print(kind)
        return 0
    if args.oracle:
        ok = run_oracle_suite()
        return 0 if ok else 3
    if not args.config:
        parser.error("--config is required unless --oracle/--list-experiments")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config unreadable: {exc}", file=sys.stderr)
        return 2
    try:
        validate_config(cfg)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    threads = args.threads
    try:
        run_all(cfg, args.out, resume=args.resume, threads=threads)
    except PercLabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
