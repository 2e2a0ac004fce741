import csv
import json
import os

import pytest

from perclab.cli import (config_schema, main, run_all, validate_config,
                         write_csv)
from perclab.experiments import CSV_COLUMNS


def base_config(samples=600):
    return {
        "seed": 31,
        "experiments": [
            {"experiment_id": "demo_pi", "kind": "arm_ladder", "family": "pi",
             "scales": [4, 8, 16, 32], "samples": samples, "plot": True},
            {"experiment_id": "demo_cardy", "kind": "cardy", "scale": 24,
             "chis": [0.5], "samples": 300},
        ],
    }


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_schema_accepts_and_rejects(tmp_path):
    cfg = base_config()
    validate_config(cfg)  # should not raise
    bad = json.loads(json.dumps(cfg))
    bad["experiments"][0]["scales"] = []
    with pytest.raises(ValueError, match="scales"):
        validate_config(bad)
    bad2 = json.loads(json.dumps(cfg))
    bad2["experiments"][1]["radius"] = -3
    with pytest.raises(ValueError, match="radius"):
        validate_config(bad2)
    bad3 = json.loads(json.dumps(cfg))
    del bad3["seed"]
    with pytest.raises(ValueError, match="seed"):
        validate_config(bad3)


def test_schema_is_valid_jsonschema():
    import jsonschema
    jsonschema.Draft202012Validator.check_schema(config_schema())


def test_exit_codes(tmp_path):
    cfg = base_config(samples=50)
    path = write_cfg(tmp_path, cfg)
    out = str(tmp_path / "out")
    assert main(["--config", path, "--out", out]) == 0
    bad = json.loads(json.dumps(cfg))
    bad["experiments"][0]["family"] = "sigma"
    badpath = write_cfg(tmp_path, bad, "bad.json")
    assert main(["--config", badpath, "--out", out]) == 2
    assert main(["--config", str(tmp_path / "missing.json"), "--out", out]) == 2
    assert main(["--list-experiments"]) == 0


def test_csv_columns_and_fit_row(tmp_path):
    cfg = base_config(samples=200)
    out = str(tmp_path / "out")
    rows = run_all(cfg, out)
    with open(os.path.join(out, "results.csv")) as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == CSV_COLUMNS
        rows = list(reader)
    pi_rows = [r for r in rows if r["experiment_id"] == "demo_pi"]
    assert len(pi_rows) == 5  # 4 scales + fit row
    assert pi_rows[-1]["scale"] == "fit"
    cardy = [r for r in rows if r["experiment_id"] == "demo_cardy"][0]
    assert cardy["normalizer"] != ""
    assert os.path.exists(os.path.join(out, "plot_demo_pi.svg"))


def test_meta_round_trip(tmp_path):
    # meta.json's expanded config re-parses as a valid ExperimentConfig
    cfg = base_config(samples=100)
    out = str(tmp_path / "out")
    run_all(cfg, out)
    with open(os.path.join(out, "meta.json")) as fh:
        meta = json.load(fh)
    cfg2 = dict(meta["config"])
    cfg2.pop("threads", None)
    validate_config(cfg2)
    assert cfg2["experiments"][0]["fit_drop_smallest"] == 2  # default recorded


def test_threads_reproducibility(tmp_path):
    cfg = base_config(samples=300)
    path = write_cfg(tmp_path, cfg)
    outputs = []
    for t in (1, 4, 8):
        out = str(tmp_path / f"t{t}")
        assert main(["--config", path, "--out", out, "--threads", str(t)]) == 0
        outputs.append(open(os.path.join(out, "results.csv")).read())
    assert outputs[0] == outputs[1] == outputs[2]


def test_resume_merges_exactly(tmp_path):
    cfg_full = base_config(samples=500)
    cfg_half = base_config(samples=200)
    path_full = write_cfg(tmp_path, cfg_full, "full.json")
    path_half = write_cfg(tmp_path, cfg_half, "half.json")
    out_a = str(tmp_path / "direct")
    out_b = str(tmp_path / "resumed")
    assert main(["--config", path_full, "--out", out_a]) == 0
    assert main(["--config", path_half, "--out", out_b]) == 0
    assert main(["--config", path_full, "--out", out_b, "--resume"]) == 0
    a = open(os.path.join(out_a, "results.csv")).read()
    b = open(os.path.join(out_b, "results.csv")).read()
    assert a == b


def test_geometry_error_exit_code(tmp_path):
    cfg = {
        "seed": 1,
        "experiments": [
            {"experiment_id": "bad_geom", "kind": "m_hat", "scale": 16,
             "x1": 0.0, "x2": 0.0, "ys": [0.5], "samples": 10,
             "norm_samples": 10},
        ],
    }
    path = write_cfg(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path / "o")]) == 3
