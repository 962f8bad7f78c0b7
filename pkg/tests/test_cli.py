import csv
import io
import json
import math

import pytest

from boolperc.cli import main
from boolperc.experiments import ESTIMATE_COLUMNS, SWEEP_COLUMNS


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


SMALL = {"space": {"kind": "euclidean", "dim": 2}, "law": {"kind": "pareto", "a": 4}, "lambda": 0.05,
         "r_grid": [0.5, 1, 2, 4], "replications": 300, "anchors": 3, "seed": 5,
         "window": {"radius": 5, "halo_factor": 6}}


# ---- exit codes -------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["estimate", "--threads", "0"],
    ["estimate", "--seed", "-1"],
    ["estimate", "--config", "/does/not/exist.json"],
])
def test_config_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv != ["nonsense"] else argv) == 2


@pytest.mark.parametrize("patch", [{"lambda_grid": []}, {"r_grid": [2, 1]}, {"replications": 0},
                                   {"law": {"kind": "lognormal"}}, {"space": {"kind": "torus"}}])
def test_bad_config_values(patch, tmp_path):
    doc = {k: v for k, v in SMALL.items() if k != "lambda"}
    doc.update(patch)
    doc.setdefault("lambda_grid", [0.1])
    assert main(["sweep", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["bounds", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_truncation_abort(tmp_path):
    doc = dict(SMALL, law={"kind": "pareto", "a": 2.2}, **{"lambda": 1.0, "window": {"radius": 5, "halo_factor": 1.2}})
    assert main(["estimate", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 4


# ---- subcommands ------------------------------------------------------

def test_bounds_csv_and_json(tmp_path):
    cfg = write(tmp_path, dict(SMALL, C1=10.0))
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "bounds.csv")
    assert list(table[0]) == ["r", "g_bound", "h_bound", "htilde_bound", "envelope"]
    assert len(table) == 4
    assert all(0 <= float(v) <= 1 for row in table for k, v in row.items() if k != "r")
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path), "--format", "json"]) == 0
    assert json.loads((tmp_path / "bounds.json").read_text())["C1"] == 10.0


def test_sample(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["sample", "--config", cfg, "--out", str(tmp_path), "--index", "3", "--format", "json"]) == 0
    assert (tmp_path / "sample.pbm").read_bytes()[:4] == b"PBM1"
    doc = json.loads((tmp_path / "sample.json").read_text())
    assert doc["stream"] == 3
    assert main(["sample", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert rows(tmp_path / "sample.csv")[0].keys() == {"center", "radius"}


def test_estimate_table(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path), "--no-checkpoint"]) == 0
    table = rows(tmp_path / "estimate.csv")
    assert list(table[0]) == list(ESTIMATE_COLUMNS)
    for row in table:
        for k in ("p_upper", "p_lower", "p_upper_pooled", "p_lower_pooled", "cluster_tail_envelope"):
            assert 0 <= float(row[k]) <= 1
        assert float(row["se_upper"]) >= 0 and float(row["se_lower"]) >= 0
        assert float(row["p_lower"]) <= float(row["p_upper"])
    assert (tmp_path / "estimate.svg").read_text().startswith("<svg")


def test_estimate_vanishing_intensity(tmp_path):
    # lam * mu(halo) = 1e-9
    lam = 1e-9 / (math.pi * 30.0**2)
    cfg = write(tmp_path, dict(SMALL, law={"kind": "dirac", "R0": 1}, **{"lambda": lam}))
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path), "--no-checkpoint"]) == 0
    assert all(float(r["p_upper"]) == 0.0 for r in rows(tmp_path / "estimate.csv"))


def test_estimate_dyadic_ultrametric_columns(tmp_path):
    doc = dict(SMALL, space={"kind": "dyadic"}, law={"kind": "dirac", "R0": 4}, **{"lambda": 0.5},
               window={"radius": 8, "halo_factor": 2})
    assert main(["estimate", "--config", write(tmp_path, doc), "--out", str(tmp_path), "--no-checkpoint"]) == 0
    table = rows(tmp_path / "estimate.csv")
    assert all(r["ultrametric_exact"] != "" and float(r["ultrametric_exact"]) <= float(r["ultrametric_envelope"])
               for r in table)


def test_checkpoint_resume(tmp_path):
    doc = dict(SMALL, replications=2500, anchors=2)
    cfg = write(tmp_path, doc)
    out = tmp_path / "run"
    assert main(["estimate", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    full = (out / "estimate.csv").read_bytes()
    ck = out / "checkpoint"
    manifest = json.loads((ck / "manifest.json").read_text())
    assert [c["stop"] for c in manifest["chunks"]] == [1000, 2000, 2500]
    assert len(list(ck.glob("sample_*.pbm"))) == 3
    # pretend the run died after the first chunk
    manifest["chunks"] = manifest["chunks"][:1]
    (ck / "manifest.json").write_text(json.dumps(manifest))
    (out / "estimate.csv").unlink()
    assert main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "estimate.csv").read_bytes() == full
    fresh = tmp_path / "fresh"
    assert main(["estimate", "--config", cfg, "--out", str(fresh), "--no-checkpoint"]) == 0
    assert (fresh / "estimate.csv").read_bytes() == full


def test_checkpoint_ignored_when_config_changes(tmp_path):
    out = tmp_path / "run"
    assert main(["estimate", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    a = (out / "estimate.csv").read_bytes()
    assert main(["estimate", "--config", write(tmp_path, SMALL), "--out", str(out), "--seed", "6"]) == 0
    assert (out / "estimate.csv").read_bytes() != a


def test_sweep_verdict_flip(tmp_path):
    doc = {"space": {"kind": "euclidean", "dim": 2},
           "laws": [{"kind": "pareto", "a": a} for a in (1.5, 2.0, 2.5, 3.0)],
           "lambda_grid": [0.01, 0.05], "r_grid": [1, 2], "replications": 200, "anchors": 2, "seed": 3,
           "window": {"radius": 4, "halo_factor": 3}}
    assert main(["sweep", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "sweep.csv")
    assert list(table[0]) == list(SWEEP_COLUMNS)
    assert len(table) == 8
    for row in table:
        a = float(row["law"].split("a=")[1].split(",")[0])
        assert row["verdict"] == ("covers-everything" if a <= 2 else "proper-subset")
        # the untruncated bound is out of reach of a finite window; the windowed one is not
        assert float(row["cover_freq"]) >= float(row["cover_lower_bound_window"]) - 3 * float(row["cover_se"])
        assert float(row["cover_lower_bound_window"]) <= float(row["cover_lower_bound"])
        assert row["influence_ok"] in ("0", "1")


def test_verify_pass_and_fail(tmp_path):
    checks = {"eps_grid": [0.5, 0.25, 0.125, 0.0625], "perfect_trials": 20}
    ok = {"space": {"kind": "euclidean", "dim": 2}, "law": {"kind": "pareto", "a": 5}, "checks": checks}
    assert main(["verify", "--config", write(tmp_path, ok), "--out", str(tmp_path / "a")]) == 0
    text = (tmp_path / "a" / "verify.txt").read_text()
    assert "PASS  cavalieri" in text
    assert json.loads((tmp_path / "a" / "verify_failures.json").read_text()) == []
    bad = {"space": {"kind": "discrete", "points": [0.0, 1.0]}, "law": {"kind": "dirac", "R0": 1}, "checks": checks}
    assert main(["verify", "--config", write(tmp_path, bad, "bad.json"), "--out", str(tmp_path / "b")]) == 3
    failed = {f["check"] for f in json.loads((tmp_path / "b" / "verify_failures.json").read_text())}
    assert "uniformly_perfect" in failed
    assert rows(tmp_path / "b" / "verify.csv")[0].keys() == {"check", "passed", "detail"}
