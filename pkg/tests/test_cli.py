import json
import subprocess
import sys
from pathlib import Path

import pytest

from cmcf import shapes
from cmcf.cli import main
from cmcf.io import save_obj

from .conftest import DATA

SPOT = str(DATA / "spot.obj")


def test_run_cmcf_spot(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "--input", SPOT, "--mode", "cmcf", "--tau", "0.05", "--out-dir", str(out), "--project-sphere"]) == 0
    m = json.loads((out / "metrics.json").read_text())
    assert m["sphericity"] >= 0.999
    assert m["termination"] == "sphericity_reached" and m["valid"] is True
    assert set(m) == {"sphericity", "angular", "lcr", "degenerate_faces", "valid", "termination", "steps"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["mode"] == "cmcf" and manifest["version"]
    assert set(manifest["timings"]) == {"load", "flow", "report"}
    for p in manifest["outputs"]:
        assert Path(p).exists(), p
    for name in ("final.obj", "sphere.obj", "history.csv", "metrics_faces.csv", "metrics_edges.csv",
                 "metrics_histograms.csv", "metrics_sphere.json"):
        assert (out / name).exists(), name
    assert "sphericity_reached" in capsys.readouterr().out


def test_run_mcf_spot_fails_with_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--input", SPOT, "--mode", "mcf", "--tau", "0.05", "--normalize", "area", "--out-dir", str(out)]) == 2
    m = json.loads((out / "metrics.json").read_text())
    assert m["termination"] in ("degenerate", "solver_failed")
    assert m["valid"] is False
    assert (out / "final.obj").exists() and (out / "manifest.json").exists()


def test_run_torus_refused(tmp_path, capsys):
    p = tmp_path / "torus.obj"
    save_obj(shapes.torus(), p)
    assert main(["run", "--input", str(p), "--mode", "cmcf", "--out-dir", str(tmp_path / "o")]) == 1
    assert "genus" in capsys.readouterr().err


def test_run_max_steps_exit_code(tmp_path):
    assert main(["run", "--input", SPOT, "--max-steps", "2", "--out-dir", str(tmp_path / "o")]) == 2
    assert json.loads((tmp_path / "o" / "metrics.json").read_text())["termination"] == "max_steps"


def test_run_snapshots(tmp_path):
    out = tmp_path / "o"
    main(["run", "--input", SPOT, "--max-steps", "3", "--snapshot-every", "1", "--out-dir", str(out)])
    assert len(list((out / "snapshots").glob("step_*.obj"))) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert sum(Path(p).parent.name == "snapshots" for p in manifest["outputs"]) == 3


def test_usage_errors(tmp_path):
    assert main(["run", "--input", str(tmp_path / "missing.obj")]) == 1
    assert main(["run", "--input", SPOT, "--tau", "-1", "--out-dir", str(tmp_path)]) == 1
    assert main(["run"]) == 1
    assert main(["frobnicate"]) == 1


def test_metrics_self(tmp_path, capsys):
    assert main(["metrics", SPOT, SPOT, "--out-dir", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["angular"]["mean"] == 0 and m["lcr"]["mean"] == 1 and m["valid"]


def test_metrics_on_shipped_flow_output(tmp_path):
    assert main(["metrics", SPOT, str(DATA / "spot_cmcf.obj"), "--out-dir", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["angular"]["mean"] == pytest.approx(0.0910, abs=5e-4)
    assert m["angular"]["std"] == pytest.approx(0.0767, abs=5e-4)
    assert m["lcr"]["mean"] == pytest.approx(1.0010, abs=5e-4)
    assert m["lcr"]["std"] == pytest.approx(0.0441, abs=5e-4)


def test_metrics_mismatched_meshes(tmp_path):
    a, b = tmp_path / "a.obj", tmp_path / "b.obj"
    save_obj(shapes.icosphere(1), a)
    save_obj(shapes.icosphere(2), b)
    assert main(["metrics", str(a), str(b), "--out-dir", str(tmp_path)]) == 1


def test_validate(tmp_path, capsys):
    ico, patch = tmp_path / "ico.obj", tmp_path / "patch.off"
    save_obj(shapes.icosphere(2), ico)
    patch.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    assert main(["validate", str(ico)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["validate", str(patch)]) == 2
    assert main(["validate", str(tmp_path / "nope.obj")]) == 1


def test_metrics_json_is_bitwise_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["run", "--input", SPOT, "--max-steps", "5", "--out-dir", str(tmp_path / d)])
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()
    assert (tmp_path / "a" / "final.obj").read_bytes() == (tmp_path / "b" / "final.obj").read_bytes()


def test_module_entry_point(tmp_path):
    p = tmp_path / "ico.obj"
    save_obj(shapes.icosphere(1), p)
    proc = subprocess.run([sys.executable, "-m", "cmcf", "validate", str(p)], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
