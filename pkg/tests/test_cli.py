from __future__ import annotations

import json
import subprocess
import sys

import pytest

from ifsconn import cli
from ifsconn.invariants import CheckResult
from ifsconn.io import read_pgm

HALVES = {
    "f": {"type": "affine", "linear": [[0.5]]},
    "g": {"type": "affine", "linear": [[0.5]]},
}
THIRDS = {
    "f": {"type": "affine", "linear": [[0.3333333333333333]]},
    "g": {"type": "affine", "linear": [[0.3333333333333333]]},
}
POLICY = {"eps0": 0.015625, "levels": 3}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(dict({"version": 1}, **cfg), indent=2))
    return p


def run(tmp_path, command, cfg, *extra, out="out"):
    p = write_cfg(tmp_path, cfg)
    return cli.main([command, "--config", str(p), "--out", str(tmp_path / out), *extra])


def files(path):
    return sorted(x.name for x in path.iterdir()) if path.exists() else []


# --- success paths -------------------------------------------------------------------


def test_classify_halves_prints_connected(tmp_path, capsys):
    code = run(tmp_path, "classify", {"maps": HALVES, "classify": {"w": [1.0]}})
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == "CONNECTED"
    assert json.loads(out.split("\n", 1)[1])["class"] == "CONNECTED"
    prov = json.loads((tmp_path / "out" / "classify.provenance.json").read_text())
    assert prov["seed"] == 0 and len(prov["config_hash"]) == 64


def test_attractor_emits_cells(tmp_path):
    assert run(tmp_path, "attractor", {"maps": HALVES, "attractor": {"w": [1.0], "eps": 0.0625}}) == 0
    assert files(tmp_path / "out") == ["attractor.cells", "attractor.provenance.json", "attractor.timings.json"]
    prov = json.loads((tmp_path / "out" / "attractor.provenance.json").read_text())
    assert prov["result"]["err"] == pytest.approx(0.125)


def test_sweep_outputs(tmp_path):
    cfg = {"maps": THIRDS, "policy": POLICY, "sweep": {"window": {"interval": [-1, 1], "resolution": 9}}}
    assert run(tmp_path, "sweep", cfg) == 0
    out = tmp_path / "out"
    assert files(out) == ["sweep.csv", "sweep.pgm", "sweep.provenance.json", "sweep.timings.json"]
    img = read_pgm((out / "sweep.pgm").read_bytes())
    assert img.shape == (1, 9)
    assert img[0, 0] == 0 and img[0, 4] in (128, 255)
    prov = json.loads((out / "sweep.provenance.json").read_text())
    assert prov["sweep"]["policy"]["schedule"] == [1 / 64, 1 / 128, 1 / 256]
    assert "timings" not in prov["sweep"]


def test_sweep_with_refinement(tmp_path):
    cfg = {"maps": THIRDS, "policy": POLICY,
           "sweep": {"window": {"interval": [-1, 1], "resolution": 9}, "refine_depth": 1}}
    assert run(tmp_path, "sweep", cfg) == 0
    assert read_pgm((tmp_path / "out" / "sweep.pgm").read_bytes()).shape == (1, 17)


def test_tiles_twindragon(tmp_path, capsys):
    cfg = {"policy": POLICY, "tiles": {"A": [[1, -1], [1, 1]], "digits": [[0, 0], [1, 0]]}}
    assert run(tmp_path, "tiles", cfg) == 0
    assert capsys.readouterr().out.splitlines()[0] == "CONNECTED"


def test_tiles_with_window(tmp_path):
    cfg = {"policy": {"eps0": 0.0625, "levels": 2},
           "tiles": {"A": [[2]], "digits": [[0], [1]], "window": {"interval": [-1, 1], "resolution": 3}}}
    assert run(tmp_path, "tiles", cfg) == 0
    assert "tiles_sweep.pgm" in files(tmp_path / "out")


def test_mset_and_covering(tmp_path):
    win = {"interval": [-2, 2], "resolution": 41}
    cfg = {"maps": HALVES, "mset": {"n": 2, "D": {"lo": [0], "hi": [1], "eps": 0.00390625}, "window": win},
           "covering": {"k": 4, "nmax": 4, "eps": 0.015625, "window": win}}
    assert run(tmp_path, "mset", cfg) == 0
    assert run(tmp_path, "covering", cfg) == 0
    out = tmp_path / "out"
    assert {"mset.pgm", "mset.csv", "covering.pgm", "covering.csv"} <= set(files(out))


def test_porosity_csv(tmp_path):
    cfg = {"policy": {"eps0": 0.03125, "levels": 2},
           "porosity": {"family": {"kind": "scalar", "dims": [1], "params": {"a": 0.5, "b": 0.5}},
                        "R": 2, "samples": 100}}
    assert run(tmp_path, "porosity", cfg) == 0
    lines = (tmp_path / "out" / "porosity.csv").read_text().splitlines()
    assert lines == ["d,samples,connected,disconnected,unknown,fraction", "1,100,100,0,0,1.0"]


def test_verify_quick_passes(tmp_path):
    assert run(tmp_path, "verify", {"verify": {"quick": True}}) == 0
    prov = json.loads((tmp_path / "out" / "verify.provenance.json").read_text())
    assert all(c["passed"] for c in prov["checks"])


def test_verify_without_config(tmp_path):
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0


def test_sweep_is_byte_identical(tmp_path):
    cfg = {"maps": THIRDS, "policy": POLICY, "sweep": {"window": {"interval": [-1, 1], "resolution": 9}}}
    assert run(tmp_path, "sweep", cfg, out="a") == 0
    assert run(tmp_path, "sweep", cfg, "--workers", "2", out="b") == 0
    for name in ("sweep.pgm", "sweep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_inputs_not_mutated(tmp_path):
    cfg = {"maps": HALVES, "classify": {"w": [1.0]}}
    p = write_cfg(tmp_path, cfg)
    before = p.read_bytes()
    assert cli.main(["classify", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    assert p.read_bytes() == before


def test_seed_override_changes_hash(tmp_path):
    cfg = {"maps": HALVES, "classify": {"w": [1.0]}}
    run(tmp_path, "classify", cfg, out="a")
    run(tmp_path, "classify", cfg, "--seed", "9", out="b")
    a = json.loads((tmp_path / "a" / "classify.provenance.json").read_text())
    b = json.loads((tmp_path / "b" / "classify.provenance.json").read_text())
    assert b["seed"] == 9 and a["config_hash"] != b["config_hash"]


def test_module_entry_point(tmp_path):
    p = write_cfg(tmp_path, {"maps": HALVES, "classify": {"w": [1.0]}})
    res = subprocess.run([sys.executable, "-m", "ifsconn.cli", "classify", "--config", str(p), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("CONNECTED")


# --- configuration errors (exit 2, nothing written) ---------------------------------


@pytest.mark.parametrize(
    "command,cfg",
    [
        ("attractor", {"maps": HALVES, "attractor": {"w": [1.0], "eps": 0}}),
        ("attractor", {"maps": HALVES, "attractor": {"w": [1.0, 2.0], "eps": 0.1}}),
        ("classify", {"maps": HALVES}),
        ("classify", {"classify": {"w": [1.0]}}),
        ("classify", {"maps": {"f": HALVES["f"], "g": {"type": "affine", "linear": [[1.5]]}},
                      "classify": {"w": [1.0]}}),
        ("sweep", {"maps": HALVES, "sweep": {"window": {"center": [0, 0], "axes": [[1, 0], [0, 1]],
                                                        "half_widths": [1, 1], "resolution": 3}}}),
        ("tiles", {"tiles": {"A": [[1, 0], [0, 2]], "digits": [[0, 0], [1, 0]]}}),
        ("tiles", {"tiles": {"A": [[3]], "digits": [[0], [1], [2]]}}),
        ("mset", {"maps": {"f": HALVES["f"], "g": {"type": "affine", "linear": [[0.5]], "offset": [1.0]}},
                  "mset": {"n": 1, "D": {"lo": [0], "hi": [1], "eps": 0.1},
                           "window": {"interval": [-1, 1], "resolution": 3}}}),
        ("covering", {"maps": HALVES, "covering": {"k": 1, "nmax": 2, "eps": 0.1,
                                                   "window": {"interval": [-2, 2], "resolution": 3}}}),
        ("porosity", {"porosity": {"family": {"dims": [2], "kind": "scalar"}, "R": 2, "samples": 100}}),
    ],
)
def test_config_errors_exit_2_and_write_nothing(tmp_path, capsys, command, cfg):
    assert run(tmp_path, command, cfg) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert files(tmp_path / "out") == []


def test_invalid_json_is_line_precise(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "version": 1,\n  "seed": oops\n}\n')
    assert cli.main(["classify", "--config", str(p), "--out", str(tmp_path / "out")]) == 2
    assert f"{p}:3:" in capsys.readouterr().err
    assert files(tmp_path / "out") == []


def test_missing_config_file(tmp_path):
    assert cli.main(["classify", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["classify"], ["sweep", "--config", "x", "--fastpath", "maybe"]],
)
def test_bad_arguments_exit_2(argv, capsys):
    assert cli.main(argv) == 2


@pytest.mark.parametrize("flag", [["--workers", "0"], ["--seed", "-1"]])
def test_bad_flag_values_exit_2(tmp_path, flag):
    assert run(tmp_path, "classify", {"maps": HALVES, "classify": {"w": [1.0]}}, *flag) == 2
    assert files(tmp_path / "out") == []


def test_version_flag_exits_0(capsys):
    assert cli.main(["--version"]) == 0


# --- budget exhaustion (exit 3) ------------------------------------------------------


def test_attractor_budget_exit_3(tmp_path):
    cfg = {"maps": HALVES, "attractor": {"w": [4.0], "eps": 0.0001, "max_cells": 10}}
    assert run(tmp_path, "attractor", cfg) == cli.EXIT_BUDGET
    assert files(tmp_path / "out") == []


def test_classify_budget_exit_3(tmp_path, capsys):
    cfg = {"maps": HALVES, "policy": {"eps0": 0.0001, "levels": 2, "max_cells": 10}, "classify": {"w": [4.0]}}
    assert run(tmp_path, "classify", cfg) == cli.EXIT_BUDGET
    assert capsys.readouterr().out.startswith("UNKNOWN")


def test_covering_budget_exit_3(tmp_path):
    cfg = {"maps": HALVES, "policy": {"max_cells": 10},
           "covering": {"k": 4, "nmax": 2, "eps": 0.001, "window": {"interval": [-1, 1], "resolution": 3}}}
    assert run(tmp_path, "covering", cfg) == cli.EXIT_BUDGET
    assert files(tmp_path / "out") == []


def test_sweep_budget_still_succeeds(tmp_path):
    # per-pixel budget exhaustion yields UNKNOWN pixels, not a failed run
    cfg = {"maps": HALVES, "fastpath": False, "policy": {"eps0": 0.0001, "levels": 2, "max_cells": 10},
           "sweep": {"window": {"interval": [1, 2], "resolution": 2}}}
    assert run(tmp_path, "sweep", cfg) == 0
    assert set(read_pgm((tmp_path / "out" / "sweep.pgm").read_bytes()).ravel().tolist()) == {128}


# --- verify failure (exit 1) ---------------------------------------------------------


def test_verify_failure_exit_1(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_suite", lambda seed, quick: [CheckResult("broken", False, "forced")])
    assert cli.main(["verify", "--out", str(tmp_path)]) == cli.EXIT_CHECK_FAILED
    assert "FAIL broken" in capsys.readouterr().out
