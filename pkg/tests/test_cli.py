"""End-to-end command line checks: validation behaviour, output files,
rerun determinism, and exit codes."""

import json

import numpy as np
import pytest

from quditsim.cli import main
from quditsim.config import apply_overrides, parse_override, validate_config


def write_cfg(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def sqed_cfg(out=None, **extra):
    section = {"shape": "chain", "n": 2, "d": 3, "mu": 1.0, "lam": 0.3,
               "x": 0.4, "y": 0.3, "t_max": 25.0, "samples": 256}
    section.update(extra)
    cfg = {"workload": "sqed", "seed": 1, "sqed": section}
    if out is not None:
        cfg["out"] = str(out)
    return cfg


def qaoa_cfg(out, **extra):
    section = {"n": 3, "edges": [[0, 1], [1, 2], [0, 2]], "d": 3,
               "rounds": 4, "shots": 128, "restarts": 2}
    section.update(extra)
    return {"workload": "qaoa", "seed": 5, "out": str(out), "qaoa": section}


# --- validate subcommand ----------------------------------------------------


def test_validate_accepts_good_config(tmp_path, capsys):
    path = write_cfg(tmp_path, "ok.json", sqed_cfg())
    assert main(["validate", "--config", str(path)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_lists_every_violation(tmp_path, capsys):
    cfg = {"workload": "sqed", "seed": "one", "bogus": 1,
           "sqed": {"shape": "ring", "n": 1, "d": 3, "mu": 1.0,
                    "t_max": -2.0, "mystery": True}}
    path = write_cfg(tmp_path, "bad.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    out = capsys.readouterr().out
    # every independent problem is reported in one pass, each naming its key
    for fragment in ["seed", "bogus", "shape", "n must be >=", "t_max",
                     "mystery"]:
        assert fragment in out, f"missing complaint about {fragment!r}:\n{out}"


def test_validate_rejects_unknown_section_key(tmp_path, capsys):
    cfg = sqed_cfg()
    cfg["sqed"]["typo_key"] = 3
    path = write_cfg(tmp_path, "unknown.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "typo_key" in capsys.readouterr().out


def test_missing_config_file(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2


def test_unparsable_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["validate", "--config", str(path)]) == 2


def test_all_zero_couplings_rejected(tmp_path, capsys):
    cfg = sqed_cfg(mu=0.0, lam=0.0, x=0.0, y=0.0)
    path = write_cfg(tmp_path, "zeros.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "coupling" in capsys.readouterr().out


def test_symmetric_labeling_needs_odd_d(tmp_path, capsys):
    cfg = sqed_cfg(d=4, labeling="symmetric")
    path = write_cfg(tmp_path, "even.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "odd d" in capsys.readouterr().out


# --- overrides ---------------------------------------------------------------


def test_parse_override_forms():
    assert parse_override("qaoa.shots=64") == (["qaoa", "shots"], 64)
    assert parse_override("sqed.labeling=fock") == (["sqed", "labeling"], "fock")
    assert parse_override("reservoir.dims=[4,4]") == (["reservoir", "dims"],
                                                      [4, 4])


def test_apply_overrides_leaves_original_untouched():
    cfg = {"workload": "qaoa", "seed": 0, "qaoa": {"shots": 1}}
    out = apply_overrides(cfg, ["qaoa.shots=99", "seed=3"])
    assert out["qaoa"]["shots"] == 99 and out["seed"] == 3
    assert cfg["qaoa"]["shots"] == 1 and cfg["seed"] == 0


def test_override_bad_path_is_config_error(tmp_path, capsys):
    path = write_cfg(tmp_path, "c.json", sqed_cfg())
    code = main(["validate", "--config", str(path), "--set", "nope.deep.key=1"])
    assert code == 2


def test_override_introducing_unknown_key_is_caught(tmp_path, capsys):
    path = write_cfg(tmp_path, "c.json", sqed_cfg())
    assert main(["validate", "--config", str(path),
                 "--set", "sqed.fancy=1"]) == 2
    assert "fancy" in capsys.readouterr().out


# --- running workloads -------------------------------------------------------


def test_sqed_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    path = write_cfg(tmp_path, "c.json", sqed_cfg(out=out))
    assert main(["sqed", "--config", str(path)]) == 0
    for name in ("result.json", "meta.json", "series.csv", "spectrum.csv",
                 "sqed.png"):
        assert (out / name).is_file(), name
    report = json.loads((out / "result.json").read_text())
    assert report["gap_fft"] > 0
    assert "gap_exact" in report
    lines = (out / "series.csv").read_text().splitlines()
    assert lines[0] == "time,g_real,g_imag,survival"
    assert len(lines) == 1 + report["samples"]
    assert "gap_fft" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    path = write_cfg(tmp_path, "c.json", qaoa_cfg(out_a))
    assert main(["qaoa", "--config", str(path)]) == 0
    assert main(["qaoa", "--config", str(path), "--out", str(out_b)]) == 0
    assert (out_a / "result.json").read_bytes() == \
        (out_b / "result.json").read_bytes()
    assert (out_a / "rounds.csv").read_bytes() == \
        (out_b / "rounds.csv").read_bytes()


def test_qaoa_outputs(tmp_path):
    out = tmp_path / "q"
    path = write_cfg(tmp_path, "c.json", qaoa_cfg(out))
    assert main(["qaoa", "--config", str(path)]) == 0
    report = json.loads((out / "result.json").read_text())
    assert report["best_cost"] <= report["brute_force_cost"] == 3
    rows = (out / "rounds.csv").read_text().splitlines()
    assert rows[0] == "round,incumbent_cost,round_best,mean_sampled"
    assert len(rows) == 1 + report["rounds"]
    assert (out / "qaoa.png").stat().st_size > 0


def test_qaoa_graph_file_input(tmp_path):
    (tmp_path / "tri.edges").write_text("# triangle\n0 1\n1 2\n0 2\n")
    out = tmp_path / "g"
    cfg = {"workload": "qaoa", "seed": 5, "out": str(out),
           "qaoa": {"graph_file": "tri.edges", "d": 3, "rounds": 2,
                    "shots": 64, "restarts": 2}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["qaoa", "--config", str(path)]) == 0
    report = json.loads((out / "result.json").read_text())
    assert sorted(map(tuple, report["edges"])) == [(0, 1), (0, 2), (1, 2)]


def test_missing_graph_file_is_violation(tmp_path, capsys):
    cfg = {"workload": "qaoa", "seed": 5,
           "qaoa": {"graph_file": "ghost.edges", "d": 3}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "ghost.edges" in capsys.readouterr().out


def test_reservoir_outputs(tmp_path):
    out = tmp_path / "r"
    cfg = {"workload": "reservoir", "seed": 2, "out": str(out),
           "reservoir": {"dims": [3, 3], "washout": 8, "n_steps": 60,
                         "ridge_lambda": 1e-6}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["reservoir", "--config", str(path)]) == 0
    report = json.loads((out / "result.json").read_text())
    assert report["n_features"] == 9   # joint populations; bias not counted
    assert report["nmse_test"] >= 0 and report["nmse_baseline"] >= 0
    header = (out / "features.csv").read_text().splitlines()[0]
    assert header.split(",")[:2] == ["step", "f0"]
    pred = (out / "predictions.csv").read_text().splitlines()
    assert len(pred) == 1 + report["test_rows"]


def test_synth_outputs(tmp_path):
    out = tmp_path / "s"
    cfg = {"workload": "synth", "seed": 3, "out": str(out),
           "synth": {"dims": [4], "layout": "2x[disp(0),snap(0)]",
                     "target": {"name": "snap",
                                "phases": [0.4, -0.3, 0.8, 0.1]},
                     "optimizer": {"iters": 60, "restarts": 2}}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["synth", "--config", str(path)]) == 0
    report = json.loads((out / "result.json").read_text())
    assert 0 < report["fidelity"] <= 1.0
    trace = (out / "trace.csv").read_text().splitlines()
    assert len(trace) == 1 + 60
    unitary = np.loadtxt(out / "unitary.csv", delimiter=",", skiprows=1)
    assert unitary.shape == (4, 8)
    u = unitary[:, :4] + 1j * unitary[:, 4:]
    assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-9)


def test_workload_subcommand_mismatch(tmp_path, capsys):
    path = write_cfg(tmp_path, "c.json", sqed_cfg())
    assert main(["qaoa", "--config", str(path)]) == 2
    assert "workload" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    path = write_cfg(tmp_path, "c.json", qaoa_cfg(out_a))
    assert main(["qaoa", "--config", str(path)]) == 0
    assert main(["qaoa", "--config", str(path), "--out", str(out_b),
                 "--seed", "77"]) == 0
    assert json.loads((out_b / "result.json").read_text())["seed"] == 77


def test_synth_target_must_embed(tmp_path, capsys):
    cfg = {"workload": "synth", "seed": 0,
           "synth": {"dims": [3], "layout": "1x[disp(0),snap(0)]",
                     "target": {"name": "csum", "d": 3}}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "embed" in capsys.readouterr().out


def test_quadrature_with_shots_is_violation(tmp_path, capsys):
    cfg = {"workload": "reservoir", "seed": 0,
           "reservoir": {"feature_set": "quadrature", "shots": 100}}
    path = write_cfg(tmp_path, "c.json", cfg)
    assert main(["validate", "--config", str(path)]) == 2
    assert "shots" in capsys.readouterr().out


def test_validate_config_catches_bad_reservoir_lengths(tmp_path):
    cfg = {"workload": "reservoir", "seed": 0,
           "reservoir": {"dims": [4, 4, 4], "omegas": [1.0, 1.1, 1.2],
                         "kappas": [0.1, 0.1]}}
    violations = validate_config(cfg, tmp_path)
    assert any("kappas" in v for v in violations)
    assert not any("omegas" in v for v in violations)
