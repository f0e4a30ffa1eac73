import json

import numpy as np
import pytest
from jsonschema import Draft202012Validator

from mfglab.cli import main
from mfglab.config import load_schema
from mfglab.hamiltonian import DiscreteGame
from mfglab.solution_io import read_solution, write_solution

TERMINAL_B = {
    "kind": "trig-mixture",
    "modes": [
        {"frequency": [1], "amplitude": 0.4, "phase": 2.1},
        {"frequency": [2], "amplitude": 0.25, "phase": 1.5707963267948966},
    ],
}


def write_cfg(directory, doc, name="run.json"):
    path = directory / name
    path.write_text(json.dumps(doc))
    return str(path)


def check_schema(path, schema_name):
    doc = json.loads(path.read_text())
    Draft202012Validator(load_schema(schema_name)).validate(doc)
    return doc


@pytest.fixture(scope="module")
def sine_runs(tmp_path_factory):
    """Two solved runs sharing a grid: same u0, different terminal data."""
    root = tmp_path_factory.mktemp("cli_sine")
    base = {"preset": "sine-a4", "grid": {"n": 32, "nt": 50}}
    cfg_a = write_cfg(root, base, "a.json")
    cfg_b = write_cfg(root, {**base, "m_terminal": TERMINAL_B}, "b.json")
    out_a, out_b = root / "out_a", root / "out_b"
    assert main(["solve", "--config", cfg_a, "--out", str(out_a)]) == 0
    assert main(["solve", "--config", cfg_b, "--out", str(out_b)]) == 0
    return {
        "root": root,
        "cfg_a": cfg_a,
        "cfg_b": cfg_b,
        "sol_a": str(out_a / "solution.mfgs"),
        "sol_b": str(out_b / "solution.mfgs"),
        "out_a": out_a,
    }


def test_solve_writes_report_and_solution(tmp_path):
    cfg = write_cfg(
        tmp_path, {"preset": "trivial", "grid": {"n": 16, "nt": 20}}
    )
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    report = check_schema(out / "solve_report.json", "solve_report")
    assert report["converged"] is True
    assert report["iterations"] >= 1
    assert (out / "residual_history.csv").exists()
    grid, u, m = read_solution(out / "solution.mfgs")
    assert grid.n == 16 and grid.nt == 20
    assert np.allclose(m, 1.0, atol=1e-12)


def test_solve_reruns_are_byte_identical(tmp_path):
    cfg = write_cfg(
        tmp_path, {"preset": "trivial", "grid": {"n": 16, "nt": 20}}
    )
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        outs.append(out)
    for fname in ("solve_report.json", "solution.mfgs", "residual_history.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_bad_config_exits_one_with_dotted_path(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        {"preset": "trivial", "kernel": {"kind": "bump", "width": -0.1}},
    )
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "kernel.width" in capsys.readouterr().err


def test_unknown_key_and_non_object_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"preset": "trivial", "bogus_key": 1})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "bogus_key" in capsys.readouterr().err
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    assert main(["solve", "--config", str(arr), "--out", str(tmp_path)]) == 1


def test_missing_config_exits_one(tmp_path):
    assert (
        main(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        == 1
    )


def test_nonconvergence_exits_two(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        {
            "preset": "sine-a4",
            "grid": {"n": 16, "nt": 20},
            "solver": {"max_iter": 1, "tol": 1e-16},
        },
    )
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 2
    assert "not converged" in capsys.readouterr().err
    report = check_schema(out / "solve_report.json", "solve_report")
    assert report["converged"] is False


def test_verify_genuine_solution_passes(sine_runs, tmp_path):
    out = tmp_path / "verify"
    rc = main(
        ["verify", "--config", sine_runs["cfg_a"], "--out", str(out), sine_runs["sol_a"]]
    )
    assert rc == 0
    report = check_schema(out / "verify_report.json", "verify_report")
    assert report["passed"] is True
    assert report["failing_checks"] == []
    assert report["pair"] is None


def test_verify_flags_corrupted_density(sine_runs, tmp_path, capsys):
    grid, u, m = read_solution(sine_runs["sol_a"])
    bad = m.copy()
    bad[5, 3] -= 0.5
    bad_path = tmp_path / "bad.mfgs"
    write_solution(bad_path, grid, u, bad)
    out = tmp_path / "verify"
    rc = main(
        ["verify", "--config", sine_runs["cfg_a"], "--out", str(out), str(bad_path)]
    )
    assert rc == 3
    report = check_schema(out / "verify_report.json", "verify_report")
    assert "solution1.density_bounds" in report["failing_checks"]
    assert "solution1.density_bounds" in capsys.readouterr().err


def test_verify_pair_emits_energy_series(sine_runs, tmp_path):
    out = tmp_path / "pair"
    rc = main(
        [
            "verify",
            "--config",
            sine_runs["cfg_a"],
            "--out",
            str(out),
            sine_runs["sol_a"],
            sine_runs["sol_b"],
        ]
    )
    assert rc == 0
    report = check_schema(out / "verify_report.json", "verify_report")
    pair = report["pair"]
    assert pair is not None
    # shared initial value: the pair energy starts nonpositive and decays
    assert pair["phi_initial"] <= 1e-10
    assert pair["decay_violation"] <= report["tolerance"]
    lines = (out / "phi_series.csv").read_text().splitlines()
    assert lines[0] == "time,phi,weighted_phi"
    assert len(lines) == 2 + grid_nt(sine_runs)


def grid_nt(sine_runs):
    grid, _, _ = read_solution(sine_runs["sol_a"])
    return grid.nt


def test_verify_rejects_three_paths(sine_runs, tmp_path):
    sol = sine_runs["sol_a"]
    rc = main(
        ["verify", "--config", sine_runs["cfg_a"], "--out", str(tmp_path), sol, sol, sol]
    )
    assert rc == 1


def test_verify_rejects_grid_mismatch(sine_runs, tmp_path, capsys):
    cfg = write_cfg(
        tmp_path, {"preset": "sine-a4", "grid": {"n": 64, "nt": 50}}
    )
    rc = main(
        ["verify", "--config", cfg, "--out", str(tmp_path), sine_runs["sol_a"]]
    )
    assert rc == 1
    assert "does not match" in capsys.readouterr().err


def test_truncated_solution_exits_one(sine_runs, tmp_path):
    raw = (tmp_path / "trunc.mfgs",)
    data = open(sine_runs["sol_a"], "rb").read()
    raw[0].write_bytes(data[: len(data) // 2])
    rc = main(
        ["verify", "--config", sine_runs["cfg_a"], "--out", str(tmp_path), str(raw[0])]
    )
    assert rc == 1


def test_sweep_serial_and_parallel_byte_identical(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {
            "preset": "sine-a4",
            "grid": {"n": 16, "nt": 20},
            "sweep": {"c0_values": [0.0, 0.02, 0.05]},
        },
    )
    out1, out2 = tmp_path / "serial", tmp_path / "parallel"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2), "--jobs", "2"]) == 0
    body = (out1 / "sweep.csv").read_bytes()
    assert body == (out2 / "sweep.csv").read_bytes()
    lines = body.decode().splitlines()
    assert lines[0] == "c0,threshold_1_over_12M,converged,iters,dispersion"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and first[2] == "true"
    # the uncoupled row is an exact fixed point: two sweeps, no dispersion
    assert int(first[3]) <= 3


def test_sweep_empty_range_exits_one(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path, {"preset": "sine-a4", "sweep": {"c0_values": []}}
    )
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "sweep.c0_values" in capsys.readouterr().err


def test_isaacs_separable_game_exports_induced(tmp_path):
    fa, fb = np.array([0.5, -0.25, 0.1]), np.array([0.2, -0.4])
    ha, hb = np.array([0.1, 0.0, -0.2]), np.array([0.05, 0.3])
    game = DiscreteGame(
        f_table=(fa[:, None] + fb[None, :])[..., None],
        h_table=ha[:, None] + hb[None, :],
    )
    game_path = tmp_path / "game.json"
    game.save(game_path)
    cfg = write_cfg(
        tmp_path,
        {
            "isaacs": {
                "game_path": str(game_path),
                "p_min": -1.0,
                "p_max": 1.0,
                "p_count": 9,
                "export_induced": True,
            }
        },
    )
    out = tmp_path / "out"
    assert main(["isaacs", "--config", cfg, "--out", str(out)]) == 0
    report = check_schema(out / "isaacs_report.json", "isaacs_report")
    assert report["has_value"] is True
    assert report["max_gap"] <= 1e-12
    assert report["induced_exported"] is True
    induced = check_schema(out / "induced_hamiltonian.json", "induced_hamiltonian")
    assert induced["c0_certified"] is False
    assert len(induced["value"]) == 9
    table = (out / "isaacs_table.csv").read_text().splitlines()
    assert table[0] == "p1,lower,upper,gap"
    assert len(table) == 10


def test_isaacs_gap_game_reports_no_value(tmp_path):
    game = DiscreteGame(
        f_table=np.array([[[1.0], [-1.0]], [[-1.0], [1.0]]]),
        h_table=np.zeros((2, 2)),
    )
    game_path = tmp_path / "pennies.json"
    game.save(game_path)
    cfg = write_cfg(
        tmp_path,
        {"isaacs": {"game_path": str(game_path), "export_induced": True}},
    )
    out = tmp_path / "out"
    assert main(["isaacs", "--config", cfg, "--out", str(out)]) == 0
    report = check_schema(out / "isaacs_report.json", "isaacs_report")
    assert report["has_value"] is False
    assert report["induced_exported"] is False
    assert not (out / "induced_hamiltonian.json").exists()


def test_isaacs_missing_game_exits_one(tmp_path):
    cfg = write_cfg(
        tmp_path, {"isaacs": {"game_path": str(tmp_path / "nope.json")}}
    )
    assert main(["isaacs", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_usage_and_flag_validation(tmp_path):
    assert main([]) == 1
    assert main(["--help"]) == 0
    cfg = write_cfg(tmp_path, {"preset": "trivial"})
    assert main(["solve", "--config", cfg, "--seed", "-1"]) == 1
    assert main(["solve", "--config", cfg, "--jobs", "0"]) == 1


def test_log_env_fallback(monkeypatch, tmp_path):
    monkeypatch.setenv("MFGLAB_LOG", "bogus")
    cfg = write_cfg(
        tmp_path, {"preset": "trivial", "grid": {"n": 16, "nt": 20}}
    )
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
