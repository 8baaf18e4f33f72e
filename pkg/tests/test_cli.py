import json

import numpy as np
import pytest

from regschrod.cli import main, read_grid_csv
from regschrod.kernel import eval_regularized, make_params


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_kernel_matches_library(capsys):
    code, out, _ = run(capsys, "kernel", "--n", "1", "--eps", "1", "--x", "0", "--t", "0.0795775")
    assert code == 0
    _, _, vals = read_grid_csv(out)
    assert vals[0] == eval_regularized(np.zeros(1), 0.0795775, make_params(1.0, 1))


def test_kernel_limit_and_several_points(capsys):
    code, out, _ = run(capsys, "kernel", "--n", "2", "--eps", "0", "--x", "0.1,0.2", "--x", "1,0", "--t", "0.5")
    assert code == 0
    pts, times, vals = read_grid_csv(out)
    assert pts.shape == (2, 2) and np.all(times == 0.5)
    assert np.allclose(np.abs(vals), 1 / (4 * np.pi * 0.5))


def test_periodize_negative_time_is_zero(capsys):
    code, out, _ = run(capsys, "periodize", "--manifold", "torus", "--n", "2", "--eps", "1",
                       "--t", "-1", "--x", "0.1,0.2", "--x", "0.5,0.5")
    assert code == 0
    _, _, vals = read_grid_csv(out)
    assert np.all(vals == 0)


@pytest.mark.parametrize("argv", [
    ["kernel", "--bogus", "1"],
    ["frobnicate"],
    ["periodize", "--manifold", "torus", "--n", "1", "--eps", "-1", "--t", "1"],
    ["periodize", "--manifold", "cylinder", "--n", "2", "--t", "1"],
    ["kernel", "--n", "2", "--x", "1", "--t", "1"],
    ["verify", "--suite", "nonsense"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_config_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1,\n "oops": 3}')
    code, _, err = run(capsys, "solve", "--config", str(bad))
    assert code == 2 and "oops" in err
    broken = tmp_path / "broken.json"
    broken.write_text('{"n": 1,\n  }')
    code, _, err = run(capsys, "solve", "--config", str(broken))
    assert code == 2 and "line 2" in err


def test_truncation_failure_exits_1(capsys):
    code, _, _ = run(capsys, "periodize", "--n", "1", "--eps", "1e-9", "--tol", "1e-14",
                     "--t", "1e-3", "--x", "0.3")
    assert code == 1


def test_solve_round_trip_and_determinism(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "n": 2, "manifold": "torus", "spin": [1], "epsilon": 1.0, "grid": 8, "times": [0.0, 0.05],
        "initial": {"modes": [{"q": [1, 0], "c": [1.0, 0.5]}, {"q": [0, 2], "c": [0.0, -1.0]}]},
    }))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["solve", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["solve", "--config", str(cfg), "--out", str(out2)]) == 0
    raw = out1.read_bytes()
    assert raw == out2.read_bytes() and b"\r" not in raw
    pts, times, vals = read_grid_csv(raw.decode())
    assert pts.shape == (128, 2)
    from regschrod.cli import RunConfig, _initial_sampler
    from regschrod.semigroup import apply_spectral, make_grid
    rc = RunConfig.from_dict(json.loads(cfg.read_text()))
    spec = rc.manifold_spec()
    u0 = make_grid(spec, 8, _initial_sampler(rc, spec))
    u = apply_spectral(u0, 0.05, rc.params(2))
    assert np.array_equal(vals[times == 0.05], u.samples.reshape(-1))
    assert np.array_equal(vals[times == 0.0], u0.samples.reshape(-1))


def test_solve_kernel_method_matches_spectral(capsys, tmp_path):
    base = ["solve", "--n", "1", "--eps", "1", "--grid", "32", "--times", "0.1", "--spin", "1"]
    _, spectral, _ = run(capsys, *base, "--method", "spectral")
    _, conv, _ = run(capsys, *base, "--method", "kernel")
    a, b = read_grid_csv(spectral)[2], read_grid_csv(conv)[2]
    assert np.max(np.abs(a - b)) < 1e-8


def test_verify_report(capsys, tmp_path):
    cfg = tmp_path / "v.json"
    cfg.write_text(json.dumps({"seed": 3, "guenter": {"points": 4}}))
    code, out, _ = run(capsys, "verify", "--suite", "guenter", "--config", str(cfg))
    report = json.loads(out)
    assert code == (0 if report["pass"] else 1)
    assert report["seed"] == 3 and report["cases"]
    code2, out2, _ = run(capsys, "verify", "--suite", "guenter", "--config", str(cfg))
    assert out2 == out
    _, out3, _ = run(capsys, "verify", "--suite", "guenter", "--config", str(cfg), "--seed", "4")
    assert json.loads(out3)["seed"] == 4
