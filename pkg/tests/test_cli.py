import json

import numpy as np
import pytest

from shadowproj.cli import main
from shadowproj.paulis import WeightedPauliSum
from shadowproj.statevector import Statevector


@pytest.fixture
def workdir(tmp_path, capsys):
    """Prepared state and Hamiltonian files for pipeline commands."""
    state = tmp_path / "state.json"
    ham = tmp_path / "ham.json"
    assert main(["state", "gaussian", "--q", "4", "--out", str(state)]) == 0
    assert main(["model", "pairing", "--q", "4", "--geps", "1.0", "--g",
                 "1.0", "--out", str(ham)]) == 0
    capsys.readouterr()
    return tmp_path


def last_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_state_and_model_files(workdir):
    state = Statevector.from_json((workdir / "state.json").read_text())
    assert state.num_qubits == 4
    ham = WeightedPauliSum.from_json((workdir / "ham.json").read_text())
    assert len(ham.terms) == 17


def test_acquire_estimate_project(workdir, capsys):
    shadow = workdir / "shadow.txt"
    assert main(["acquire", "--state", str(workdir / "state.json"),
                 "--shots", "3000", "--seed", "2", "--out",
                 str(shadow)]) == 0
    capsys.readouterr()

    assert main(["estimate", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json")]) == 0
    est = last_json(capsys)
    assert est["shots"] == 3000
    assert -10 < est["estimate"] < 10

    assert main(["project", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json"), "--projector",
                 '{"type": "number", "n0": 2}']) == 0
    proj = last_json(capsys)
    assert set(proj) == {"sector", "numerator", "norm", "ratio"}
    assert proj["sector"] == "n0=2"

    assert main(["project", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json"), "--projector",
                 '{"type": "number"}', "--all-sectors"]) == 0
    sectors = last_json(capsys)
    assert [s["sector"] for s in sectors] == [f"n0={n}" for n in range(5)]
    assert sum(s["norm"] for s in sectors) == pytest.approx(1.0, abs=1e-9)


def test_derandomize_then_prescribed_estimate(workdir, capsys):
    plan = workdir / "plan.txt"
    # target the parity-enlarged set so projected estimation is covered too
    assert main(["derandomize", "--observables", str(workdir / "ham.json"),
                 "--projector", '{"type": "parity", "epsilon": 1}',
                 "--shots", "300", "--out", str(plan)]) == 0
    info = last_json(capsys)
    assert info["rounds"] == 300
    assert info["min_hits"] >= 1
    assert info["targets"] > 17

    shadow = workdir / "dshadow.txt"
    assert main(["acquire", "--state", str(workdir / "state.json"),
                 "--shots", "300", "--seed", "1", "--plan", str(plan),
                 "--out", str(shadow)]) == 0
    assert last_json(capsys)["prescribed"] is True

    assert main(["estimate", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json"), "--prescribed"]) == 0
    assert "estimate" in last_json(capsys)

    assert main(["project", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json"), "--projector",
                 '{"type": "parity", "epsilon": 1}', "--prescribed"]) == 0
    proj = last_json(capsys)
    assert proj["sector"] == "parity=+1"
    assert 0.0 < proj["norm"] <= 1.0 + 1e-9


def test_counts_command(workdir, capsys):
    assert main(["counts", "--state", str(workdir / "state.json"),
                 "--observables", str(workdir / "ham.json"),
                 "--shots-per-group", "50", "--seed", "3",
                 "--grouping", "rlf"]) == 0
    out = last_json(capsys)
    assert out["groups"] * out["shots_per_group"] == out["total_measurements"]
    assert main(["counts", "--state", str(workdir / "state.json"),
                 "--observables", str(workdir / "ham.json"),
                 "--shots-per-group", "50", "--seed", "3",
                 "--weighted-allocation"]) == 0
    assert "estimate" in last_json(capsys)


def test_estimate_median_groups_flag(workdir, capsys):
    shadow = workdir / "mshadow.txt"
    main(["acquire", "--state", str(workdir / "state.json"), "--shots",
          "900", "--seed", "8", "--out", str(shadow)])
    capsys.readouterr()
    assert main(["estimate", "--shadow", str(shadow), "--observable",
                 str(workdir / "ham.json"), "--median-groups", "5"]) == 0
    assert "estimate" in last_json(capsys)


def test_state_squared_gaussian_flag(workdir, capsys):
    out = workdir / "sq.json"
    assert main(["state", "gaussian", "--q", "3", "--squared",
                 "--out", str(out)]) == 0
    state = Statevector.from_json(out.read_text())
    p = np.abs(state.amplitudes) ** 2
    assert np.allclose(p, p[::-1], atol=1e-12)


def test_reconstruct_command(workdir, capsys):
    shadow = workdir / "shadow.txt"
    main(["acquire", "--state", str(workdir / "state.json"), "--shots",
          "500", "--seed", "4", "--out", str(shadow)])
    rho_file = workdir / "rho.json"
    assert main(["reconstruct", "--shadow", str(shadow), "--out",
                 str(rho_file)]) == 0
    capsys.readouterr()
    rho = np.array([[complex(re, im) for re, im in row]
                    for row in json.loads(rho_file.read_text())])
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    assert main(["reconstruct", "--shadow", str(shadow), "--projector",
                 '{"type": "parity", "epsilon": 1}', "--out",
                 str(rho_file)]) == 0


def test_experiment_command_and_config_error(workdir, capsys):
    cfg = workdir / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "fig3", "shots": [100, 300],
                               "repeats": 3, "seed": 1}))
    out = workdir / "results.csv"
    assert main(["experiment", "--config", str(cfg), "--out",
                 str(out)]) == 0
    capsys.readouterr()
    header = out.read_text().splitlines()[0]
    assert header == "method,shots,repeat_count,mean,stddev,oracle,seed"
    assert (workdir / "results.config.json").exists()

    bad = workdir / "bad.json"
    bad.write_text(json.dumps({"experiment": "nope"}))
    assert main(["experiment", "--config", str(bad), "--out",
                 str(out)]) == 2


def test_error_exit_code_on_bad_input(workdir, capsys):
    assert main(["estimate", "--shadow", "/does/not/exist",
                 "--observable", str(workdir / "ham.json")]) == 1
