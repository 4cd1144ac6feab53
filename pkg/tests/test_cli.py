import json
import math

import numpy as np
import pytest

from symprank import cli, fileio
from symprank import fock as fk
from symprank import gaussian as gs
from symprank import rank as rk
from symprank import simulate as sm

HEADER = "# symprank circuit\nformat_version 1\n"


def _circuit(tmp_path, n, *gates, name="c.txt"):
    p = tmp_path / name
    p.write_text(HEADER + f"n_modes {n}\n" + "".join(f"gate {g}\n" for g in gates))
    return str(p)


def _state(tmp_path, st, name="s.txt"):
    p = tmp_path / name
    p.write_text(fileio.dump_state(st))
    return str(p)


def _run(capsys, *argv):
    code = cli.main([*argv, "--json"])
    cap = capsys.readouterr()
    return code, (json.loads(cap.out) if cap.out else None), cap.err


# ---------------------------------------------------------------- rank

def test_rank_single_creation(tmp_path, capsys):
    code, rep, _ = _run(capsys, "rank", _circuit(tmp_path, 2, "create mode 0 power 1"))
    assert code == 0 and rep["rank"] == 1
    np.testing.assert_allclose(rep["symplectic_eigenvalues"], [3, 1], atol=1e-12)
    assert rep["doping_count"] == 1


def test_rank_empty_circuit(tmp_path, capsys):
    code, rep, _ = _run(capsys, "rank", _circuit(tmp_path, 2))
    assert code == 0 and rep["rank"] == 0


def test_rank_fock11_state(tmp_path, capsys):
    code, rep, _ = _run(capsys, "rank", _state(tmp_path, fk.fock((1, 1))))
    assert code == 0 and rep["rank"] == 2 and rep["input"] == "state"


def test_rank_text_report(tmp_path, capsys):
    assert cli.main(["rank", _state(tmp_path, fk.fock((2,)))]) == 0
    out = capsys.readouterr().out
    assert "rank = 1\n" in out and out.startswith("version = ")


def test_rank_tol_flag(tmp_path, capsys):
    # d - 1 is about 2e-4: above the default threshold, below 1e-2
    st = fk.FockState.from_dict(1, 3, {(0,): math.sqrt(1 - 1e-4), (3,): 1e-2})
    code, rep, _ = _run(capsys, "rank", _state(tmp_path, st))
    assert rep["rank"] == 1
    # the looser threshold calls it Gaussian, and the compression then reports the
    # weight it could not place in phi (x) vacuum
    code, _, err = _run(capsys, "rank", _state(tmp_path, st), "--tol", "1e-2")
    assert code == 3 and "residual 1.000e-04" in err


def test_rank_is_deterministic(tmp_path, capsys):
    path = _circuit(tmp_path, 2, "squeeze mode 1 xi 0.2", "create mode 0 power 1")
    assert cli.main(["rank", path]) == 0
    a = capsys.readouterr().out
    assert cli.main(["rank", path]) == 0
    assert capsys.readouterr().out == a


# ---------------------------------------------------------------- fidelity

def test_fidelity_k_equals_n(tmp_path, capsys):
    code, rep, _ = _run(capsys, "fidelity", _state(tmp_path, fk.fock((1, 1), 6)), "--k", "2")
    assert code == 0 and rep["fidelity"] >= 1 - 1e-6


def test_fidelity_vacuum(tmp_path, capsys):
    code, rep, _ = _run(capsys, "fidelity", _state(tmp_path, fk.vacuum(1, 4)), "--k", "0")
    assert rep["fidelity"] == pytest.approx(1.0)


def test_fidelity_fock1(tmp_path, capsys):
    code, rep, _ = _run(capsys, "fidelity", _state(tmp_path, fk.fock((1,), 30)), "--k", "0",
                        "--restarts", "3", "--seed", "2")
    assert code == 0 and rep["seed"] == 2
    assert rep["fidelity"] == pytest.approx(rk.f0_single_mode_fock1_grid(), abs=1e-4)


def test_fidelity_bad_k(tmp_path, capsys):
    code, _, err = _run(capsys, "fidelity", _state(tmp_path, fk.vacuum(1)), "--k", "3")
    assert code == 2 and "fidelity" in err


# ---------------------------------------------------------------- simulate

def test_simulate_vacuum_overlap(tmp_path, capsys):
    c = _circuit(tmp_path, 2)
    code, rep, _ = _run(capsys, "simulate", c, "--target", c)
    assert code == 0 and rep["estimate"] == pytest.approx(1.0)


def test_simulate_doped_overlap(tmp_path, capsys, rng):
    G0 = gs.random_gaussian_unitary(2, rng, 0.2, 0.2)
    T = gs.random_gaussian_unitary(2, rng, 0.2, 0.2)
    circ = sm.CircuitDesc(2, [fk.Gaussian(G0, (0, 1)), fk.Cubic(0.1, 0)])
    (tmp_path / "c.txt").write_text(fileio.dump_circuit(circ))
    (tmp_path / "t.txt").write_text(fileio.dump_circuit(sm.CircuitDesc(2, [fk.Gaussian(T, (0, 1))])))
    code, rep, _ = _run(capsys, "simulate", str(tmp_path / "c.txt"), "--target",
                        str(tmp_path / "t.txt"), "--eps", "1e-3")
    psi = sm.run_fock(circ, 28, 1e-6)
    oracle = abs(fk.overlap(fk.gaussian_state(T, 28, leak_budget=1e-6), psi)) ** 2
    assert code == 0 and abs(rep["estimate"] - oracle) <= 1e-3


def test_simulate_null_output(tmp_path, capsys):
    c = _circuit(tmp_path, 1, "annihilate mode 0 power 1")
    t = _circuit(tmp_path, 1, name="t.txt")
    code, rep, err = _run(capsys, "simulate", c, "--target", t)
    assert code == 4 and rep is None and "circuit output is null" in err
    pts = tmp_path / "p.txt"
    pts.write_text("0.1 0.2\n")
    code, _, err = _run(capsys, "simulate", c, "--heterodyne", str(pts))
    assert code == 4 and "circuit output is null" in err


def test_simulate_heterodyne(tmp_path, capsys):
    c = _circuit(tmp_path, 1, "create mode 0 power 1")
    pts = tmp_path / "p.txt"
    pts.write_text("0.3 0.4\n1.0 0.0\n")
    code, rep, _ = _run(capsys, "simulate", c, "--heterodyne", str(pts), "--samples", "20000")
    a = np.array([0.3 + 0.4j, 1.0])
    np.testing.assert_allclose(rep["density"], np.abs(a) ** 2 * np.exp(-np.abs(a) ** 2) / np.pi)
    assert rep["support"]["support"] <= rep["support"]["support_bound"]
    assert rep["mc_normalization"] == pytest.approx(1.0, abs=0.03)


# ---------------------------------------------------------------- bounds

def test_bounds_identical_inputs(capsys):
    code, rep, _ = _run(capsys, "bounds", "means", "--m1", "0.5,1", "--m2", "0.5,1", "--emax", "2")
    assert code == 0 and rep["bound_value"] == 0
    code, rep, _ = _run(capsys, "bounds", "cov", "--v1", "1 0 0 1", "--v2", "1 0 0 1", "--e2max", "2")
    assert rep["bound_value"] == 0


def test_bounds_tightness(capsys):
    code, rep, _ = _run(capsys, "bounds", "tightness", "--n", "2")
    assert code == 0 and rep["satisfied"] is True
    assert rep["values"]["dV_inf"] == pytest.approx(4.0)
    assert rep["values"]["trace_norm"] == pytest.approx(1.0)


def test_bounds_sweep_margins(capsys):
    code, rep, _ = _run(capsys, "bounds", "sweep", "--trials", "10", "--seed", "3")
    assert code == 0 and rep["violations"] == 0
    assert len(rep["margin.covariance"]) == 10
    assert min(rep["margin.td_lower_from_means"]) >= 0


def test_bounds_x4_default_cutoff(capsys):
    code, rep, _ = _run(capsys, "bounds", "x4")
    assert rep["cutoff"] == 60 and rep["min_eigenvalue"] > 0


def test_bounds_radius(tmp_path, capsys):
    code, rep, _ = _run(capsys, "bounds", "radius", _state(tmp_path, fk.fock((1,))))
    assert rep["radius"] == pytest.approx(0.25 * (2 / 1800) ** 4)
    code, _, err = _run(capsys, "bounds", "radius", _state(tmp_path, fk.vacuum(1)))
    assert code == 4 and "Gaussian" in err


def test_bounds_states(tmp_path, capsys, rng):
    a = _state(tmp_path, fk.random_state(1, 6, rng), "a.txt")
    b = _state(tmp_path, fk.random_state(1, 6, rng), "b.txt")
    code, rep, _ = _run(capsys, "bounds", "states", a, b)
    assert code == 0 and rep["satisfied"] is True


def test_bounds_perturbation(capsys):
    code, rep, _ = _run(capsys, "bounds", "perturbation", "--td", "0.01", "--E", "2",
                        "--kind", "covariance")
    assert rep["bound_value"] == pytest.approx(8.0) and rep["kind"] == "upper"


# ---------------------------------------------------------------- errors and file formats

def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text(HEADER + "n_modes 1\ngate warp mode 0\n")
    code, _, err = _run(capsys, "rank", str(p))
    assert code == 2 and "unknown gate kind" in err and "line 4" in err


def test_missing_file(capsys):
    code, _, err = _run(capsys, "rank", "/nonexistent/state.txt")
    assert code == 2 and "cannot read" in err


def test_leak_is_numerical_failure(tmp_path, capsys):
    c = _circuit(tmp_path, 1, "displace modes 0 beta 3 0")
    code, _, err = _run(capsys, "rank", c, "--cutoff", "4")
    assert code == 3 and "numerical failure" in err


def test_state_round_trip_is_byte_identical(rng):
    st = fk.random_state(2, 5, rng)
    text = fileio.dump_state(st)
    assert fileio.dump_state(fileio.load_state(text)) == text


def test_circuit_round_trip(rng):
    c = sm.random_doped_circuit(3, ["cubic", "create", "annihilate"], rng, max_power=2)
    c = sm.CircuitDesc(3, c.gates + (fk.Passive(np.eye(2)[::-1], (0, 2)), fk.Squeeze(0.1, 1),
                                     fk.Displace((0.1 - 0.2j,), (1,))))
    text = fileio.dump_circuit(c)
    assert fileio.dump_circuit(fileio.load_circuit(text)) == text


def test_unnormalized_state_rejected():
    text = fileio.dump_state(fk.fock((1,))).replace("1.0000000000000000e+00 0", "2.0000000000000000e+00 0")
    with pytest.raises(fileio.ParseError):
        fileio.load_state(text)
