"""Acceptance criteria 1-13.

Each criterion is a function returning (ok, detail). The pytest wrapper records
one PASS/FAIL line per criterion (printed in the terminal summary by conftest)
and asserts. Running this file directly prints the same lines.
"""
from __future__ import annotations

import io
import math
import sys
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from symprank import bounds as bd
from symprank import cli, fileio
from symprank import fock as fk
from symprank import gaussian as gs
from symprank import rank as rk
from symprank import simulate as sm
from symprank import symplectic as sp
from symprank.config import DEFAULT

RESULTS: dict[int, str] = {}


def _mild_gaussian(n, rng):
    # squeezing <= 0.2 and displacement <= 0.3 keep G0 (phi (x) vac) inside cutoff 16
    return gs.random_gaussian_unitary(n, rng, max_squeeze=0.2, max_disp=0.3)


def _compressible(rng, n, k, max_photons=2, cutoff=16):
    phi = fk.random_state(k, max_photons, rng)
    G0 = _mild_gaussian(n, rng)
    full = fk.embed_vacuum(phi.with_cutoff(cutoff), n - k)
    return phi, G0, fk.apply_gaussian(full, G0, leak_budget=1e-4)


# ---------------------------------------------------------------- 1

def criterion_1():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_rec = worst_symp = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        V = sp.random_covariance(n, rng, max_squeeze=1.0, max_thermal=3.0)
        w = sp.williamson(V)
        worst_rec = max(worst_rec, float(np.max(np.abs(w.reconstruct() - V))))
        worst_symp = max(worst_symp, sp.symplectic_defect(w.S))
    dt = time.perf_counter() - t0
    ok = worst_rec < 1e-7 and worst_symp < 1e-8 and dt < 10
    return ok, f"max|SDS^T-V|={worst_rec:.2e} max|SOS^T-O|={worst_symp:.2e} time={dt:.2f}s"


# ---------------------------------------------------------------- 2

def criterion_2():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        p = gs.GaussianParams(U=sp.random_unitary(n, rng), xi=rng.uniform(0, 1.5, n),
                              beta=rng.normal(size=n) + 1j * rng.normal(size=n),
                              V=np.eye(n))
        d = sp.symplectic_eigenvalues(gs.state_of(gs.params_to_desc(p)).V)
        worst = max(worst, float(np.max(np.abs(d - 1.0))))
    return worst <= 1e-7, f"max|d-1|={worst:.2e}"


# ---------------------------------------------------------------- 3

def _cli_rank(st, tmp):
    path = tmp / "state.txt"
    path.write_text(fileio.dump_state(st))
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(["rank", str(path)])
    assert code == 0
    for line in buf.getvalue().splitlines():
        if line.startswith("rank = "):
            return int(line.split("=")[1])
    raise AssertionError("rank line missing")


def criterion_3(tmp):
    got = {"|2>": _cli_rank(fk.fock([2]), tmp), "|1>|1>": _cli_rank(fk.fock([1, 1]), tmp),
           "vac": _cli_rank(fk.vacuum(1), tmp)}
    want = {"|2>": 1, "|1>|1>": 2, "vac": 0}
    return got == want, " ".join(f"{k}={v}" for k, v in got.items())


# ---------------------------------------------------------------- 4

def criterion_4():
    rng = np.random.default_rng(104)
    t0 = time.perf_counter()
    worst_fid, rank_miss, photon_bad = 1.0, 0, 0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 3))
        phi, _, psi = _compressible(rng, n, k, cutoff=16)
        psi = psi.normalized()
        want = rk.symplectic_rank_pure(phi)
        comp = rk.compress(psi, leak_budget=1e-4)
        rank_miss += comp.rank != want
        rec = comp.reconstruct(leak_budget=1e-4).with_cutoff(psi.cutoff)
        worst_fid = min(worst_fid, abs(fk.overlap(rec, psi)) ** 2)
        d = comp.diagnostics
        photon_bad += d["phi_photons"] > d["psi_photons"] + 1e-6
    dt = time.perf_counter() - t0
    ok = rank_miss == 0 and worst_fid >= 1 - 1e-6 and photon_bad == 0 and dt < 60
    return ok, (f"rank misses={rank_miss} min fidelity={worst_fid:.10f} "
                f"N(phi)>N(psi) cases={photon_bad} time={dt:.1f}s")


# ---------------------------------------------------------------- 5

def criterion_5():
    rng = np.random.default_rng(105)
    viol, steps = 0, 0
    for i in range(200):
        if i % 2 == 0:
            st = fk.fock([int(rng.integers(1, 3)), 0], cutoff=28)
        else:
            st = fk.fock([1, 1], cutoff=28)
        # truncation noise must stay below the rank tolerance 1e-6 on the eigenvalues,
        # so the walk runs at cutoff 28 with leak budget 1e-8
        rep = rk.monotonicity_suite(st, seed=i, n_steps=3, max_modes=3, leak_budget=1e-8)
        viol += len(rep.violations)
        steps += len(rep.steps)
    return viol == 0, f"sequences=200 steps={steps} violations={viol}"


# ---------------------------------------------------------------- 6

def criterion_6():
    rng = np.random.default_rng(106)
    worst_res, worst_fid = 0.0, 1.0
    for i in range(50):
        k = 1 + i % 2
        G = gs.random_gaussian_unitary(4, rng, max_squeeze=0.4, max_disp=0.4)
        b = gs.block_decompose(G, k)
        R = b.recompose()
        worst_res = max(worst_res, float(np.max(np.abs(R.S - G.S))), float(np.max(np.abs(R.r - G.r))))
        out = fk.gaussian_state(b.G2k, 16, leak_budget=1e-6)
        proj = fk.project_vacuum(out, range(k)).normalized()
        worst_fid = min(worst_fid, abs(proj.vec[0]) ** 2)
    return worst_res < 1e-7 and worst_fid >= 1 - 1e-6, \
        f"max residual={worst_res:.2e} min vacuum fidelity={worst_fid:.10f}"


# ---------------------------------------------------------------- 7

def criterion_7():
    rng = np.random.default_rng(107)
    t0 = time.perf_counter()
    worst = {1e-2: 0.0, 1e-3: 0.0}
    for _ in range(30):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, min(n, 2) + 1))
        phi, G, psi = _compressible(rng, n, k, cutoff=16 if n == 3 else 22)
        T = _mild_gaussian(n, rng)
        tgt = fk.gaussian_state(T, psi.cutoff, leak_budget=1e-4)
        oracle = abs(fk.overlap(tgt, psi)) ** 2
        for eps in worst:
            est = sm.overlap_estimate(T, G, phi, eps).estimate
            worst[eps] = max(worst[eps], abs(est - oracle))
    dt = time.perf_counter() - t0
    ok = all(v <= eps for eps, v in worst.items()) and dt < 120
    return ok, " ".join(f"eps={e:g}: max err={v:.2e}" for e, v in worst.items()) + f" time={dt:.1f}s"


# ---------------------------------------------------------------- 8

def criterion_8():
    rng = np.random.default_rng(108)
    over = 0
    for _ in range(30):
        s = int(rng.integers(1, 4))
        n = int(rng.integers(s, 4))   # one core mode per doping
        while True:
            kinds = rng.choice(["create", "annihilate"], size=s)
            c = sm.random_doped_circuit(n, list(kinds), rng, max_power=2)
            try:
                ss = sm.photadd_strong_sim(c)
                break
            except (sm.NullOutputError, sm.CutoffInfeasibleError):
                continue
        r = ss.support_report
        over += r["support"] > r["support_bound"]
    mc_err = 0.0
    for n in (1, 2):
        c = sm.random_doped_circuit(n, ["create", "annihilate"][:n], rng, max_power=1)
        ss = sm.photadd_strong_sim(c)
        mean, _ = ss.mc_normalization(100_000, seed=n)
        mc_err = max(mc_err, abs(mean - 1.0))
    return over == 0 and mc_err <= 0.01, f"support over bound={over}/30 MC |Z-1|={mc_err:.4f}"


# ---------------------------------------------------------------- 9

def criterion_9():
    worst = 0.0
    for gamma in (0.0, 0.05, 0.1):
        for alpha in (0.0, 0.5):
            cs = sm.cubic_coherent_superposition(alpha, gamma, 1e-3, cutoff=30)
            oracle = sm.cubic_target(alpha, gamma, 30)
            err = float(np.linalg.norm(cs.to_fock(30).vec - oracle.vec))
            worst = max(worst, err)
    return worst <= 1e-3, f"max 2-norm error={worst:.2e} (eps=1e-3)"


# ---------------------------------------------------------------- 10

def criterion_10():
    reports = [r for pair in bd.random_pair_sweep(200, seed=110) for r in pair]
    worst = {}
    for r in reports:
        worst[r.bound_name] = min(worst.get(r.bound_name, math.inf), r.margin)
    tight = [bd.tightness_values(n) for n in (2, 3, 5)]
    exact = all(abs(t["dV_inf"] - 2 * t["n"]) <= 1e-9 and abs(t["trace_norm"] - 2 / t["n"]) <= 1e-9
                for t in tight)
    ok = min(worst.values()) >= -1e-9 and exact
    return ok, (" ".join(f"{k}:{v:.2e}" for k, v in worst.items())
                + f" (min margins over 200 pairs) tightness exact={exact}")


# ---------------------------------------------------------------- 11

def criterion_11():
    target = 3 + 6 * math.sqrt(2) + 2 * math.sqrt(6)
    chk = bd.x4_energy_check(60)
    ok = abs(bd.X4_CONSTANT - target) <= 1e-12 and chk["min_eigenvalue"] > 0
    return ok, f"constant={bd.X4_CONSTANT:.15f} interior min eig={chk['min_eigenvalue']:.4f}"


# ---------------------------------------------------------------- 12

def criterion_12():
    c = rk.conversion_bounds([2], [1, 1])
    ok = c.distill_upper == 0.5 and c.cost_lower == 1 and c.verdict == "irreversible"
    ratios = [rk.conversion_bounds([n], [1] * n).distill_upper for n in range(2, 7)]
    ok &= all(abs(r - 1 / n) < 1e-15 for r, n in zip(ratios, range(2, 7)))
    return ok, (f"distill_upper={c.distill_upper} cost_lower={c.cost_lower} verdict={c.verdict} "
                f"ratios={[round(r, 4) for r in ratios]}")


# ---------------------------------------------------------------- 13

def criterion_13():
    rng = np.random.default_rng(113)
    worst = 1.0
    for _ in range(20):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(1, n))
        _, _, psi = _compressible(rng, n, k, cutoff=12)
        psi = psi.normalized()
        s = rk.symplectic_rank_pure(psi)
        # the Williamson core has a longer photon tail than psi: give the core output room
        cfg = rk.OptimizerConfig(restarts=1, core_cutoff=18)
        for kk in range(s, n + 1):
            worst = min(worst, rk.symplectic_fidelity(psi, kk, cfg).value)
    f0 = rk.symplectic_fidelity(fk.fock([1], cutoff=30), 0, rk.OptimizerConfig(restarts=3)).value
    grid = rk.f0_single_mode_fock1_grid()
    ok = worst >= 1 - 1e-6 and abs(f0 - grid) <= 1e-4
    return ok, f"min f_k (k>=rank)={worst:.10f} f0(|1>)={f0:.8f} grid oracle={grid:.8f}"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
            11: criterion_11, 12: criterion_12, 13: criterion_13}


def _run(i, tmp):
    fn = CRITERIA[i]
    ok, detail = fn(tmp) if i == 3 else fn()
    line = f"criterion {i:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[i] = line
    print(line)
    return ok, line


@pytest.mark.parametrize("i", sorted(CRITERIA))
def test_criterion(i, tmp_path):
    ok, line = _run(i, tmp_path)
    assert ok, line


if __name__ == "__main__":
    import pathlib
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        res = [_run(i, pathlib.Path(d))[0] for i in sorted(CRITERIA)]
    sys.exit(0 if all(res) else 1)
