"""Command-line interface.

    symprank rank FILE                 state or circuit file
    symprank fidelity STATE --k K
    symprank simulate CIRCUIT (--target GAUSSIAN_CIRCUIT | --heterodyne POINTS)
    symprank bounds SUBCOMMAND ...

Reports are `key = value` lines in a fixed order (or a JSON object with --json).
Exit codes: 0 ok, 2 parse/validation, 3 numerical failure, 4 domain error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import bounds as bd
from . import fileio
from . import fock as fk
from . import rank as rk
from . import simulate as sm
from . import symplectic as sp
from .config import load_tolerances
from .errors import DomainError, NumericalError, ValidationError

EXIT_OK, EXIT_PARSE, EXIT_NUMERICAL, EXIT_DOMAIN = 0, 2, 3, 4


# ---------------------------------------------------------------- report formatting

def _scalar(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return fileio.fmt(v)
    if v is None:
        return "none"
    return str(v)


def _flatten(d: dict, prefix: str = ""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def format_text(report: dict) -> str:
    lines = []
    for k, v in _flatten(report):
        if isinstance(v, (list, tuple, np.ndarray)):
            v = " ".join(_scalar(x) for x in np.ravel(np.asarray(v, dtype=object)))
        else:
            v = _scalar(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _plain(v):
    """Plain Python values for json; non-finite floats become strings."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in (v.tolist() if isinstance(v, np.ndarray) else v)]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else _scalar(v)
    return v if v is None or isinstance(v, str) else str(v)


def format_json(report: dict) -> str:
    return json.dumps(_plain(report)) + "\n"


# ---------------------------------------------------------------- helpers

def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise fileio.ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _floats(s: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in s.replace(",", " ").split()])
    except ValueError as exc:
        raise fileio.ParseError(f"expected a list of numbers, got {s!r}") from exc


def _square(s: str, name: str) -> np.ndarray:
    v = _floats(s)
    k = int(round(math.sqrt(v.size)))
    if k * k != v.size:
        raise fileio.ParseError(f"{name} needs a square number of entries (row-major)")
    return v.reshape(k, k)


def _cutoff(args, default: int) -> int:
    return default if args.cutoff is None else args.cutoff


def _load_input(path: str, args, tol):
    """FockState from a state file, or the brute-force output of a circuit file."""
    text = _read(path)
    kind = fileio.detect_kind(text)
    if kind == "state":
        return fileio.load_state(text, tol.norm).normalized(), None
    c = fileio.load_circuit(text)
    return sm.run_fock(c, _cutoff(args, 16), args.leak_budget), c


# ---------------------------------------------------------------- commands

def cmd_rank(args, tol) -> dict:
    st, circ = _load_input(args.input, args, tol)
    mom = fk.moments(st)
    d = np.sort(sp.symplectic_eigenvalues(mom.V, tol))[::-1]
    rank = int(np.sum(d > 1.0 + tol.rank))
    comp = rk.compress(st, tol, args.leak_budget)
    out = {"input": "circuit" if circ is not None else "state", "n_modes": st.n_modes,
           "cutoff": st.cutoff, "rank": rank, "symplectic_eigenvalues": d.tolist(),
           "compression": {"rank": comp.rank, "residual": comp.residual,
                           "phi_photons": comp.diagnostics["phi_photons"],
                           "psi_photons": comp.diagnostics["psi_photons"],
                           "leak": comp.diagnostics["leak"]}}
    if circ is not None:
        out["doping_count"] = circ.s
        out["truncation_leak"] = st.leak
    return out


def cmd_fidelity(args, tol) -> dict:
    st, _ = _load_input(args.input, args, tol)
    cfg = rk.OptimizerConfig(restarts=args.restarts, seed=args.seed, core_cutoff=args.core_cutoff)
    res = rk.symplectic_fidelity(st, args.k, cfg, tol)
    return {"n_modes": st.n_modes, "k": args.k, "fidelity": res.value, "converged": res.converged,
            "restart_values": [float(v) for v in res.restart_values],
            "warning": res.warning or "none"}


def cmd_simulate(args, tol) -> dict:
    c = fileio.load_circuit(_read(args.circuit))
    out = {"n_modes": c.n_modes, "doping_count": c.s}
    if args.target:
        tgt = fileio.gaussian_of_circuit(fileio.load_circuit(_read(args.target)))
        if tgt.n_modes != c.n_modes:
            raise ValidationError("target and circuit have different mode counts")
        comp = sm.doped_compress(c, tol)
        phi = comp.core_state(args.core_cutoff, args.leak_budget)
        rep = sm.overlap_estimate(tgt, comp.G, phi, args.eps)
        out.update({"mode": "overlap", "estimate": rep.estimate, "eps": rep.eps,
                    "core_modes": comp.n_core, "mean_photons": rep.mean_photons,
                    "n_truncation": rep.n_truncation, "n_used": rep.n_used,
                    "basis_size": rep.basis_size, "core_leak": phi.leak})
        return out
    pts = fileio.load_points(_read(args.heterodyne), c.n_modes)
    ss = sm.photadd_strong_sim(c, None, args.leak_budget)
    mean, err = ss.mc_normalization(args.samples, args.seed)
    out.update({"mode": "heterodyne", "support": ss.support_report, "normalizer": ss.normalizer,
                "mc_normalization": mean, "mc_stderr": err, "mc_samples": args.samples,
                "density": ss.density(pts).tolist()})
    return out


def _report(r: bd.BoundReport) -> dict:
    d = {"bound_name": r.bound_name, "kind": r.kind, "bound_value": r.bound_value}
    if r.oracle_value is not None:
        d.update({"oracle_value": r.oracle_value, "satisfied": r.satisfied, "margin": r.margin})
    d["inputs"] = r.inputs
    return d


def cmd_bounds(args, tol) -> dict:
    sub = args.sub
    if sub == "means":
        m1, m2 = _floats(args.m1), _floats(args.m2)
        if m1.shape != m2.shape:
            raise ValidationError("m1 and m2 must have the same length")
        return _report(bd.BoundReport("td_lower_from_means", {"Emax": args.emax},
                                      bd.td_lower_from_means(m1, m2, args.emax)))
    if sub == "cov":
        V1, V2 = _square(args.v1, "v1"), _square(args.v2, "v2")
        if V1.shape != V2.shape:
            raise ValidationError("v1 and v2 must have the same shape")
        return _report(bd.BoundReport("td_lower_from_cov", {"E2max": args.e2max},
                                      bd.td_lower_from_cov(V1, V2, args.e2max)))
    if sub == "perturbation":
        return _report(bd.BoundReport(args.kind, {"td": args.td, "E": args.E},
                                      bd.moment_perturbation(args.td, args.E, args.kind), kind="upper"))
    if sub == "tv-mean":
        return _report(bd.BoundReport("tv_lower_mean", {"M2max": args.m2max},
                                      bd.tv_lower_mean(_floats(args.mu_p), _floats(args.mu_q), args.m2max)))
    if sub == "tv-cov":
        return _report(bd.BoundReport("tv_lower_cov", {"M4max": args.m4max},
                                      bd.tv_lower_cov(_square(args.vp, "vp"), _square(args.vq, "vq"),
                                                      args.m4max)))
    if sub == "radius":
        st = fileio.load_state(_read(args.state), tol.norm).normalized()
        return bd.robustness_radius(st, tol)
    if sub == "x4":
        return bd.x4_energy_check(_cutoff(args, 60))
    if sub == "tightness":
        v = bd.tightness_values(args.n)
        lo = bd.BoundReport("td_lower_from_cov", {"n": args.n},
                            bd.td_lower_from_cov(np.eye(2) * (1 + 2 * args.n), np.eye(2), v["E2"]),
                            v["trace_norm"], "lower", tol=tol.bound)
        up = bd.BoundReport("covariance", {"n": args.n},
                            bd.moment_perturbation(v["trace_norm"], v["sqrt_E2"], "covariance"),
                            v["dV_inf"], "upper", tol=tol.bound)
        return {"values": v, "lower": _report(lo), "upper": _report(up),
                "satisfied": bool(lo.satisfied and up.satisfied)}
    if sub == "states":
        a = fileio.load_state(_read(args.a), tol.norm)
        b = fileio.load_state(_read(args.b), tol.norm)
        c = max(a.cutoff, b.cutoff)
        reps = bd.pure_pair_reports(a.with_cutoff(c), b.with_cutoff(c), tol)
        return {r.bound_name: _report(r) for r in reps} | {"satisfied": all(r.satisfied for r in reps)}
    if sub == "sweep":
        sw = bd.random_pair_sweep(args.trials, args.seed, 1, _cutoff(args, 12), tol=tol)
        names = [r.bound_name for r in sw[0]]
        out = {"trials": args.trials,
               "violations": int(sum(not r.satisfied for reps in sw for r in reps))}
        for j, name in enumerate(names):
            out[f"margin.{name}"] = [reps[j].margin for reps in sw]
        return out
    raise ValidationError(f"unknown bounds subcommand {sub!r}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="rank threshold: eigenvalues above 1+tol count (default from config)")
    common.add_argument("--cutoff", type=int, default=None,
                        help="Fock cutoff (circuit inputs: 16, bounds x4: 60, bounds sweep: 12)")
    common.add_argument("--leak-budget", type=float, default=1e-8, dest="leak_budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=8)
    common.add_argument("--json", action="store_true", help="emit a JSON object")
    common.add_argument("--config", default=None, help="tolerance JSON (else $SYMPRANK_CONFIG)")

    p = argparse.ArgumentParser(prog="symprank", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"symprank {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rank", parents=[common], help="symplectic rank and compression summary")
    r.add_argument("input")

    f = sub.add_parser("fidelity", parents=[common], help="symplectic fidelity f_k")
    f.add_argument("input")
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--core-cutoff", type=int, default=None, dest="core_cutoff")

    s = sub.add_parser("simulate", parents=[common], help="overlap or heterodyne density")
    s.add_argument("circuit")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--target", help="circuit file with Gaussian gates only")
    g.add_argument("--heterodyne", help="points file: one line of (re, im) pairs per point")
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--core-cutoff", type=int, default=30, dest="core_cutoff")
    s.add_argument("--samples", type=int, default=100_000)

    b = sub.add_parser("bounds", help="distance bounds")
    bs = b.add_subparsers(dest="sub", required=True)
    x = bs.add_parser("means", parents=[common]); x.add_argument("--m1", required=True)
    x.add_argument("--m2", required=True); x.add_argument("--emax", type=float, required=True)
    x = bs.add_parser("cov", parents=[common]); x.add_argument("--v1", required=True)
    x.add_argument("--v2", required=True); x.add_argument("--e2max", type=float, required=True)
    x = bs.add_parser("perturbation", parents=[common]); x.add_argument("--td", type=float, required=True)
    x.add_argument("--E", type=float, required=True)
    x.add_argument("--kind", choices=bd.PERTURBATION_KINDS, required=True)
    x = bs.add_parser("tv-mean", parents=[common]); x.add_argument("--mu-p", required=True, dest="mu_p")
    x.add_argument("--mu-q", required=True, dest="mu_q"); x.add_argument("--m2max", type=float, required=True)
    x = bs.add_parser("tv-cov", parents=[common]); x.add_argument("--vp", required=True)
    x.add_argument("--vq", required=True); x.add_argument("--m4max", type=float, required=True)
    x = bs.add_parser("radius", parents=[common]); x.add_argument("state")
    x = bs.add_parser("x4", parents=[common])
    x = bs.add_parser("tightness", parents=[common]); x.add_argument("--n", type=int, required=True)
    x = bs.add_parser("states", parents=[common]); x.add_argument("a"); x.add_argument("b")
    x = bs.add_parser("sweep", parents=[common]); x.add_argument("--trials", type=int, default=200)
    return p


COMMANDS = {"rank": cmd_rank, "fidelity": cmd_fidelity, "simulate": cmd_simulate, "bounds": cmd_bounds}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    stage = args.command + (f" {args.sub}" if args.command == "bounds" else "")
    try:
        tol = load_tolerances(args.config)
        if args.tol is not None:
            tol = tol.with_(rank=args.tol)
        body = COMMANDS[args.command](args, tol)
    except ValidationError as exc:
        print(f"symprank {stage}: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"symprank {stage}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"symprank {stage}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as exc:   # malformed config and similar
        print(f"symprank {stage}: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = {"version": __version__, "command": stage, "seed": args.seed,
              "tolerances": tol.as_dict()} | body
    sys.stdout.write(format_json(report) if args.json else format_text(report))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
