"""Closed-form distance bounds and their Fock-backend oracles.

Every distance here is the full trace norm ||rho - sigma||_1 (twice the trace
distance), resp. the full L1 norm ||p - q||_1 for distributions.

Lower bounds on ||rho - sigma||_1:
  ||dm||^2 / (16 max Tr[E rho])            first moments
  ||dV||_inf^2 / (1549 max Tr[E^2 rho])    covariance matrices
Upper bounds given td = ||rho - sigma||_1:
  ||dm||           <= 4 sqrt(E td)          E bounds Tr[E rho]
  ||dV||_inf       <= 40 E sqrt(td)         E^2 bounds Tr[E^2 rho]
  max |d nu_i|     <= 640 E^2 sqrt(td)      same E
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fock as fk
from . import gaussian as gs
from . import symplectic as sp
from .config import DEFAULT, Tolerances
from .errors import DomainError, ValidationError

X4_CONSTANT = 3.0 + 6.0 * math.sqrt(2.0) + 2.0 * math.sqrt(6.0)
X4_INTERIOR_MARGIN = 20


@dataclass
class BoundReport:
    """kind == "lower": the oracle distance must be >= bound; "upper": the measured
    quantity must be <= bound. margin > 0 means slack in the right direction."""
    bound_name: str
    inputs: dict
    bound_value: float
    oracle_value: float | None = None
    kind: str = "lower"
    satisfied: bool | None = None
    margin: float | None = None
    tol: float = DEFAULT.bound
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.oracle_value is not None:
            if self.kind == "lower":
                self.margin = float(self.oracle_value - self.bound_value)
            else:
                self.margin = float(self.bound_value - self.oracle_value)
            self.satisfied = bool(self.margin >= -self.tol)

    def as_dict(self) -> dict:
        return asdict(self)


def _positive(x, name):
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ValidationError(f"{name} must be positive and finite, got {x}")
    return x


def _op_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


# ---------------------------------------------------------------- trace-distance lower bounds

def td_lower_from_means(m1, m2, Emax: float) -> float:
    Emax = _positive(Emax, "Emax")
    d = np.asarray(m1, dtype=float) - np.asarray(m2, dtype=float)
    return float(d @ d) / (16.0 * Emax)


def td_lower_from_cov(V1, V2, E2max: float) -> float:
    E2max = _positive(E2max, "E2max")
    return _op_norm(np.asarray(V1, dtype=float) - np.asarray(V2, dtype=float)) ** 2 / (1549.0 * E2max)


# ---------------------------------------------------------------- perturbation bounds

PERTURBATION_KINDS = ("first_moment", "covariance", "symplectic_eigs")


def moment_perturbation(td: float, E: float, kind: str) -> float:
    """Upper bound on the moment change given td = ||rho - sigma||_1 in [0, 2].

    first_moment: E bounds the mean energy. covariance, symplectic_eigs: E^2 bounds
    the second moment of the energy.
    """
    td = float(td)
    if not 0.0 <= td <= 2.0:
        raise ValidationError(f"td = ||rho - sigma||_1 must lie in [0, 2], got {td}")
    E = _positive(E, "E")
    if kind == "first_moment":
        return 4.0 * math.sqrt(E * td)
    if kind == "covariance":
        return 40.0 * E * math.sqrt(td)
    if kind == "symplectic_eigs":
        return 640.0 * E ** 2 * math.sqrt(td)
    raise ValidationError(f"kind must be one of {PERTURBATION_KINDS}")


def condition_number_bound(E2: float) -> float:
    """K(V) <= 16 Tr[E^2 rho]."""
    return 16.0 * _positive(E2, "E2")


# ---------------------------------------------------------------- robustness radius

def robustness_radius(st: fk.FockState, tol: Tolerances = DEFAULT) -> dict:
    """(1/4) ((nu - 1)/(800 E^2))^4 with nu the smallest symplectic eigenvalue > 1
    and E = sqrt(Tr[E^2 psi])."""
    if isinstance(st, fk.DensityOp):
        raise DomainError("robustness radius is defined for pure states")
    mom = fk.moments(st)
    d = sp.symplectic_eigenvalues(mom.V, tol)
    above = d[d > 1.0 + tol.rank]
    if above.size == 0:
        raise DomainError("state is Gaussian (no symplectic eigenvalue above 1): radius undefined")
    nu = float(above.min())
    E2 = fk.energy_moments(st)["energy2"]
    radius = 0.25 * ((nu - 1.0) / (800.0 * E2)) ** 4
    return {"radius": radius, "nu": nu, "E2": E2, "E": math.sqrt(E2), "rank": int(above.size)}


# ---------------------------------------------------------------- x^4 <= alpha E^2

def x4_matrix(cutoff: int, pad: int = 4) -> np.ndarray:
    """Single-mode x^4 on {0..cutoff}, computed on a padded space so every kept
    entry is exact."""
    x, _ = fk.quadratures(1, cutoff + pad, 0)
    x = x.toarray().real
    x4 = np.linalg.matrix_power(x, 4)
    return x4[:cutoff + 1, :cutoff + 1]


def diag_dominance_f(n: int) -> float:
    """f(n) = sum_j |<j|x^4|n>| / (n + 1/2)^2."""
    col = x4_matrix(n + 4)[:, n]
    return float(np.sum(np.abs(col)) / (n + 0.5) ** 2)


def diag_dominance_f_closed(n: int) -> float:
    s = math.sqrt
    terms = (s(max(n * (n - 1) * (n - 2) * (n - 3), 0)) + (4 * n - 2) * s(max(n * (n - 1), 0))
             + 3 * (n + 1) ** 2 + (4 * n + 6) * s((n + 1) * (n + 2)) + 3 * n ** 2
             + s((n + 1) * (n + 2) * (n + 3) * (n + 4)))
    return terms / (4 * (n + 0.5) ** 2)


def x4_energy_check(cutoff: int = 60, interior: int | None = None) -> dict:
    """Minimum eigenvalue of alpha E^2 - x^4 on the interior block of the truncation."""
    if cutoff < 10:
        raise ValidationError("cutoff must be at least 10")
    interior = cutoff - X4_INTERIOR_MARGIN if interior is None else interior
    if interior < 1:
        interior = cutoff + 1
    E = np.arange(cutoff + 1) + 0.5
    M = X4_CONSTANT * np.diag(E ** 2) - x4_matrix(cutoff)
    block = M[:interior, :interior]
    fs = [diag_dominance_f(n) for n in range(0, cutoff + 1)]
    return {"constant": X4_CONSTANT, "cutoff": cutoff, "interior": int(block.shape[0]),
            "min_eigenvalue": float(np.linalg.eigvalsh(block)[0]),
            "min_eigenvalue_full": float(np.linalg.eigvalsh(M)[0]),
            "f_sup": float(max(fs)), "f_argmax": int(np.argmax(fs))}


# ---------------------------------------------------------------- classical TV bounds

def tv_lower_mean(mu_p, mu_q, M2max: float) -> float:
    """||p - q||_1 >= ||dmu||^2 / (8 max E[||x||^2])."""
    M2max = _positive(M2max, "M2max")
    d = np.atleast_1d(np.asarray(mu_p, dtype=float) - np.asarray(mu_q, dtype=float))
    return float(d @ d) / (8.0 * M2max)


def tv_lower_cov(Vp, Vq, M4max: float) -> float:
    """||p - q||_1 >= ||V(p) - V(q)||_inf^2 / (72 max E[||x||^4]), V centred."""
    M4max = _positive(M4max, "M4max")
    dV = np.atleast_2d(np.asarray(Vp, dtype=float) - np.asarray(Vq, dtype=float))
    return _op_norm(dV) ** 2 / (72.0 * M4max)


# ---------------------------------------------------------------- oracles

def density_moments(rho: fk.DensityOp) -> gs.GaussianMoments:
    """First moments and covariance of a density operator, with quadratures built on a
    padded space so that products are exact inside the truncation."""
    n, c = rho.n_modes, rho.cutoff
    big = rho.with_cutoff(c + 2)
    R = []
    for q in range(n):
        x, p = fk.quadratures(n, big.cutoff, q)
        R += [x.tocsr(), p.tocsr()]
    r = big.rho / np.real(np.trace(big.rho))
    m = np.array([np.real(np.trace((Ri @ r))) for Ri in R])
    V = np.zeros((2 * n, 2 * n))
    for i in range(2 * n):
        Ri_r = R[i] @ r
        for j in range(i, 2 * n):
            v = np.real(np.trace(R[j] @ Ri_r)) + np.real(np.trace(R[i] @ (R[j] @ r)))
            V[i, j] = V[j, i] = v - 2 * m[i] * m[j]
    return gs.GaussianMoments(m, V)


def tightness_state(n: int) -> fk.DensityOp:
    """(1 - 1/n)|0><0| + (1/n)|n^2><n^2|."""
    if n < 1:
        raise ValidationError("n must be a positive integer")
    N = n * n
    return fk.DensityOp.mixture([1 - 1 / n, 1 / n], [fk.fock((0,), N), fk.fock((N,), N)])


def tightness_values(n: int) -> dict:
    """Oracle values for the tightness family against the vacuum."""
    rho = tightness_state(n)
    vac = fk.DensityOp.from_pure(fk.fock((0,), n * n))
    mr, mv = density_moments(rho), density_moments(vac)
    E2 = rho.expectation_energy2()
    return {"n": n, "dV_inf": _op_norm(mr.V - mv.V), "trace_norm": 2 * fk.trace_distance(rho, vac),
            "E2": E2, "sqrt_E2": math.sqrt(E2), "paper_E_n": (n * n + 0.5) ** 2 / n,
            "ratio": _op_norm(mr.V - mv.V) / (math.sqrt(E2) * math.sqrt(2 * fk.trace_distance(rho, vac)))}


def pure_pair_reports(a: fk.FockState, b: fk.FockState, tol: Tolerances = DEFAULT) -> list:
    """Check all five bounds on one pair of pure states."""
    a, b = a.normalized(), b.normalized()
    td = 2.0 * fk.trace_distance_pure(a, b)
    ma, mb = fk.moments(a), fk.moments(b)
    ea, eb = fk.energy_moments(a), fk.energy_moments(b)
    Emax = max(ea["energy"], eb["energy"])
    E2max = max(ea["energy2"], eb["energy2"])
    dm = float(np.linalg.norm(ma.m - mb.m))
    dV = _op_norm(ma.V - mb.V)
    da = np.sort(sp.symplectic_eigenvalues(ma.V, tol))[::-1]
    db = np.sort(sp.symplectic_eigenvalues(mb.V, tol))[::-1]
    dnu = float(np.max(np.abs(da - db)))
    inputs = {"td": td, "Emax": Emax, "E2max": E2max}
    t = tol.bound
    return [
        BoundReport("td_lower_from_means", inputs, td_lower_from_means(ma.m, mb.m, Emax), td, "lower", tol=t),
        BoundReport("td_lower_from_cov", inputs, td_lower_from_cov(ma.V, mb.V, E2max), td, "lower", tol=t),
        BoundReport("first_moment", inputs, moment_perturbation(min(td, 2.0), Emax, "first_moment"), dm,
                    "upper", tol=t),
        BoundReport("covariance", inputs, moment_perturbation(min(td, 2.0), math.sqrt(E2max), "covariance"),
                    dV, "upper", tol=t),
        BoundReport("symplectic_eigs", inputs,
                    moment_perturbation(min(td, 2.0), math.sqrt(E2max), "symplectic_eigs"), dnu, "upper", tol=t),
    ]


def random_pair_sweep(n_trials: int = 200, seed: int = 0, n_modes: int = 1, cutoff: int = 12,
                      max_photons: int = 4, tol: Tolerances = DEFAULT) -> list:
    """Falsification sweep over random pure pairs; half the pairs are close to each other."""
    rng = np.random.default_rng(seed)
    out = []
    for t in range(n_trials):
        a = fk.random_state(n_modes, cutoff, rng, max_photons)
        b = fk.random_state(n_modes, cutoff, rng, max_photons)
        if t % 2:
            mix = float(rng.uniform(0, 0.3))
            b = fk.FockState(n_modes, cutoff, np.sqrt(1 - mix) * a.vec + np.sqrt(mix) * b.vec).normalized()
        out.append(pure_pair_reports(a, b, tol))
    return out
