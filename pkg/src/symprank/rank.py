"""Symplectic rank: exact rank, compression, symplectic fidelities, witnesses,
monotonicity checks and conversion-rate bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import _kernels
from . import fock as fk
from . import gaussian as gs
from . import symplectic as sp
from .config import DEFAULT, Tolerances
from .errors import DomainError, ResidualError, ValidationError


def _moments_of(st) -> gs.GaussianMoments:
    if isinstance(st, fk.DensityOp):
        raise DomainError("symplectic rank of mixed states is a convex-roof minimization over "
                          "pure decompositions; only pure inputs are supported")
    if isinstance(st, gs.GaussianMoments):
        return st
    if isinstance(st, fk.FockState):
        return fk.moments(st)
    raise ValidationError(f"unsupported state type {type(st).__name__}")


def symplectic_rank_pure(st, tol: Tolerances = DEFAULT) -> int:
    """Number of symplectic eigenvalues of V(psi) strictly above 1 + tol.rank."""
    d = sp.symplectic_eigenvalues(_moments_of(st).V, tol)
    return int(np.sum(d > 1.0 + tol.rank))


# ---------------------------------------------------------------- compression

@dataclass(frozen=True, eq=False)
class CompressionResult:
    G: gs.GaussianUnitaryDesc
    phi: fk.FockState
    rank: int
    residual: float
    d: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def reconstruct(self, cutoff: int | None = None,
                    leak_budget: float = 1e-6) -> fk.FockState:
        """G (phi (x) vac) in the Fock backend."""
        n = self.G.n_modes
        core = self.phi.with_cutoff(cutoff if cutoff is not None else self.phi.cutoff)
        full = fk.embed_vacuum(core, n - self.rank) if self.rank else \
            fk.vacuum(n, core.cutoff)
        return fk.apply_gaussian(full, self.G, leak_budget=leak_budget)


def compress(st: fk.FockState, tol: Tolerances = DEFAULT,
             leak_budget: float | None = None, work_pad: int = 8) -> CompressionResult:
    """psi = G (phi (x) |0>^{n-s}) with G = D_m U_S from the Williamson form of V(psi).

    G^-1 is applied with `work_pad` extra photons: intermediate Euler factors
    need the room, and the Williamson core phi can carry a longer photon tail
    than psi, so phi is returned at cutoff psi.cutoff + work_pad.
    """
    leak_budget = tol.leak if leak_budget is None else leak_budget
    if abs(st.norm - 1.0) > 1e-6:
        raise ValidationError("compress expects a normalized state")
    mom = fk.moments(st)
    w = sp.williamson(mom.V, tol)
    s = int(np.sum(w.d > 1.0 + tol.rank))
    G = gs.GaussianUnitaryDesc(w.S, mom.m)
    inv = fk.apply_gaussian(st.with_cutoff(st.cutoff + work_pad), G.inverse(),
                            leak_budget=leak_budget)
    n = st.n_modes
    phi = fk.project_vacuum(inv, range(s, n))
    kept = phi.norm ** 2
    residual = max(0.0, 1.0 - kept)
    if residual > tol.comp:
        raise ResidualError("compression left weight outside phi (x) vacuum", residual,
                            rank=s, d=w.d.tolist(), leak=inv.leak)
    phi = phi.normalized()
    diag = {"leak": inv.leak}
    if s:
        pm = fk.moments(phi)
        diag["phi_cov_error"] = float(np.max(np.abs(pm.V - np.diag(np.repeat(w.d[:s], 2)))))
        diag["phi_photons"] = fk.energy_moments(phi)["photons"]
    else:
        diag["phi_photons"] = 0.0
    diag["psi_photons"] = fk.energy_moments(st)["photons"]
    return CompressionResult(G=G, phi=phi, rank=s, residual=residual, d=w.d, diagnostics=diag)


# ---------------------------------------------------------------- symplectic fidelity

@dataclass
class OptimizerConfig:
    restarts: int = 8
    seed: int = 0
    max_squeeze: float = 2.0
    max_disp: float = 2.0
    maxfev: int = 4000
    core_cutoff: int | None = None   # truncation of the k-mode output (default: input cutoff)
    warm_start: bool = True


@dataclass
class FidelityResult:
    value: float
    G: gs.GaussianUnitaryDesc
    k: int
    restart_values: list
    converged: bool
    warning: str | None = None


def _herm_from_vec(v: np.ndarray, n: int) -> np.ndarray:
    H = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    H[np.diag_indices(n)] = v[:n]
    m = len(iu[0])
    H[iu] = v[n:n + m] + 1j * v[n + m:n + 2 * m]
    return H + np.triu(H, 1).conj().T


def _vec_from_herm(H: np.ndarray) -> np.ndarray:
    n = H.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([H[np.diag_indices(n)].real, H[iu].real, H[iu].imag])


def _unitary_log(U: np.ndarray) -> np.ndarray:
    """Hermitian H with exp(iH) = U."""
    from scipy.linalg import schur
    T, Z = schur(U, output="complex")
    return Z @ np.diag(np.angle(np.diag(T))) @ Z.conj().T


class _FidelityObjective:
    """||(I_k (x) <0|^{n-k}) G psi||^2 from the Bargmann kernel of G."""

    def __init__(self, st: fk.FockState, k: int, core_cutoff: int, max_squeeze: float):
        self.n, self.k = st.n_modes, k
        self.psi = st.vec / st.norm
        self.cut = st.cutoff
        self.core_cut = core_cutoff
        self.max_squeeze = max_squeeze
        n = self.n
        nv = k + n
        self.basis = fk.get_basis(nv, core_cutoff + st.cutoff)
        t = self.basis.tuples
        psi_idx = st.basis.index(t[:, k:])
        core = fk.get_basis(k, core_cutoff)
        core_idx = core.index(t[:, :k])
        sel = np.flatnonzero((psi_idx >= 0) & (core_idx >= 0))
        self.sel = sel
        self.src = psi_idx[sel]
        self.dst = core_idx[sel]
        self.n_core = len(core)
        self._arange = np.arange(len(sel), dtype=np.int64)
        self.keep_rows = np.r_[np.arange(k), np.arange(n, 2 * n)]
        self.dim = 2 * n * n + 3 * n

    def params(self, x: np.ndarray) -> gs.GaussianParams:
        n = self.n
        hU = _herm_from_vec(x[:n * n], n)
        xi = np.clip(np.abs(x[n * n:n * n + n]), 0.0, self.max_squeeze)
        beta = x[n * n + n:n * n + 2 * n] + 1j * x[n * n + 2 * n:n * n + 3 * n]
        hV = _herm_from_vec(x[n * n + 3 * n:], n)
        return gs.GaussianParams(U=expm(1j * hU), xi=xi, beta=beta, V=expm(1j * hV))

    def x_from_params(self, p: gs.GaussianParams) -> np.ndarray:
        return np.concatenate([_vec_from_herm(_unitary_log(p.U)), p.xi, p.beta.real,
                               p.beta.imag, _vec_from_herm(_unitary_log(p.V))])

    def core(self, p: gs.GaussianParams) -> np.ndarray:
        K = gs.bargmann_kernel(p)
        r = self.keep_rows
        sub = gs.StellarGaussian(A=K.A[np.ix_(r, r)], w=K.w[r], C=K.C, N=K.N)
        b = self.basis
        T = _kernels.stellar_recursion(b.tuples, b.lower, b.layers, sub.A, sub.w,
                                       sub.amplitude_at_zero)
        # out[j] = sum_k <j,0|G|k> psi_k
        return _kernels.heterodyne_accumulate(self.psi[self.src], self._arange, self.dst,
                                              T[self.sel], self.n_core)

    def value(self, x: np.ndarray) -> float:
        out = self.core(self.params(x))
        return float(np.real(np.vdot(out, out)))


def symplectic_fidelity(st: fk.FockState, k: int, cfg: OptimizerConfig | None = None,
                        tol: Tolerances = DEFAULT) -> FidelityResult:
    """Best found value of sup_G ||(I_k (x) <0|^{n-k}) G psi||^2 (a lower bound on f_k)."""
    cfg = cfg or OptimizerConfig()
    n = st.n_modes
    if not 0 <= k <= n:
        raise ValidationError(f"k must lie in [0, {n}]")
    if k == n:
        return FidelityResult(1.0, gs.GaussianUnitaryDesc.identity(n), k, [1.0], True)
    core_cut = cfg.core_cutoff if cfg.core_cutoff is not None else st.cutoff
    obj = _FidelityObjective(st, k, core_cut, cfg.max_squeeze)
    rng = np.random.default_rng(cfg.seed)
    starts = []
    if cfg.warm_start:
        try:
            comp = compress(st, tol.with_(comp=1.0))
            starts.append(obj.x_from_params(gs.desc_to_params(comp.G.inverse())))
        except Exception:  # warm start is optional
            pass
    while len(starts) < cfg.restarts:
        x0 = np.concatenate([rng.normal(scale=1.0, size=n * n), rng.uniform(0, 0.8, size=n),
                             rng.normal(scale=0.5, size=2 * n), rng.normal(scale=1.0, size=n * n)])
        starts.append(x0)

    results = []
    for i, x0 in enumerate(starts[:max(cfg.restarts, 1)]):
        v0 = obj.value(x0)
        if v0 >= 1.0 - tol.comp:  # already 1 within the compression tolerance
            results.append((v0, i, x0, True))
            break
        res = minimize(lambda x: -obj.value(x), x0, method="Nelder-Mead",
                       options={"maxfev": cfg.maxfev, "xatol": 1e-9, "fatol": 1e-13,
                                "adaptive": True})
        # polish from the best point with a fresh simplex
        res2 = minimize(lambda x: -obj.value(x), res.x, method="Nelder-Mead",
                        options={"maxfev": cfg.maxfev, "xatol": 1e-10, "fatol": 1e-14,
                                 "adaptive": True})
        best = res2 if -res2.fun >= -res.fun else res
        val = max(-best.fun, v0)
        x = best.x if -best.fun >= v0 else x0
        results.append((val, i, x, bool(res.success or res2.success)))
    # deterministic merge: highest value, ties broken by restart index
    results.sort(key=lambda r: (-round(r[0], 14), r[1]))
    val, _, x, conv = results[0]
    p = obj.params(x)
    G = gs.params_to_desc(p)
    warn = None if conv else "optimizer hit its evaluation budget before converging"
    if warn:
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return FidelityResult(value=min(1.0, val), G=G, k=k,
                          restart_values=[r[0] for r in sorted(results, key=lambda r: r[1])],
                          converged=conv, warning=warn)


def fidelity_curve(st: fk.FockState, cfg: OptimizerConfig | None = None,
                   tol: Tolerances = DEFAULT) -> list[FidelityResult]:
    """f_k for k = 0..n, made non-decreasing (a rank-k state also has rank <= k+1)."""
    out = []
    for k in range(st.n_modes + 1):
        r = symplectic_fidelity(st, k, cfg, tol)
        if out and r.value < out[-1].value:
            r.value = out[-1].value
        out.append(r)
    return out


def f0_single_mode_fock1_grid(n_b: int = 601, n_xi: int = 401, n_phase: int = 73) -> float:
    """Grid search of max |<phi|1>|^2 over single-mode pure Gaussian phi.

    For phi = G_u S(xi) D(beta)|0>, <1|phi> = w e^C / N with w = conj(u) beta / cosh xi,
    C = -(tanh(xi) beta^2 + |beta|^2)/2 and N = sqrt(cosh xi); the phase u drops out.
    """
    b = np.linspace(0.0, 3.0, n_b)[:, None, None]
    xi = np.linspace(0.0, 2.0, n_xi)[None, :, None]
    chi = np.linspace(0.0, np.pi, n_phase)[None, None, :]
    t = np.tanh(xi)
    val = b ** 2 / np.cosh(xi) ** 3 * np.exp(-t * b ** 2 * np.cos(2 * chi) - b ** 2)
    return float(val.max())


# ---------------------------------------------------------------- approximate rank

def eigenvalue_witness(st, eps: float, tol: Tolerances = DEFAULT) -> int:
    """t = #{d_i > 1 + 2 eps / n}; the eps-approximate rank is at most t."""
    mom = _moments_of(st)
    d = sp.symplectic_eigenvalues(mom.V, tol)
    return int(np.sum(d > 1.0 + 2.0 * eps / mom.n_modes))


def approx_symplectic_rank(st: fk.FockState, eps: float, cfg: OptimizerConfig | None = None,
                           tol: Tolerances = DEFAULT) -> int:
    """Smallest k whose best-found symplectic fidelity reaches 1 - eps (an upper bound)."""
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    s = symplectic_rank_pure(st, tol)
    for k in range(s):
        if symplectic_fidelity(st, k, cfg, tol).value >= 1.0 - eps:
            return k
    return s


# ---------------------------------------------------------------- monotonicity

@dataclass
class MonotonicityStep:
    op: str
    rank_before: int
    rank_after: int
    detail: dict


@dataclass
class MonotonicityReport:
    steps: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def _is_product_mode(st: fk.FockState, mode: int, tol: float = 1e-9) -> bool:
    rho = fk.DensityOp.from_pure(st).partial_trace([mode])
    return float(np.real(np.trace(rho.rho @ rho.rho))) >= 1.0 - tol


def monotonicity_suite(st: fk.FockState, seed: int = 0, n_steps: int = 4, max_modes: int = 3,
                       tol: Tolerances = DEFAULT, leak_budget: float = 1e-7) -> MonotonicityReport:
    """Random post-selected Gaussian operations; the rank must never increase."""
    rng = np.random.default_rng(seed)
    cur = st.normalized()
    r_cur = symplectic_rank_pure(cur, tol)
    steps, bad = [], []
    for _ in range(n_steps):
        choices = ["unitary", "heterodyne"]
        if cur.n_modes < max_modes:
            choices.append("tensor")
        if cur.n_modes > 1:
            choices.append("trace")
        op = choices[rng.integers(len(choices))]
        detail = {}
        if op == "unitary":
            G = gs.random_gaussian_unitary(cur.n_modes, rng, 0.25, 0.25)
            nxt = fk.apply_gaussian(cur, G, leak_budget=leak_budget)
        elif op == "tensor":
            g = gs.random_gaussian_unitary(1, rng, 0.3, 0.3)
            nxt = fk.tensor(cur, fk.gaussian_state(g, cur.cutoff, leak_budget=leak_budget),
                            cutoff=cur.cutoff)
        elif op == "heterodyne":
            if cur.n_modes == 1:
                continue
            q = int(rng.integers(cur.n_modes))
            alpha = complex(rng.normal(scale=0.7), rng.normal(scale=0.7))
            nxt, dens = fk.heterodyne_project(cur, [alpha], [q])
            detail = {"mode": q, "alpha": alpha, "density": dens}
            if nxt is None:
                continue
        else:
            q = int(rng.integers(cur.n_modes))
            if not _is_product_mode(cur, q):
                continue  # tracing would leave a mixed state
            rho = fk.DensityOp.from_pure(cur).partial_trace([i for i in range(cur.n_modes) if i != q])
            w, v = np.linalg.eigh(rho.rho)
            nxt = fk.FockState(cur.n_modes - 1, cur.cutoff, v[:, -1])
            detail = {"mode": q}
        nxt = nxt.normalized()
        r_next = symplectic_rank_pure(nxt, tol)
        steps.append(MonotonicityStep(op, r_cur, r_next, detail))
        if r_next > r_cur:
            bad.append(steps[-1])
        cur, r_cur = nxt, r_next
    return MonotonicityReport(steps, bad)


# ---------------------------------------------------------------- conversion bounds

@dataclass(frozen=True)
class ConversionBounds:
    distill_upper: float
    cost_lower: float
    verdict: str


def rank_of_fock_product(k) -> int:
    return int(sum(1 for x in k if x > 0))


def stellar_rank_of_fock_product(k) -> int:
    return int(sum(k))


def conversion_bounds(inp, out) -> ConversionBounds:
    """Rate bounds for converting tensor products of Fock states with Gaussian protocols.

    distill_upper = s(in)/s(out), cost_lower = r*(in)/r*(out).
    """
    s_in, s_out = rank_of_fock_product(inp), rank_of_fock_product(out)
    r_in, r_out = stellar_rank_of_fock_product(inp), stellar_rank_of_fock_product(out)
    if s_out == 0:
        return ConversionBounds(math.inf, 0.0, "unconstrained: output is Gaussian")
    du = s_in / s_out
    cl = r_in / r_out
    return ConversionBounds(du, cl, "irreversible" if du < cl else "not certified irreversible")
