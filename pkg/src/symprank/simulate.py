"""Classical simulation of doped Gaussian circuits.

A doped circuit is C = G_s W_s G_{s-1} ... W_1 G_0 acting on the vacuum, with
W_i a cubic phase gate or a power of a ladder operator on one mode. With
H_i = G_{i-1}...G_0 G_p, every conjugated gate H_i^dag W_i H_i is a function of
one bosonic mode; the passive G_p rotates all of these modes into the first s
modes, so psi = (G_s...G_0 G_p)(phi (x) vac) with phi prod_i (H_i^dag W_i H_i)|0>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock as fk
from . import gaussian as gs
from .config import DEFAULT, Tolerances
from .errors import DomainError, LeakError, NullOutputError, ValidationError

GAUSSIAN_KINDS = (fk.Gaussian, fk.Passive, fk.Squeeze, fk.Displace)
DOPING_KINDS = (fk.Cubic, fk.Create, fk.Annihilate)


class CutoffInfeasibleError(DomainError):
    def __init__(self, what: str, cutoff: int, size: int, budget: int):
        self.cutoff, self.size, self.budget = cutoff, size, budget
        super().__init__(f"{what}: cutoff {cutoff} needs a basis of {size} states "
                         f"(budget {budget})")


# ---------------------------------------------------------------- circuits

@dataclass(frozen=True, eq=False)
class CircuitDesc:
    """Gates in application order (gates[0] acts first on the vacuum)."""
    n_modes: int
    gates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if isinstance(g, GAUSSIAN_KINDS):
                modes = (g.mode,) if isinstance(g, fk.Squeeze) else tuple(g.modes)
                if any(q < 0 or q >= self.n_modes for q in modes) or len(set(modes)) != len(modes):
                    raise ValidationError("gaussian gate does not fit the circuit")
                if isinstance(g, fk.Gaussian) and g.G.n_modes != len(modes):
                    raise ValidationError("gaussian gate does not fit the circuit")
            elif isinstance(g, DOPING_KINDS):
                if not 0 <= g.mode < self.n_modes:
                    raise ValidationError(f"doping gate on mode {g.mode} outside 0..{self.n_modes - 1}")
                if isinstance(g, (fk.Create, fk.Annihilate)) and g.power < 0:
                    raise ValidationError("ladder powers must be non-negative")
            elif not isinstance(g, (LinearLadder, fk.CubicPoly)):
                raise ValidationError(f"unsupported gate {g!r}")

    @property
    def dopings(self) -> list:
        return [g for g in self.gates if not isinstance(g, GAUSSIAN_KINDS)]

    @property
    def s(self) -> int:
        return len(self.dopings)

    @property
    def kappa(self) -> int:
        return 1

    @property
    def max_power(self) -> int:
        return max([g.power for g in self.dopings if isinstance(g, (fk.Create, fk.Annihilate))],
                   default=0)

    def gaussian_layers(self) -> tuple[list, list]:
        """(G_0..G_s as full-system descs, dopings W_1..W_s)."""
        layers = [gs.GaussianUnitaryDesc.identity(self.n_modes)]
        dop = []
        for g in self.gates:
            if isinstance(g, GAUSSIAN_KINDS):
                layers[-1] = gaussian_desc_of(g, self.n_modes).compose(layers[-1])
            else:
                dop.append(g)
                layers.append(gs.GaussianUnitaryDesc.identity(self.n_modes))
        return layers, dop


def gaussian_desc_of(g, n: int) -> gs.GaussianUnitaryDesc:
    """Full-system desc of a gaussian, passive, squeeze or displace gate."""
    if isinstance(g, fk.Gaussian):
        G, modes = g.G, tuple(g.modes)
    elif isinstance(g, fk.Passive):
        G, modes = gs.GaussianUnitaryDesc.passive(g.U), tuple(g.modes)
    elif isinstance(g, fk.Squeeze):
        G, modes = gs.GaussianUnitaryDesc.squeezing([g.xi]), (g.mode,)
    elif isinstance(g, fk.Displace):
        G, modes = gs.GaussianUnitaryDesc.displacement(np.asarray(g.beta)), tuple(g.modes)
    else:
        raise ValidationError(f"{g!r} is not a Gaussian gate")
    return G if modes == tuple(range(n)) else G.embed(n, modes)


@dataclass(frozen=True, eq=False)
class LinearLadder:
    """(A.a + B.a^dag + c)^power on all modes of the system it is applied to."""
    A: np.ndarray
    B: np.ndarray
    c: complex
    power: int = 1


def apply_linear_ladder(st: fk.FockState, g: LinearLadder) -> fk.FockState:
    """Exact (unnormalized) action; the cutoff grows by one per creation."""
    n = st.n_modes
    for _ in range(g.power):
        big = st.with_cutoff(st.cutoff + (1 if np.any(g.B != 0) else 0))
        v = g.c * big.vec
        for j in range(n):
            a = fk.annihilation(n, big.cutoff, j)
            if g.A[j] != 0:
                v = v + g.A[j] * (a @ big.vec)
            if g.B[j] != 0:
                v = v + g.B[j] * (a.T @ big.vec)
        st = fk.FockState(n, big.cutoff, v, big.leak)
    return st


def run_fock(c: CircuitDesc, cutoff: int, leak_budget: float = DEFAULT.leak) -> fk.FockState:
    """Brute-force output C|0> (normalized) in the Fock backend."""
    st = fk.vacuum(c.n_modes, cutoff)
    for g in c.gates:
        if isinstance(g, LinearLadder):
            st = apply_linear_ladder(st, g)
        else:
            out = fk.apply_gate(st, g, leak_budget)
            st = out[0] if isinstance(out, tuple) else out
        if st.norm <= 1e-12:
            raise NullOutputError()
    return st.normalized()


def random_doped_circuit(n: int, kinds, rng: np.random.Generator, max_squeeze: float = 0.2,
                         max_disp: float = 0.2, gamma: float = 0.1,
                         max_power: int = 1) -> CircuitDesc:
    """G_0, then for each kind in `kinds` a doping on a random mode followed by a Gaussian."""
    gates = [fk.Gaussian(gs.random_gaussian_unitary(n, rng, max_squeeze, max_disp), tuple(range(n)))]
    for kind in kinds:
        q = int(rng.integers(n))
        if kind == "cubic":
            gates.append(fk.Cubic(float(gamma), q))
        elif kind == "create":
            gates.append(fk.Create(q, int(rng.integers(1, max_power + 1))))
        elif kind == "annihilate":
            gates.append(fk.Annihilate(q, int(rng.integers(1, max_power + 1))))
        else:
            raise ValidationError(f"unknown doping kind {kind!r}")
        gates.append(fk.Gaussian(gs.random_gaussian_unitary(n, rng, max_squeeze, max_disp),
                                 tuple(range(n))))
    return CircuitDesc(n, tuple(gates))


# ---------------------------------------------------------------- compression

def _ladder_coefficients(H: gs.GaussianUnitaryDesc, g):
    """H^dag W H for the linear part of W, as (A, B, c) with A.a + B.a^dag + c.

    H^dag R H = S R + r; for a real coefficient vector q over R,
    q.R = sum_j (q_xj - i q_pj)/sqrt2 a_j + (q_xj + i q_pj)/sqrt2 a_j^dag.
    """
    mu = g.mode
    if isinstance(g, fk.Cubic):
        q, c = H.S[2 * mu].astype(complex), complex(H.r[2 * mu])
    else:
        q = (H.S[2 * mu] + 1j * H.S[2 * mu + 1]) / np.sqrt(2.0)
        c = complex(H.r[2 * mu] + 1j * H.r[2 * mu + 1]) / np.sqrt(2.0)
        if isinstance(g, fk.Create):
            q, c = q.conj(), np.conj(c)
    qx, qp = q[0::2], q[1::2]
    return (qx - 1j * qp) / np.sqrt(2.0), (qx + 1j * qp) / np.sqrt(2.0), c


@dataclass(frozen=True, eq=False)
class DopedCompression:
    """C|0> = G (phi (x) vac) with phi = core_circuit |0>^{n_core}.

    passive_prefix is G_p^dag, so C = G (core (x) I) passive_prefix on the vacuum.
    """
    G: gs.GaussianUnitaryDesc
    core_circuit: CircuitDesc
    passive_prefix: gs.GaussianUnitaryDesc
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_core(self) -> int:
        return self.core_circuit.n_modes

    def core_state(self, cutoff: int = 0, leak_budget: float = DEFAULT.leak,
                   normalize: bool = True) -> fk.FockState:
        """phi in the Fock basis. Ladder gates are exact; cubic gates need `cutoff`."""
        k = self.n_core
        st = fk.vacuum(k, cutoff)
        for g in self.core_circuit.gates:
            if isinstance(g, LinearLadder):
                st = apply_linear_ladder(st, g)
            else:
                if st.cutoff < cutoff:
                    st = st.with_cutoff(cutoff)
                st = fk.apply_gate(st, g, leak_budget)
            if st.norm <= 1e-12:
                raise NullOutputError()
        return st.normalized() if normalize else st

    def output_state(self, cutoff: int, core_cutoff: int = 0,
                     leak_budget: float = DEFAULT.leak) -> fk.FockState:
        """G (phi (x) vac) on the full system."""
        phi = self.core_state(core_cutoff, leak_budget)
        n = self.G.n_modes
        full = fk.embed_vacuum(phi.with_cutoff(max(cutoff, phi.cutoff)), n - self.n_core) \
            if self.n_core else fk.vacuum(n, cutoff)
        return fk.apply_gaussian(full, self.G, leak_budget=leak_budget)


def doped_compress(c: CircuitDesc, tol: Tolerances = DEFAULT) -> DopedCompression:
    n = c.n_modes
    layers, dop = c.gaussian_layers()
    s = len(dop)
    k = c.kappa * s
    if k > n:
        raise ValidationError(f"kappa*s = {k} exceeds the number of modes {n}")
    if any(isinstance(g, (LinearLadder, fk.CubicPoly)) for g in dop):
        raise ValidationError("compression expects cubic or ladder dopings on single modes")
    cum = [layers[0]]
    for g in layers[1:]:
        cum.append(g.compose(cum[-1]))
    # mode direction of each conjugated doping (conjugate of its creation part)
    us = np.zeros((n, s), dtype=complex)
    for i, g in enumerate(dop):
        _, B, _ = _ladder_coefficients(cum[i], g)
        us[:, i] = B.conj()
    if s:
        Q, _ = np.linalg.qr(us, mode="complete")
    else:
        Q = np.eye(n, dtype=complex)
    Gp = gs.GaussianUnitaryDesc.passive(Q)
    core_gates = []
    outside = 0.0
    for i, g in enumerate(dop):
        H = cum[i].compose(Gp)
        A, B, cst = _ladder_coefficients(H, g)
        outside = max(outside, float(np.max(np.abs(B[k:]), initial=0.0)))
        if isinstance(g, fk.Cubic):
            w = H.S[2 * g.mode, :2 * k]
            outside = max(outside, float(np.max(np.abs(H.S[2 * g.mode, 2 * k:]), initial=0.0)))
            core_gates.append(fk.CubicPoly(g.gamma, w.copy(), float(H.r[2 * g.mode])))
        else:
            core_gates.append(LinearLadder(A[:k].copy(), B[:k].copy(), cst, g.power))
    if outside > 1e3 * tol.symp:
        raise ValidationError(f"passive frame failed to localize the dopings (max outside {outside:.2e})")
    G = cum[-1].compose(Gp)
    return DopedCompression(G=G, core_circuit=CircuitDesc(k, tuple(core_gates)),
                            passive_prefix=Gp.inverse(),
                            diagnostics={"s": s, "kappa": c.kappa, "localization_error": outside})


# ---------------------------------------------------------------- overlap estimation

@dataclass(frozen=True)
class OverlapReport:
    estimate: float
    eps: float
    lam: float
    mean_photons: float
    n_truncation: int       # ceil(E / lambda^2)
    n_used: int             # min(n_truncation, cutoff of phi)
    basis_size: int


def overlap_estimate(target: gs.GaussianUnitaryDesc, G: gs.GaussianUnitaryDesc,
                     phi: fk.FockState, eps: float, max_dim: int = fk.MAX_DIM) -> OverlapReport:
    """|<target|psi>|^2 for psi = G (phi (x) vac) and the Gaussian state target|0>.

    phi is truncated at total photon number N = ceil(E/lambda^2), lambda = 19 eps/20,
    E its mean photon number; amplitudes <k, 0|G^-1 target|0> come from the stellar
    recursion restricted to the core modes.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    if abs(phi.norm - 1.0) > 1e-6:
        raise ValidationError("phi must be normalized")
    if target.n_modes != G.n_modes:
        raise ValidationError("target and G act on different mode counts")
    k = phi.n_modes
    lam = 19.0 * eps / 20.0
    E = fk.energy_moments(phi)["photons"] if k else 0.0
    n_trunc = int(math.ceil(E / lam ** 2))
    n_used = min(n_trunc, phi.cutoff)
    size = fk.basis_size(k, n_used)
    if size > max_dim:
        raise CutoffInfeasibleError("overlap estimate", n_used, size, max_dim)
    st = gs.stellar_of_desc(G.inverse().compose(target))
    if k == 0:
        val = abs(st.amplitude_at_zero) ** 2
        return OverlapReport(float(val), eps, lam, E, n_trunc, 0, 1)
    sub = gs.StellarGaussian(st.A[:k, :k], st.w[:k], st.C, st.N)
    amps = fk.stellar_state(sub, k, n_used, leak_budget=None).vec
    phin = phi.with_cutoff(n_used).vec
    nn = np.linalg.norm(phin)
    if nn == 0:
        raise NullOutputError("truncated core state vanishes")
    val = abs(np.vdot(amps, phin) / nn) ** 2
    return OverlapReport(float(val), eps, lam, E, n_trunc, n_used, size)


# ---------------------------------------------------------------- coherent superpositions

@dataclass(frozen=True, eq=False)
class CoherentSuperposition:
    coeffs: np.ndarray          # (J,)
    alphas: np.ndarray          # (J, s)
    error: float = 0.0          # 2-norm error against the target in the Fock truncation
    tail: float = 0.0           # weight of the superposition beyond that truncation

    @property
    def size(self) -> int:
        return len(self.coeffs)

    def gram(self) -> np.ndarray:
        a = np.asarray(self.alphas, dtype=complex)
        na = np.sum(np.abs(a) ** 2, axis=1)
        return np.exp(-0.5 * na[:, None] - 0.5 * na[None, :] + a.conj() @ a.T)

    @property
    def norm(self) -> float:
        c = self.coeffs
        return float(np.sqrt(max(0.0, np.real(c.conj() @ self.gram() @ c))))

    def to_fock(self, cutoff: int) -> fk.FockState:
        s = self.alphas.shape[1]
        vec = np.zeros(fk.basis_size(s, cutoff), dtype=complex)
        for ci, a in zip(self.coeffs, self.alphas):
            vec += ci * fk.coherent(a, cutoff, auto_cutoff=False, leak_budget=np.inf).vec
        return fk.FockState(s, cutoff, vec)


def _hex_grid(rings: int) -> np.ndarray:
    pts = [0j]
    dirs = np.exp(1j * np.pi / 3 * np.arange(6))
    for r in range(1, rings + 1):
        p = r * dirs[4]
        for d in range(6):
            for _ in range(r):
                pts.append(p)
                p = p + dirs[d]
    return np.array(pts)


def cubic_target(alpha: complex, gamma: float, cutoff: int = 30,
                 leak_budget: float = 1e-6) -> fk.FockState:
    """exp(i gamma x^3)|alpha> by matrix exponentiation in the Fock backend."""
    st = fk.coherent([alpha], cutoff, auto_cutoff=False, leak_budget=np.inf)
    return fk.apply_gate(st, fk.Cubic(float(gamma), 0), leak_budget)


def cubic_coherent_superposition(alpha: complex, gamma: float, eps: float, cutoff: int = 30,
                                 max_terms: int = 127, pitch: float = 1.0, fit_pad: int = 20,
                                 target: fk.FockState | None = None) -> CoherentSuperposition:
    """Least-squares fit of exp(i gamma x^3)|alpha> by coherent states on a hexagonal grid.

    The grid is centred on alpha and grows ring by ring. Each fit is done at
    cutoff + fit_pad (so the superposition cannot exploit the truncation) and
    accepted once its 2-norm error against the target at `cutoff` is <= eps.
    A pitch near 1 keeps the coefficients O(1); much finer grids fit through
    large cancelling coefficients.
    """
    alpha = complex(alpha)
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if gamma == 0:
        return CoherentSuperposition(np.ones(1, dtype=complex), np.array([[alpha]]))
    tgt = cubic_target(alpha, gamma, cutoff) if target is None else target.with_cutoff(cutoff)
    fit = cubic_target(alpha, gamma, cutoff + fit_pad, leak_budget=1e-6)
    best = None
    rings = 1
    while True:
        pts = alpha + pitch * _hex_grid(rings)
        if len(pts) > max_terms:
            break
        M = np.column_stack([fk.coherent([p], cutoff + fit_pad, auto_cutoff=False,
                                         leak_budget=np.inf).vec for p in pts])
        c, *_ = np.linalg.lstsq(M, fit.vec, rcond=1e-12)
        size = fk.basis_size(1, cutoff)
        err = float(np.linalg.norm(M[:size] @ c - tgt.vec))
        tail = float(np.linalg.norm(M[size:] @ c)) ** 2
        best = CoherentSuperposition(c, pts[:, None], err, tail)
        if err <= eps:
            return best
        rings += 1
    raise DomainError(f"cubic superposition reached error {best.error:.3e} with {best.size} "
                      f"terms; requested {eps:.1e} (term budget {max_terms})")


def cubic_doped_overlap(c: CircuitDesc, target: gs.GaussianUnitaryDesc, eps: float,
                        core_cutoff: int = 30, leak_budget: float = 1e-8) -> OverlapReport:
    """doped_compress -> core state by exponentiating the conjugated cubic generators ->
    overlap_estimate."""
    if any(not isinstance(g, fk.Cubic) for g in c.dopings):
        raise ValidationError("all dopings must be cubic phase gates")
    comp = doped_compress(c)
    phi = comp.core_state(core_cutoff, leak_budget)
    return overlap_estimate(target, comp.G, phi, eps)


# ---------------------------------------------------------------- photon addition / subtraction

@dataclass(frozen=True, eq=False)
class StrongSimulation:
    compression: DopedCompression
    core: fk.FockState          # normalized core state phi
    normalizer: float           # sum of |amplitudes|^2 of the unnormalized core
    support_report: dict
    output: fk.FockState        # G (phi (x) vac) in the Fock backend

    def density(self, alphas) -> np.ndarray:
        """Heterodyne density Q(alpha) = |<alpha|psi>|^2 / pi^n, batch over rows."""
        return fk.husimi_density(self.output, alphas)

    def mc_normalization(self, n_samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
        """Importance-sampled integral of Q with a Gaussian proposal; returns (mean, stderr)."""
        rng = np.random.default_rng(seed)
        mom = fk.moments(self.output)
        n = self.output.n_modes
        mean = gs.r_to_beta(mom.m)
        cov = 0.5 * (mom.V + np.eye(2 * n))   # covariance of sqrt2 (Re a, Im a)
        cov = 1.5 * cov                        # widen the proposal for heavier tails
        x = rng.multivariate_normal(np.zeros(2 * n), cov, size=n_samples)
        alphas = mean[None, :] + (x[:, 0::2] + 1j * x[:, 1::2]) / np.sqrt(2.0)
        # density of alpha (in d^2n alpha measure) is 2^n times the density of x
        inv = np.linalg.inv(cov)
        logp = (-0.5 * np.einsum("bi,ij,bj->b", x, inv, x)
                - 0.5 * np.linalg.slogdet(2 * np.pi * cov)[1] + n * np.log(2.0))
        w = self.density(alphas) / np.exp(logp)
        return float(w.mean()), float(w.std(ddof=1) / np.sqrt(n_samples))


def photadd_strong_sim(c: CircuitDesc, cutoff: int | None = None,
                       leak_budget: float = 1e-8) -> StrongSimulation:
    if any(not isinstance(g, (fk.Create, fk.Annihilate)) for g in c.dopings):
        raise ValidationError("all dopings must be ladder-operator powers")
    comp = doped_compress(c)
    raw = comp.core_state(0, normalize=False)
    norm2 = float(np.sum(np.abs(raw.vec) ** 2))
    if norm2 <= 1e-24:
        raise NullOutputError()
    phi = raw.normalized()
    s, M = c.s, c.max_power
    nz = np.abs(raw.vec) > 1e-12 * np.sqrt(norm2)
    d = int(np.max(raw.basis.totals[nz], initial=0))
    report = {"s": s, "M": M, "kappa": c.kappa, "d": d, "d_bound": 2 * s * M,
              "support": int(np.sum(nz)), "support_bound": (2 * s * M + 1) ** s}
    n = c.n_modes
    cut = cutoff
    if cut is None:
        mean = fk.energy_moments(phi)["photons"] if comp.n_core else 0.0
        g_ph = gs.energy_and_photon(gs.state_of(comp.G))["mean_photon"]
        cut = max(phi.cutoff + 4, int(np.ceil(2 * (mean + 1) * (g_ph + 1) + 8)))
    while True:
        try:
            out = comp.output_state(cut, 0, leak_budget)
            break
        except Exception as exc:  # leak: widen the truncation
            if not isinstance(exc, LeakError) or cutoff is not None or cut > 80:
                raise
            cut += 6
    if fk.basis_size(n, cut) > fk.MAX_DIM:
        raise CutoffInfeasibleError("strong simulation", cut, fk.basis_size(n, cut), fk.MAX_DIM)
    report["cutoff"] = cut
    report["leak"] = out.leak
    return StrongSimulation(comp, phi, norm2, report, out.normalized())
