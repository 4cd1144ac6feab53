"""Gaussian unitaries and states at the level of first and second moments.

A Gaussian unitary is stored as (S, r): it maps first moments m -> S m + r
and covariance matrices V -> S V S^T. The complex parametrization
G = G_U S(xi) D(beta) G_V is available as a view.

Operator conventions (hbar = 1, vacuum covariance = I):
  a = (x + i p)/sqrt(2)
  D(beta) = exp(beta a^dag - beta^* a), first moment (sqrt2 Re beta, sqrt2 Im beta)
  S(xi) = exp(xi (a^dag^2 - a^2)/2), symplectic diag(e^xi, e^-xi)
  G_U^dag a G_U = conj(U) a, so G_U |alpha> = |conj(U) alpha>
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symplectic as sp
from .config import DEFAULT, Tolerances
from .errors import ValidationError


def _vec(r, n: int | None = None) -> np.ndarray:
    r = np.asarray(r, dtype=float).ravel()
    if n is not None and r.shape != (2 * n,):
        raise ValidationError(f"expected a vector of length {2 * n}, got {r.shape}")
    return r


def beta_to_r(beta) -> np.ndarray:
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    return np.sqrt(2.0) * np.ravel(np.column_stack([beta.real, beta.imag]))


def r_to_beta(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (r[0::2] + 1j * r[1::2]) / np.sqrt(2.0)


@dataclass(frozen=True)
class GaussianUnitaryDesc:
    S: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        S = sp.check_symplectic(self.S, DEFAULT.symp, "S")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "r", _vec(self.r, S.shape[0] // 2))

    @property
    def n_modes(self) -> int:
        return self.S.shape[0] // 2

    @classmethod
    def identity(cls, n: int) -> "GaussianUnitaryDesc":
        return cls(np.eye(2 * n), np.zeros(2 * n))

    @classmethod
    def displacement(cls, beta) -> "GaussianUnitaryDesc":
        r = beta_to_r(beta)
        return cls(np.eye(r.size), r)

    @classmethod
    def squeezing(cls, xi) -> "GaussianUnitaryDesc":
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return cls(sp.squeeze_matrix(np.exp(xi)), np.zeros(2 * xi.size))

    @classmethod
    def passive(cls, U) -> "GaussianUnitaryDesc":
        O = sp.unitary_to_orthosymp(U)
        return cls(O, np.zeros(O.shape[0]))

    def compose(self, first: "GaussianUnitaryDesc") -> "GaussianUnitaryDesc":
        """self o first: apply `first`, then `self`."""
        if first.n_modes != self.n_modes:
            raise ValidationError("mode count mismatch in composition")
        return GaussianUnitaryDesc(self.S @ first.S, self.S @ first.r + self.r)

    def inverse(self) -> "GaussianUnitaryDesc":
        Si = sp.symplectic_inverse(self.S)
        return GaussianUnitaryDesc(Si, -Si @ self.r)

    def embed(self, n_total: int, modes) -> "GaussianUnitaryDesc":
        """Act on the listed modes of an n_total-mode system, identity elsewhere."""
        modes = list(modes)
        if len(modes) != self.n_modes or len(set(modes)) != len(modes) or \
                min(modes) < 0 or max(modes) >= n_total:
            raise ValidationError(f"invalid target modes {modes} for {n_total} modes")
        idx = np.ravel([[2 * q, 2 * q + 1] for q in modes])
        S = np.eye(2 * n_total)
        S[np.ix_(idx, idx)] = self.S
        r = np.zeros(2 * n_total)
        r[idx] = self.r
        return GaussianUnitaryDesc(S, r)

    def is_passive(self, tol: float = 1e-8) -> bool:
        return sp.is_orthosymplectic(self.S, tol) and float(np.max(np.abs(self.r), initial=0)) <= tol


def compose(*descs: GaussianUnitaryDesc) -> GaussianUnitaryDesc:
    """compose(G_k, ..., G_1) = G_k o ... o G_1 (rightmost acts first)."""
    out = descs[-1]
    for g in reversed(descs[:-1]):
        out = g.compose(out)
    return out


def direct_sum(g1: GaussianUnitaryDesc, g2: GaussianUnitaryDesc) -> GaussianUnitaryDesc:
    n1, n2 = g1.n_modes, g2.n_modes
    S = np.zeros((2 * (n1 + n2),) * 2)
    S[:2 * n1, :2 * n1] = g1.S
    S[2 * n1:, 2 * n1:] = g2.S
    return GaussianUnitaryDesc(S, np.concatenate([g1.r, g2.r]))


@dataclass(frozen=True)
class GaussianMoments:
    m: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        n = sp.n_modes_of(V)
        object.__setattr__(self, "V", 0.5 * (V + V.T))
        object.__setattr__(self, "m", _vec(self.m, n))

    @property
    def n_modes(self) -> int:
        return self.V.shape[0] // 2

    @classmethod
    def vacuum(cls, n: int) -> "GaussianMoments":
        return cls(np.zeros(2 * n), np.eye(2 * n))

    def validate(self, tol: Tolerances = DEFAULT) -> "GaussianMoments":
        """Uncertainty relation V + i Omega >= 0."""
        lo = np.linalg.eigvalsh(self.V + 1j * sp.omega(self.n_modes)).min()
        if lo < -tol.symp * max(1.0, np.abs(self.V).max()):
            raise ValidationError(f"covariance violates the uncertainty relation (min eig {lo:.3e})")
        return self

    def restrict(self, modes) -> "GaussianMoments":
        idx = np.ravel([[2 * q, 2 * q + 1] for q in modes])
        return GaussianMoments(self.m[idx], self.V[np.ix_(idx, idx)])


def apply_to_moments(G: GaussianUnitaryDesc, st: GaussianMoments) -> GaussianMoments:
    if G.n_modes != st.n_modes:
        raise ValidationError(f"unitary on {G.n_modes} modes applied to {st.n_modes}-mode moments")
    return GaussianMoments(G.S @ st.m + G.r, G.S @ st.V @ G.S.T)


def state_of(G: GaussianUnitaryDesc) -> GaussianMoments:
    """Moments of G|0>."""
    return apply_to_moments(G, GaussianMoments.vacuum(G.n_modes))


def energy_and_photon(st: GaussianMoments) -> dict:
    """Tr[E rho] = Tr V/4 + |m|^2/2 and mean photon number Tr[V - I]/4 + |m|^2/2."""
    mm = float(st.m @ st.m) / 2.0
    tr = float(np.trace(st.V))
    return {"mean_energy": tr / 4.0 + mm, "mean_photon": (tr - st.V.shape[0]) / 4.0 + mm}


@dataclass(frozen=True)
class NormalModes:
    displacement: np.ndarray
    S: np.ndarray
    nu: np.ndarray

    def reconstruct(self) -> GaussianMoments:
        return GaussianMoments(self.displacement,
                               self.S @ np.diag(np.repeat(2 * self.nu + 1, 2)) @ self.S.T)


def normal_mode_decomposition(st: GaussianMoments, tol: Tolerances = DEFAULT) -> NormalModes:
    """rho = D_m U_S (thermal states with occupations nu) U_S^dag D_m^dag."""
    w = sp.williamson(st.V, tol)
    return NormalModes(displacement=st.m.copy(), S=w.S, nu=(w.d - 1.0) / 2.0)


# ---------------------------------------------------------------- parametrization

@dataclass(frozen=True)
class GaussianParams:
    """G = G_U S(xi) D(beta) G_V."""
    U: np.ndarray
    xi: np.ndarray
    beta: np.ndarray
    V: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.xi)


def desc_to_params(G: GaussianUnitaryDesc, tol: Tolerances = DEFAULT) -> GaussianParams:
    e = sp.euler(G.S, tol)
    Z = e.Z
    r_beta = np.linalg.solve(Z, e.O1.T @ G.r)
    return GaussianParams(U=sp.orthosymp_to_unitary(e.O1, tol), xi=np.log(e.z),
                          beta=r_to_beta(r_beta), V=sp.orthosymp_to_unitary(e.O2, tol))


def params_to_desc(p: GaussianParams) -> GaussianUnitaryDesc:
    return compose(GaussianUnitaryDesc.passive(p.U), GaussianUnitaryDesc.squeezing(p.xi),
                   GaussianUnitaryDesc.displacement(p.beta), GaussianUnitaryDesc.passive(p.V))


def pure_params_from_moments(st: GaussianMoments, tol: Tolerances = DEFAULT) -> GaussianParams:
    """Parameters (U, xi, beta) with G_U S(xi) D(beta)|0> having moments st (must be pure)."""
    w = sp.williamson(st.V, tol)
    if np.max(np.abs(w.d - 1.0)) > 1e-6:
        raise ValidationError("moments do not describe a pure Gaussian state")
    return desc_to_params(GaussianUnitaryDesc(w.S, st.m), tol)


# ---------------------------------------------------------------- stellar functions

@dataclass(frozen=True)
class StellarGaussian:
    """F(z) = exp(z^T A z / 2 + w^T z + C) / N."""
    A: np.ndarray
    w: np.ndarray
    C: complex
    N: float

    def __call__(self, z) -> complex | np.ndarray:
        z = np.asarray(z, dtype=complex)
        quad = 0.5 * np.einsum("...i,ij,...j->...", z, self.A, z)
        return np.exp(quad + z @ self.w + self.C) / self.N

    @property
    def amplitude_at_zero(self) -> complex:
        return complex(np.exp(self.C) / self.N)


def stellar_of_gaussian(p: GaussianParams) -> StellarGaussian:
    """Stellar function of the pure state G_U S(xi) D(beta)|0>.

    With t = tanh(xi): A = conj(U) diag(t) U^dag, w = conj(U) (beta / cosh xi),
    C = -sum(t beta^2 + |beta|^2)/2, N = sqrt(prod cosh xi).
    """
    U = np.atleast_2d(np.asarray(p.U, dtype=complex))
    xi = np.asarray(p.xi, dtype=float)
    beta = np.asarray(p.beta, dtype=complex)
    if np.any(xi < 0):
        raise ValidationError("squeezing parameters must be non-negative")
    t = np.tanh(xi)
    A = U.conj() @ np.diag(t) @ U.conj().T
    A = 0.5 * (A + A.T)
    w = U.conj() @ (beta / np.cosh(xi))
    C = complex(-0.5 * np.sum(t * beta ** 2 + np.abs(beta) ** 2))
    return StellarGaussian(A=A, w=w, C=C, N=float(np.sqrt(np.prod(np.cosh(xi)))))


def stellar_of_desc(G: GaussianUnitaryDesc) -> StellarGaussian:
    """Stellar function of G|0> (global phase fixed by the Euler factors of G)."""
    return stellar_of_gaussian(desc_to_params(G))


# ---------------------------------------------------------------- block decomposition

@dataclass(frozen=True)
class BlockDecomposition:
    Gp: GaussianUnitaryDesc     # passive, n modes
    G2k: GaussianUnitaryDesc    # first 2k modes
    Gtail: GaussianUnitaryDesc  # last n - k modes
    k: int

    def recompose(self) -> GaussianUnitaryDesc:
        n = self.Gp.n_modes
        tail = self.Gtail.embed(n, range(self.k, n))
        head = self.G2k.embed(n, range(2 * self.k))
        return compose(tail, head, self.Gp)


def _condition_on_vacuum(st: GaussianMoments, k: int) -> GaussianMoments:
    """Moments of the last n-k modes after projecting the first k onto the vacuum."""
    a = 2 * k
    A, B, C = st.V[:a, :a], st.V[a:, a:], st.V[a:, :a]
    X = C @ np.linalg.inv(A + np.eye(a))
    return GaussianMoments(st.m[a:] - X @ st.m[:a], B - X @ C.T)


def _pure_gaussian_preparer(st: GaussianMoments, tol: Tolerances) -> GaussianUnitaryDesc:
    w = sp.williamson(st.V, tol)
    return GaussianUnitaryDesc(w.S, st.m)


def _ladder_moments(st: GaussianMoments) -> np.ndarray:
    """N_ij = <a_i^dag a_j> from quadrature moments."""
    n = st.n_modes
    second = st.V / 2.0 + np.outer(st.m, st.m)  # symmetrized <R_i R_j>
    x, p = slice(0, None, 2), slice(1, None, 2)
    xx, pp = second[x, x], second[p, p]
    xp, px = second[x, p], second[p, x]
    # <a_i^dag a_j> = (<x_i x_j> + <p_i p_j> + i<x_i p_j> - i<p_i x_j>)/2 - delta_ij/2
    return 0.5 * (xx + pp + 1j * (xp - px)) - 0.5 * np.eye(n)


def block_decompose(G: GaussianUnitaryDesc, k: int, tol: Tolerances = DEFAULT) -> BlockDecomposition:
    """G = (I_k (x) Gtail)(G2k (x) I_{n-2k}) Gp with Gp passive.

    G2k additionally satisfies <0|^k G2k |0>^{2k} proportional to |0>^k.
    """
    n = G.n_modes
    if not (1 <= k and 2 * k <= n):
        raise ValidationError(f"block size k={k} must satisfy 1 <= k <= n/2 (n={n})")
    psi = state_of(G)
    g_cond = _pure_gaussian_preparer(_condition_on_vacuum(psi, k), tol)
    psi1 = apply_to_moments(g_cond.inverse().embed(n, range(k, n)), psi)
    # modes of the tail that psi1 leaves in the vacuum span the kernel of <a^dag a>
    N = _ladder_moments(psi1.restrict(range(k, n)))
    evals, evecs = np.linalg.eigh(0.5 * (N + N.conj().T))
    U2 = evecs[:, ::-1]
    Gtail = g_cond.compose(GaussianUnitaryDesc.passive(U2))
    chi = apply_to_moments(Gtail.inverse().embed(n, range(k, n)), psi)
    G2k = _pure_gaussian_preparer(chi.restrict(range(2 * k)), tol)
    rest = compose(G2k.inverse().embed(n, range(2 * k)), Gtail.inverse().embed(n, range(k, n)), G)
    O = rest.S
    # project the residual onto the passive group to remove round-off
    Uo = sp.orthosymp_to_unitary(O, Tolerances(symp=max(1e-6, tol.symp)))
    uu, _, vv = np.linalg.svd(Uo)
    Gp = GaussianUnitaryDesc.passive(uu @ vv)
    return BlockDecomposition(Gp=Gp, G2k=G2k, Gtail=Gtail, k=k)


def disentangle_unitary(st: GaussianMoments, tol: Tolerances = DEFAULT) -> GaussianUnitaryDesc:
    """Unitary on the last 3m/2 modes that disentangles an (m + m)-mode Gaussian state.

    Uses the normal-mode form rho = G (thermal) G^dag, block-decomposes G with
    k = m/2 and returns the inverse of the tail factor.
    """
    n = st.n_modes
    if n % 2:
        raise ValidationError("state must have an even number of modes (m + m)")
    m = n // 2
    if m % 2:
        raise ValidationError(f"party size m={m} must be even")
    nm = normal_mode_decomposition(st, tol)
    bd = block_decompose(GaussianUnitaryDesc(nm.S, nm.displacement), m // 2, tol)
    return bd.Gtail.inverse()


def gaussian_log_negativity(st: GaussianMoments, n_a: int) -> float:
    """Log-negativity of a Gaussian state across first n_a modes | rest, from moments."""
    n = st.n_modes
    flip = np.ones(2 * n)
    flip[2 * n_a + 1::2] = -1.0  # p -> -p on party B
    Vt = flip[:, None] * st.V * flip[None, :]
    M = sp._sqrtm_sym(Vt)
    A = M @ sp.omega(n) @ M
    d = np.sort(np.abs(np.linalg.eigvalsh(1j * (A - A.T) / 2)))[::2]
    return float(np.sum(np.maximum(0.0, -np.log(d))))


def random_gaussian_unitary(n: int, rng: np.random.Generator, max_squeeze: float = 0.5,
                            max_disp: float = 0.5) -> GaussianUnitaryDesc:
    S = sp.random_symplectic(n, rng, max_squeeze)
    return GaussianUnitaryDesc(S, rng.uniform(-max_disp, max_disp, size=2 * n))


def bargmann_kernel(p: GaussianParams) -> StellarGaussian:
    """Generating function of the matrix elements of G = G_U S(xi) D(beta) G_V.

    K(z, w) = sum_{m,k} <m|G|k> z^m w^k / sqrt(m! k!) is returned as a
    StellarGaussian over the 2n variables (z, w), so the stellar recursion on
    2n "modes" yields the matrix elements <m|G|k> directly.
    """
    U = np.atleast_2d(np.asarray(p.U, dtype=complex))
    Vm = np.atleast_2d(np.asarray(p.V, dtype=complex))
    xi = np.asarray(p.xi, dtype=float)
    beta = np.asarray(p.beta, dtype=complex)
    t, c = np.tanh(xi), np.cosh(xi)
    B = U.conj() / c[None, :]
    A_zz = U.conj() @ np.diag(t) @ U.conj().T
    A_zw = B @ Vm.conj()
    A_ww = -Vm.conj().T @ np.diag(t) @ Vm.conj()
    A = np.block([[A_zz, A_zw], [A_zw.T, A_ww]])
    w = np.concatenate([B @ beta, -Vm.conj().T @ (t * beta + beta.conj())])
    C = complex(-0.5 * np.sum(t * beta ** 2 + np.abs(beta) ** 2))
    return StellarGaussian(A=0.5 * (A + A.T), w=w, C=C, N=float(np.sqrt(np.prod(c))))
