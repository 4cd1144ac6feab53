"""Truncated Fock-space backend.

States live on the simplex basis {k : k_1 + ... + k_n <= cutoff}, ordered by
total photon number and then lexicographically, so the basis of a smaller
cutoff is a prefix of a larger one. Gates are applied by exponentiating their
(sparse) generators on a basis padded by a few photons; the norm that ends up
beyond the cutoff is reported as the truncation leak.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln
from scipy.stats import poisson

from . import _kernels
from . import gaussian as gs
from .config import DEFAULT
from .errors import LeakError, NullOutputError, ValidationError

PAD = 8           # extra photons used while exponentiating generators
MAX_DIM = 400_000  # refuse to build larger bases


# ---------------------------------------------------------------- basis

def basis_size(n_modes: int, cutoff: int) -> int:
    from math import comb
    return comb(cutoff + n_modes, n_modes)


class Basis:
    """Simplex Fock basis with vectorized tuple -> index lookup."""

    def __init__(self, n_modes: int, cutoff: int):
        if n_modes < 0 or cutoff < 0:
            raise ValidationError("n_modes and cutoff must be non-negative")
        size = basis_size(n_modes, cutoff)
        if size > MAX_DIM:
            raise ValidationError(f"basis with {n_modes} modes and cutoff {cutoff} has {size} "
                                  f"states (limit {MAX_DIM})")
        self.n_modes, self.cutoff = n_modes, cutoff
        rows = []
        for tot in range(cutoff + 1):
            layer = [c for c in _compositions(tot, n_modes)]
            rows.extend(layer)
        self.tuples = np.array(rows, dtype=np.int64).reshape(len(rows), n_modes)
        self.totals = self.tuples.sum(axis=1)
        self.layers = np.searchsorted(self.totals, np.arange(-1, cutoff + 1), side="right")
        self.layers[0] = 0
        self.radix = (cutoff + 1) ** np.arange(n_modes - 1, -1, -1, dtype=np.int64)
        self.keys = self.tuples @ self.radix
        self._order = np.argsort(self.keys, kind="stable")
        self._sorted = self.keys[self._order]

    def __len__(self):
        return self.tuples.shape[0]

    def index(self, tuples) -> np.ndarray:
        """Indices of the given tuples, -1 where outside the basis."""
        t = np.asarray(tuples, dtype=np.int64)
        if t.ndim == 1:
            t = t[None, :]
        ok = np.all(t >= 0, axis=1) & (t.sum(axis=1) <= self.cutoff)
        keys = np.where(ok, np.where(ok[:, None], t, 0) @ self.radix, -1)
        pos = np.clip(np.searchsorted(self._sorted, keys), 0, len(self) - 1)
        return np.where(ok & (self._sorted[pos] == keys), self._order[pos], -1)

    @property
    def lower(self) -> np.ndarray:
        """lower[i, j] = index of tuple_i - e_j, -1 if tuple_i has no photon in mode j."""
        if not hasattr(self, "_lower"):
            out = np.full((len(self), self.n_modes), -1, dtype=np.int64)
            for j in range(self.n_modes):
                t = self.tuples.copy()
                t[:, j] -= 1
                out[:, j] = self.index(t)
            self._lower = out
        return self._lower


def _compositions(total: int, n: int):
    """All n-tuples of non-negative ints summing to total, lexicographically descending."""
    if n == 0:
        if total == 0:
            yield ()
        return
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


@lru_cache(maxsize=64)
def get_basis(n_modes: int, cutoff: int) -> Basis:
    return Basis(n_modes, cutoff)


@lru_cache(maxsize=256)
def annihilation(n_modes: int, cutoff: int, mode: int) -> sps.csr_matrix:
    b = get_basis(n_modes, cutoff)
    rows = b.lower[:, mode]
    cols = np.flatnonzero(rows >= 0)
    vals = np.sqrt(b.tuples[cols, mode].astype(float))
    return sps.csr_matrix((vals, (rows[cols], cols)), shape=(len(b), len(b)))


def quadratures(n_modes: int, cutoff: int, mode: int):
    a = annihilation(n_modes, cutoff, mode)
    ad = a.T.tocsr()
    return (a + ad) / np.sqrt(2.0), (a - ad) / (1j * np.sqrt(2.0))


# ---------------------------------------------------------------- states

@dataclass(frozen=True, eq=False)
class FockState:
    """Pure (possibly unnormalized) state on the simplex basis.

    Amplitudes are stored densely in basis order; `as_dict` gives the sparse
    tuple -> amplitude view.
    """
    n_modes: int
    cutoff: int
    vec: np.ndarray
    leak: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.complex128).ravel()
        if v.size != basis_size(self.n_modes, self.cutoff):
            raise ValidationError(f"amplitude vector has {v.size} entries, basis needs "
                                  f"{basis_size(self.n_modes, self.cutoff)}")
        object.__setattr__(self, "vec", v)

    @property
    def basis(self) -> Basis:
        return get_basis(self.n_modes, self.cutoff)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def normalized(self) -> "FockState":
        nv = self.norm
        if nv == 0:
            raise NullOutputError("state has zero norm")
        return FockState(self.n_modes, self.cutoff, self.vec / nv, self.leak)

    def amplitude(self, k) -> complex:
        i = self.basis.index([k])[0]
        return complex(self.vec[i]) if i >= 0 else 0.0j

    def as_dict(self, tol: float = 0.0) -> dict:
        nz = np.flatnonzero(np.abs(self.vec) > tol)
        return {tuple(int(x) for x in self.basis.tuples[i]): complex(self.vec[i]) for i in nz}

    @classmethod
    def from_dict(cls, n_modes: int, cutoff: int, amps: dict) -> "FockState":
        b = get_basis(n_modes, cutoff)
        vec = np.zeros(len(b), dtype=np.complex128)
        if amps:
            keys = list(amps)
            idx = b.index(keys)
            if np.any(idx < 0):
                bad = [k for k, i in zip(keys, idx) if i < 0][0]
                raise ValidationError(f"tuple {bad} exceeds cutoff {cutoff}")
            vec[idx] = [amps[k] for k in keys]
        return cls(n_modes, cutoff, vec)

    def with_cutoff(self, cutoff: int) -> "FockState":
        """Pad with zeros or truncate (truncated norm is added to the leak)."""
        size = basis_size(self.n_modes, cutoff)
        if cutoff >= self.cutoff:
            vec = np.zeros(size, dtype=np.complex128)
            vec[:self.vec.size] = self.vec
            return FockState(self.n_modes, cutoff, vec, self.leak)
        lost = float(np.sum(np.abs(self.vec[size:]) ** 2))
        return FockState(self.n_modes, cutoff, self.vec[:size].copy(), self.leak + lost)

    def photon_distribution(self) -> np.ndarray:
        p = np.abs(self.vec) ** 2
        return np.bincount(self.basis.totals, weights=p, minlength=self.cutoff + 1)


def vacuum(n_modes: int, cutoff: int = 0) -> FockState:
    vec = np.zeros(basis_size(n_modes, cutoff), dtype=np.complex128)
    vec[0] = 1.0
    return FockState(n_modes, cutoff, vec)


def fock(k, cutoff: int | None = None) -> FockState:
    k = tuple(int(x) for x in k)
    if any(x < 0 for x in k):
        raise ValidationError("photon numbers must be non-negative")
    cutoff = sum(k) if cutoff is None else cutoff
    if sum(k) > cutoff:
        raise ValidationError(f"Fock state {k} exceeds cutoff {cutoff}")
    return FockState.from_dict(len(k), cutoff, {k: 1.0})


def cutoff_for_photons(mean_photons: float, budget: float) -> int:
    """Smallest N with P(Poisson(mean) > N) <= budget (exact for coherent states)."""
    n = int(np.ceil(mean_photons))
    while poisson.sf(n, mean_photons) > budget:
        n += 1
    return n


def coherent(beta, cutoff: int | None = None, leak_budget: float = DEFAULT.leak,
             auto_cutoff: bool = True) -> FockState:
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    mean = float(np.sum(np.abs(beta) ** 2))
    need = cutoff_for_photons(mean, leak_budget)
    if cutoff is None or (auto_cutoff and cutoff < need):
        cutoff = need if cutoff is None else max(cutoff, need)
    b = get_basis(beta.size, cutoff)
    logamp = np.sum(b.tuples * np.log(np.where(beta == 0, 1.0, beta))[None, :] -
                    gammaln(b.tuples + 1.0) / 2, axis=1)
    zero = np.any((b.tuples > 0) & (beta == 0)[None, :], axis=1)
    vec = np.where(zero, 0.0, np.exp(logamp - mean / 2))
    leak = max(0.0, 1.0 - float(np.sum(np.abs(vec) ** 2)))
    if leak > leak_budget:
        raise LeakError("coherent", leak, leak_budget)
    return FockState(beta.size, cutoff, vec, leak)


def gaussian_state(G: gs.GaussianUnitaryDesc, cutoff: int,
                   leak_budget: float | None = DEFAULT.leak) -> FockState:
    """G|0> from the stellar recursion. The leak is exactly 1 - norm^2."""
    st = gs.stellar_of_desc(G)
    return stellar_state(st, G.n_modes, cutoff, leak_budget, "gaussian_state")


def stellar_state(st: gs.StellarGaussian, n_modes: int, cutoff: int,
                  leak_budget: float | None = DEFAULT.leak, name: str = "stellar") -> FockState:
    b = get_basis(n_modes, cutoff)
    vec = _kernels.stellar_recursion(b.tuples, b.lower, b.layers, st.A, st.w, st.amplitude_at_zero)
    leak = max(0.0, 1.0 - float(np.sum(np.abs(vec) ** 2)))
    if leak_budget is not None and leak > leak_budget:
        raise LeakError(name, leak, leak_budget)
    return FockState(n_modes, cutoff, vec, leak)


def tensor(a: FockState, b: FockState, cutoff: int | None = None) -> FockState:
    cutoff = a.cutoff + b.cutoff if cutoff is None else cutoff
    n = a.n_modes + b.n_modes
    basis = get_basis(n, cutoff)
    ia, ib = np.flatnonzero(a.vec), np.flatnonzero(b.vec)
    ta, tb = a.basis.tuples[ia], b.basis.tuples[ib]
    pairs = np.concatenate([np.repeat(ta, len(ib), axis=0), np.tile(tb, (len(ia), 1))], axis=1)
    amps = np.outer(a.vec[ia], b.vec[ib]).ravel()
    idx = basis.index(pairs)
    keep = idx >= 0
    vec = np.zeros(len(basis), dtype=np.complex128)
    vec[idx[keep]] = amps[keep]
    lost = float(np.sum(np.abs(amps[~keep]) ** 2))
    return FockState(n, cutoff, vec, a.leak + b.leak + lost)


def embed_vacuum(st: FockState, n_extra: int) -> FockState:
    """st (x) |0>^{n_extra}, same cutoff."""
    if n_extra == 0:
        return st
    return tensor(st, vacuum(n_extra, 0), cutoff=st.cutoff)


def project_vacuum(st: FockState, modes) -> FockState:
    """(<0| on `modes`) st, an unnormalized state on the remaining modes."""
    modes = sorted(set(modes))
    keep = [q for q in range(st.n_modes) if q not in modes]
    t = st.basis.tuples
    sel = np.flatnonzero(np.all(t[:, modes] == 0, axis=1)) if modes else np.arange(len(t))
    out = get_basis(len(keep), st.cutoff)
    vec = np.zeros(len(out), dtype=np.complex128)
    vec[out.index(t[sel][:, keep])] = st.vec[sel]
    return FockState(len(keep), st.cutoff, vec, st.leak)


def permute_modes(st: FockState, order) -> FockState:
    """New state whose mode j is the old mode order[j]."""
    order = list(order)
    t = st.basis.tuples[:, order]
    vec = np.zeros_like(st.vec)
    vec[st.basis.index(t)] = st.vec
    return FockState(st.n_modes, st.cutoff, vec, st.leak)


# ---------------------------------------------------------------- gates

@dataclass(frozen=True)
class Displace:
    beta: tuple
    modes: tuple


@dataclass(frozen=True)
class Squeeze:
    xi: float
    mode: int


@dataclass(frozen=True, eq=False)
class Passive:
    U: np.ndarray
    modes: tuple


@dataclass(frozen=True, eq=False)
class Gaussian:
    G: gs.GaussianUnitaryDesc
    modes: tuple


@dataclass(frozen=True)
class Cubic:
    """exp(i gamma x_mode^3)."""
    gamma: float
    mode: int


@dataclass(frozen=True, eq=False)
class CubicPoly:
    """exp(i gamma (w.R + c)^3) for a real 2n-vector w over all modes."""
    gamma: float
    w: np.ndarray
    c: float = 0.0


@dataclass(frozen=True)
class Create:
    mode: int
    power: int = 1


@dataclass(frozen=True)
class Annihilate:
    mode: int
    power: int = 1


def _evolve(st: FockState, gen_fn, name: str, leak_budget: float, pad: int = PAD) -> FockState:
    """exp(K) st with K = gen_fn(n_modes, padded_cutoff), leak = norm beyond the cutoff."""
    big = st.with_cutoff(st.cutoff + pad)
    K = gen_fn(st.n_modes, big.cutoff)
    out = expm_multiply(K, big.vec) if K.nnz else big.vec
    size = basis_size(st.n_modes, st.cutoff)
    leak = float(np.sum(np.abs(out[size:]) ** 2))
    if leak > leak_budget:
        raise LeakError(name, leak, leak_budget)
    return FockState(st.n_modes, st.cutoff, out[:size].copy(), st.leak + leak)


def _displacement_gen(beta, modes):
    def gen(n, c):
        K = sps.csr_matrix((basis_size(n, c),) * 2, dtype=np.complex128)
        for b, q in zip(beta, modes):
            a = annihilation(n, c, q)
            K = K + b * a.T - np.conj(b) * a
        return K.tocsr()
    return gen


def _squeeze_gen(xi, mode):
    def gen(n, c):
        a = annihilation(n, c, mode)
        a2 = a @ a
        return (0.5 * xi * (a2.T - a2)).astype(np.complex128).tocsr()
    return gen


def _passive_gen(U, modes):
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    # K = sum_ij L_ij a_i^dag a_j with L = log(conj U), anti-Hermitian
    from scipy.linalg import schur
    T, Z = schur(U.conj(), output="complex")
    L = Z @ np.diag(1j * np.angle(np.diag(T))) @ Z.conj().T

    def gen(n, c):
        K = sps.csr_matrix((basis_size(n, c),) * 2, dtype=np.complex128)
        ops = [annihilation(n, c, q) for q in modes]
        for i, ai in enumerate(ops):
            for j, aj in enumerate(ops):
                if abs(L[i, j]) > 1e-15:
                    K = K + L[i, j] * (ai.T @ aj)
        return K.tocsr()
    return gen


def _cubic_gen(gamma, w, c):
    w = np.asarray(w, dtype=float)

    def gen(n, cut):
        X = sps.identity(basis_size(n, cut), dtype=np.complex128, format="csr") * c
        for q in range(n):
            xq, pq = quadratures(n, cut, q)
            if w[2 * q]:
                X = X + w[2 * q] * xq
            if w[2 * q + 1]:
                X = X + w[2 * q + 1] * pq
        return (1j * gamma * (X @ X @ X)).tocsr()
    return gen


def apply_gate(st: FockState, gate, leak_budget: float = DEFAULT.leak, pad: int = PAD):
    """Apply one gate. Unitary gates return a FockState; ladder gates return (state, norm)
    where the state is unnormalized and norm is its norm."""
    n = st.n_modes
    if isinstance(gate, Displace):
        return _evolve(st, _displacement_gen(gate.beta, gate.modes), "displace", leak_budget, pad)
    if isinstance(gate, Squeeze):
        if gate.xi == 0:
            return st
        return _evolve(st, _squeeze_gen(gate.xi, gate.mode), "squeeze", leak_budget, pad)
    if isinstance(gate, Passive):
        # number conserving: no padding needed
        return _evolve(st, _passive_gen(gate.U, gate.modes), "passive", leak_budget, pad=0)
    if isinstance(gate, Cubic):
        w = np.zeros(2 * n)
        w[2 * gate.mode] = 1.0
        return _evolve(st, _cubic_gen(gate.gamma, w, 0.0), "cubic", leak_budget, pad)
    if isinstance(gate, CubicPoly):
        return _evolve(st, _cubic_gen(gate.gamma, gate.w, gate.c), "cubic", leak_budget, pad)
    if isinstance(gate, Gaussian):
        return apply_gaussian(st, gate.G, gate.modes, leak_budget, pad)
    if isinstance(gate, Create):
        big = st.with_cutoff(st.cutoff + gate.power)
        a_dag = annihilation(n, big.cutoff, gate.mode).T.tocsr()
        v = big.vec
        for _ in range(gate.power):
            v = a_dag @ v
        out = FockState(n, big.cutoff, v, st.leak)
        return out, out.norm
    if isinstance(gate, Annihilate):
        a = annihilation(n, st.cutoff, gate.mode)
        v = st.vec
        for _ in range(gate.power):
            v = a @ v
        out = FockState(n, st.cutoff, v, st.leak)
        return out, out.norm
    raise ValidationError(f"unknown gate {gate!r}")


def apply_gaussian(st: FockState, G: gs.GaussianUnitaryDesc, modes=None,
                   leak_budget: float = DEFAULT.leak, pad: int = PAD) -> FockState:
    """Apply G = G_U S(xi) D(beta) G_V (Euler factors) on the listed modes."""
    modes = tuple(range(st.n_modes)) if modes is None else tuple(modes)
    p = gs.desc_to_params(G)
    out = apply_gate(st, Passive(p.V, modes), leak_budget, pad)
    if np.any(np.abs(p.beta) > 0):
        out = apply_gate(out, Displace(tuple(p.beta), modes), leak_budget, pad)
    for xi, q in zip(p.xi, modes):
        if xi > 1e-15:
            out = apply_gate(out, Squeeze(float(xi), q), leak_budget, pad)
    return apply_gate(out, Passive(p.U, modes), leak_budget, pad)


# ---------------------------------------------------------------- observables

def overlap(a: FockState, b: FockState) -> complex:
    """<a|b>; states are compared on the larger cutoff."""
    if a.n_modes != b.n_modes:
        raise ValidationError("overlap of states with different mode counts")
    c = max(a.cutoff, b.cutoff)
    return complex(np.vdot(a.with_cutoff(c).vec, b.with_cutoff(c).vec))


def fidelity_pure(a: FockState, b: FockState) -> float:
    return abs(overlap(a, b)) ** 2 / (a.norm ** 2 * b.norm ** 2)


def moments(st: FockState) -> gs.GaussianMoments:
    """First moments and covariance (anticommutator convention) of the normalized state."""
    n, c = st.n_modes, st.cutoff
    psi = st.vec / st.norm
    avs = [annihilation(n, c, j) @ psi for j in range(n)]
    a1 = np.array([np.vdot(psi, v) for v in avs])
    aa = np.array([[np.vdot(psi, annihilation(n, c, j) @ avs[k]) for k in range(n)] for j in range(n)])
    N = np.array([[np.vdot(avs[j], avs[k]) for k in range(n)] for j in range(n)])
    eye = np.eye(n)
    # symmetrized second moments of b = (a_1..a_n, a_1^dag..a_n^dag)
    Sb = np.block([[aa, N.T + eye / 2], [N + eye / 2, aa.conj()]])
    T = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        T[2 * j, j], T[2 * j, n + j] = 1 / np.sqrt(2), 1 / np.sqrt(2)
        T[2 * j + 1, j], T[2 * j + 1, n + j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
    m = (T @ np.concatenate([a1, a1.conj()])).real
    second = (T @ Sb @ T.T).real
    return gs.GaussianMoments(m, 2 * (second - np.outer(m, m)))


def energy_moments(st: FockState) -> dict:
    """Tr[E psi] and Tr[E^2 psi] for E = sum_j (a_j^dag a_j + 1/2)."""
    p = np.abs(st.vec) ** 2 / st.norm ** 2
    e = st.basis.totals + st.n_modes / 2.0
    return {"energy": float(p @ e), "energy2": float(p @ e ** 2), "photons": float(p @ st.basis.totals)}


def heterodyne_project(st: FockState, alpha, modes):
    """Project `modes` onto coherent states |alpha>.

    Returns (post_state or None, density) with density = ||<alpha|psi>||^2 / pi^|modes|.
    The post state is normalized; None when the projection vanishes.
    """
    modes = list(modes)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if len(modes) != alpha.size or len(set(modes)) != len(modes) or \
            any(q < 0 or q >= st.n_modes for q in modes):
        raise ValidationError("invalid heterodyne modes")
    keep = [q for q in range(st.n_modes) if q not in modes]
    t = st.basis.tuples
    sub_a = get_basis(len(modes), st.cutoff)
    sub_b = get_basis(len(keep), st.cutoff)
    src = sub_a.index(t[:, modes])
    dst = sub_b.index(t[:, keep])
    ca = np.conj(alpha)
    logc = gammaln(sub_a.tuples + 1.0) / 2
    coef = np.prod(np.where(sub_a.tuples > 0, ca[None, :] ** sub_a.tuples, 1.0) * np.exp(-logc), axis=1)
    coef = coef * np.exp(-np.sum(np.abs(alpha) ** 2) / 2)
    out = _kernels.heterodyne_accumulate(st.vec / st.norm, src, dst, coef, len(sub_b))
    dens = float(np.sum(np.abs(out) ** 2)) / np.pi ** len(modes)
    if dens <= 1e-300:
        return None, 0.0
    post = FockState(len(keep), st.cutoff, out / np.linalg.norm(out), st.leak)
    return post, dens


def husimi_density(st: FockState, alphas) -> np.ndarray:
    """Q(alpha) = |<alpha|psi>|^2 / pi^n for a batch of points (shape (B, n) or (n,))."""
    alphas = np.asarray(alphas, dtype=complex)
    single = alphas.ndim == 1
    alphas = np.atleast_2d(alphas)
    if alphas.shape[1] != st.n_modes:
        raise ValidationError("point dimension does not match the number of modes")
    ov = _kernels.coherent_overlaps(st.basis.tuples, st.vec / st.norm, alphas, st.cutoff)
    q = np.abs(ov) ** 2 * np.exp(-np.sum(np.abs(alphas) ** 2, axis=1)) / np.pi ** st.n_modes
    return q[0] if single else q


# ---------------------------------------------------------------- density operators

@dataclass(frozen=True, eq=False)
class DensityOp:
    n_modes: int
    cutoff: int
    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=np.complex128)
        d = basis_size(self.n_modes, self.cutoff)
        if r.shape != (d, d):
            raise ValidationError(f"density matrix must be {d}x{d}")
        object.__setattr__(self, "rho", r)

    @classmethod
    def from_pure(cls, st: FockState) -> "DensityOp":
        v = st.vec / st.norm
        return cls(st.n_modes, st.cutoff, np.outer(v, v.conj()))

    @classmethod
    def mixture(cls, weights, states) -> "DensityOp":
        c = max(s.cutoff for s in states)
        rho = sum(w * DensityOp.from_pure(s.with_cutoff(c)).rho for w, s in zip(weights, states))
        return cls(states[0].n_modes, c, rho)

    def with_cutoff(self, cutoff: int) -> "DensityOp":
        d = basis_size(self.n_modes, cutoff)
        if cutoff < self.cutoff:
            return DensityOp(self.n_modes, cutoff, self.rho[:d, :d].copy())
        r = np.zeros((d, d), dtype=np.complex128)
        k = self.rho.shape[0]
        r[:k, :k] = self.rho
        return DensityOp(self.n_modes, cutoff, r)

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def expectation_energy2(self) -> float:
        e = get_basis(self.n_modes, self.cutoff).totals + self.n_modes / 2.0
        return float(np.real(np.diag(self.rho)) @ e ** 2)

    def expectation_energy(self) -> float:
        e = get_basis(self.n_modes, self.cutoff).totals + self.n_modes / 2.0
        return float(np.real(np.diag(self.rho)) @ e)

    def partial_trace(self, keep) -> "DensityOp":
        keep = list(keep)
        drop = [q for q in range(self.n_modes) if q not in keep]
        t = get_basis(self.n_modes, self.cutoff).tuples
        ka = get_basis(len(keep), self.cutoff).index(t[:, keep])
        kb = get_basis(len(drop), self.cutoff).index(t[:, drop])
        out = np.zeros((basis_size(len(keep), self.cutoff),) * 2, dtype=np.complex128)
        order = np.argsort(kb, kind="stable")
        bounds = np.flatnonzero(np.diff(kb[order])) + 1
        for grp in np.split(order, bounds):
            ia = ka[grp]
            out[np.ix_(ia, ia)] += self.rho[np.ix_(grp, grp)]
        return DensityOp(len(keep), self.cutoff, out)

    def partial_transpose(self, modes_b) -> np.ndarray:
        """Matrix of rho^{T_B}; entries whose partner tuple leaves the cutoff are zero."""
        modes_b = list(modes_b)
        b = get_basis(self.n_modes, self.cutoff)
        mask = np.zeros(self.n_modes, dtype=bool)
        mask[modes_b] = True
        ta = np.where(mask[None, :], 0, b.tuples)
        tb = np.where(mask[None, :], b.tuples, 0)
        # element (i, j) of rho^T_B is rho[(a_i, b_j), (a_j, b_i)]
        ka, kb = ta @ b.radix, tb @ b.radix
        tot_a, tot_b = ta.sum(1), tb.sum(1)
        keys = ka[:, None] + kb[None, :]
        ok = (tot_a[:, None] + tot_b[None, :]) <= self.cutoff
        pos = np.clip(np.searchsorted(b._sorted, keys), 0, len(b) - 1)
        row = np.where(ok & (b._sorted[pos] == keys), b._order[pos], -1)
        col = row.T
        valid = (row >= 0) & (col >= 0)
        out = np.zeros_like(self.rho)
        out[valid] = self.rho[row[valid], col[valid]]
        return out


def trace_norm_hermitian(X: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (X + X.conj().T)))))


def trace_distance(rho: DensityOp, sigma: DensityOp) -> float:
    """(1/2)||rho - sigma||_1."""
    if rho.n_modes != sigma.n_modes:
        raise ValidationError("trace distance between different mode counts")
    c = max(rho.cutoff, sigma.cutoff)
    return 0.5 * trace_norm_hermitian(rho.with_cutoff(c).rho - sigma.with_cutoff(c).rho)


def trace_distance_pure(a: FockState, b: FockState) -> float:
    """(1/2)|| |a><a| - |b><b| ||_1 = sqrt(1 - |<a|b>|^2) for normalized a, b."""
    return float(np.sqrt(max(0.0, 1.0 - fidelity_pure(a, b))))


def log_negativity(rho: DensityOp, modes_b) -> float:
    return float(np.log(trace_norm_hermitian(rho.partial_transpose(modes_b))))


def energy_operator_matrix(n_modes: int, cutoff: int) -> np.ndarray:
    return np.diag(get_basis(n_modes, cutoff).totals + n_modes / 2.0)


def random_state(n_modes: int, cutoff: int, rng: np.random.Generator,
                 max_photons: int | None = None) -> FockState:
    """Random normalized state supported on total photon number <= max_photons."""
    b = get_basis(n_modes, cutoff)
    top = cutoff if max_photons is None else max_photons
    size = int(b.layers[top + 1])
    vec = np.zeros(len(b), dtype=np.complex128)
    vec[:size] = rng.normal(size=size) + 1j * rng.normal(size=size)
    return FockState(n_modes, cutoff, vec / np.linalg.norm(vec))
