"""Real symplectic linear algebra.

Conventions: quadratures are interleaved (x1, p1, ..., xn, pn), hbar = 1 and
the vacuum covariance matrix is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.stats import unitary_group

from .config import DEFAULT, Tolerances
from .errors import DegeneracyError, ValidationError

# eigenvalues closer than this (relative) are treated as one degenerate cluster
_CLUSTER_RTOL = 1e-9


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form, a direct sum of n blocks [[0, 1], [-1, 0]]."""
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValidationError(f"n_modes must be a positive integer, got {n_modes!r}")
    return np.kron(np.eye(int(n_modes)), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def n_modes_of(mat: np.ndarray) -> int:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
        raise ValidationError(f"expected a 2n x 2n matrix, got shape {mat.shape}")
    return mat.shape[0] // 2


def symplectic_defect(S: np.ndarray) -> float:
    """max |S Omega S^T - Omega|."""
    n = n_modes_of(S)
    om = omega(n)
    return float(np.max(np.abs(S @ om @ S.T - om)))


def is_symplectic(S, tol: float | None = None) -> bool:
    S = np.asarray(S, dtype=float)
    tol = DEFAULT.symp if tol is None else tol
    try:
        return symplectic_defect(S) <= tol * max(1.0, np.max(np.abs(S)) ** 2)
    except ValidationError:
        return False


def is_orthosymplectic(O, tol: float | None = None) -> bool:
    O = np.asarray(O, dtype=float)
    tol = DEFAULT.symp if tol is None else tol
    if not is_symplectic(O, tol):
        return False
    return float(np.max(np.abs(O @ O.T - np.eye(O.shape[0])))) <= tol


def check_symplectic(S, tol: float | None = None, what: str = "matrix") -> np.ndarray:
    S = np.asarray(S, dtype=float)
    n_modes_of(S)
    if not is_symplectic(S, tol):
        raise ValidationError(f"{what} is not symplectic (defect {symplectic_defect(S):.3e})")
    return S


def symplectic_inverse(S: np.ndarray) -> np.ndarray:
    """S^{-1} = -Omega S^T Omega."""
    om = omega(n_modes_of(S))
    return -om @ S.T @ om


def _check_covariance_input(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    n_modes_of(V)
    scale = max(1.0, float(np.max(np.abs(V))))
    if np.max(np.abs(V - V.T)) > 1e-10 * scale:
        raise ValidationError("matrix is not symmetric")
    V = 0.5 * (V + V.T)
    try:
        np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        raise ValidationError("matrix is not positive definite") from None
    return V


def _sqrtm_sym(V: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(V)
    return (Q * np.sqrt(w)) @ Q.T


def _paired_spectrum(V: np.ndarray, tol: Tolerances):
    """Eigen-decomposition of the Hermitian matrix i M Omega M, M = V^{1/2}.

    Its spectrum is {+d_j, -d_j}. Returns (M, d descending, positive
    eigenvectors in matching order).
    """
    n = n_modes_of(V)
    M = _sqrtm_sym(V)
    A = M @ omega(n) @ M
    A = 0.5 * (A - A.T)
    w, U = np.linalg.eigh(1j * A)
    pos = w[n:][::-1]
    neg = -w[:n]
    if np.any(pos <= 0) or np.max(np.abs(pos - neg)) > tol.pair * max(1.0, pos[0]):
        raise DegeneracyError(
            f"could not pair symplectic eigenvalues (mismatch {np.max(np.abs(pos - neg)):.3e})")
    return M, pos, U[:, n:][:, ::-1]


def symplectic_eigenvalues(V, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Symplectic eigenvalues of a positive-definite V, descending."""
    V = _check_covariance_input(V)
    return _paired_spectrum(V, tol)[1].copy()


def _clusters(vals: np.ndarray, rtol: float = _CLUSTER_RTOL):
    """Index groups of consecutive (sorted) values that are numerically equal."""
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or abs(vals[i] - vals[i - 1]) > rtol * max(1.0, abs(vals[i - 1])):
            groups.append(list(range(start, i)))
            start = i
    return groups


def _fix_pair_gauge(cols: np.ndarray) -> np.ndarray:
    """Flip each column pair (2j, 2j+1) so the first nonzero entry of column 2j is positive."""
    cols = cols.copy()
    for j in range(cols.shape[1] // 2):
        c = cols[:, 2 * j]
        nz = np.flatnonzero(np.abs(c) > 1e-12 * max(1.0, np.max(np.abs(c))))
        if nz.size and c[nz[0]] < 0:
            cols[:, 2 * j:2 * j + 2] *= -1
    return cols


@dataclass(frozen=True)
class WilliamsonResult:
    S: np.ndarray
    d: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return np.diag(np.repeat(self.d, 2))

    def reconstruct(self) -> np.ndarray:
        return self.S @ self.D @ self.S.T


def williamson(V, tol: Tolerances = DEFAULT) -> WilliamsonResult:
    """V = S diag(d1, d1, ..., dn, dn) S^T with d descending.

    Degenerate blocks are resolved by Gram-Schmidt of the reference vectors
    (e_p + i e_x)/sqrt(2) of each mode in index order, so V = I gives S = I
    and an already diagonal squeezed V gives the diagonal S.
    """
    V = _check_covariance_input(V)
    n = n_modes_of(V)
    M, d, U = _paired_spectrum(V, tol)
    refs = np.zeros((2 * n, n), dtype=complex)
    for j in range(n):
        refs[2 * j + 1, j] = 1.0
        refs[2 * j, j] = 1j
    refs /= np.sqrt(2.0)

    basis = np.empty_like(U)
    for grp in _clusters(d):
        # projecting the references also fixes the free phase of simple eigenvectors
        W = U[:, grp]
        chosen = []
        for j in range(n):
            if len(chosen) == len(grp):
                break
            v = W @ (W.conj().T @ refs[:, j])
            for c in chosen:
                v = v - c * np.vdot(c, v)
            nv = np.linalg.norm(v)
            if nv > 1e-4:
                chosen.append(v / nv)
        if len(chosen) < len(grp):  # reference vectors failed to span; fall back to eigh basis
            for k in range(len(grp)):
                if len(chosen) == len(grp):
                    break
                v = W[:, k].copy()
                for c in chosen:
                    v = v - c * np.vdot(c, v)
                nv = np.linalg.norm(v)
                if nv > 1e-4:
                    chosen.append(v / nv)
        basis[:, grp] = np.column_stack(chosen)

    K = np.empty((2 * n, 2 * n))
    K[:, 0::2] = np.sqrt(2.0) * basis.imag
    K[:, 1::2] = np.sqrt(2.0) * basis.real
    S = M @ K / np.sqrt(np.repeat(d, 2))[None, :]
    S = _fix_pair_gauge(S)
    return WilliamsonResult(S=S, d=d)


@dataclass(frozen=True)
class EulerResult:
    O1: np.ndarray
    z: np.ndarray
    O2: np.ndarray

    @property
    def Z(self) -> np.ndarray:
        return np.diag(np.ravel(np.column_stack([self.z, 1.0 / self.z])))

    def reconstruct(self) -> np.ndarray:
        return self.O1 @ self.Z @ self.O2


def euler(S, tol: Tolerances = DEFAULT) -> EulerResult:
    """Euler (Bloch-Messiah) decomposition S = O1 Z O2 with z descending, z >= 1."""
    S = check_symplectic(S, tol.symp, "S")
    n = n_modes_of(S)
    om = omega(n)
    Q, P = sla.polar(S, side="right")
    P = 0.5 * (P + P.T)
    lam, E = np.linalg.eigh(P)
    lam, E = lam[::-1], E[:, ::-1]

    cols, zs = [], []
    n_big = int(np.sum(lam > 1.0 + _CLUSTER_RTOL))
    for k in range(min(n_big, n)):
        v = E[:, k]
        cols += [v, -om @ v]
        zs.append(lam[k])
    # eigenvalue-one block: symplectic Gram-Schmidt of canonical vectors in index order
    n_unit = n - len(zs)
    if n_unit:
        unit = E[:, len(zs):2 * n - len(zs)]
        accepted = []
        for i in range(2 * n):
            if len(accepted) == 2 * n_unit:
                break
            v = unit @ (unit.T @ np.eye(2 * n)[:, i])
            for c in accepted:
                v = v - c * (c @ v)
            nv = np.linalg.norm(v)
            if nv > 1e-4:
                a = v / nv
                accepted += [a, -om @ a]
        if len(accepted) != 2 * n_unit:
            raise DegeneracyError("could not build a symplectic basis of the unit eigenspace")
        cols += accepted
        zs += [1.0] * n_unit
    Mmat = _fix_pair_gauge(np.column_stack(cols))
    return EulerResult(O1=Q @ Mmat, z=np.array(zs), O2=Mmat.T)


def orthosymp_to_unitary(O, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Orthogonal symplectic O -> unitary U with G_U^dag a G_U = conj(U) a.

    The 2x2 block (j, k) of O is [[Re U_jk, Im U_jk], [-Im U_jk, Re U_jk]].
    """
    O = np.asarray(O, dtype=float)
    if not is_orthosymplectic(O, tol.symp):
        raise ValidationError("matrix is not orthogonal symplectic")
    return O[0::2, 0::2] + 1j * O[0::2, 1::2]


def unitary_to_orthosymp(U, tol: Tolerances = DEFAULT) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    n = U.shape[0]
    if U.shape != (n, n) or np.max(np.abs(U @ U.conj().T - np.eye(n))) > tol.symp * 10:
        raise ValidationError("matrix is not unitary")
    O = np.empty((2 * n, 2 * n))
    O[0::2, 0::2] = U.real
    O[0::2, 1::2] = U.imag
    O[1::2, 0::2] = -U.imag
    O[1::2, 1::2] = U.real
    return O


def condition_number(V) -> float:
    """Spectral condition number ||V|| ||V^{-1}|| of a positive-definite matrix."""
    V = _check_covariance_input(V)
    w = np.linalg.eigvalsh(V)
    return float(w[-1] / w[0])


def squeeze_matrix(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.diag(np.ravel(np.column_stack([z, 1.0 / z])))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(n, random_state=rng)


def random_orthosymplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_to_orthosymp(random_unitary(n, rng))


def random_symplectic(n: int, rng: np.random.Generator, max_squeeze: float = 0.5) -> np.ndarray:
    """O1 Z O2 with Haar passive factors and log-squeezing uniform in [0, max_squeeze]."""
    z = np.exp(rng.uniform(0.0, max_squeeze, size=n))
    return random_orthosymplectic(n, rng) @ squeeze_matrix(z) @ random_orthosymplectic(n, rng)


def random_covariance(n: int, rng: np.random.Generator, max_squeeze: float = 0.5,
                      max_thermal: float = 2.0, pure: bool = False) -> np.ndarray:
    S = random_symplectic(n, rng, max_squeeze)
    d = np.ones(n) if pure else 1.0 + rng.uniform(0.0, max_thermal, size=n)
    return S @ np.diag(np.repeat(d, 2)) @ S.T
