"""Hot loops over the truncated Fock basis.

Each kernel has a numba implementation and a pure-numpy one with identical
semantics. Set SYMPRANK_DISABLE_NUMBA=1 to force the numpy versions (useful
for debugging and for the benchmark in benchmarks/bench_kernels.py).
"""
from __future__ import annotations

import os

import numpy as np

DISABLE_ENV = "SYMPRANK_DISABLE_NUMBA"

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    return HAVE_NUMBA and os.environ.get(DISABLE_ENV, "").strip() not in ("1", "true", "yes")


# ---------------------------------------------------------------- stellar recursion
# psi_k = (w_i psi_{k-e_i} + sum_j A_ij sqrt(m_j) psi_{m-e_j}) / sqrt(k_i),
# m = k - e_i, i = first mode with k_i > 0. Requires the basis to be ordered by
# total photon number so every dependency is computed first.

def stellar_recursion_numpy(tuples, lower, layers, A, w, f0):
    D, n = tuples.shape
    psi = np.zeros(D, dtype=np.complex128)
    psi[0] = f0
    for lo, hi in zip(layers[1:-1], layers[2:]):
        idx = np.arange(lo, hi)
        k = tuples[idx]
        first = np.argmax(k > 0, axis=1)
        m_idx = lower[idx, first]
        acc = w[first] * psi[m_idx]
        m = tuples[m_idx]
        for j in range(n):
            mm = lower[m_idx, j]
            ok = mm >= 0
            acc = acc + np.where(ok, A[first, j] * np.sqrt(m[:, j]) * psi[np.where(ok, mm, 0)], 0.0)
        psi[idx] = acc / np.sqrt(k[np.arange(len(idx)), first])
    return psi


# ---------------------------------------------------------------- heterodyne accumulation
# out[dst[i]] += coef[src[i]] * psi[i]

def heterodyne_accumulate_numpy(psi, src, dst, coef, n_out):
    vals = coef[src] * psi
    return (np.bincount(dst, weights=vals.real, minlength=n_out)
            + 1j * np.bincount(dst, weights=vals.imag, minlength=n_out))


# ---------------------------------------------------------------- coherent overlaps
# out[b] = sum_k psi_k prod_i conj(alpha[b, i])^{k_i} / sqrt(k_i!)   (no Gaussian prefactor)

def _log_sqrt_fact(kmax):
    from scipy.special import gammaln
    return 0.5 * gammaln(np.arange(kmax + 1) + 1.0)


def coherent_overlaps_numpy(tuples, psi, alphas, cutoff):
    B, n = alphas.shape
    ca = np.conj(alphas)
    inv_sqrt_fact = np.exp(-_log_sqrt_fact(cutoff))
    pw = ca[:, :, None] ** np.arange(cutoff + 1)[None, None, :] * inv_sqrt_fact  # (B, n, c+1)
    mono = np.ones((B, tuples.shape[0]), dtype=np.complex128)
    for i in range(n):
        mono *= pw[:, i, tuples[:, i]]
    return mono @ psi


if HAVE_NUMBA:
    @njit(cache=True)
    def _stellar_recursion_nb(tuples, lower, A, w, f0):
        D, n = tuples.shape
        psi = np.zeros(D, dtype=np.complex128)
        psi[0] = f0
        for idx in range(1, D):
            first = 0
            while tuples[idx, first] == 0:
                first += 1
            m_idx = lower[idx, first]
            acc = w[first] * psi[m_idx]
            for j in range(n):
                mm = lower[m_idx, j]
                if mm >= 0:
                    acc += A[first, j] * np.sqrt(tuples[m_idx, j]) * psi[mm]
            psi[idx] = acc / np.sqrt(tuples[idx, first])
        return psi

    @njit(cache=True)
    def _heterodyne_accumulate_nb(psi, src, dst, coef, n_out):
        out = np.zeros(n_out, dtype=np.complex128)
        for i in range(psi.shape[0]):
            out[dst[i]] += coef[src[i]] * psi[i]
        return out

    @njit(cache=True)
    def _coherent_overlaps_nb(tuples, psi, alphas, inv_sqrt_fact):
        B, n = alphas.shape
        D = tuples.shape[0]
        cutoff = inv_sqrt_fact.shape[0] - 1
        out = np.zeros(B, dtype=np.complex128)
        pw = np.empty((n, cutoff + 1), dtype=np.complex128)
        for b in range(B):
            for i in range(n):
                ca = np.conj(alphas[b, i])
                pw[i, 0] = 1.0
                for k in range(1, cutoff + 1):
                    pw[i, k] = pw[i, k - 1] * ca
                for k in range(cutoff + 1):
                    pw[i, k] *= inv_sqrt_fact[k]
            acc = 0.0 + 0.0j
            for d in range(D):
                term = psi[d]
                for i in range(n):
                    term *= pw[i, tuples[d, i]]
                acc += term
            out[b] = acc
        return out


def stellar_recursion(tuples, lower, layers, A, w, f0):
    A = np.ascontiguousarray(A, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if numba_enabled():
        return _stellar_recursion_nb(tuples, lower, A, w, complex(f0))
    return stellar_recursion_numpy(tuples, lower, layers, A, w, complex(f0))


def heterodyne_accumulate(psi, src, dst, coef, n_out):
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    coef = np.ascontiguousarray(coef, dtype=np.complex128)
    if numba_enabled():
        return _heterodyne_accumulate_nb(psi, src, dst, coef, int(n_out))
    return heterodyne_accumulate_numpy(psi, src, dst, coef, int(n_out))


def coherent_overlaps(tuples, psi, alphas, cutoff):
    alphas = np.ascontiguousarray(np.atleast_2d(alphas), dtype=np.complex128)
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if numba_enabled():
        return _coherent_overlaps_nb(tuples, psi, alphas, np.exp(-_log_sqrt_fact(cutoff)))
    return coherent_overlaps_numpy(tuples, psi, alphas, cutoff)
