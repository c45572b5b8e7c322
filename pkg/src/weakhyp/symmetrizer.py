"""Vandermonde-type symmetrizer H and closed-form conjugations.

Everything is evaluated in the scale-free nodes mu = lambda / <xi>, so
H[p, q] = mu_q^p (0-based p) and the closed forms never overflow.  All
functions broadcast over leading batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentNodes, IllConditioned

MAX_ORDER = 12
COND_GATE = 1e12


def elementary_excluding(mu: np.ndarray) -> np.ndarray:
    """E[..., p, k] = e_k(mu without mu_p) for k = 0..m-1.

    Built by the product recurrence prod_{i != p} (1 + mu_i z).
    """
    m = mu.shape[-1]
    E = np.zeros(mu.shape[:-1] + (m, m))
    E[..., 0] = 1.0
    eye = np.eye(m, dtype=bool)
    for i in range(m):
        mi = mu[..., i][..., None]
        keep = ~eye[:, i]
        upd = E.copy()
        upd[..., 1:] = E[..., 1:] + mi[..., None] * E[..., :-1]
        E = np.where(keep[:, None], upd, E)
    return E


def diff_products(mu: np.ndarray) -> np.ndarray:
    """P[..., p] = prod_{i != p} (mu_i - mu_p)."""
    D = mu[..., None, :] - mu[..., :, None]  # D[p, i] = mu_i - mu_p
    m = mu.shape[-1]
    D = np.where(np.eye(m, dtype=bool), 1.0, D)
    return np.prod(D, axis=-1)


@dataclass(frozen=True)
class SymmetrizerBundle:
    lam: np.ndarray
    bracket: np.ndarray
    mu: np.ndarray
    H: np.ndarray
    detH: np.ndarray
    Hinv: np.ndarray
    min_gap: np.ndarray
    cond_proxy: np.ndarray
    P: np.ndarray

    @property
    def m(self) -> int:
        return self.lam.shape[-1]

    @property
    def ill_conditioned(self):
        return self.cond_proxy > COND_GATE

    def require_conditioned(self):
        if np.any(self.ill_conditioned):
            raise IllConditioned(f"cond_proxy {np.max(self.cond_proxy):.3e} exceeds {COND_GATE:.0e}")


def build_bundle(lam, bracket) -> SymmetrizerBundle:
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    if m > MAX_ORDER:
        raise ValueError(f"order {m} exceeds the supported maximum {MAX_ORDER}")
    bracket = np.asarray(bracket, dtype=float)
    mu = lam / bracket[..., None]
    D = np.abs(mu[..., None, :] - mu[..., :, None]) + np.where(np.eye(m, dtype=bool), np.inf, 0.0)
    min_gap_mu = np.min(D, axis=(-2, -1))
    if np.any(min_gap_mu == 0):
        raise CoincidentNodes("symmetrizer nodes must be pairwise distinct")
    pw = np.arange(m)
    H = mu[..., None, :] ** pw[:, None]
    iu, ju = np.triu_indices(m, 1)
    detH = np.prod(mu[..., ju] - mu[..., iu], axis=-1)
    P = diff_products(mu)
    E = elementary_excluding(mu)
    # Hinv[p, q] = (-1)^q e_{m-1-q}(S_p) / P_p  (0-based q)
    sign = (-1.0) ** pw
    Hinv = sign * E[..., :, ::-1] / P[..., :, None]
    cond = (1.0 / min_gap_mu) ** (m - 1)
    return SymmetrizerBundle(lam, bracket, mu, H, detH, Hinv, min_gap_mu * bracket, cond, P)


def conjugate_oracle(bundle: SymmetrizerBundle, M, lu: bool = False) -> np.ndarray:
    """Hinv M H by direct multiplication (LU inverse when ``lu``)."""
    Hinv = np.linalg.inv(bundle.H) if lu else bundle.Hinv
    return Hinv @ np.asarray(M) @ bundle.H


def companion_from_roots(tau, bracket) -> np.ndarray:
    """Companion-form symbol matrix with eigenvalues tau (superdiagonal <xi>)."""
    tau = np.asarray(tau, dtype=float)
    bracket = np.asarray(bracket, dtype=float)
    m = tau.shape[-1]
    sigma = tau / bracket[..., None]
    # monic polynomial prod (x - sigma_i) = x^m - sum_j c_j x^j
    coef = np.zeros(sigma.shape[:-1] + (m + 1,))
    coef[..., 0] = 1.0
    for i in range(m):
        coef[..., 1:] = coef[..., 1:] - sigma[..., i][..., None] * coef[..., :-1]
    c = -coef[..., :0:-1]  # c_j for j = 0..m-1
    A = np.zeros(sigma.shape[:-1] + (m, m))
    idx = np.arange(m - 1)
    A[..., idx, idx + 1] = 1.0
    A[..., m - 1, :] = c
    return A * bracket[..., None, None]


def conjugate_A_closed(bundle: SymmetrizerBundle, tau, A=None) -> np.ndarray:
    """Hinv A H: off-diagonal entries by the closed form, diagonal from the oracle.

    c_pq = prod_i (tau_i - lambda_q) / prod_{i != p} (lambda_i - lambda_p).
    """
    tau = np.asarray(tau, dtype=float)
    sigma = tau / bundle.bracket[..., None]
    num = np.prod(sigma[..., :, None] - bundle.mu[..., None, :], axis=-2)  # over i, per q
    C = bundle.bracket[..., None, None] * num[..., None, :] / bundle.P[..., :, None]
    if A is None:
        A = companion_from_roots(tau, bundle.bracket)
    oracle_diag = np.einsum("...pk,...kq,...qp->...p", bundle.Hinv, A, bundle.H)
    m = bundle.m
    eye = np.eye(m, dtype=bool)
    return np.where(eye, oracle_diag[..., None, :] * eye, C)


def conjugate_B_closed(bundle: SymmetrizerBundle, g_values) -> np.ndarray:
    """d_pq = (-1)^(m-1) g(lambda_q) / prod_{i != p} (lambda_i - lambda_p)."""
    g = np.asarray(g_values, dtype=float)
    m = bundle.m
    scale = bundle.bracket ** (m - 1)
    return (-1.0) ** (m - 1) * g[..., None, :] / (bundle.P[..., :, None] * scale[..., None, None])


def lower_matrix(lower_coeffs, bracket) -> np.ndarray:
    """B(t, xi): zero except the last row (A_{m-j} - A_(m-j)) <xi>^(j+1-m)."""
    gc = np.asarray(lower_coeffs, dtype=float)
    bracket = np.asarray(bracket, dtype=float)
    m = gc.shape[-1]
    B = np.zeros(gc.shape[:-1] + (m, m))
    B[..., m - 1, :] = gc * bracket[..., None] ** (np.arange(m) + 1 - m)
    return B


def conjugate_dH_closed(bundle: SymmetrizerBundle, dlam) -> np.ndarray:
    """Hinv dH/dt from the closed forms for diagonal and off-diagonal entries."""
    dmu = np.asarray(dlam, dtype=float) / bundle.bracket[..., None]
    mu = bundle.mu
    m = bundle.m
    eye = np.eye(m, dtype=bool)
    D = mu[..., None, :] - mu[..., :, None]  # D[p, i] = mu_i - mu_p
    inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, D))
    diag = -dmu * np.sum(inv, axis=-1)
    # off-diagonal: -mu'_q prod_{i != p, q} (mu_i - mu_q) / P_p
    Dq = mu[..., None, :] - mu[..., :, None]  # Dq[i, q] = mu_i - mu_q
    Dq = np.where(eye, 1.0, -Dq)  # now Dq[i, q] = mu_i - mu_q with 1 on the diagonal
    full = np.prod(Dq, axis=-2)  # prod_{i != q} (mu_i - mu_q), per q
    # divide out the i = p factor
    Dpq = -(mu[..., None, :] - mu[..., :, None])  # Dpq[p, q] = mu_p - mu_q
    safe = np.where(eye, 1.0, Dpq)
    num = full[..., None, :] / safe
    off = -dmu[..., None, :] * num / bundle.P[..., :, None]
    return np.where(eye, diag[..., None, :] * eye, off)


def dH_matrix(bundle: SymmetrizerBundle, dlam) -> np.ndarray:
    """dH/dt entrywise: d/dt mu_q^p = p mu_q^(p-1) mu'_q."""
    dmu = np.asarray(dlam, dtype=float) / bundle.bracket[..., None]
    m = bundle.m
    pw = np.arange(m)
    mu = bundle.mu
    low = np.where(pw[:, None] >= 1, mu[..., None, :] ** np.maximum(pw - 1, 0)[:, None], 0.0)
    return pw[:, None] * low * dmu[..., None, :]


def log_abs_det(bundle: SymmetrizerBundle):
    """(log |det H|, sign det H) without under- or overflow."""
    m = bundle.m
    iu, ju = np.triu_indices(m, 1)
    d = bundle.mu[..., ju] - bundle.mu[..., iu]
    return np.sum(np.log(np.abs(d)), axis=-1), np.prod(np.sign(d), axis=-1)


def oracle_dH(bundle: SymmetrizerBundle, dlam, lu: bool = False) -> np.ndarray:
    """Hinv dH/dt by direct multiplication."""
    Hinv = np.linalg.inv(bundle.H) if lu else bundle.Hinv
    return Hinv @ dH_matrix(bundle, dlam)


def lu_det(M, dtype=np.longdouble) -> np.ndarray:
    """Determinant by Gaussian elimination with partial pivoting (batched).

    Runs in extended precision by default so the oracle's own rounding
    stays below the closed form's.
    """
    A = np.array(M, dtype=dtype, copy=True)
    m = A.shape[-1]
    det = np.ones(A.shape[:-2], dtype=dtype)
    rows = np.arange(m)
    for k in range(m):
        piv = k + np.argmax(np.abs(A[..., k:, k]), axis=-1)
        swap = piv != k
        det = np.where(swap, -det, det)
        idx = np.broadcast_to(rows, A.shape[:-2] + (m,)).copy()
        idx[..., k] = piv
        np.put_along_axis(idx, piv[..., None], k, axis=-1)
        A = np.take_along_axis(A, idx[..., :, None], axis=-2)
        p = A[..., k, k]
        det = det * p
        safe = np.where(p == 0, 1, p)
        f = A[..., k + 1:, k] / safe[..., None]
        A[..., k + 1:, :] -= f[..., :, None] * A[..., k, None, :]
    return det
