"""Approximate minimum-volume enclosing ellipsoid of a symmetric point set.

The ellipsoid is parameterized by design weights ``p`` on the columns of
``A``: with ``M = A diag(p) A^T`` every column satisfies
``a_j^T M^{-1} a_j <= C d`` and ``E = F B_2`` with ``F = sqrt(C d) chol(M)``
contains all of ``+-a_j``.  The weights are found with a Frank-Wolfe
(Khachiyan) iteration with away steps, which converges linearly to the
optimal design.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, InputError, RankError
from .workload import as_matrix

# rank cutoff relative to the largest singular value
RANK_RTOL = 1e-10
# condition number above which A diag(p) A^T is treated as singular
COND_LIMIT = 1e14
# recompute the inverse from scratch every so many rank-one updates
_REFRESH = 64


@dataclass(frozen=True)
class EllipsoidResult:
    p: np.ndarray
    F: np.ndarray
    C: float
    iterations: int
    converged: bool

    @property
    def d(self) -> int:
        return self.F.shape[0]


def default_max_iters(d: int, N: int) -> int:
    return int(math.ceil(100 * d * math.log(N + 1)))


def numerical_rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _inverse(A, p):
    M = (A * p) @ A.T
    M = 0.5 * (M + M.T)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ConditioningError("A diag(p) A^T is not positive definite") from None
    dg = np.diag(L)
    if dg.min() <= 0 or (dg.max() / dg.min()) ** 2 > COND_LIMIT:
        raise ConditioningError("A diag(p) A^T is numerically singular")
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return M, Linv.T @ Linv


def leverage(A: np.ndarray, Minv: np.ndarray) -> np.ndarray:
    """kappa_j = a_j^T M^{-1} a_j for every column."""
    return np.einsum("ij,ij->j", A, Minv @ A)


def approx_mee(A, eta: float = 0.05, max_iters: int | None = None) -> EllipsoidResult:
    """C-optimal design weights and the enclosing ellipsoid factor they induce.

    Stops once ``max_j a_j^T M^{-1} a_j <= (1 + eta) d``.  If the iteration
    budget runs out the best iterate is returned with ``converged=False``;
    the ellipsoid contains every column either way.
    """
    A = as_matrix(A)
    d, N = A.shape
    if not eta > 0:
        raise InputError(f"eta must be positive, got {eta}")
    if numerical_rank(A) < d:
        raise RankError(
            f"workload has rank {numerical_rank(A)} < d={d}; apply row_space_projector first"
        )
    if max_iters is None:
        max_iters = default_max_iters(d, N)

    p = np.full(N, 1.0 / N)
    _, Minv = _inverse(A, p)
    kappa = leverage(A, Minv)
    target = (1.0 + eta) * d
    it = 0
    since_refresh = 0
    converged = False
    while True:
        j = int(np.argmax(kappa))
        kmax = kappa[j]
        if kmax <= target:
            converged = True
            break
        if it >= max_iters:
            break
        it += 1
        support = np.flatnonzero(p > 0)
        m = int(support[np.argmin(kappa[support])])
        kmin = kappa[m]
        if (1.0 - kmin / d) > (kmax / d - 1.0) and p[m] < 1.0:
            # away step: shift weight off the least useful support point
            lam_min = -p[m] / (1.0 - p[m])
            lam = (kmin - d) / (d * (kmin - 1.0)) if kmin > 1.0 else lam_min
            if lam < lam_min or kmin <= 1.0:
                lam = lam_min
            idx = m
        else:
            lam = (kmax - d) / (d * (kmax - 1.0))
            idx = j
        drop = lam <= -p[idx] / (1.0 - p[idx]) * (1 - 1e-14) if lam < 0 else False
        p_new = (1.0 - lam) * p
        p_new[idx] += lam
        if drop:
            p_new[idx] = 0.0
        p_new = np.maximum(p_new, 0.0)
        p_new /= p_new.sum()
        since_refresh += 1
        # a full step (only possible when d = 1) leaves no rank-one update to apply
        if drop or lam >= 1.0 or since_refresh >= _REFRESH:
            try:
                _, Minv_new = _inverse(A, p_new)
            except ConditioningError:
                if drop:
                    # dropping this point would collapse the ellipsoid; take a toward step
                    lam = (kmax - d) / (d * (kmax - 1.0))
                    p_new = (1.0 - lam) * p
                    p_new[j] += lam
                    p_new /= p_new.sum()
                    _, Minv_new = _inverse(A, p_new)
                else:
                    raise
            p, Minv = p_new, Minv_new
            kappa = leverage(A, Minv)
            since_refresh = 0
            continue
        a = A[:, idx]
        mu = lam / (1.0 - lam)
        u = Minv @ a
        denom = 1.0 + mu * kappa[idx]
        if denom <= 1e-12:
            _, Minv = _inverse(A, p_new)
            kappa = leverage(A, Minv)
            p = p_new
            since_refresh = 0
            continue
        s = mu / denom
        w = A.T @ u
        Minv = (Minv - s * np.outer(u, u)) / (1.0 - lam)
        kappa = (kappa - s * w * w) / (1.0 - lam)
        p = p_new

    # fresh evaluation so the certificate does not inherit update drift
    M, Minv = _inverse(A, p)
    kappa = leverage(A, Minv)
    C = max(float(kappa.max()) / d, 1.0)
    F = math.sqrt(C * d) * np.linalg.cholesky(M)
    F = _enforce_containment(A, F)
    return EllipsoidResult(p=p, F=F, C=C, iterations=it, converged=converged)


def containment_values(A, F: np.ndarray) -> np.ndarray:
    """a_j^T (F F^T)^{-1} a_j for every column."""
    Z = scipy.linalg.solve_triangular(F, as_matrix(A), lower=True) if np.allclose(F, np.tril(F)) \
        else np.linalg.solve(F, as_matrix(A))
    return np.einsum("ij,ij->j", Z, Z)


def _enforce_containment(A, F):
    worst = float(containment_values(A, F).max())
    if worst > 1.0:
        F = F * math.sqrt(worst) * (1.0 + 1e-15)
    return F


def mee_volume_proxy(res: EllipsoidResult) -> float:
    """log |det F| (log-volume up to the unit-ball constant)."""
    sign, logdet = np.linalg.slogdet(res.F)
    return float(logdet)
