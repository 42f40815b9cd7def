"""Dense bounded-variable primal simplex.

Solves ``min c^T x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and
``0 <= x <= upper`` with a two-phase tableau method.  Pivots pick the
steepest reduced cost; after a run of degenerate pivots the method switches
permanently to Bland's rule (smallest eligible index enters, smallest basic
index leaves on ties), which rules out cycling.  Sizes of a few hundred rows
and a few thousand columns are handled comfortably.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, LPInfeasible, LPIterationLimit

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    status: str
    iterations: int


class _Tableau:
    def __init__(self, T, beta, upper, basis, at_upper, tol):
        self.T = T
        self.beta = beta
        self.upper = upper
        self.basis = basis
        self.at_upper = at_upper
        self.tol = tol
        self.iterations = 0

    def run(self, cost, max_iter, allowed):
        T, tol = self.T, self.tol
        bland = False
        degenerate = 0
        while True:
            cB = cost[self.basis]
            red = cost - cB @ T
            red[self.basis] = 0.0
            score = np.where(self.at_upper, red, -red)
            score[~allowed] = 0.0
            cand = np.flatnonzero(score > tol)
            if cand.size == 0:
                return OPTIMAL
            if self.iterations >= max_iter:
                raise LPIterationLimit(f"simplex did not terminate within {max_iter} pivots")
            self.iterations += 1
            # steepest reduced cost until degeneracy stalls progress, then Bland's rule for good
            j = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
            s = -1.0 if self.at_upper[j] else 1.0
            alpha = s * T[:, j]
            ub = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                down = np.where(alpha > tol, np.maximum(self.beta, 0.0) / alpha, np.inf)
                up = np.where((alpha < -tol) & np.isfinite(ub), np.maximum(ub - self.beta, 0.0) / -alpha, np.inf)
            ratios = np.minimum(down, up)
            theta = float(ratios.min()) if ratios.size else np.inf
            flip = self.upper[j]
            if flip <= theta:
                if not np.isfinite(flip):
                    return UNBOUNDED
                self.beta -= flip * alpha
                self.at_upper[j] = not self.at_upper[j]
                degenerate = 0
                continue
            ties = np.flatnonzero(ratios <= theta + 1e-15)
            row = int(ties[np.argmin(self.basis[ties])])
            leave_to_upper = bool(up[row] < down[row])
            if theta <= 1e-15:
                degenerate += 1
                if degenerate > 50:
                    bland = True
            else:
                degenerate = 0
            enter_val = (self.upper[j] if self.at_upper[j] else 0.0) + s * theta
            self.beta -= theta * alpha
            leaving = self.basis[row]
            self.at_upper[leaving] = leave_to_upper
            self.beta[row] = enter_val
            self._pivot(row, j)
            self.basis[row] = j
            self.at_upper[j] = False

    def _pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])


def simplex(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, upper=None,
            max_iter: int | None = None, tol: float = 1e-9) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    m_eq = m_ub = 0
    if A_eq is not None and np.size(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        m_eq = A_eq.shape[0]
    if A_ub is not None and np.size(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        m_ub = A_ub.shape[0]
    m = m_eq + m_ub
    if m == 0:
        raise InputError("linear program has no constraints")
    ntot = n + m_ub
    A = np.zeros((m, ntot))
    b = np.zeros(m)
    if m_eq:
        A[:m_eq, :n] = A_eq
        b[:m_eq] = np.asarray(b_eq, dtype=float).ravel()
    if m_ub:
        A[m_eq:, :n] = A_ub
        A[m_eq:, n:] = np.eye(m_ub)
        b[m_eq:] = np.asarray(b_ub, dtype=float).ravel()
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise InputError("LP data must be finite")
    up = np.full(ntot, np.inf)
    if upper is not None:
        up[:n] = np.broadcast_to(np.asarray(upper, dtype=float), (n,))
    if np.any(up < 0):
        raise InputError("upper bounds must be nonnegative")
    if max_iter is None:
        max_iter = 50 * (m + ntot) + 1000

    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    T = np.hstack([A, np.eye(m)])
    upper_all = np.concatenate([up, np.full(m, np.inf)])
    basis = np.arange(ntot, ntot + m)
    at_upper = np.zeros(ntot + m, dtype=bool)
    tab = _Tableau(T, b.copy(), upper_all, basis, at_upper, tol)

    cost1 = np.concatenate([np.zeros(ntot), np.ones(m)])
    allowed = np.ones(ntot + m, dtype=bool)
    tab.run(cost1, max_iter, allowed)
    scale = max(1.0, float(np.abs(b).max()))
    if float(tab.beta[tab.basis >= ntot].sum()) > 1e-7 * scale:
        raise LPInfeasible("linear program is infeasible")

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] < ntot:
            continue
        row = tab.T[r, :ntot]
        nb = np.setdiff1d(np.flatnonzero(np.abs(row) > 1e-9), tab.basis)
        if nb.size:
            j = int(nb[0])
            tab._pivot(r, j)
            tab.beta[r] = upper_all[j] if tab.at_upper[j] else 0.0
            tab.basis[r] = j
            tab.at_upper[j] = False
        else:
            keep[r] = False
    if not keep.all():
        tab.T = tab.T[keep]
        tab.beta = tab.beta[keep]
        tab.basis = tab.basis[keep]
    allowed = np.concatenate([np.ones(ntot, dtype=bool), np.zeros(m, dtype=bool)])
    cost2 = np.concatenate([c, np.zeros(m_ub + m)])
    status = tab.run(cost2, max_iter, allowed)
    if status == UNBOUNDED:
        return LPResult(x=np.full(n, np.nan), fun=-np.inf, status=UNBOUNDED, iterations=tab.iterations)

    x = np.where(tab.at_upper[:ntot], up, 0.0)
    x[~np.isfinite(x)] = 0.0
    B = tab.basis
    # recompute basic values from the original data to shed pivoting drift
    rows = np.flatnonzero(keep)
    rhs_b = b[rows] - A[rows][:, :ntot] @ x
    AB = A[rows][:, B]
    try:
        xb = np.linalg.solve(AB, rhs_b)
    except np.linalg.LinAlgError:
        xb = tab.beta
    x[B] = xb
    x = np.clip(x, 0.0, up)
    return LPResult(x=x[:n], fun=float(c @ x[:n]), status=status, iterations=tab.iterations)


def linprog_highs(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, upper=None) -> LPResult:
    """Same interface backed by scipy's HiGHS (used as an independent check)."""
    from scipy.optimize import linprog

    c = np.asarray(c, dtype=float)
    ub = None if upper is None else np.broadcast_to(np.asarray(upper, dtype=float), c.shape)
    bounds = [(0, None if ub is None or not np.isfinite(ub[i]) else ub[i]) for i in range(c.size)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        raise LPInfeasible("linear program is infeasible")
    if res.status == 3:
        return LPResult(x=np.full(c.size, np.nan), fun=-np.inf, status=UNBOUNDED, iterations=res.nit)
    if res.status != 0:
        raise LPIterationLimit(res.message)
    return LPResult(x=res.x, fun=float(res.fun), status=OPTIMAL, iterations=res.nit)


def solve_lp(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, upper=None, backend: str = "simplex"):
    if backend == "simplex":
        return simplex(c, A_eq, b_eq, A_ub, b_ub, upper)
    if backend == "highs":
        return linprog_highs(c, A_eq, b_eq, A_ub, b_ub, upper)
    raise InputError(f"unknown LP backend {backend!r}")
