"""Lower bounds on the error of any private mechanism, and optimality ratios.

Two brute-force bounds enumerate column subsets ``S`` of size ``k``:

* spectral: ``k * sigma_k(A_S)^2``
* determinant: ``k * (sigma_1(A_S) ... sigma_k(A_S))^(2/k)``

Both come from maximizing over rank-``k`` orthogonal projections ``Pi`` a
quantity of ``Pi A_S``.  The maximizing ``Pi`` projects onto the top-``k``
left singular subspace of ``A_S``: by Cauchy interlacing
``sigma_k(Pi A_S) <= sigma_k(A_S)`` and ``|det(Pi A_S)| <= prod_i sigma_i(A_S)``
for every such ``Pi``, with equality for that subspace.  So the inner
maximization reduces to singular values of ``A_S``.

A third, efficiently computable bound is read off a base decomposition:
``max_i d_i r_i^2`` (dense regime) or its size-limited variant.  It holds up
to universal constants that are not instantiated, so it is reported as a raw
product.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .decomposition import BaseDecomposition, as_decomposition
from .errors import BudgetExceededError, InputError
from .gaussmech import analytic_error, build_noise_spec
from .workload import PrivacyParams, as_matrix

DEFAULT_LIMIT = 2_000_000
_CHUNK = 4096


@dataclass(frozen=True)
class LowerBoundReport:
    n: float
    mode: str
    spec_lb: float | None = None
    spec_witness: tuple | None = None
    det_lb: float | None = None
    det_witness: tuple | None = None
    dec_lb: float | None = None
    dec_level: int | None = None
    notes: tuple = field(default=())

    def to_dict(self) -> dict:
        def wit(w):
            return None if w is None else {"subset": list(w), "k": len(w)}

        out = {"mode": self.mode, "n": _jsonable(self.n)}
        if self.spec_lb is not None:
            out["spec_lb"] = self.spec_lb
            out["spec_witness"] = wit(self.spec_witness)
        if self.det_lb is not None:
            out["det_lb"] = self.det_lb
            out["det_witness"] = wit(self.det_witness)
        if self.dec_lb is not None:
            out["dec_lb"] = self.dec_lb
            out["dec_level"] = self.dec_level
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _jsonable(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def max_subset_size(A, n) -> int:
    A = as_matrix(A)
    d, N = A.shape
    if math.isinf(n):
        return min(d, N)
    return max(0, min(int(math.floor(n + 1e-12)), d, N))


def enumeration_cost(N: int, kmax: int) -> int:
    return sum(math.comb(N, k) for k in range(1, kmax + 1))


def _check_budget(N, kmax, limit):
    need = enumeration_cost(N, kmax)
    if need > limit:
        raise BudgetExceededError("subset enumeration exceeds budget", required=need, limit=limit)


def _subset_chunks(N, k):
    it = itertools.combinations(range(N), k)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _scan(A, kmax):
    """Best spectral and determinant values over all subsets of size 1..kmax."""
    best_s, wit_s = 0.0, None
    best_d, wit_d = 0.0, None
    for k in range(1, kmax + 1):
        for block in _subset_chunks(A.shape[1], k):
            sub = A[:, block].transpose(1, 0, 2)  # (m, d, k)
            sv = np.linalg.svd(sub, compute_uv=False)  # (m, k), descending
            spec = k * sv[:, k - 1] ** 2
            with np.errstate(divide="ignore"):
                logs = np.log(sv).sum(axis=1)
            det = k * np.exp(2.0 * logs / k)
            i = int(np.argmax(spec))
            if spec[i] > best_s:
                best_s, wit_s = float(spec[i]), tuple(int(v) for v in block[i])
            i = int(np.argmax(det))
            if det[i] > best_d:
                best_d, wit_d = float(det[i]), tuple(int(v) for v in block[i])
    return best_s, wit_s, best_d, wit_d


def speclb_bruteforce(A, n, limit: int = DEFAULT_LIMIT) -> LowerBoundReport:
    """max over |S| = k <= n of k sigma_k(A_S)^2, with the witnessing subset."""
    A = as_matrix(A)
    kmax = max_subset_size(A, n)
    _check_budget(A.shape[1], kmax, limit)
    s, ws, _, _ = _scan(A, kmax) if kmax else (0.0, None, 0.0, None)
    return LowerBoundReport(n=float(n), mode="bruteforce", spec_lb=s, spec_witness=ws)


def detlb_bruteforce(A, n, limit: int = DEFAULT_LIMIT) -> LowerBoundReport:
    """max over |S| = k <= n of k (prod_i sigma_i(A_S))^(2/k), with the witnessing subset."""
    A = as_matrix(A)
    kmax = max_subset_size(A, n)
    _check_budget(A.shape[1], kmax, limit)
    _, _, dv, wd = _scan(A, kmax) if kmax else (0.0, None, 0.0, None)
    return LowerBoundReport(n=float(n), mode="bruteforce", det_lb=dv, det_witness=wd)


def bruteforce_bounds(A, n, limit: int = DEFAULT_LIMIT) -> LowerBoundReport:
    """Both brute-force bounds from a single enumeration."""
    A = as_matrix(A)
    kmax = max_subset_size(A, n)
    _check_budget(A.shape[1], kmax, limit)
    s, ws, dv, wd = _scan(A, kmax) if kmax else (0.0, None, 0.0, None)
    return LowerBoundReport(n=float(n), mode="bruteforce", spec_lb=s, spec_witness=ws,
                            det_lb=dv, det_witness=wd)


def spec_value(A, subset) -> float:
    """Re-evaluate k sigma_k(A_S)^2 for a witness."""
    A = as_matrix(A)
    S = list(subset)
    sv = np.linalg.svd(A[:, S], compute_uv=False)
    return len(S) * float(sv[len(S) - 1] ** 2) if len(sv) >= len(S) else 0.0


def det_value(A, subset) -> float:
    A = as_matrix(A)
    S = list(subset)
    sv = np.linalg.svd(A[:, S], compute_uv=False)
    if len(sv) < len(S):
        return 0.0
    return len(S) * float(np.prod(sv) ** (2.0 / len(S)))


def dec_lowerbound(dec, pp: PrivacyParams, n: float = math.inf) -> LowerBoundReport:
    """Decomposition bound: max d_i r_i^2, or the size-limited variant for finite ``n``.

    Raw products; valid as a lower bound only up to universal constants.
    """
    dec = as_decomposition(dec)
    dims = np.array(dec.dims, dtype=float)
    r2 = dec.radii ** 2
    if math.isinf(n):
        vals = dims * r2
        mode_note = "dense"
    else:
        if not n > 0:
            raise InputError(f"n must be positive, got {n}")
        en = pp.epsilon * n
        vals = np.where(dims >= en, en * r2, dims * r2)
        mode_note = "sparse"
    i = int(np.argmax(vals))
    return LowerBoundReport(n=float(n), mode="decomposition", dec_lb=float(vals[i]), dec_level=i + 1,
                            notes=(f"{mode_note} decomposition bound, up to universal constants",))


def ratio_budget(d: int, pp: PrivacyParams, R: float) -> float:
    """R (1 + log2 d)^2 max(1, ln(1/delta))."""
    return R * (1.0 + math.log2(d)) ** 2 * max(1.0, math.log(1.0 / pp.delta))


def optimality_ratio(A, pp: PrivacyParams, n: float = math.inf, mode: str = "bruteforce",
                     dec=None, limit: int = DEFAULT_LIMIT, R: float | None = None) -> dict:
    """Analytic Gaussian error divided by a lower bound, next to the theoretical budget."""
    A = as_matrix(A)
    dec = as_decomposition(A) if dec is None else dec
    err = analytic_error(build_noise_spec(dec, pp))
    dlb = dec_lowerbound(dec, pp, n)
    out = {"error": err, "dec_lb": dlb.dec_lb, "mode": mode, "n": _jsonable(float(n))}
    if mode == "bruteforce":
        nn = A.shape[0] if math.isinf(n) else n
        blb = bruteforce_bounds(A, nn, limit)
        out["spec_lb"] = blb.spec_lb
        out["det_lb"] = blb.det_lb
        out["ratio"] = err / blb.spec_lb if blb.spec_lb > 0 else math.inf
        out["ratio_best"] = err / max(blb.spec_lb, dlb.dec_lb)
    elif mode == "decomposition":
        out["ratio"] = err / dlb.dec_lb if dlb.dec_lb > 0 else math.inf
    else:
        raise InputError(f"unknown lower-bound mode {mode!r}")
    if R is None:
        from .calibration import constant

        R = constant("R_cal")
    out["R_cal"] = R
    out["budget"] = ratio_budget(A.shape[0], pp, R)
    return out
