"""Recursive orthogonal splitting of the query space along ellipsoid axes.

At each level the approximate minimum enclosing ellipsoid of the current
projected workload is computed; the directions of its ``ceil(m/2)``
shortest semi-axes form the next level and the recursion continues on the
``floor(m/2)`` longest ones.  Each level ``i`` carries an orthonormal basis
``U_i`` and radius ``r_i = max_j ||U_i^T a_j||``.

Rank-deficient workloads are first reduced to their row space; the bases are
then stored lifted back into the original ``R^d`` so that mechanisms can add
noise to ``A x`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ellipsoid import RANK_RTOL, approx_mee, numerical_rank
from .errors import ConditioningError, RankError
from .workload import Workload, as_matrix


@dataclass(frozen=True)
class Level:
    U: np.ndarray
    r: float

    @property
    def d_i(self) -> int:
        return self.U.shape[1]


@dataclass(frozen=True)
class BaseDecomposition:
    levels: tuple
    source: np.ndarray
    V: np.ndarray
    C: tuple = field(default=())

    @property
    def k(self) -> int:
        return len(self.levels)

    @property
    def d(self) -> int:
        return self.source.shape[0]

    @property
    def N(self) -> int:
        return self.source.shape[1]

    @property
    def rank(self) -> int:
        return self.V.shape[1]

    @property
    def dims(self) -> list[int]:
        return [lv.d_i for lv in self.levels]

    @property
    def radii(self) -> np.ndarray:
        return np.array([lv.r for lv in self.levels])

    def bases(self) -> list[np.ndarray]:
        return [lv.U for lv in self.levels]

    def stacked(self, levels) -> np.ndarray:
        """Column-concatenation of the bases of the given level indices (0-based)."""
        mats = [self.levels[i].U for i in levels]
        if not mats:
            return np.zeros((self.d, 0))
        return np.hstack(mats)

    def tail_subspace(self, i: int) -> np.ndarray:
        """Basis of W_i, the span of all levels after level ``i`` (1-based)."""
        return self.stacked(range(i, self.k))

    def with_source(self, A) -> "BaseDecomposition":
        """Same bases with radii recomputed for another workload on the same space."""
        A = as_matrix(A)
        lv = tuple(Level(l.U, _radius(l.U, A)) for l in self.levels)
        return BaseDecomposition(lv, A, self.V, self.C)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "rank": self.rank,
            "levels": [{"d_i": lv.d_i, "r_i": lv.r, "U_i": lv.U.tolist()} for lv in self.levels],
            "C": list(self.C),
        }


def _normalize_signs(U: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s


def _radius(U, A) -> float:
    return float(np.sqrt(np.max(np.sum((U.T @ A) ** 2, axis=0))))


def row_space_projector(A) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis ``V`` of range(A) and the reduced workload ``V^T A``."""
    A = as_matrix(A)
    d = A.shape[0]
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((d, 0)), np.zeros((0, A.shape[1]))
    r = int(np.sum(s > RANK_RTOL * s[0]))
    if r == d:
        # full rank: keep the original coordinates so A' = A
        return np.eye(d), A.copy()
    V = _normalize_signs(U[:, :r])
    return V, V.T @ A


def decompose(A, eta: float = 0.05, max_iters: int | None = None) -> BaseDecomposition:
    """Base decomposition of a full-row-rank workload."""
    A = as_matrix(A)
    d = A.shape[0]
    if numerical_rank(A) < d:
        raise RankError(f"workload has rank < d={d}; apply row_space_projector first")
    return _decompose(A, np.eye(d), A, eta, max_iters)


def _decompose(A_orig, B, A_red, eta, max_iters):
    """Recursion on the reduced workload ``A_red = B^T A_orig`` with B orthonormal."""
    levels = []
    Cs = []
    depth = 0
    while True:
        depth += 1
        m = B.shape[1]
        if m == 1:
            U = _normalize_signs(B.copy())
            levels.append(Level(U, _radius(U, A_orig)))
            break
        try:
            res = approx_mee(A_red, eta=eta, max_iters=max_iters)
        except ConditioningError as exc:
            raise ConditioningError(str(exc), depth=depth) from None
        Cs.append(res.C)
        Uf, _, _ = np.linalg.svd(res.F)
        h = m // 2
        U = _normalize_signs(B @ Uf[:, h:])
        levels.append(Level(U, _radius(U, A_orig)))
        Vloc = Uf[:, :h]
        B = B @ Vloc
        A_red = Vloc.T @ A_red
    return BaseDecomposition(tuple(levels), A_orig, np.hstack([lv.U for lv in levels]), tuple(Cs))


def decompose_workload(A, eta: float = 0.05, max_iters: int | None = None) -> BaseDecomposition:
    """Base decomposition of any nonzero workload, via its row space if needed.

    Levels are returned lifted into ``R^d``; ``sum_i U_i U_i^T`` is then the
    orthogonal projector onto range(A).
    """
    A = as_matrix(A)
    V, Ared = row_space_projector(A)
    r = V.shape[1]
    if r == 0:
        raise RankError("workload is identically zero; nothing to decompose")
    if r == A.shape[0]:
        return decompose(A, eta, max_iters)
    dec = _decompose(Ared, np.eye(r), Ared, eta, max_iters)
    lv = tuple(Level(_normalize_signs(V @ l.U), l.r) for l in dec.levels)
    lv = tuple(Level(l.U, _radius(l.U, A)) for l in lv)
    return BaseDecomposition(lv, A, V, dec.C)


def max_levels(d: int) -> int:
    return int(math.ceil(1 + math.log2(d))) if d >= 1 else 0


def as_decomposition(obj) -> BaseDecomposition:
    if isinstance(obj, BaseDecomposition):
        return obj
    if isinstance(obj, Workload) or isinstance(obj, np.ndarray):
        return decompose_workload(obj)
    raise TypeError(f"cannot build a decomposition from {type(obj).__name__}")
