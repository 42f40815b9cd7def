"""Gauge, dual norm, chords and least-squares projection for ``L = s * G B_1``.

``L`` is the symmetric convex hull of the scaled generators ``+-s g_j``.
Gauges and chords are linear programs; when the span of ``G`` has small
dimension the facets of ``L`` are enumerated once (via Qhull) and both become
closed-form maxima over facets.  Projection onto ``L`` uses Frank-Wolfe with
away steps and exact line search, stopping on a certified duality gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirectionError, InputError, LPInfeasible
from .lp import UNBOUNDED, solve_lp

# facet enumeration is attempted only while the generator count is below
# this limit for the span dimension (Qhull output grows quickly with both)
FACET_POINT_LIMITS = {1: 10**9, 2: 10**6, 3: 20000, 4: 4096, 5: 512, 6: 256, 7: 64, 8: 48}
_SPAN_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class PolytopeView:
    G: np.ndarray
    scale: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G[None, :]
        if G.ndim != 2 or G.shape[1] == 0:
            raise InputError("generator matrix must be 2-D with at least one column")
        if not np.all(np.isfinite(G)):
            raise InputError("generator matrix must be finite")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InputError(f"scale must be positive and finite, got {self.scale}")
        G = G.copy()
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def ambient(self) -> int:
        return self.G.shape[0]

    @property
    def radius(self) -> float:
        """Largest Euclidean norm of a point of L."""
        return self.scale * float(np.sqrt((self.G ** 2).sum(axis=0).max()))

    def scaled(self, s: float) -> "PolytopeView":
        return PolytopeView(self.G, self.scale * s)

    def span_basis(self) -> np.ndarray:
        if "V" not in self._cache:
            U, sv, _ = np.linalg.svd(self.G, full_matrices=False)
            r = 0 if sv.size == 0 or sv[0] == 0 else int(np.sum(sv > 1e-10 * sv[0]))
            self._cache["V"] = U[:, :r]
        return self._cache["V"]

    @property
    def dim(self) -> int:
        return self.span_basis().shape[1]

    def in_span(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        V = self.span_basis()
        res = y - V @ (V.T @ y)
        return float(np.linalg.norm(res)) <= _SPAN_RTOL * max(1.0, float(np.linalg.norm(y)))

    def facets(self):
        """``(normals, offsets)`` of the unscaled hull in span coordinates, or None.

        A point ``v`` (span coordinates) is in ``G B_1`` iff
        ``normals @ v <= offsets``; offsets are positive.
        """
        if "facets" in self._cache:
            return self._cache["facets"]
        out = None
        dim = self.dim
        if self.G.shape[1] <= FACET_POINT_LIMITS.get(dim, 0):
            P = self.span_basis().T @ self.G
            if dim == 1:
                h = float(np.abs(P).max())
                out = (np.array([[1.0], [-1.0]]), np.array([h, h]))
            else:
                out = _hull_facets(P)
        self._cache["facets"] = out
        return out


def _hull_facets(P):
    from scipy.spatial import ConvexHull, QhullError

    pts = np.hstack([P, -P]).T
    try:
        hull = ConvexHull(pts)
    except (QhullError, ValueError):
        return None
    eq = hull.equations
    normals, offsets = eq[:, :-1], -eq[:, -1]
    if np.any(offsets <= 0):
        return None
    # merge duplicated facet planes from triangulation
    key = np.round(np.hstack([normals, offsets[:, None]]) / offsets[:, None], 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return normals[idx], offsets[idx]


def as_polytope(obj, scale: float = 1.0) -> PolytopeView:
    if isinstance(obj, PolytopeView):
        return obj if scale == 1.0 else obj.scaled(scale)
    from .workload import as_matrix

    return PolytopeView(as_matrix(obj), scale)


# --------------------------------------------------------------- gauge & dual

def gauge_lp(L: PolytopeView, y, backend: str = "simplex") -> float:
    """(1/scale) min ||z||_1 subject to G z = y, by linear programming."""
    y = np.asarray(y, dtype=float)
    G = L.G
    N = G.shape[1]
    try:
        res = solve_lp(np.ones(2 * N), A_eq=np.hstack([G, -G]), b_eq=y, backend=backend)
    except LPInfeasible:
        return math.inf
    return res.fun / L.scale


def gauge(L: PolytopeView, y, method: str = "auto") -> float:
    """Smallest ``r >= 0`` with ``y`` in ``r L``; ``inf`` when ``y`` is outside span(L)."""
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != L.ambient:
        raise InputError(f"vector has length {y.shape[0]}, expected {L.ambient}")
    if not np.any(y):
        return 0.0
    if not L.in_span(y):
        return math.inf
    if method in ("auto", "facets"):
        f = L.facets()
        if f is not None:
            Nf, b = f
            v = L.span_basis().T @ y
            return max(0.0, float(np.max((Nf @ v) / b))) / L.scale
        if method == "facets":
            raise InputError("facet enumeration unavailable for this polytope")
        method = "simplex"
    return gauge_lp(L, y, backend=method)


def gauge_many(L: PolytopeView, Y) -> np.ndarray:
    """Gauges of the rows of ``Y`` (facet path when available)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    f = L.facets()
    if f is None:
        return np.array([gauge(L, y) for y in Y])
    Nf, b = f
    V = L.span_basis()
    Z = Y @ V
    res = Y - Z @ V.T
    out = np.maximum(0.0, ((Z @ Nf.T) / b).max(axis=1)) / L.scale
    bad = np.linalg.norm(res, axis=1) > _SPAN_RTOL * np.maximum(1.0, np.linalg.norm(Y, axis=1))
    out[bad] = math.inf
    return out


def dual_norm(L: PolytopeView, w) -> float:
    """max over L of <x, w>, attained at a generator."""
    w = np.asarray(w, dtype=float).ravel()
    return L.scale * float(np.abs(L.G.T @ w).max())


# ------------------------------------------------------------------- chords

def chord(L: PolytopeView, y, u, method: str = "auto") -> tuple[float, float]:
    """Extent ``(t_lo, t_hi)`` of the line ``y + t u`` inside L."""
    y = np.asarray(y, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if not np.any(u):
        raise DegenerateDirectionError("chord direction is the zero vector")
    if not L.in_span(u):
        raise DegenerateDirectionError("chord direction leaves the span of the polytope")
    if method in ("auto", "facets"):
        f = L.facets()
        if f is not None:
            V = L.span_basis()
            lo, hi = chord_facets(f, L.scale, V.T @ y, V.T @ u)
            return float(lo), float(hi)
        if method == "facets":
            raise InputError("facet enumeration unavailable for this polytope")
        method = "simplex"
    return _chord_lp(L, y, u, method)


def chord_facets(f, scale, y, u):
    """Vectorized chord on facets; ``y`` and ``u`` may be (dim,) or (m, dim)."""
    Nf, b = f
    bs = b * scale
    ny = y @ Nf.T
    nu = u @ Nf.T
    slack = bs - ny
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = slack / nu
    hi = np.where(nu > 0, ratio, np.inf).min(axis=-1)
    lo = np.where(nu < 0, ratio, -np.inf).max(axis=-1)
    return lo, hi


def _chord_lp(L, y, u, backend):
    G = L.G
    N = G.shape[1]
    ys = y / L.scale
    c = np.zeros(2 * N + 1)
    c[-1] = -1.0
    ones = np.concatenate([np.ones(2 * N), [0.0]])[None, :]
    out = []
    for sgn in (1.0, -1.0):
        Aeq = np.hstack([G, -G, (-sgn * u)[:, None]])
        try:
            res = solve_lp(c, A_eq=Aeq, b_eq=ys, A_ub=ones, b_ub=[1.0], backend=backend)
        except LPInfeasible:
            raise InputError("chord base point lies outside the polytope") from None
        if res.status == UNBOUNDED:
            raise InputError("polytope is unbounded along the chord")
        out.append(-res.fun * L.scale)
    return -out[1], out[0]


# --------------------------------------------------------------- projection

@dataclass(frozen=True)
class Projection:
    y_hat: np.ndarray
    gap: float
    iterations: int
    weights: np.ndarray
    alpha: float
    certified: bool


def curvature_bound(L: PolytopeView) -> float:
    """Upper bound 2 R^2 on sup over u, v in L of |<u, u - v>|."""
    return 2.0 * L.radius ** 2


def alpha_T(L: PolytopeView, T: int) -> float:
    return 4.0 * curvature_bound(L) / (T + 3)


def default_T(n: float) -> int:
    return int(max(50, math.ceil(10 * n)))


def fw_project(L: PolytopeView, y_tilde, T: int = 50, full: bool = False):
    """Approximate Euclidean projection of ``y_tilde`` onto L.

    Runs at least ``T`` Frank-Wolfe iterations and continues until the duality
    gap is at most ``alpha_T = 4 C(L)/(T+3)``; the gap bounds the excess
    squared distance.  The output is ``s G lam`` with ``||lam||_1 <= 1``.
    Returns ``(y_hat, gap)`` or, with ``full=True``, a :class:`Projection`.
    """
    if T < 1:
        raise InputError(f"T must be at least 1, got {T}")
    yt = np.asarray(y_tilde, dtype=float).ravel()
    G = L.G
    s = L.scale
    N = G.shape[1]
    target = alpha_T(L, T)
    hard_cap = 20 * T + 100
    Gs = s * G
    # atoms are (j, sign); weights mu over 2N atoms, index j for +, N+j for -
    mu = np.zeros(2 * N)
    r0 = Gs.T @ yt
    j0 = int(np.argmax(np.abs(r0)))
    if r0[j0] >= 0:
        mu[j0] = 1.0
    else:
        mu[N + j0] = 1.0
    lam = mu[:N] - mu[N:]
    z = Gs @ lam
    it = 0
    gap = math.inf
    # objective stuck at rounding level: the gap can no longer shrink
    f_floor = 1e-24 * max(1.0, float(yt @ yt), L.radius ** 2)
    best, stall = math.inf, 0
    while True:
        r = yt - z
        c = Gs.T @ r  # <atom_j, r> for + atoms
        zr = float(z @ r)
        jf = int(np.argmax(np.abs(c)))
        v_val = abs(c[jf])
        gap = 2.0 * (v_val - zr)
        f = float(r @ r)
        if f < best - 1e-13 * best - f_floor:
            best, stall = f, 0
        else:
            stall += 1
        if gap <= 1e-14 * max(1.0, float(yt @ yt)) or (it >= T and gap <= target) or it >= hard_cap:
            break
        if stall >= 50 and gap <= target:
            break
        it += 1
        act = np.flatnonzero(mu > 0)
        atom_vals = np.where(act < N, c[act % N], -c[act % N])
        ka = int(act[np.argmin(atom_vals)])
        away_gap = 2.0 * (zr - atom_vals.min())
        if gap >= away_gap or mu[ka] >= 1.0:
            sgn = 1.0 if c[jf] >= 0 else -1.0
            dvec = sgn * Gs[:, jf] - z
            gmax = 1.0
            atom = jf if sgn > 0 else N + jf
            toward = True
        else:
            ja = ka % N
            sgn = 1.0 if ka < N else -1.0
            dvec = z - sgn * Gs[:, ja]
            gmax = mu[ka] / (1.0 - mu[ka])
            atom = ka
            toward = False
        dd = float(dvec @ dvec)
        if dd <= 0:
            break
        gamma = min(max(float(r @ dvec) / dd, 0.0), gmax)
        if toward:
            mu *= 1.0 - gamma
            mu[atom] += gamma
        else:
            mu *= 1.0 + gamma
            mu[atom] -= gamma
            if gamma >= gmax:
                mu[atom] = 0.0
        mu = np.maximum(mu, 0.0)
        mu /= mu.sum()
        lam = mu[:N] - mu[N:]
        z = Gs @ lam
    certified = gap <= target
    lam = mu[:N] - mu[N:]
    if not full:
        return z, float(gap)
    return Projection(z, float(gap), it, lam, target, certified)
