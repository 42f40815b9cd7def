"""Pure-privacy noise with density proportional to exp(-eps ||y||_K).

A draw is ``r z`` with ``r ~ Gamma(dim + 1, rate eps)`` and ``z`` uniform on
``K``; the product has exactly the target density, and its gauge follows
``Gamma(dim, rate eps)``.  Uniform points on ``K`` come from hit-and-run
chains started at the origin, using exact chords (facet lists in low
dimension, linear programs otherwise).

This plain K-norm density stands in for the generalized K-norm distribution:
it is exactly ``(eps, 0)``-private but carries weaker worst-case error
constants.  Every mechanism built here records that substitution in its
diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomposition import as_decomposition, row_space_projector
from .errors import DimensionError, InputError
from .gauge import PolytopeView, chord, chord_facets, default_T, dual_norm, fw_project
from .gaussmech import Mechanism
from .sparsemech import split_level
from .workload import PrivacyParams, as_matrix, make_rng

SUBSTITUTION_NOTE = "plain K-norm density exp(-eps ||y||_K) substituted for the generalized K-norm distribution"
DEFAULT_CHAINS = 64


@dataclass(frozen=True)
class KNormSampler:
    polytope: PolytopeView
    epsilon_prime: float
    burn_in: int | None = None
    thin: int | None = None

    def __post_init__(self):
        if not (self.epsilon_prime > 0 and math.isfinite(self.epsilon_prime)):
            raise InputError(f"epsilon_prime must be positive, got {self.epsilon_prime}")
        dim = self.polytope.dim
        if dim == 0:
            raise DimensionError("polytope is a single point")
        if dim < self.polytope.ambient:
            raise DimensionError(
                f"polytope spans {dim} of {self.polytope.ambient} dimensions; project onto its span first"
            )
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 10 * dim * dim)
        elif self.burn_in < 10 * dim * dim:
            raise InputError(f"burn_in must be at least 10 dim^2 = {10 * dim * dim}")
        if self.thin is None:
            object.__setattr__(self, "thin", dim)
        elif self.thin < 1:
            raise InputError("thin must be at least 1")

    @property
    def dim(self) -> int:
        return self.polytope.dim


def _hit_and_run(s: KNormSampler, count: int, chains: int, rng) -> np.ndarray:
    """``count`` uniform points of K (span coordinates), from ``chains`` parallel chains."""
    L = s.polytope
    dim = s.dim
    V = L.span_basis()
    f = L.facets()
    per_chain = -(-count // chains)
    Z = np.zeros((chains, dim))
    out = np.empty((chains, per_chain, dim))
    total = s.burn_in + per_chain * s.thin
    kept = 0
    for step in range(1, total + 1):
        U = rng.standard_normal((chains, dim))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        if f is not None:
            lo, hi = chord_facets(f, L.scale, Z, U)
        else:
            lo = np.empty(chains)
            hi = np.empty(chains)
            for c in range(chains):
                lo[c], hi[c] = chord(L, V @ Z[c], V @ U[c])
        t = lo + (hi - lo) * rng.random(chains)
        Z = Z + t[:, None] * U
        if step > s.burn_in and (step - s.burn_in) % s.thin == 0:
            out[:, kept] = Z
            kept += 1
    # interleave chains so any prefix mixes all of them
    pts = out.transpose(1, 0, 2).reshape(-1, dim)[:count]
    return pts @ V.T


def sample_knorm_batch(s: KNormSampler, size: int, seed=0, chains: int | None = None,
                       return_radius: bool = False):
    """``size`` draws from the K-norm density (rows), optionally with their radial factors."""
    rng = make_rng(seed)
    if chains is None:
        # parallel chains are cheap with facet chords; LP chords run one chain
        chains = min(size, DEFAULT_CHAINS) if s.polytope.facets() is not None else 1
    Z = _hit_and_run(s, size, max(chains, 1), rng)
    r = rng.gamma(s.dim + 1, 1.0 / s.epsilon_prime, size=size)
    W = r[:, None] * Z
    return (W, r) if return_radius else W


def sample_knorm(s: KNormSampler, seed=0) -> np.ndarray:
    return sample_knorm_batch(s, 1, seed, chains=1)[0]


class _SpanNoise:
    """K-norm noise for a possibly rank-deficient workload, lifted back to R^d."""

    def __init__(self, A, eps):
        A = as_matrix(A)
        self.V, Ared = row_space_projector(A)
        self.sampler = KNormSampler(PolytopeView(Ared), eps)

    def sample(self, size, rng):
        W = sample_knorm_batch(self.sampler, size, rng)
        return W @ self.V.T


class KNormLSEMechanism(Mechanism):
    name = "knorm"

    def __init__(self, A, pp: PrivacyParams, n: float, T: int | None = None):
        super().__init__(A, pp)
        self.n = float(n)
        if not self.n > 0:
            raise InputError(f"n must be positive, got {n}")
        self.T = default_T(self.n) if T is None else int(T)
        self.noise = _SpanNoise(self.A, pp.epsilon)
        self.L = PolytopeView(self.A, self.n)

    @property
    def privacy(self) -> PrivacyParams:
        return PrivacyParams(self.pp.epsilon, 0.0)

    def sample_noise(self, size, rng):
        return self.noise.sample(size, rng)

    def answer_from_noise(self, y, w):
        return fw_project(self.L, y + w, self.T)[0]

    def diagnostics(self, y, w, out):
        pr = fw_project(self.L, y + w, self.T, full=True)
        return {"n": self.n, "T": self.T, "gap": pr.gap, "alpha": pr.alpha, "certified": pr.certified,
                "dual_norm": dual_norm(self.L, w), "noise_sq": float(w @ w), "note": SUBSTITUTION_NOTE}


def split_budget(t: int, k: int, eps: float) -> list[float]:
    """Per-part budgets: one share per projected level and one for the remainder (if any)."""
    parts = t + (1 if t < k else 0)
    return [eps / parts] * parts


class KNormSplitMechanism(Mechanism):
    """Independent K-norm noise per leading level and for the remainder; least squares on the leading part."""

    name = "knorm-split"

    def __init__(self, A, pp: PrivacyParams, n: float, T: int | None = None, dec=None):
        super().__init__(A, pp)
        self.n = float(n)
        if not self.n > 0:
            raise InputError(f"n must be positive, got {n}")
        self.T = default_T(self.n) if T is None else int(T)
        self.dec = as_decomposition(self.A) if dec is None else dec
        self.t, self.X, self.Y = split_level(self.dec, pp, self.n)
        k = self.dec.k
        self.budgets = split_budget(self.t, k, pp.epsilon)
        self.parts = []
        for i in range(self.t):
            U = self.dec.levels[i].U
            self.parts.append((U, _SpanNoise(U.T @ self.A, self.budgets[i])))
        if self.t < k:
            self.parts.append((self.Y, _SpanNoise(self.Y.T @ self.A, self.budgets[-1])))
        self.GX = self.X.T @ self.A

    @property
    def privacy(self) -> PrivacyParams:
        return PrivacyParams(float(sum(self.budgets)), 0.0)

    def sample_noise(self, size, rng):
        W = np.zeros((size, self.d))
        for U, noise in self.parts:
            W += noise.sample(size, rng) @ U.T
        return W

    def answer_from_noise(self, y, w):
        yt = y + w
        out = np.zeros(self.d)
        if self.t > 0:
            z = fw_project(PolytopeView(self.GX, self.n), self.X.T @ yt, self.T)[0]
            out += self.X @ z
        if self.Y.shape[1]:
            out += self.Y @ (self.Y.T @ yt)
        return out

    def diagnostics(self, y, w, out):
        return {"n": self.n, "T": self.T, "t": self.t, "budgets": self.budgets, "note": SUBSTITUTION_NOTE}


def run_knorm_lse(A, pp: PrivacyParams, x, seed=0, T: int | None = None, n: float | None = None):
    n = x.n if n is None else n
    return KNormLSEMechanism(A, pp, n, T).run(x, seed)


def run_knorm_split(A, pp: PrivacyParams, x, seed=0, T: int | None = None, n: float | None = None):
    n = x.n if n is None else n
    return KNormSplitMechanism(A, pp, n, T).run(x, seed)
