"""Least-squares post-processing for small databases under (eps, delta)-privacy.

When the database size ``n`` is small compared with the number of queries,
the Gaussian answer ``y~`` can be improved by projecting it onto ``n K``, the
set of all answer vectors consistent with a histogram of l1 norm ``n``.
:class:`LSEMechanism` does this only on the leading decomposition levels
(those of dimension at least ``eps n``) and keeps the remaining coordinates
as they are; :class:`SimpleLSEMechanism` adds spherical noise and projects
everything.  Both are post-processing of a Gaussian mechanism, so privacy is
unchanged.
"""
from __future__ import annotations

import warnings

import numpy as np

from .decomposition import BaseDecomposition, as_decomposition
from .gauge import PolytopeView, default_T, dual_norm, fw_project
from .gaussmech import GaussianMechanism, Mechanism, MechanismAnswer, build_noise_spec
from .errors import InputError, UnsupportedError
from .workload import PrivacyParams, as_matrix


def split_level(dec: BaseDecomposition, pp: PrivacyParams, n: float):
    """Largest ``t`` with ``d_t >= eps n`` and the bases ``X`` (levels <= t), ``Y`` (the rest)."""
    if not n > 0:
        raise InputError(f"n must be positive, got {n}")
    thr = pp.epsilon * n
    t = 0
    for i, d_i in enumerate(dec.dims, start=1):
        if d_i >= thr:
            t = i
    return t, dec.stacked(range(t)), dec.stacked(range(t, dec.k))


def _check_n(n):
    n = float(n)
    if not n >= 0:
        raise InputError(f"n must be nonnegative, got {n}")
    return n


def _project(G, n, v, T):
    """Projection of ``v`` onto ``n G B_1`` with diagnostics (``n = 0`` gives the origin)."""
    if n == 0:
        return np.zeros_like(v), {"gap": 0.0, "alpha": 0.0, "certified": True, "iterations": 0}
    L = PolytopeView(G, n)
    pr = fw_project(L, v, T, full=True)
    return pr.y_hat, {"gap": pr.gap, "alpha": pr.alpha, "certified": pr.certified,
                      "iterations": pr.iterations}


class LSEMechanism(Mechanism):
    name = "lse"

    def __init__(self, dec, pp: PrivacyParams, n: float, T: int | None = None):
        dec = as_decomposition(dec)
        super().__init__(dec.source, pp)
        self.n = _check_n(n)
        self.gauss = GaussianMechanism(build_noise_spec(dec, pp))
        self.dec = dec
        self.T = default_T(self.n) if T is None else int(T)
        if self.n > 0:
            self.t, self.X, self.Y = split_level(dec, pp, self.n)
        else:
            self.t, self.X, self.Y = dec.k, dec.stacked(range(dec.k)), dec.stacked(())
        self.GX = self.X.T @ self.A

    def polytope(self) -> PolytopeView:
        """The projection target in X coordinates, n X^T K."""
        return PolytopeView(self.GX, max(self.n, 1e-300))

    def sample_noise(self, size, rng):
        return self.gauss.sample_noise(size, rng)

    def _split(self, y, w):
        yt = y + w
        if self.t == 0:
            return yt, None
        z, info = _project(self.GX, self.n, self.X.T @ yt, self.T)
        out = self.X @ z
        if self.Y.shape[1]:
            out = out + self.Y @ (self.Y.T @ yt)
        return out, info

    def answer_from_noise(self, y, w):
        return self._split(y, w)[0]

    def diagnostics(self, y, w, out):
        info = {"t": self.t, "n": self.n, "T": self.T}
        if self.t == 0:
            return info
        _, proj = self._split(y, w)
        wx = self.X.T @ w
        info.update(proj)
        info["noise_sq_x"] = float(wx @ wx)
        info["dual_norm_x"] = dual_norm(self.polytope(), wx) if self.n > 0 else 0.0
        return info


class SimpleLSEMechanism(Mechanism):
    name = "simple-lse"

    def __init__(self, A, pp: PrivacyParams, n: float, T: int | None = None):
        super().__init__(A, pp)
        if pp.delta == 0:
            raise UnsupportedError("simple-lse needs delta > 0")
        A = self.A
        if A.min() < 0 or A.max() > 1:
            warnings.warn("simple-lse is intended for workloads with entries in [0, 1]", stacklevel=2)
        self.n = _check_n(n)
        self.r = float(np.sqrt((A ** 2).sum(axis=0).max()))
        self.sigma = self.r * pp.c
        self.T = default_T(self.n) if T is None else int(T)

    def sample_noise(self, size, rng):
        return self.sigma * rng.standard_normal((size, self.d))

    def answer_from_noise(self, y, w):
        return _project(self.A, self.n, y + w, self.T)[0]

    def diagnostics(self, y, w, out):
        _, info = _project(self.A, self.n, y + w, self.T)
        info["n"] = self.n
        info["T"] = self.T
        info["noise_sq"] = float(w @ w)
        info["dual_norm"] = self.n * float(np.abs(self.A.T @ w).max())
        return info


def run_lse(dec, pp: PrivacyParams, x, seed=0, T: int | None = None, n: float | None = None) -> MechanismAnswer:
    """Gaussian answer with the leading levels projected onto ``n X X^T K``.

    ``n`` defaults to the declared bound of ``x`` when it is a Histogram.
    """
    n = _declared_n(x, n)
    return LSEMechanism(dec, pp, n, T).run(x, seed)


def run_simple_lse(A, pp: PrivacyParams, x, seed=0, T: int | None = None, n: float | None = None) -> MechanismAnswer:
    n = _declared_n(x, n)
    return SimpleLSEMechanism(as_matrix(A), pp, n, T).run(x, seed)


def _declared_n(x, n):
    if n is not None:
        return n
    if hasattr(x, "n"):
        return x.n
    raise InputError("pass the size bound n or a Histogram carrying it")
