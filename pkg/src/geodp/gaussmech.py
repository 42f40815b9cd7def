"""Correlated Gaussian noise mechanism built on a base decomposition.

Level ``i`` receives independent noise ``sqrt(k) r_i U_i w_i`` with
``w_i ~ N(0, c^2 I)``, ``c = c(eps, delta)``.  Privacy rests on the ellipsoid
``E = {v : v^T M^{-1} v <= 1}``, ``M = k sum_i r_i^2 U_i U_i^T``, containing
every column of ``A``; :meth:`NoiseSpec.certificate` evaluates that
containment directly.

All mechanisms in the package share the :class:`Mechanism` interface: the
output is a post-processing of ``A x + w`` with noise ``w`` drawn
independently of ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decomposition import BaseDecomposition, as_decomposition
from .errors import DimensionError, InputError, UnsupportedError
from .workload import Histogram, PrivacyParams, as_matrix, as_vector, make_rng


@dataclass(frozen=True)
class MechanismAnswer:
    y_tilde: np.ndarray
    noise: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "y_tilde": np.asarray(self.y_tilde).tolist(),
            "noise": np.asarray(self.noise).tolist() if np.ndim(self.noise) else float(self.noise),
            "meta": self.meta,
        }


class Mechanism:
    """Base class: ``answer = answer_from_noise(A x, w)`` with ``w`` independent of ``x``."""

    name = "mechanism"

    def __init__(self, A, pp: PrivacyParams):
        self.A = as_matrix(A)
        self.pp = pp

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def privacy(self) -> PrivacyParams:
        return self.pp

    def sample_noise(self, size: int, rng) -> np.ndarray:
        raise NotImplementedError

    def answer_from_noise(self, y: np.ndarray, w) -> np.ndarray:
        return y + w

    def diagnostics(self, y: np.ndarray, w, out: np.ndarray) -> dict:
        return {}

    def exact(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.shape[0] != self.N:
            raise DimensionError(f"histogram has length {x.shape[0]}, workload has N={self.N}")
        return self.A @ x

    def run(self, x, seed=0) -> MechanismAnswer:
        y = self.exact(x)
        w = self.sample_noise(1, make_rng(seed))[0]
        out = self.answer_from_noise(y, w)
        meta = {"mechanism": self.name, "privacy": self.privacy.to_dict(), "seed": _seed_repr(seed)}
        meta.update(self.diagnostics(y, w, out))
        return MechanismAnswer(out, out - y, meta)


def _seed_repr(seed):
    return seed if isinstance(seed, (int, np.integer)) else repr(seed)


@dataclass(frozen=True)
class NoiseSpec:
    dec: BaseDecomposition
    pp: PrivacyParams
    c: float
    factors: tuple

    @property
    def k(self) -> int:
        return self.dec.k

    def stacked(self) -> np.ndarray:
        """``d x rank`` matrix whose columns are the scaled level bases."""
        return np.hstack(self.factors)

    def covariance(self) -> np.ndarray:
        """Sigma = c^2 k sum_i r_i^2 U_i U_i^T."""
        F = self.stacked()
        return self.c ** 2 * (F @ F.T)

    def certificate(self, A=None) -> np.ndarray:
        """Per-column containment values (1/k) sum_i ||U_i^T a_j||^2 / r_i^2."""
        A = self.dec.source if A is None else as_matrix(A)
        tot = np.zeros(A.shape[1])
        for lv in self.dec.levels:
            tot += np.sum((lv.U.T @ A) ** 2, axis=0) / lv.r ** 2
        return tot / self.k

    def sample(self, rng, size: int) -> np.ndarray:
        F = self.stacked()
        Z = rng.standard_normal((size, F.shape[1]))
        return self.c * (Z @ F.T)


def build_noise_spec(dec, pp: PrivacyParams) -> NoiseSpec:
    dec = as_decomposition(dec)
    if pp.delta == 0:
        raise UnsupportedError("Gaussian noise needs delta > 0; use the K-norm mechanisms for pure privacy")
    if np.any(dec.radii <= 0):
        raise InputError("decomposition has a level of zero radius")
    k = dec.k
    factors = tuple(math.sqrt(k) * lv.r * lv.U for lv in dec.levels)
    return NoiseSpec(dec=dec, pp=pp, c=pp.c, factors=factors)


def analytic_error(spec: NoiseSpec) -> float:
    """Expected squared error k c^2 sum_i d_i r_i^2."""
    return spec.k * spec.c ** 2 * float(sum(lv.d_i * lv.r ** 2 for lv in spec.dec.levels))


def per_coordinate_error(spec: NoiseSpec) -> np.ndarray:
    """Diagonal of the noise covariance (expected squared error per query)."""
    F = spec.stacked()
    return spec.c ** 2 * np.sum(F ** 2, axis=1)


class GaussianMechanism(Mechanism):
    name = "gaussian"

    def __init__(self, spec: NoiseSpec):
        super().__init__(spec.dec.source, spec.pp)
        self.spec = spec

    @classmethod
    def from_workload(cls, A, pp: PrivacyParams, dec=None):
        dec = as_decomposition(A) if dec is None else dec
        return cls(build_noise_spec(dec, pp))

    def sample_noise(self, size, rng):
        return self.spec.sample(rng, size)

    def analytic_error(self) -> float:
        return analytic_error(self.spec)


def run_gaussian(spec: NoiseSpec, x, seed=0) -> MechanismAnswer:
    return GaussianMechanism(spec).run(x, seed)


def group_privacy(pp: PrivacyParams, k: int) -> PrivacyParams:
    """Guarantee for histograms differing by up to ``k`` individuals."""
    if k == 1:
        return pp
    eps = pp.epsilon
    factor = math.expm1(k * eps) / math.expm1(eps)
    return PrivacyParams(k * eps, min(pp.delta * factor, math.nextafter(1.0, 0.0)))


class ScaledMechanism(Mechanism):
    """``x -> mech(k x) / k``: error on ``||x||_1 <= n/k`` is 1/k^2 of mech's on ``k x``."""

    def __init__(self, mech: Mechanism, k: int):
        if int(k) != k or k < 1:
            raise InputError(f"scale factor must be a positive integer, got {k}")
        super().__init__(mech.A, mech.pp)
        self.inner = mech
        self.k = int(k)
        self.name = f"scaled[{self.k}]({mech.name})"

    @property
    def privacy(self) -> PrivacyParams:
        return group_privacy(self.inner.privacy, self.k)

    def sample_noise(self, size, rng):
        return self.inner.sample_noise(size, rng)

    def answer_from_noise(self, y, w):
        return self.inner.answer_from_noise(self.k * y, w) / self.k


def scale_reduction_wrap(mech: Mechanism, k: int) -> Mechanism:
    if k == 1:
        return mech
    return ScaledMechanism(mech, k)


def as_histogram(x, n=None) -> Histogram:
    if isinstance(x, Histogram):
        return x
    x = as_vector(x)
    return Histogram(x, float(np.abs(x).sum()) if n is None else n)
