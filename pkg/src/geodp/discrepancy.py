"""Combinatorial discrepancy: exact brute force and a private-mechanism sandwich.

``disc(A) = min over x in {-1,+1}^N of ||A x||_inf`` and
``herdisc(A) = max over column subsets S of disc(A_S)``.  Exact values are
computed by enumeration for small ``N``.  For larger instances
:func:`herdisc_approx` brackets herdisc between a spectral lower estimate on
a reweighted workload and the l_inf error of a median-of-Gaussians
mechanism on the same reweighting.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import dec_lowerbound
from .decomposition import decompose_workload
from .errors import BudgetExceededError, ConfigurationError, InputError, UnsupportedError
from .gaussmech import Mechanism, build_noise_spec, per_coordinate_error
from .workload import PrivacyParams, Workload, as_matrix, make_rng

DISC_MAX_N = 24
HERDISC_MAX_N = 16
# the fixed privacy parameters of the approximation sandwich
SANDWICH_PP = PrivacyParams(1.0, 0.01)
# floor applied to every weight iterate so the reweighted workload keeps its rank
WEIGHT_FLOOR = 1e-8
# cap on entries of one batched coloring product
_BATCH_ELEMS = 1 << 22


def _sign_matrix(s: int) -> np.ndarray:
    """All 2^(s-1) colorings of s items with the last item fixed to +1 (rows)."""
    if s == 0:
        return np.zeros((1, 0))
    m = 1 << (s - 1)
    bits = (np.arange(m)[:, None] >> np.arange(s - 1)[None, :]) & 1
    S = np.ones((m, s))
    S[:, : s - 1] = 1.0 - 2.0 * bits
    return S


def disc_bruteforce(A, max_N: int = DISC_MAX_N):
    """Exact discrepancy and a witnessing coloring."""
    A = as_matrix(A)
    d, N = A.shape
    if N > max_N:
        raise BudgetExceededError("discrepancy enumeration over 2^N colorings",
                                  required=f"N={N}", limit=f"N<={max_N}")
    if N == 0:
        return 0.0, np.zeros(0)
    # x -> -x leaves ||Ax|| unchanged, so fix the last sign; split the rest into low/high bits
    free = N - 1
    lo_bits = min(free, 12)
    hi_bits = free - lo_bits
    Slo = _signs_all(lo_bits)
    Shi = _signs_all(hi_bits)
    lo_sums = Slo @ A[:, :lo_bits].T  # (2^lo, d)
    hi_sums = Shi @ A[:, lo_bits:free].T + A[:, free]  # (2^hi, d)
    best = math.inf
    arg = (0, 0)
    for h in range(hi_sums.shape[0]):
        vals = np.abs(lo_sums + hi_sums[h]).max(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), (i, h)
            if best == 0.0:
                break
    x = np.concatenate([Slo[arg[0]], Shi[arg[1]], [1.0]])
    return best, x


def _signs_all(s):
    m = 1 << s
    bits = (np.arange(m)[:, None] >> np.arange(s)[None, :]) & 1
    return 1.0 - 2.0 * bits.astype(float)


def _disc_batch(A, subsets, S):
    """disc of A restricted to each subset (rows of ``subsets``) of a common size."""
    sub = A[:, subsets].transpose(1, 0, 2)  # (m, d, s)
    vals = np.abs(sub @ S.T).max(axis=1)  # (m, 2^(s-1))
    j = vals.argmin(axis=1)
    return vals[np.arange(len(j)), j], j


def herdisc_bruteforce(A, max_N: int = HERDISC_MAX_N) -> "DiscrepancyReport":
    """Exact hereditary discrepancy with a witnessing subset and coloring."""
    A = as_matrix(A)
    d, N = A.shape
    if N > max_N:
        raise BudgetExceededError("hereditary discrepancy enumeration over 3^N pairs",
                                  required=f"N={N}", limit=f"N<={max_N}")
    best, wit_S, wit_x = 0.0, (), np.zeros(0)
    for s in range(1, N + 1):
        S = _sign_matrix(s)
        per = max(1, _BATCH_ELEMS // (d * S.shape[0]))
        combos = itertools.combinations(range(N), s)
        while True:
            block = list(itertools.islice(combos, per))
            if not block:
                break
            idx = np.array(block, dtype=np.intp)
            vals, j = _disc_batch(A, idx, S)
            i = int(np.argmax(vals))
            if vals[i] > best:
                best = float(vals[i])
                wit_S = tuple(int(v) for v in idx[i])
                wit_x = S[j[i]].copy()
    return DiscrepancyReport(herdisc_exact=best, witness_subset=wit_S, witness_coloring=wit_x)


@dataclass(frozen=True)
class DiscrepancyReport:
    herdisc_exact: float | None = None
    witness_subset: tuple | None = None
    witness_coloring: np.ndarray | None = None
    lower_estimate: float | None = None
    upper_estimate: float | None = None
    approx_factor_budget: float | None = None
    measured_factor: float | None = None
    weights: np.ndarray | None = None
    notes: tuple = field(default=())

    def to_dict(self) -> dict:
        out = {}
        for key in ("herdisc_exact", "lower_estimate", "upper_estimate", "approx_factor_budget",
                    "measured_factor"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.witness_subset is not None:
            out["witness"] = {"subset": list(self.witness_subset),
                              "coloring": [int(v) for v in self.witness_coloring]}
        if self.weights is not None:
            out["weights"] = np.asarray(self.weights).tolist()
        if self.notes:
            out["notes"] = list(self.notes)
        return out


# ----------------------------------------------------------- reweighting

@dataclass(frozen=True)
class WeightedWorkload:
    """Row weights ``p`` (summing to 1); the reweighted workload is ``diag(sqrt(p)) A``."""

    p: np.ndarray
    A: np.ndarray
    iterates: tuple = field(default=(), repr=False)

    @property
    def P(self) -> np.ndarray:
        return np.diag(np.sqrt(self.p))

    def weighted(self, p=None) -> np.ndarray:
        p = self.p if p is None else p
        return np.sqrt(p)[:, None] * self.A


def _coordinate_errors(A, p, pp):
    PA = np.sqrt(p)[:, None] * A
    spec = build_noise_spec(decompose_workload(PA), pp)
    return per_coordinate_error(spec) / p


def minimax_weights(A, pp: PrivacyParams, rounds: int = 200, learning_rate: float = 0.5) -> WeightedWorkload:
    """Multiplicative-weights search for row weights that equalize per-query error.

    Each round reweights the rows by ``sqrt(p)``, builds the Gaussian
    mechanism for the reweighted workload and measures the per-query error
    ``E_i`` after unweighting; rows with large error gain weight.  The
    average of all iterates (including the uniform start) is returned.
    """
    A = as_matrix(A)
    d = A.shape[0]
    if pp.delta == 0:
        raise UnsupportedError("minimax weights use Gaussian noise and need delta > 0")
    if rounds < 0:
        raise InputError("rounds must be nonnegative")
    p = np.full(d, 1.0 / d)
    iterates = [p.copy()]
    total = p.copy()
    for _ in range(rounds):
        E = _coordinate_errors(A, p, pp)
        p = p * np.exp(learning_rate * E / E.max())
        p /= p.sum()
        p = np.maximum(p, WEIGHT_FLOOR)
        p /= p.sum()
        iterates.append(p.copy())
        total += p
    avg = total / total.sum()
    return WeightedWorkload(p=avg, A=A, iterates=tuple(iterates))


class MedianMechanism(Mechanism):
    """Coordinatewise median of ``L`` reweighted Gaussian runs at budget (eps/L, delta/L) each."""

    name = "median"

    def __init__(self, A, pp: PrivacyParams, L: int, weights=None):
        super().__init__(A, pp)
        if L < 1 or L % 2 == 0:
            raise InputError(f"L must be a positive odd integer, got {L}")
        self.L = int(L)
        self.p = np.full(self.d, 1.0 / self.d) if weights is None else np.asarray(weights, dtype=float)
        self.run_pp = PrivacyParams(pp.epsilon / L, pp.delta / L)
        PA = np.sqrt(self.p)[:, None] * self.A
        self.spec = build_noise_spec(decompose_workload(PA), self.run_pp)
        self.unweight = 1.0 / np.sqrt(self.p)

    def sample_noise(self, size, rng):
        W = self.spec.sample(rng, size * self.L).reshape(size, self.L, self.d)
        return W * self.unweight

    def answer_from_noise(self, y, w):
        return np.median(y + w, axis=0)

    def diagnostics(self, y, w, out):
        return {"L": self.L, "linf_error": float(np.abs(out - y).max())}

    def coordinate_rms(self) -> np.ndarray:
        """RMS error of a single run, per query."""
        return np.sqrt(per_coordinate_error(self.spec)) * self.unweight


def median_linf_mechanism(A, pp: PrivacyParams, x, L: int, seed=0, weights=None):
    return MedianMechanism(A, pp, L, weights).run(x, seed)


def default_repetitions(d: int) -> int:
    return 2 * math.ceil(math.log(d + 1)) + 1


def approx_budget(d: int, N: int) -> float:
    """log2(d)^2 log2(N) sqrt(log2 log2(d + 2)), each factor floored at 1."""
    a = max(1.0, math.log2(d)) ** 2
    b = max(1.0, math.log2(N))
    c = math.sqrt(max(1.0, math.log2(math.log2(d + 2))))
    return a * b * c


def herdisc_approx(A, pp_fixed: PrivacyParams = SANDWICH_PP, rounds: int = 200,
                   learning_rate: float = 0.5, exact: float | None = None) -> DiscrepancyReport:
    """Spectral lower estimate and median-mechanism upper estimate of herdisc.

    lower = sqrt(max over weight iterates of the decomposition bound of
    ``diag(sqrt(p)) A``); upper = sqrt(2 ln 2d) max_i RMS_i of one run of
    the median mechanism's base Gaussian on the averaged weights.  When
    ``exact`` is supplied the measured factor
    ``max(exact/lower, lower/exact)`` is included.
    """
    A = as_matrix(A)
    d, N = A.shape
    if not np.any(A):
        return DiscrepancyReport(herdisc_exact=exact, lower_estimate=0.0, upper_estimate=0.0,
                                 approx_factor_budget=approx_budget(d, N),
                                 measured_factor=1.0 if exact == 0 else None)
    mw = minimax_weights(A, pp_fixed, rounds, learning_rate)
    lower2 = 0.0
    for p in mw.iterates + (mw.p,):
        lb = dec_lowerbound(decompose_workload(mw.weighted(p)), pp_fixed).dec_lb
        lower2 = max(lower2, lb)
    lower = math.sqrt(lower2)
    mech = MedianMechanism(A, pp_fixed, default_repetitions(d), mw.p)
    upper = math.sqrt(2.0 * math.log(2 * d)) * float(mech.coordinate_rms().max())
    factor = None
    if exact is not None:
        factor = math.inf if exact == 0 or lower == 0 else max(exact / lower, lower / exact)
    return DiscrepancyReport(herdisc_exact=exact, lower_estimate=lower, upper_estimate=upper,
                             approx_factor_budget=approx_budget(d, N), measured_factor=factor,
                             weights=mw.p, notes=("colorings come only from brute force",))


# ----------------------------------------------------------- hypergraphs

def hypergraph_instance(m_edges: int, n_vertices: int, colorable: bool = True, seed: int = 0) -> Workload:
    """Incidence matrix (edges x vertices) of a 3-uniform hypergraph.

    With ``colorable`` a hidden balanced 2-coloring is drawn first and only
    edges containing both colors are used, so every column restriction has
    discrepancy at most 2.
    """
    m, n = int(m_edges), int(n_vertices)
    if n < 3:
        raise ConfigurationError(f"need at least 3 vertices, got {n}")
    if m < 1:
        raise ConfigurationError(f"need at least one edge, got {m}")
    rng = make_rng(seed)
    triples = np.array(list(itertools.combinations(range(n), 3)), dtype=np.intp)
    if colorable:
        color = np.ones(n)
        color[rng.permutation(n)[: n // 2]] = -1.0
        s = color[triples].sum(axis=1)
        triples = triples[np.abs(s) < 3]
    if m > len(triples):
        kind = "bichromatic " if colorable else ""
        raise ConfigurationError(f"only {len(triples)} distinct {kind}3-subsets of {n} vertices, asked for {m}")
    pick = np.sort(rng.choice(len(triples), size=m, replace=False))
    A = np.zeros((m, n))
    for r, tri in enumerate(triples[pick]):
        A[r, tri] = 1.0
    tag = "planted" if colorable else "random"
    return Workload(A, label=f"hypergraph-{tag}-{m}x{n}-s{seed}")
