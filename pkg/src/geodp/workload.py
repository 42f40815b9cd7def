"""Query matrices, histograms and privacy parameters.

A workload is a dense ``d x N`` matrix whose rows are linear queries over a
universe of ``N`` element types; a histogram ``x`` counts individuals of each
type and ``A @ x`` are the exact answers.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimensionError, InputError, MalformedInputError

WORKLOAD_KINDS = ("identity", "random_sign", "random_counting", "intervals", "marginals", "hypergraph")

# l1 slack tolerated by Histogram validation
_L1_RTOL = 1e-9


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) for an int seed or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Workload:
    entries: np.ndarray
    label: str = ""
    counting: bool = field(default=False)
    bounded: bool = field(default=False)

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionError(f"workload must be a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"workload needs d >= 1 and N >= 1, got shape {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise MalformedInputError("non-finite workload entry", row=int(r), column=int(c))
        counting = bool(np.all((arr == 0) | (arr == 1)))
        bounded = bool(np.all((arr >= 0) & (arr <= 1)))
        if self.counting and not counting:
            raise InputError("workload flagged as counting has entries outside {0,1}")
        if self.bounded and not bounded:
            raise InputError("workload flagged as bounded has entries outside [0,1]")
        object.__setattr__(self, "entries", _frozen(arr))
        object.__setattr__(self, "counting", counting)
        object.__setattr__(self, "bounded", bounded)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @property
    def A(self) -> np.ndarray:
        return self.entries

    def scaled(self, s: float) -> "Workload":
        return Workload(self.entries * s, label=f"{self.label}*{s:g}")

    def rows(self, weights) -> "Workload":
        """Rows rescaled by ``weights`` (diagonal left multiplication)."""
        w = np.asarray(weights, dtype=float)
        return Workload(w[:, None] * self.entries, label=f"{self.label}[weighted]")

    def columns(self, idx) -> "Workload":
        return Workload(self.entries[:, list(idx)], label=f"{self.label}[cols]")

    def to_dict(self) -> dict:
        return {"label": self.label, "d": self.d, "N": self.N, "rows": self.entries.tolist()}


def as_matrix(A) -> np.ndarray:
    if isinstance(A, Workload):
        return A.entries
    arr = np.asarray(A, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


@dataclass(frozen=True)
class Histogram:
    x: np.ndarray
    n: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise InputError("histogram has non-finite entries")
        n = float(self.n)
        if not n >= 0:
            raise InputError(f"histogram bound n must be nonnegative, got {self.n}")
        l1 = float(np.abs(x).sum())
        if l1 > n * (1 + _L1_RTOL) + 1e-300:
            raise InputError(f"histogram l1 norm {l1:.17g} exceeds declared bound n={n:.17g}")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "n", n)

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def integer(self) -> bool:
        return bool(np.all(self.x == np.round(self.x)))

    @classmethod
    def tight(cls, x) -> "Histogram":
        x = np.asarray(x, dtype=float)
        return cls(x, float(np.abs(x).sum()))

    def to_dict(self) -> dict:
        return {"n": self.n, "x": self.x.tolist()}


def as_vector(x) -> np.ndarray:
    if isinstance(x, Histogram):
        return x.x
    return np.asarray(x, dtype=float).ravel()


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        eps, delta = float(self.epsilon), float(self.delta)
        if not (eps > 0 and math.isfinite(eps)):
            raise InputError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not (0 <= delta < 1):
            raise InputError(f"delta must lie in [0, 1), got {self.delta}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", delta)

    @property
    def pure(self) -> bool:
        return self.delta == 0

    @property
    def c(self) -> float:
        """Gaussian noise multiplier (1 + sqrt(2 ln(1/delta))) / epsilon."""
        if self.delta == 0:
            return math.inf
        return (1.0 + math.sqrt(2.0 * math.log(1.0 / self.delta))) / self.epsilon

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta}


# --------------------------------------------------------------------- I/O

def _parse_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for i, rec in enumerate(csv.reader(io.StringIO(text))):
        if not rec or all(not s.strip() for s in rec):
            continue
        vals = []
        for j, s in enumerate(rec):
            try:
                vals.append(float(s))
            except ValueError:
                raise MalformedInputError(f"cannot parse {s!r} as a number", row=i, column=j) from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DimensionError(f"ragged CSV: row {i} has {len(vals)} entries, expected {width}")
        rows.append(vals)
    if not rows:
        raise MalformedInputError("empty workload file")
    return np.array(rows, dtype=float)


def _parse_json(text: str) -> tuple[np.ndarray, str]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"invalid JSON: {exc.msg}", row=exc.lineno, column=exc.colno) from None
    if not isinstance(obj, dict) or "rows" not in obj:
        raise MalformedInputError("workload JSON needs a 'rows' array")
    rows = obj["rows"]
    if not isinstance(rows, list) or not rows:
        raise MalformedInputError("'rows' must be a non-empty list")
    width = None
    for i, r in enumerate(rows):
        if not isinstance(r, list):
            raise MalformedInputError("each row must be a list", row=i)
        if width is None:
            width = len(r)
        elif len(r) != width:
            raise DimensionError(f"ragged JSON rows: row {i} has {len(r)} entries, expected {width}")
        for j, v in enumerate(r):
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise MalformedInputError(f"bad entry {v!r}", row=i, column=j)
    try:
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from None
    if "d" in obj and obj["d"] != arr.shape[0]:
        raise DimensionError(f"declared d={obj['d']} but found {arr.shape[0]} rows")
    if "N" in obj and obj["N"] != arr.shape[1]:
        raise DimensionError(f"declared N={obj['N']} but found {arr.shape[1]} columns")
    return arr, str(obj.get("label", ""))


def _infer_format(path: Path, fmt):
    if fmt is not None:
        return fmt
    return "json" if path.suffix.lower() == ".json" else "csv"


def load_workload(path, format=None) -> Workload:
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if fmt == "csv":
        return Workload(_parse_csv(text), label=path.stem)
    if fmt == "json":
        arr, label = _parse_json(text)
        return Workload(arr, label=label or path.stem)
    raise InputError(f"unknown workload format {fmt!r}")


def save_workload(W: Workload, path, format=None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        lines = [",".join(f"{v:.17g}" for v in row) for row in W.entries]
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path.write_text(json.dumps(W.to_dict()))
    else:
        raise InputError(f"unknown workload format {fmt!r}")


def load_histogram(path) -> Histogram:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"invalid JSON: {exc.msg}", row=exc.lineno, column=exc.colno) from None
    if not isinstance(obj, dict) or "x" not in obj:
        raise MalformedInputError("histogram JSON needs an 'x' array")
    x = np.asarray(obj["x"], dtype=float)
    n = obj.get("n", float(np.abs(x).sum()))
    return Histogram(x, n)


def save_histogram(h: Histogram, path) -> None:
    Path(path).write_text(json.dumps(h.to_dict()))


# ---------------------------------------------------------------- generators

def all_intervals(N: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(N) for b in range(a, N)]


def _intervals(d, N, rng):
    ivs = all_intervals(N)
    if d > len(ivs):
        raise ConfigurationError(f"intervals: at most N(N+1)/2={len(ivs)} rows over N={N} points, got d={d}")
    if d < len(ivs):
        pick = np.sort(rng.choice(len(ivs), size=d, replace=False))
        ivs = [ivs[i] for i in pick]
    A = np.zeros((d, N))
    for r, (a, b) in enumerate(ivs):
        A[r, a:b + 1] = 1.0
    return A


def _marginals(d, N):
    m = int(round(math.log2(N))) if N > 0 else -1
    if m < 1 or 2 ** m != N:
        raise ConfigurationError(f"marginals: N must be a power of two, got N={N}")
    if d not in (m, 2 * m):
        raise ConfigurationError(f"marginals: d must be m={m} or 2m={2 * m} for N=2^{m}, got d={d}")
    bits = (np.arange(N)[None, :] >> np.arange(m)[:, None]) & 1
    if d == m:
        return bits.astype(float)
    rows = []
    for j in range(m):
        rows.append(1.0 - bits[j])
        rows.append(bits[j].astype(float))
    return np.array(rows)


def gen_workload(kind: str, d: int, N: int, seed: int = 0) -> Workload:
    """Generate a workload of the given kind.

    ``identity`` needs ``d == N``; ``intervals`` takes all ``N(N+1)/2``
    interval indicators when ``d`` equals that count and a seeded subset
    otherwise; ``marginals`` needs ``N = 2^m`` and ``d`` in ``{m, 2m}``;
    ``hypergraph`` plants a 2-colorable 3-uniform hypergraph with ``d`` edges.
    """
    d, N = int(d), int(N)
    if d < 1 or N < 1:
        raise ConfigurationError(f"need d >= 1 and N >= 1, got d={d}, N={N}")
    rng = make_rng(seed)
    if kind == "identity":
        if d != N:
            raise ConfigurationError(f"identity workload needs d == N, got d={d}, N={N}")
        A = np.eye(d)
    elif kind == "random_sign":
        A = rng.choice([-1.0, 1.0], size=(d, N))
    elif kind == "random_counting":
        A = rng.integers(0, 2, size=(d, N)).astype(float)
    elif kind == "intervals":
        A = _intervals(d, N, rng)
    elif kind == "marginals":
        A = _marginals(d, N)
    elif kind == "hypergraph":
        from .discrepancy import hypergraph_instance

        W = hypergraph_instance(d, N, colorable=True, seed=seed)
        return Workload(W.entries, label=f"hypergraph-{d}x{N}-s{seed}")
    else:
        raise ConfigurationError(f"unknown workload kind {kind!r}; expected one of {WORKLOAD_KINDS}")
    return Workload(A, label=f"{kind}-{d}x{N}-s{seed}")


def random_integer_histograms(N: int, n: float, count: int, rng) -> np.ndarray:
    """``count`` nonnegative integer histograms with l1 norm ``floor(n)``."""
    m = int(math.floor(n))
    if m <= 0:
        return np.zeros((count, N))
    return rng.multinomial(m, np.full(N, 1.0 / N), size=count).astype(float)


def diag_workload(values) -> Workload:
    v = np.asarray(values, dtype=float)
    return Workload(np.diag(v), label="diag(" + ",".join(f"{a:g}" for a in v) + ")")


def subsets(N: int, k: int):
    return itertools.combinations(range(N), k)
