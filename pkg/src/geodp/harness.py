"""Monte-Carlo error evaluation and the corpus runner.

Worst-case expected error is estimated over a fixed candidate set of
histograms: the origin, the vertices ``+-n e_j`` and 32 random integer
histograms of l1 norm ``floor(n)``.  Trials are grouped in fixed-size chunks
and chunk ``c`` draws from ``SeedSequence(seed, spawn_key=(c,))``, so serial
and threaded runs produce identical numbers.  All candidates share each
chunk's noise draws.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bruteforce_bounds, dec_lowerbound, optimality_ratio
from .decomposition import decompose_workload
from .discrepancy import MedianMechanism, default_repetitions, minimax_weights
from .errors import BudgetExceededError, ConfigurationError, GeoDPError, InputError
from .gaussmech import GaussianMechanism, Mechanism, analytic_error, build_noise_spec, scale_reduction_wrap
from .knorm import KNormLSEMechanism, KNormSplitMechanism
from .sparsemech import LSEMechanism, SimpleLSEMechanism
from .workload import PrivacyParams, Workload, as_matrix, gen_workload, load_workload, make_rng, \
    random_integer_histograms

SCHEMA = "geodp-report/1"
MECHANISMS = ("gaussian", "lse", "simple-lse", "knorm", "knorm-split", "median")
CHUNK = 256
RANDOM_CANDIDATES = 32
MIN_TRIALS = 100


@dataclass(frozen=True)
class ErrorEstimate:
    mechanism: str
    workload: str
    n: float
    trials: int
    per_candidate: np.ndarray
    estimate: float
    standard_error: float
    seed: int
    worst_candidate: int
    analytic: float | None = None
    candidates: tuple = field(default=())

    def to_dict(self) -> dict:
        out = {
            "mechanism": self.mechanism,
            "workload": self.workload,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "worst_candidate": self.candidates[self.worst_candidate] if self.candidates else self.worst_candidate,
            "per_candidate": [float(v) for v in self.per_candidate],
            "candidates": list(self.candidates),
        }
        if self.analytic is not None:
            out["analytic"] = self.analytic
        return out


def make_mechanism(config, A, n: float | None = None) -> Mechanism:
    """Build a mechanism from a config dict such as ``{"mech": "lse", "eps": 1, "delta": 1e-6}``."""
    if isinstance(config, Mechanism):
        return config
    if isinstance(config, str):
        config = {"mech": config}
    cfg = dict(config)
    name = cfg.get("mech")
    if name not in MECHANISMS:
        raise ConfigurationError(f"unknown mechanism {name!r}; expected one of {MECHANISMS}")
    A = as_matrix(A)
    eps = float(cfg.get("eps", 1.0))
    delta = float(cfg.get("delta", 0.0 if name.startswith("knorm") else 1e-6))
    pp = PrivacyParams(eps, delta)
    n = cfg.get("n", n)
    T = cfg.get("T")
    if name == "gaussian":
        mech = GaussianMechanism(build_noise_spec(decompose_workload(A), pp))
    elif name == "median":
        L = int(cfg.get("L", default_repetitions(A.shape[0])))
        weights = None
        if cfg.get("weights", "uniform") == "minimax":
            weights = minimax_weights(A, PrivacyParams(eps / L, delta / L)).p
        mech = MedianMechanism(A, pp, L, weights)
    else:
        if n is None:
            raise ConfigurationError(f"mechanism {name!r} needs the size bound n")
        if name == "lse":
            mech = LSEMechanism(decompose_workload(A), pp, n, T)
        elif name == "simple-lse":
            mech = SimpleLSEMechanism(A, pp, n, T)
        elif name == "knorm":
            mech = KNormLSEMechanism(A, pp, n, T)
        else:
            mech = KNormSplitMechanism(A, pp, n, T)
    k = int(cfg.get("scale_k", 1))
    return scale_reduction_wrap(mech, k)


def is_oblivious(mech: Mechanism) -> bool:
    """Output error independent of x (pure additive noise, no projection)."""
    inner = getattr(mech, "inner", mech)
    return isinstance(inner, (GaussianMechanism, MedianMechanism))


def candidate_set(N: int, n: float, seed) -> tuple[np.ndarray, list[str]]:
    """Rows: 0, +-n e_j for every j, then random integer histograms with ||x||_1 = floor(n)."""
    X = [np.zeros(N)]
    names = ["zero"]
    for j in range(N):
        for s in (1.0, -1.0):
            e = np.zeros(N)
            e[j] = s * n
            X.append(e)
            names.append(f"{'+' if s > 0 else '-'}n*e{j}")
    rng = make_rng(np.random.SeedSequence(_seed_int(seed), spawn_key=(2**31,)))
    R = random_integer_histograms(N, n, RANDOM_CANDIDATES, rng)
    X.extend(R)
    names.extend(f"random{i}" for i in range(RANDOM_CANDIDATES))
    return np.array(X), names


def _seed_int(seed) -> int:
    return int(seed)


def _chunk_rng(seed, c):
    return make_rng(np.random.SeedSequence(_seed_int(seed), spawn_key=(c,)))


def _chunk_errors(mech, Y, seed, c, size):
    """Squared errors (candidates x size) for chunk ``c``."""
    W = mech.sample_noise(size, _chunk_rng(seed, c))
    out = np.empty((Y.shape[0], size))
    for t in range(size):
        w = W[t]
        for i, y in enumerate(Y):
            e = mech.answer_from_noise(y, w) - y
            out[i, t] = e @ e
    return out


def evaluate_error(mech_config, A, n: float, trials: int = 1000, seed: int = 0, workers: int = 1,
                   workload_id: str | None = None, candidates=None) -> ErrorEstimate:
    """Monte-Carlo estimate of max over candidates of E ||M(x) - A x||^2."""
    if trials < MIN_TRIALS:
        raise InputError(f"trials must be at least {MIN_TRIALS}, got {trials}")
    A = as_matrix(A)
    mech = make_mechanism(mech_config, A, n)
    if candidates is None:
        X, names = candidate_set(A.shape[1], n, seed)
        if is_oblivious(mech):
            X, names = X[:1], names[:1]
    else:
        X = np.atleast_2d(np.asarray(candidates, dtype=float))
        names = [f"x{i}" for i in range(len(X))]
    Y = X @ A.T
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]
    jobs = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda cs: _chunk_errors(mech, Y, seed, cs[0], cs[1]), jobs))
    else:
        parts = [_chunk_errors(mech, Y, seed, c, s) for c, s in jobs]
    E = np.concatenate(parts, axis=1)
    means = E.mean(axis=1)
    i = int(np.argmax(means))
    se = float(E[i].std(ddof=1) / math.sqrt(trials))
    analytic = None
    inner = getattr(mech, "inner", mech)
    if isinstance(inner, GaussianMechanism):
        analytic = analytic_error(inner.spec) / (getattr(mech, "k", 1) ** 2)
    wid = workload_id if workload_id is not None else f"{A.shape[0]}x{A.shape[1]}"
    return ErrorEstimate(mechanism=mech.name, workload=wid, n=float(n), trials=int(trials),
                         per_candidate=means, estimate=float(means[i]), standard_error=se,
                         seed=_seed_int(seed), worst_candidate=i, analytic=analytic,
                         candidates=tuple(names))


# ------------------------------------------------------------------ corpus

def artifact_version() -> str:
    return f"geodp-{__version__}"


def _load_corpus_workload(spec, base: Path) -> Workload:
    if not isinstance(spec, dict):
        raise ConfigurationError("each workload entry must be an object")
    if "path" in spec:
        p = Path(spec["path"])
        return load_workload(p if p.is_absolute() else base / p)
    try:
        return gen_workload(spec["kind"], int(spec["d"]), int(spec["N"]), int(spec.get("seed", 0)))
    except KeyError as exc:
        raise ConfigurationError(f"workload entry missing field {exc.args[0]!r}") from None


def _check_keys(obj, allowed, where):
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown {where} field(s): {sorted(extra)}")


CONFIG_KEYS = ("seed", "trials", "workers", "workloads", "mechanisms", "grid", "lowerbounds",
               "bruteforce_limit", "assertions")


def run_corpus(config, base_dir=None, workers: int | None = None) -> tuple[dict, int]:
    """Evaluate every (workload, mechanism, grid point); returns (bundle, exit code)."""
    if isinstance(config, (str, Path)):
        path = Path(config)
        try:
            config = json.loads(path.read_text())
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid corpus config: {exc.msg} (row {exc.lineno}, column {exc.colno})") from None
        base_dir = path.parent if base_dir is None else base_dir
    if not isinstance(config, dict):
        raise ConfigurationError("corpus config must be a JSON object")
    _check_keys(config, CONFIG_KEYS, "config")
    base = Path(base_dir or ".")
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 200))
    workers = int(config.get("workers", 1) if workers is None else workers)
    grid = config.get("grid", [{"eps": 1.0, "delta": 1e-6, "n": 1.0}])
    mechs = config.get("mechanisms", [])
    limit = int(config.get("bruteforce_limit", 200_000))
    want_lb = bool(config.get("lowerbounds", True))
    from .calibration import constants

    estimates, lowerbounds, ratios, certificates = [], [], [], []
    for wi, wspec in enumerate(config.get("workloads", [])):
        W = _load_corpus_workload(wspec, base)
        wid = W.label or f"workload{wi}"
        dec = decompose_workload(W.A)
        for gi, g in enumerate(grid):
            _check_keys(g, ("eps", "delta", "n"), "grid")
            eps, delta, n = float(g.get("eps", 1.0)), float(g.get("delta", 1e-6)), float(g.get("n", 1.0))
            pp = PrivacyParams(eps, delta)
            if delta > 0:
                spec = build_noise_spec(dec, pp)
                certificates.append({"workload": wid, "grid": gi,
                                     "max_certificate": float(spec.certificate().max())})
            for mi, m in enumerate(mechs):
                cfg = {"mech": m} if isinstance(m, str) else dict(m)
                cfg.setdefault("eps", eps)
                cfg.setdefault("delta", 0.0 if cfg["mech"].startswith("knorm") else delta)
                sub_seed = int(np.random.SeedSequence(seed, spawn_key=(wi, gi, mi)).generate_state(1)[0])
                est = evaluate_error(cfg, W.A, n, trials, sub_seed, workers, workload_id=wid)
                d = est.to_dict()
                d["grid"] = gi
                estimates.append(d)
            if want_lb:
                lb = {"workload": wid, "grid": gi, "decomposition": dec_lowerbound(dec, pp, n).to_dict()}
                try:
                    lb["bruteforce"] = bruteforce_bounds(W.A, n, limit).to_dict()
                except BudgetExceededError as exc:
                    lb["bruteforce"] = {"skipped": str(exc)}
                lowerbounds.append(lb)
                if delta > 0:
                    mode = "bruteforce"
                    try:
                        r = optimality_ratio(W.A, pp, math.inf, mode, dec=dec, limit=limit)
                    except BudgetExceededError:
                        r = optimality_ratio(W.A, pp, math.inf, "decomposition", dec=dec)
                    r.update({"workload": wid, "grid": gi})
                    ratios.append(r)
    results = {"estimates": estimates, "lowerbounds": lowerbounds, "ratios": ratios,
               "certificates": certificates}
    checks = [_evaluate_assertion(a, results) for a in config.get("assertions", [])]
    ok = all(c["passed"] for c in checks)
    bundle = {
        "schema": SCHEMA,
        "version": artifact_version(),
        "calibration": constants(),
        "config": config,
        **results,
        "assertions": checks,
        "ok": ok,
    }
    return bundle, (0 if ok else 2)


def _evaluate_assertion(a, results) -> dict:
    if not isinstance(a, dict) or "type" not in a:
        raise ConfigurationError("each assertion needs a 'type'")
    kind = a["type"]
    if kind == "certificate":
        tol = float(a.get("tol", 1e-9))
        worst = max((c["max_certificate"] for c in results["certificates"]), default=0.0)
        return {"type": kind, "value": worst, "passed": worst <= 1.0 + tol}
    if kind == "ratio_within_budget":
        bad = [r for r in results["ratios"] if r["mode"] == "bruteforce" and r["ratio"] > r["budget"]]
        worst = max((r["ratio"] / r["budget"] for r in results["ratios"] if r["mode"] == "bruteforce"),
                    default=0.0)
        return {"type": kind, "value": worst, "passed": not bad}
    if kind == "error_below":
        mech = a.get("mechanism")
        limit = float(a["value"])
        vals = [e["estimate"] for e in results["estimates"] if e["mechanism"] == mech]
        worst = max(vals, default=0.0)
        return {"type": kind, "mechanism": mech, "value": worst, "passed": worst <= limit}
    raise ConfigurationError(f"unknown assertion type {kind!r}")


def dumps_bundle(bundle: dict) -> str:
    """Canonical, byte-stable JSON text."""
    return json.dumps(_clean(bundle), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


__all__ = ["ErrorEstimate", "evaluate_error", "run_corpus", "make_mechanism", "candidate_set",
           "dumps_bundle", "GeoDPError"]
