"""Calibration run: measure the empirical constants and write ``data/calibration.json``.

Usage::

    python3 -m geodp.calibrate            # rewrite the packaged constants
    python3 -m geodp.calibrate --check    # recompute and compare, write nothing

Each committed constant is the measured worst case on its corpus times
``MARGIN`` (rounded up to two significant digits), except ``R_cal`` which is
the larger of that value and the default ratio constant 50.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import bruteforce_bounds, dec_lowerbound, optimality_ratio
from .decomposition import decompose_workload
from .discrepancy import MedianMechanism, herdisc_approx, herdisc_bruteforce, hypergraph_instance
from .gaussmech import analytic_error, build_noise_spec
from .sparsemech import SimpleLSEMechanism
from .workload import PrivacyParams, Workload, diag_workload, gen_workload, make_rng

MARGIN = 1.25
DEFAULT_R = 50.0
RATIO_PP = PrivacyParams(1.0, 1e-6)
DATA = Path(__file__).with_name("data") / "calibration.json"


def bruteforce_corpus() -> list[Workload]:
    """Workloads with d <= 8 and N <= 12 (random sign, counting, intervals, identity, diagonal)."""
    out = []
    for d, N, s in [(3, 5, 1), (4, 6, 3), (5, 8, 5), (6, 8, 7), (8, 10, 11), (8, 12, 13)]:
        out.append(gen_workload("random_sign", d, N, s))
        out.append(gen_workload("random_counting", d, N, s))
    out.append(gen_workload("intervals", 6, 3, 0))
    out.append(gen_workload("intervals", 8, 4, 1))
    out.append(gen_workload("intervals", 8, 6, 2))
    out.append(gen_workload("identity", 4, 4))
    out.append(gen_workload("identity", 8, 8))
    out.append(diag_workload([8.0, 4.0, 2.0, 1.0]))
    out.append(diag_workload([3.0, 1.0, 1.0, 0.5, 0.25]))
    return out


def sandwich_corpus() -> list[Workload]:
    """Instances small enough for exact hereditary discrepancy."""
    out = [gen_workload("identity", d, d) for d in (1, 2, 4, 8)]
    out += [gen_workload("intervals", N * (N + 1) // 2, N) for N in (3, 5, 8)]
    out += [hypergraph_instance(m, n, True, s) for s, (m, n) in enumerate(
        [(4, 6), (6, 7), (8, 8), (10, 9), (12, 10), (14, 10), (12, 11), (16, 12), (20, 12), (24, 12)])]
    out += [gen_workload("random_counting", d, N, s) for s, (d, N) in enumerate([(4, 6), (6, 8), (8, 10)])]
    return out


def _round_up(v: float) -> float:
    if v <= 0:
        return 0.0
    e = math.floor(math.log10(v)) - 1
    return math.ceil(v / 10 ** e) * 10 ** e


def measure_ratio() -> float:
    """max over the brute-force corpus of ratio / ((1 + log2 d)^2 ln(1/delta))."""
    worst = 0.0
    for W in bruteforce_corpus():
        r = optimality_ratio(W.A, RATIO_PP, math.inf, "bruteforce", R=1.0)
        worst = max(worst, r["ratio"] / r["budget"])
    return worst


def measure_sandwich_constant() -> tuple[float, float]:
    """(max dec_lb / spec_lb, max spec_lb / dec_lb) on the brute-force corpus."""
    up, down = 0.0, 0.0
    for W in bruteforce_corpus():
        dec = decompose_workload(W.A)
        dl = dec_lowerbound(dec, RATIO_PP).dec_lb
        sl = bruteforce_bounds(W.A, W.d).spec_lb
        up = max(up, dl / sl)
        down = max(down, sl / dl)
    return up, down


def measure_herdisc() -> dict:
    lo, hi, fac = 0.0, 0.0, 0.0
    for W in sandwich_corpus():
        ex = herdisc_bruteforce(W.A).herdisc_exact
        rep = herdisc_approx(W.A, exact=ex)
        lo = max(lo, rep.lower_estimate / ex)
        hi = max(hi, ex / rep.upper_estimate)
        fac = max(fac, rep.measured_factor / rep.approx_factor_budget)
    return {"lower_over_exact": lo, "exact_over_upper": hi, "factor_over_budget": fac}


def measure_median(trials: int = 1000, seed: int = 0) -> float:
    """E ||err||_inf / (sqrt(2 ln d) max_i RMS_i) for d = 16, L = 9."""
    W = gen_workload("random_counting", 16, 32, 4)
    mech = MedianMechanism(W.A, PrivacyParams(1.0, 1e-6), 9)
    rng = make_rng(seed)
    Wn = mech.sample_noise(trials, rng)
    y = np.zeros(W.d)
    errs = [np.abs(mech.answer_from_noise(y, w)).max() for w in Wn]
    yard = math.sqrt(2 * math.log(W.d)) * float(mech.coordinate_rms().max())
    return float(np.mean(errs)) / yard


def measure_simple_lse(trials: int = 300, seed: int = 0) -> float:
    """Empirical error / (8 n r^2 c sqrt(ln N)) for d = 32, N = 64, n = 2."""
    W = gen_workload("random_counting", 32, 64, 5)
    pp = PrivacyParams(1.0, 1e-6)
    n = 2.0
    mech = SimpleLSEMechanism(W.A, pp, n)
    x = np.zeros(W.N)
    x[0] = n
    y = W.A @ x
    Wn = mech.sample_noise(trials, make_rng(seed))
    err = float(np.mean([np.sum((mech.answer_from_noise(y, w) - y) ** 2) for w in Wn]))
    yard = 8 * n * mech.r ** 2 * pp.c * math.sqrt(math.log(W.N))
    return err / yard


def calibrate() -> dict:
    ratio = measure_ratio()
    sand_up, sand_down = measure_sandwich_constant()
    hd = measure_herdisc()
    med = measure_median()
    slse = measure_simple_lse()
    measured = {
        "ratio_over_budget": ratio,
        "dec_over_spec": sand_up,
        "spec_over_dec": sand_down,
        **hd,
        "median_linf_over_yardstick": med,
        "simple_lse_over_yardstick": slse,
    }
    constants = {
        "R_cal": max(DEFAULT_R, _round_up(MARGIN * ratio)),
        "C_sand": _round_up(MARGIN * sand_up),
        "c_cal": _round_up(MARGIN * hd["lower_over_exact"]),
        "c_cal_prime": _round_up(MARGIN * hd["exact_over_upper"]),
        "median_linf": _round_up(MARGIN * med),
        "simple_lse": _round_up(MARGIN * slse),
    }
    return {"margin": MARGIN, "constants": constants, "measured": measured}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python3 -m geodp.calibrate", description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="recompute and compare with the packaged file")
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args(argv)
    result = calibrate()
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.check:
        current = json.loads(DATA.read_text())
        same = current.get("constants") == result["constants"]
        sys.stdout.write(text)
        return 0 if same else 2
    args.out.write_text(text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
