"""Brute-force spectral and determinant bounds next to the decomposition bound.

    python3 demos/lower_bounds.py
"""
import math

from geodp import PrivacyParams, gen_workload
from geodp.bounds import optimality_ratio

pp = PrivacyParams(1.0, 1e-6)
rows = [
    gen_workload("identity", 6, 6),
    gen_workload("intervals", 10, 4),
    gen_workload("random_sign", 6, 10, seed=1),
    gen_workload("random_counting", 8, 12, seed=2),
]
print(f"{'workload':<26}{'error':>10}{'specLB':>10}{'detLB':>10}{'decLB':>10}{'ratio':>8}{'budget':>10}")
for W in rows:
    r = optimality_ratio(W.A, pp, math.inf, "bruteforce")
    print(f"{W.label:<26}{r['error']:>10.1f}{r['spec_lb']:>10.2f}{r['det_lb']:>10.2f}"
          f"{r['dec_lb']:>10.2f}{r['ratio']:>8.1f}{r['budget']:>10.0f}")
