"""Exact hereditary discrepancy and its spectral / mechanism-error estimates.

    python3 demos/discrepancy_sandwich.py
"""
from geodp import gen_workload
from geodp.discrepancy import herdisc_approx, herdisc_bruteforce, hypergraph_instance

cases = [
    gen_workload("identity", 4, 4),
    gen_workload("intervals", 15, 5),
    hypergraph_instance(12, 10, colorable=True, seed=0),
    hypergraph_instance(12, 10, colorable=False, seed=0),
]
for W in cases:
    exact = herdisc_bruteforce(W.A)
    rep = herdisc_approx(W.A, exact=exact.herdisc_exact)
    print(f"{W.label:<32} herdisc={exact.herdisc_exact:g}  lower={rep.lower_estimate:.3f}  "
          f"upper={rep.upper_estimate:.2f}  factor={rep.measured_factor:.2f} (budget {rep.approx_factor_budget:.1f})")
