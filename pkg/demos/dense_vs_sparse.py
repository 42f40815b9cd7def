"""Gaussian noise versus least-squares post-processing on a counting workload.

Small databases let the projection onto n K remove most of the noise on the
high-dimensional levels of the decomposition.

    python3 demos/dense_vs_sparse.py
"""
import numpy as np

from geodp import PrivacyParams, decompose, gen_workload
from geodp.gaussmech import GaussianMechanism, analytic_error
from geodp.harness import evaluate_error

pp = PrivacyParams(1.0, 1e-6)
W = gen_workload("random_counting", 32, 64, seed=3)
dec = decompose(W.A)
print("levels:", dec.dims, "radii:", np.round(dec.radii, 3))

gauss = GaussianMechanism.from_workload(W.A, pp, dec)
print(f"gaussian analytic error: {analytic_error(gauss.spec):.1f}")

cfg = {"eps": pp.epsilon, "delta": pp.delta}
for n in (1, 4, 16, 64):
    est = evaluate_error({**cfg, "mech": "lse"}, W.A, n, trials=200, seed=0)
    print(f"n={n:>3}  lse error {est.estimate:10.1f} +- {est.standard_error:.1f}  (worst: {est.candidates[est.worst_candidate]})")
