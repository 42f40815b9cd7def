"""Near-optimal private answering of linear queries via ellipsoid decompositions."""
from __future__ import annotations

__version__ = "0.1.0"

from .bounds import (LowerBoundReport, dec_lowerbound, detlb_bruteforce, optimality_ratio,
                     speclb_bruteforce)
from .decomposition import BaseDecomposition, decompose, decompose_workload, row_space_projector
from .discrepancy import (DiscrepancyReport, WeightedWorkload, disc_bruteforce, herdisc_approx,
                          herdisc_bruteforce, hypergraph_instance, median_linf_mechanism, minimax_weights)
from .ellipsoid import EllipsoidResult, approx_mee, mee_volume_proxy
from .errors import GeoDPError
from .gauge import PolytopeView, chord, dual_norm, fw_project, gauge
from .gaussmech import (MechanismAnswer, NoiseSpec, analytic_error, build_noise_spec, run_gaussian,
                        scale_reduction_wrap)
from .knorm import KNormSampler, run_knorm_lse, run_knorm_split, sample_knorm
from .sparsemech import run_lse, run_simple_lse, split_level
from .workload import (Histogram, PrivacyParams, Workload, gen_workload, load_workload,
                       save_workload)
