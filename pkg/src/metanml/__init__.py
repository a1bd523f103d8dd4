"""Restricted-support NML classification with exact leakage accounting.

The library builds normalized-maximum-likelihood predictive
distributions whose per-class suprema run over a data-dependent region
of parameter space (a ball around an estimate, a finite set, or a grid),
computes the maximal leakage of that restriction exactly as the log
normalizer, and numerically verifies the performance-gap bounds the
construction satisfies against synthetic ground truths.

Hot kernels are numba-compiled by default; set ``METANML_NO_NUMBA=1``
to force the pure-numpy fallback (see ``benchmarks/bench_kernels.py``).
"""

from ._kernels import NUMBA_ACTIVE
from .bounds import (
    BoundReport,
    DecayChain,
    approximation_gap,
    decay_chain,
    fisher_leakage_bound,
    gap_bound_report,
    max_regret,
    redundancy,
    trace_gap_bound,
)
from .curvature import eig_gap_bound, max_fisher_eig_in_ball, mean_trace_sup_in_ball
from .data import Dataset, dataset_from_csv, dataset_to_csv
from .decision import (
    FiniteMarginal,
    GroundTruth,
    argmax_tie_break,
    gap_vs_map,
    misclassification_at,
    misclassification_rate,
)
from .estimators import (
    BerryEsseenRadius,
    EpsilonCalibrated,
    FixedRadius,
    MleFit,
    berry_esseen_radius,
    fit_mle,
    noisy_ball_region,
    plugin_region,
    sigma_min_unconditional,
)
from .models import (
    CategoricalTableModel,
    ConditionalModel,
    OverparamSoftmaxModel,
    SoftmaxLinearModel,
    unconditional_fisher,
)
from .nml import (
    NmlDistribution,
    OptConfig,
    SupResult,
    constrained_sup,
    leakage,
    nml_distribution,
    nml_predict,
)
from .numerics import (
    SymmetricMatrix,
    chi2_cdf,
    chi2_inverse_cdf,
    extreme_eigenvalues,
    jacobi_decomposition,
    kl_divergence,
    max_eigenvalue,
    total_variation,
)
from .regions import Ball, FiniteSet, Grid

__version__ = "0.1.0"
