"""Gaussian copula correlation estimation for mixed continuous/discrete data."""
from importlib import metadata

from ._accel import backend, set_backend, use_backend
from .coefficients import (closed_form_threshold_pearson, closed_form_threshold_spearman,
                           compare_matrix, kendall, pearson, spearman)
from .data import Dataset, load_csv, load_matrix_csv, load_schema
from .estimator import (CorrelationMatrix, DegeneratePairError, PairCase, estimate_matrix,
                        estimate_pair, pair_loglik, pair_objective)
from .gauss import bvn_cdf, copula_cdf, copula_density, copula_du, std_normal_cdf, \
    std_normal_pdf, std_normal_quantile
from .marginals import ColumnSchema, EmpiricalMarginal, MarginalKind, fit_empirical, pseudo_u
from .metrics import SigmaRecipe, bench_run, classify, evaluate, mae, rmse, roc_auc
from .network import build_network, degrees, export
from .simulation import (MarginalSpec, gen_sigma_blocks, gen_sigma_sparse,
                         make_fixture_prop3, make_fixture_threshold, parse_margins,
                         sample_dataset, thirds_margins)

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
    __version__ = "0.0.0"
