"""Matrix-variate Gaussian process regression for transposable data.

Core pieces: graph-derived prior covariances over rows and columns
(:mod:`mvgp.kernels`), nuclear-norm constrained low-rank mean solvers and
exact GP posteriors (:mod:`mvgp.solver`, :mod:`mvgp.posterior`), the
finite-dimensional constrained-inference reference (:mod:`mvgp.coninf`),
dataset/fold/negative-sampling utilities (:mod:`mvgp.data`), ranking and
regression metrics (:mod:`mvgp.metrics`), and a cross-validation driver
(:mod:`mvgp.experiment`) with a thin CLI (:mod:`mvgp.cli`).
"""

from .coninf import GaussianBelief, SelectionMap, gaussian_kl, \
    postdata_covariance, project_mean_nuclear
from .data import FoldSplit, NegativeSample, ObservationSet, load_triples, \
    sample_negatives, split_known_rows, split_new_rows
from .exceptions import ConvergenceError, MVGPError, NumericError, \
    ValidationError
from .experiment import ExperimentConfig, MetricsReport, fit_once, run_cv
from .kernels import BasisFactor, GraphSpec, KernelMatrix, build_adjacency, \
    diffusion_kernel, factorize_basis, identity_kernel, load_edge_list, \
    normalized_laplacian
from .metrics import RankedRow, aggregate_rows, precision_at_k, recall_at_k, \
    relevance_from_ratings, rmse
from .posterior import covariance_hyperparam_gradient, \
    gp_posterior_covariance, gp_posterior_mean_exact, hyperparam_objective, \
    update_noise_variance
from .solver import FitOptions, MeanModel, fit_exact_prox, fit_factored, \
    load_model, objective, predict_mean, save_model, smooth_gradient, \
    smooth_objective, svt, zero_solution_threshold

__version__ = "0.1.0"

__all__ = [
    "BasisFactor", "ConvergenceError", "ExperimentConfig", "FitOptions",
    "FoldSplit", "GaussianBelief", "GraphSpec", "KernelMatrix", "MVGPError",
    "MeanModel", "MetricsReport", "NegativeSample", "NumericError",
    "ObservationSet", "RankedRow", "SelectionMap", "ValidationError",
    "aggregate_rows", "build_adjacency", "covariance_hyperparam_gradient",
    "diffusion_kernel", "factorize_basis", "fit_exact_prox", "fit_factored",
    "fit_once", "gaussian_kl", "gp_posterior_covariance",
    "gp_posterior_mean_exact", "hyperparam_objective", "identity_kernel",
    "load_edge_list", "load_model", "load_triples", "normalized_laplacian",
    "objective", "postdata_covariance", "precision_at_k", "predict_mean",
    "project_mean_nuclear", "recall_at_k", "relevance_from_ratings", "rmse",
    "run_cv", "sample_negatives", "save_model", "smooth_gradient",
    "smooth_objective", "split_known_rows", "split_new_rows", "svt",
    "update_noise_variance", "zero_solution_threshold",
]
