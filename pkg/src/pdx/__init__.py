"""Perceptron dynamics on circular-convolution and multilinear models.

Closed-form spectra of the per-sample quadratic operators, perceptron
variants with shared step/trace plumbing, compiled inner loops with a pure
NumPy fallback, and the oracles used to cross-check all of it.
"""

from .data import (Dataset, RunConfig, make_separable, make_two_sample,
                   parse_config, validate_config)
from .kernels import BACKEND
from .linalg import ConvOperator, MultiLinearMap, TwoLayerOperator, circular_conv
from .models import ModelParams, gd_step, hessian_probe, logistic_loss, margins
from .oracles import (jacobi_eigh, lower_bound_replay, null_space_start,
                      theorem_params)
from .perceptrons import (BatchPerceptron, GeneralizedPerceptron, NoiseSpec,
                          QuadPerceptron, StopRule, TwoSampleQuad, run_until)
from .rng import make_rng, spawn_rng
from .spectral import (eigensystem_k2, norm_bounds, operator_norm,
                       recommend_step_size, reduce_block_quadratic,
                       two_sample_spectrum)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "Dataset",
    "RunConfig",
    "make_separable",
    "make_two_sample",
    "parse_config",
    "validate_config",
    "ConvOperator",
    "TwoLayerOperator",
    "MultiLinearMap",
    "circular_conv",
    "ModelParams",
    "gd_step",
    "margins",
    "logistic_loss",
    "hessian_probe",
    "jacobi_eigh",
    "lower_bound_replay",
    "null_space_start",
    "theorem_params",
    "BatchPerceptron",
    "QuadPerceptron",
    "TwoSampleQuad",
    "GeneralizedPerceptron",
    "NoiseSpec",
    "StopRule",
    "run_until",
    "make_rng",
    "spawn_rng",
    "eigensystem_k2",
    "two_sample_spectrum",
    "operator_norm",
    "norm_bounds",
    "recommend_step_size",
    "reduce_block_quadratic",
]
