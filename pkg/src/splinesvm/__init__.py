"""Additive classifiers trained as linear SVMs on spline and orthogonal-basis embeddings."""

from .dataio import DataError, LabeledDataset, gen_toy_circle, read_model, read_svmlight, write_model, write_svmlight
from .encoder import EmbeddingSpec, embed, encode, encode_dataset
from .kernels import exact_min_svm, kernel_grid, min_kernel, spline_kernel, truncated_poly_features
from .orthobasis import OrthoSpec, RangeNorm, fit_range_norm, fourier_embed, hermite_embed, normalize
from .solver import (
    AdditiveModel,
    OneVsAll,
    TrainConfig,
    classify,
    predict,
    primal_objective,
    train_binary,
    train_linear,
    train_ova,
)
from .splinebasis import BSplineSpec, SparseVec, apply_inv_transpose, apply_L, diff_matrix, eval_basis

__version__ = "0.1.0"
