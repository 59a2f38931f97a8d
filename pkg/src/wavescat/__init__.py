"""Gabor wavelet scattering features with a PCA affine-space classifier."""

from .classifier import (
    AffineClassModel,
    TrainedClassifier,
    classify,
    classify_batch,
    cross_validate,
    evaluate,
    fit_class_model,
    fit_classifier,
    intra_outer_curves,
    projection_error,
    variance_decay,
)
from .config import RunConfig
from .data_io import (
    LabeledDataset,
    load_features,
    load_idx,
    load_model,
    load_texture_dir,
    save_features,
    save_model,
    subsample_train,
)
from .filterbank import (
    FilterBank,
    GaborParams,
    build_bank,
    energy_tiling,
    littlewood_paley_profile,
)
from .scattering import (
    DeformationField,
    ScatteringLayout,
    ScatteringVector,
    apply_deformation,
    enumerate_paths,
    layer_energy,
    propagate,
    scatter,
    scatter_dataset,
    scattering_distance,
    scattering_norm,
)

__version__ = "0.1.0"
