"""hsipath: semi-supervised spectral-spatial classification of
hyperspectral cubes, with RGB-projection baselines and reporting.
"""

from .errors import FormatError, HsiPathError, ValidationError
from .cube_io import (
    UNLABELED,
    HyperCube,
    LabelMap,
    PatchGrid,
    band_normalize,
    load_cube,
    load_label_map,
    load_render,
    save_cube,
    save_label_map,
    save_render,
    tile,
)
from .features import FeatureStack, LabeledSet, minmax_scale
from .synth import PhantomSpec, make_phantom, make_rgb_projection, standard_spectra
from .rgbrecon import CmfTable, hsi_to_rgb, hsi_to_xyz, load_cmf, srgb_transfer, xyz_to_srgb
from .mpri import (
    MpriConfig,
    PriConfig,
    cs_divergence,
    gaussian_kernel,
    information_potential,
    mpri_extract,
    pri_fixed_point_update,
    pri_objective,
    pri_patch,
    pri_scale,
    rlda_apply,
    rlda_fit,
)
from .tensorssa import (
    TrajectoryTensor,
    TssaConfig,
    embed,
    reproject,
    similar_neighbors,
    tensorssa_extract,
    tsvd_lowrank,
)
from .classify import (
    SslConfig,
    SvmConfig,
    classify_patch,
    knn_predict,
    linear_svm_fit,
    linear_svm_predict,
    sample_labels,
    self_train,
)
from .metrics_stats import (
    METRIC_NAMES,
    ConfusionCounts,
    MetricsReport,
    confusion,
    fleiss_kappa,
    kappa_band,
    macro_aggregate,
    majority_vote,
    metrics,
    micro_aggregate,
    wilcoxon_ranksum,
)
from .pipeline import RunConfig, compare_runs, load_config, patch_seed, run_experiment

__version__ = "0.1.0"

__all__ = [
    "FormatError", "HsiPathError", "ValidationError",
    "UNLABELED", "HyperCube", "LabelMap", "PatchGrid", "band_normalize",
    "load_cube", "load_label_map", "load_render", "save_cube",
    "save_label_map", "save_render", "tile",
    "FeatureStack", "LabeledSet", "minmax_scale",
    "PhantomSpec", "make_phantom", "make_rgb_projection", "standard_spectra",
    "CmfTable", "hsi_to_rgb", "hsi_to_xyz", "load_cmf", "srgb_transfer",
    "xyz_to_srgb",
    "MpriConfig", "PriConfig", "cs_divergence", "gaussian_kernel",
    "information_potential", "mpri_extract", "pri_fixed_point_update",
    "pri_objective", "pri_patch", "pri_scale", "rlda_apply", "rlda_fit",
    "TrajectoryTensor", "TssaConfig", "embed", "reproject",
    "similar_neighbors", "tensorssa_extract", "tsvd_lowrank",
    "SslConfig", "SvmConfig", "classify_patch", "knn_predict",
    "linear_svm_fit", "linear_svm_predict", "sample_labels", "self_train",
    "METRIC_NAMES", "ConfusionCounts", "MetricsReport", "confusion",
    "fleiss_kappa", "kappa_band", "macro_aggregate", "majority_vote",
    "metrics", "micro_aggregate", "wilcoxon_ranksum",
    "RunConfig", "compare_runs", "load_config", "patch_seed",
    "run_experiment",
]
