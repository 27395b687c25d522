"""Matrix-based Renyi entropy on Gram matrices and conditional-entropy metric learning."""

__version__ = "0.1.0"

from .ceml import (
    Dataset,
    MetricModel,
    TrainConfig,
    TrainReport,
    ceml_gradient,
    ceml_objective,
    label_gram,
    load_model,
    project_trace,
    save_model,
    train,
    transform,
)
from .entropy import (
    conditional_entropy,
    entropy_gradient,
    entropy_gradient_truncated,
    hadamard_geometric_average,
    joint_entropy,
    renyi_entropy,
    second_order_entropy_trace,
)
from .errors import (
    DegenerateError,
    DivergenceError,
    DomainError,
    GramEntropyError,
    InputError,
    NotHilbertianError,
    NotPSDError,
    PreconditionError,
    StratificationError,
)
from .evaluation import (
    CVResult,
    SyntheticSpec,
    alpha_study,
    baseline_euclidean,
    baseline_inverse_covariance,
    cross_validate,
    direction_angle,
    direction_label,
    knn_classify,
    standardize,
    stratified_folds,
    synth_bimodal,
)
from .idkernels import (
    DivisibilityReport,
    divisibility_report,
    embed_from_distances,
    gaussian_gram,
    is_infinitely_divisible,
    log_gaussian_gram,
    negdef_to_distances,
    normalize_id,
    posdef_to_distances,
)
from .spectra import (
    EigenSystem,
    centered_negdef_check,
    eig_sym,
    hadamard,
    hadamard_power,
    kron,
    majorizes,
    matrix_power,
    psd_check,
)
