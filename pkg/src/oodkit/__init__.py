"""Post-hoc OOD detection for segmentation embeddings.

Reduce bottleneck embeddings (average pooling, PCA, t-SNE), fit a Gaussian
to the training features, score samples by Mahalanobis distance, and
evaluate with AUROC/AUPR/FPR@TPR.
"""

from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    OodkitError,
    SingularCovarianceError,
)
from .gaussian import (
    Ellipse,
    EpsilonPolicy,
    GaussianModel,
    covariance_ellipse,
    fit_gaussian,
    invert_covariance_timed,
    mahalanobis,
    mahalanobis_batch,
    explicit_inverse_scores,
)
from .metrics import (
    MetricsTriple,
    ScoredSample,
    TrialSummary,
    aggregate_trials,
    aupr,
    auroc,
    evaluate,
    fpr_at_tpr,
    scored_samples,
)
from .pipeline import SweepGrid, run_experiment, run_row, run_sweep
from .reduction import (
    IdentityReducer,
    PcaModel,
    PcaReducer,
    PoolReducer,
    PoolingSpec,
    TsneConfig,
    TsneReducer,
    apply_pca,
    average_pool,
    fit_pca,
    fit_standardizer,
    flatten,
    reduce_dataset,
    tsne_embed,
)
from .synthetic import SyntheticSpec, generate, oracle_auroc_one_dim
from .tensor_io import (
    ID,
    OOD,
    LabelRow,
    LabelTable,
    Manifest,
    ManifestEntry,
    label_from_dsc,
    load_labels,
    load_manifest,
    read_array,
    write_array,
)

__version__ = "0.1.0"
