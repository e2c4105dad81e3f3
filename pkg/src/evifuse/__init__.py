"""Evidential multi-view fusion with Holder-divergence regularization."""

from ._backend import backend_name
from .data import (
    CorruptionSpec,
    MultiViewBatch,
    SyntheticConfig,
    corrupt,
    generate_synthetic,
    load_dataset_csv,
    save_dataset_csv,
)
from .dirichlet import (
    DirichletParams,
    NaturalParams,
    expected_log_mu,
    from_natural,
    log_normalizer,
    log_pdf,
    sample,
    to_natural,
)
from .divergence import (
    HolderConfig,
    kl_dirichlet,
    kl_mc_oracle,
    phd_closed,
    phd_mc_oracle,
    phd_symmetric,
)
from .errors import ConfigError, DomainError, NonFiniteLossError, TotalConflictError
from .evidence import (
    BPA,
    Opinion,
    conflict,
    dirichlet_to_opinion,
    ds_bpa,
    ds_combine_bpa,
    ds_combine_multi,
    ds_combine_reduced,
    ds_full_dempster_oracle,
    evidence_to_dirichlet,
    opinion_to_dirichlet,
    vacuous,
)
from .kalman import KalmanState, filter_sequence, predict as kalman_predict, update
from .metrics import (
    MetricsReport,
    accuracy,
    cluster_assignments,
    clustering_accuracy,
    macro_f1,
)
from .model import (
    EvidentialModel,
    TrainConfig,
    ViewNetwork,
    expected_cross_entropy,
    forward,
    load_model,
    predict,
    regularizer,
    save_model,
    total_loss,
    train,
)

__version__ = "0.1.0"
