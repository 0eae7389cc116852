"""Sparse sensor placement and field reconstruction from a learned SVD basis."""

from .basis import (
    Basis,
    SvdFactorization,
    compute_svd,
    projection_error,
    svht_rank,
    truncate,
)
from .errors import (
    DimensionError,
    FormatError,
    IllConditionedError,
    SingularInnovationError,
)
from .fielddata import (
    GridGeometry,
    TrainingSet,
    denormalize,
    load_training,
    mean_normalize,
    save_training,
    synth_field,
)
from .modeleval import StateSpaceModel, fit_state_space, gamma_criterion
from .placement import (
    AnnealConfig,
    CandidateSet,
    Placement,
    brute_force_placement,
    optimize_placement,
    placement_mse,
    qdeim_placement,
    random_placement,
    sample,
)
from .reconstruct import (
    ObservationSet,
    ReconstructionResult,
    mse,
    reconstruct_series,
    reconstruct_snapshot,
)

__version__ = "0.1.0"
