"""Finite-size simulator for subset-sum bases and dihedral coset collision finding."""

__version__ = "0.1.0"

from .basis import (
    BasisVector,
    CosetStateSpec,
    LabeledBasis,
    build_basis_vector,
    build_coset_state,
    build_tilde_basis,
    coset_family,
    coset_span_check,
    enumerate_basis,
    verify_coset_orthogonality,
)
from .core import (
    DenseState,
    DihedralParams,
    EmptySolutionError,
    ResourceLimitError,
    StateIndex,
    derive_rng,
    frame_transform,
    index_decode,
    index_encode,
    inner_product,
    omega,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    chebyshev_tail_check,
    collision_success_experiment,
    covariance_check,
    dcsp_confusion,
    t_statistics,
)
from .simulator import (
    CosetOracle,
    DcspParams,
    algorithm1,
    algorithm2,
    dcp_solve,
    dcsp_measure,
    exact_outcome_distribution,
)
from .subset_sum import SolutionSet, SubsetSumInstance, enumerate_solutions, random_instance, verify_collision
from .unitaries import build_UC, build_US, materialize_dense

__all__ = [name for name in dir() if not name.startswith("_")]
