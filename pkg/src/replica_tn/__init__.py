from ._errors import (
    ManifestError,
    NumericDegeneracyError,
    ReplicaTNError,
    ResourceError,
    ShapeMismatchError,
    UnsupportedParameterError,
)
from .types import ContractionResult, LayerDiagnostics, OracleResult, TruncationParams
from .config import DEFAULT_LIMITS, Limits
from .commutant import (
    BrauerDiagram,
    CliffordElement,
    CommutantBasis,
    GramMatrix,
    IrrepProjector,
    Permutation,
    WeingartenMatrix,
    brauer_basis,
    clifford_basis,
    dump_matrix_csv,
    element_vector,
    gram_matrix,
    irrep_projector,
    irrep_reduce_boundary,
    irrep_reduce_gate,
    symmetric_basis,
    weingarten_matrix,
)
from .channels import (
    ChannelStack,
    ChannelSuperop,
    depolarising_choi,
    identity_choi,
    noisy_gram,
    noisy_overlaps,
    parse_channel,
)
from .rtn_core import DressedGate, InitOverlaps, RowMPS, apply_layer, dressed_gate, init_mps
from .observables import (
    BoundarySpec,
    BrickworkNetwork,
    SweepConfig,
    annealed_renyi,
    bell_init_overlaps,
    brickwork_average,
    brickwork_contract,
    clifford_ipr_stat,
    coherent_information,
    entanglement_velocity,
    fit_decay_rate,
    full_swap_boundary,
    haar_ipr,
    ipr_boundary,
    iter_brickwork,
    noisy_brickwork_average,
    orthogonal_ipr_stat,
    page_purity,
    plateau_depth,
    purity_boundary,
    relative_coherence,
    xeb,
)
from .oracles import (
    McObservable,
    RngStream,
    dense_contract,
    mc_average,
    mc_coherent_information,
    rw_purity,
    sample_gate,
    sample_gates,
)
from .ensembles import EnsembleConfig, EnsembleRegistry, default_registry

__all__ = [
    "BoundarySpec",
    "BrauerDiagram",
    "BrickworkNetwork",
    "ChannelStack",
    "ChannelSuperop",
    "CliffordElement",
    "CommutantBasis",
    "ContractionResult",
    "DEFAULT_LIMITS",
    "DressedGate",
    "EnsembleConfig",
    "EnsembleRegistry",
    "GramMatrix",
    "InitOverlaps",
    "IrrepProjector",
    "LayerDiagnostics",
    "Limits",
    "ManifestError",
    "McObservable",
    "NumericDegeneracyError",
    "OracleResult",
    "Permutation",
    "ReplicaTNError",
    "ResourceError",
    "RngStream",
    "RowMPS",
    "ShapeMismatchError",
    "SweepConfig",
    "TruncationParams",
    "UnsupportedParameterError",
    "WeingartenMatrix",
    "annealed_renyi",
    "apply_layer",
    "bell_init_overlaps",
    "brauer_basis",
    "brickwork_average",
    "brickwork_contract",
    "clifford_basis",
    "clifford_ipr_stat",
    "coherent_information",
    "default_registry",
    "dense_contract",
    "depolarising_choi",
    "dressed_gate",
    "dump_matrix_csv",
    "element_vector",
    "entanglement_velocity",
    "fit_decay_rate",
    "full_swap_boundary",
    "gram_matrix",
    "haar_ipr",
    "identity_choi",
    "init_mps",
    "ipr_boundary",
    "irrep_projector",
    "irrep_reduce_boundary",
    "irrep_reduce_gate",
    "iter_brickwork",
    "mc_average",
    "mc_coherent_information",
    "noisy_brickwork_average",
    "noisy_gram",
    "noisy_overlaps",
    "orthogonal_ipr_stat",
    "page_purity",
    "parse_channel",
    "plateau_depth",
    "purity_boundary",
    "relative_coherence",
    "rw_purity",
    "sample_gate",
    "sample_gates",
    "symmetric_basis",
    "weingarten_matrix",
    "xeb",
]

__version__ = "0.1.0"
