"""Matrix-product-state engine for long chains."""
from .tensors import Mps, EntanglementData, block_svd, infer_charges, CanonicalFormError
from .dmrg import DmrgResult, dmrg_ground, mpo_expectation, DmrgSolver, lanczos_ground
from .operations import (
    aklt_mps, lowering_mpo, MpsDoublet, suffix_doublet, fix_phase, decoupled_mps,
    MpsStep, decouple_and_measure, entanglement, string_order, connected_correlations,
    correlation_length, CorrelationFitError, project_out_first,
)
