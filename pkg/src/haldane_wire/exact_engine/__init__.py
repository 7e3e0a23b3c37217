"""Dense exact-diagonalization oracle for short chains."""
from .states import (
    PureState, GroundDoublet, LogicalReadout, SectorEigenpairs, EigensolverError,
    DoubletError, LeakageError, ground_sector, ground_doublet, embed_logical,
    extract_logical, total_ladder, total_spin_squared, ExactDiagonalizer,
)
from .evolution import PropagatorError, adiabatic_evolve, decouple_map, decouple_symmetry
from .measurement import OutcomeError, measure_site
from .tomography import (
    TomographyAborted, TomographyResult, tomography_inputs, process_tomography,
    ProcessTomography, process_fidelity, unitary_fidelity,
)
from .twochain import (
    CZ, TwoChainResult, decouple_two_chains, two_chain_gate, two_chain_kraus,
    identify_two_qubit_gate, TWO_CHAIN_LOOKUP,
)
