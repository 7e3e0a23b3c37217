"""Logical layer: programs, byproduct frames, wire runs and the mixed-state scheme."""
from .frame import ByproductFrame, BYPRODUCTS, byproduct
from .program import (
    Rotation, LogicalProgram, MeasurementPlan, PlannedMeasurement, compile_program, euler_zxz,
)
from .engines import StepMaps, OracleEngine, MpsEngine, make_engine
from .mixed import (
    RegionGuardError, AKLT_XI, MixedResource, MixedPathResult, mixed_state_wire,
    aklt_ground_space, aklt_virtual_basis, virtual_coefficients, logical_density,
    trace_distance, channel_distance, readout_distribution, sample_readouts, enumerate_paths,
)
from .wire import (
    ChainExhaustedError, StepRecord, WireTrace, run_wire, ReadoutResult, readout_scan,
    TRACE_COLUMNS,
)
