"""Simulation and cryptanalysis toolkit for t-design-based quantum PUFs."""

from .circuits import (
    BlockParams,
    LayerDescriptor,
    QpufDescriptor,
    SecurityParams,
    block_unitary,
    compile_descriptor,
    cz,
    deserialize,
    qeval,
    qgen,
    rot_x,
    rot_z,
    serialize,
)
from .errors import (
    DimensionError,
    FormatError,
    QpufError,
    UnknownVersionError,
    ValidationError,
)
from .metrics import (
    HelstromResult,
    NumericalRangeResult,
    diamond_distance_unitary,
    helstrom_measurement,
    numerical_range_min,
    p_distinguish,
)
from .qmath import (
    ComplexMatrix,
    DensityMatrix,
    EigenAngles,
    PureState,
    UnitaryMatrix,
    eig_unitary,
    fidelity,
    haar_pure_state,
    haar_unitary,
    kron,
    trace_norm_distance,
)
from .seeding import child_rng

__version__ = "0.1.0"
