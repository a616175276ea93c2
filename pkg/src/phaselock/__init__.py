"""Phase-locked states of the finite-N all-to-all Kuramoto model."""

from .coupling import (
    CouplingReport,
    FixedPointCertificate,
    FixedPointSet,
    compute_kc,
    construct_fixed_point,
    enumerate_fixed_points,
    existence_at,
    existence_with_signs,
    lower_bounds,
    order_band,
    upper_bound,
)
from .errors import (
    CapacityError,
    CertificationError,
    DegenerateInputError,
    DimensionError,
    DivergenceError,
    ParameterError,
    PhaselockError,
    ValidationError,
)
from .frequencies import FrequencySpec, center, read_frequencies, sample_normal
from .order_field import (
    FixedPointKind,
    OrderParameter,
    PhaseState,
    classify_homogeneous_fixed_point,
    coupling_field,
    field_norm_bound_gap,
    order_parameter,
    reduced_jacobian,
)
from .simulator import (
    SimConfig,
    SimTrace,
    convergence_time,
    dominating_function,
    homogeneous_run,
    integrate,
)

__version__ = "0.1.0"
