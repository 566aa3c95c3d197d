"""State estimation for linear systems with a single quadratic output.

The plant is immersed into a state-affine system by adjoining the quadratic
forms ``x^T C_i x / 2``; excitation conditions on the input certify uniform
observability, and a Kalman-type Riccati observer recovers the state.
"""

from .augmentation import (
    AugmentedSystem,
    CMatrixSequence,
    GammaTable,
    QuadraticOutputSystem,
    build_augmented,
    c_closed_form,
    compute_c_sequence,
    compute_gamma_table,
    eval_A_ext,
    eval_r,
    extend_initial_state,
)
from .errors import (
    AssumptionViolated,
    ComplexEigenvalues,
    ConfigurationError,
    DimensionError,
    GammaUnobservable,
    NumericalBlowup,
    QuadObsError,
    RiccatiDegenerate,
    SignalOrderError,
)
from .harness import Scenario, SimulationTrace, run_pe_suite, simulate, vehicle_scenario
from .numerics import IntegrationGrid, integrate_matrix, mat_exp, min_eig_sym, numerical_rank, rk4_step
from .observability import (
    PeReport,
    TransitionBlocks,
    check_prop2,
    check_prop3,
    check_prop4,
    check_prop5,
    check_uniform_observability,
    gramian,
    observability_matrix_rank,
    zero_input_rank,
)
from .observer import ObserverConfig, ObserverState, extract_plant_estimate, observer_init, observer_step
from .signals import PrimitiveSignal, Polynomial, Sinusoid, SmoothSignal

__version__ = "0.1.0"
