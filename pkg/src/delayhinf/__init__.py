"""Mixed-sensitivity H-infinity synthesis for SISO plants with multiple
rational time delays.

The pipeline: classify the numerator/denominator delay systems, factor the
plant into inner and outer parts, search the optimal two-block cost by
bisection, and assemble a cancellation-free controller whose unstable
pole-zero cancellations are restructured into finite-impulse-response
blocks.  A Pade/Riccati oracle cross-validates every synthesis.
"""

from .classify import ClassificationReport, PlantType, analyze, plant_type
from .delaysum import (
    DelaySum,
    DelayStateSpace,
    QuasiPolynomial,
    TimeDelayPlant,
    conjugate,
    from_delay_state_space,
    normalize_plant,
    time_response,
)
from .errors import (
    AssumptionViolation,
    DegenerateInputError,
    DelayHinfError,
    DomainError,
    InfeasibleError,
    IOFormatError,
    MismatchError,
    NonOptimalGammaError,
    NumericalError,
    OracleMismatchError,
    ResolutionError,
    UnsupportedPlantError,
    WellPosednessError,
)
from .factorize import (
    PlantFactorization,
    factorize,
    factorize_mixed_denominator,
    factorize_mixed_numerator,
    rhp_zeros,
    verify_factorization,
)
from .fir_decomp import (
    DecompositionResult,
    FirBlock,
    fir_response,
    phi_decompose,
    residue_cancellation,
    verify_fir_support,
)
from .oracle import (
    closed_loop_step,
    cross_validate_gamma,
    central_controller,
    flatness_check,
    mixed_sensitivity_plant,
    pade_delay,
    pade_oracle_controller,
    pade_oracle_gamma,
    ss_response,
    stability_check,
)
from .problemfile import (
    ProblemFile,
    load_problem,
    parse_problem,
    read_csv,
    write_atomic,
    write_csv,
)
from .rational import InnerRational, Polynomial, RationalFunction, spectral_factor
from .synthesis import (
    ControllerRealization,
    SynthesisData,
    Weights,
    assemble,
    compute_EFL,
    gamma_lower_bound,
    gamma_opt,
    synthesize,
)
from .winding import find_zeros, winding_number

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
