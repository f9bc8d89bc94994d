"""Two-qubit gate analysis and trapped-ion pulse design for the B^alpha family."""

from .errors import (
    BalphaError,
    ChamberViolation,
    ConfigError,
    GateParseError,
    IntegratorFailure,
    InvalidAlpha,
    NonUnitaryInput,
    QuadratureFailure,
    ResidualTooLarge,
    SingularDenominator,
)
from .family import (
    BalphaSpec,
    CoverageVerdict,
    balpha_coords,
    balpha_entangling_power,
    balpha_gate,
    balpha_invariants,
    chamber_scan,
    two_application_coverage,
)
from .fock import SimConfig, SimReport, evolve, extract_gate, simulate
from .gates import CNOT, CZ, I4, ISWAP, NAMED_GATES, SWAP, haar_random, process_fidelity
from .pulse import (
    MagnusCoefficients,
    PulsePlan,
    TrapConfig,
    effective_gate,
    magnus_coefficients,
    plan_pulse,
    quadrature_oracle,
    solve_closure,
    solve_rabi,
)
from .synthesis import (
    OptimizerOptions,
    SynthesisResult,
    conjugation_witness,
    synthesize_three_applications,
    synthesize_two_applications,
)
from .weyl import (
    CartanTriple,
    KakDecomposition,
    LocalInvariants,
    canonical_gate,
    cartan_coordinates,
    entangling_power,
    entangling_power_mc,
    invariants_from_coords,
    invariant_distance,
    invariants_from_matrix,
    locally_equivalent,
    to_positive_chamber,
    weyl_coordinates,
)

__version__ = "0.1.0"
