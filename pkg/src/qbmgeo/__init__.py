"""Information geometry of parameterized quantum thermal states.

Exact and shot-based Fisher-Bures / Kubo-Mori information matrices,
natural-gradient training of quantum Boltzmann machines, and
Cramer-Rao-bounded Hamiltonian parameter estimation, all on dense
desk-scale (<= 10 qubit) operators.
"""

from .bp_channel import (
    TentSampler,
    apply_channel,
    build_tent_sampler,
    default_sampler,
    filter_value,
    sample_t,
    stream_rng,
    tent_density,
)
from .gibbs import (
    ThermalState,
    expectation,
    relative_entropy,
    thermal_derivative,
    thermal_state,
    thermal_state_from_matrix,
)
from .hamiltonian import (
    ParamHamiltonian,
    assemble,
    pauli_decompose,
    pauli_to_matrix,
    random_hamiltonian,
    validate_terms,
)
from .info_geometry import (
    FISHER_BURES,
    KUBO_MORI,
    AdditivityReport,
    InfoMatrix,
    OrderReport,
    additivity_check,
    check_order,
    fb_exact,
    fb_spectral_oracle,
    km_exact,
    km_spectral_oracle,
    sld_operator,
)
from .linalg import (
    NumericConsistencyError,
    SpectralDecomposition,
    anticommutator,
    expm_hermitian,
    hermitize,
    pseudo_inverse,
    spectral,
    tensor_product,
)
from .metrology import (
    CramerRaoReport,
    MLEResult,
    SLDMeasurement,
    classical_fisher_info,
    cr_bound,
    mle_single_param,
    sld_measurement,
)
from .natgrad import (
    EUCLIDEAN,
    GroundEnergyLoss,
    RelativeEntropyLoss,
    TrainConfig,
    TrainTrace,
    grad_ground_energy,
    grad_rel_entropy,
    natgrad_step,
    train,
)
from .shot_estimators import (
    EstimatorReport,
    ShotConfig,
    ShotMatrixResult,
    estimate_fb_first_term,
    estimate_km_first_term,
    estimate_matrix,
    estimate_product_term,
    exact_first_term,
    exact_product_term,
    hadamard_test_prob,
)

__version__ = "0.1.0"
