"""Shadow-based learning and reversal of Pauli and weight-contracting noise.

The package samples classical shadows of quantum channels (simulated
exactly), estimates channel eigenvalues and adjoint transfer matrices from
them, rescales observables to undo the noise, and mitigates noisy Clifford
circuits gate by gate.  A dense density-matrix oracle verifies everything at
small scale.
"""

from .paulis import (
    PauliString,
    enumerate_low_weight,
    iter_all_paulis,
    low_weight_count,
    pauli_from_index,
    pauli_index,
    symplectic_product,
    weight,
)
from .observables import (
    Observable,
    heisenberg_observable,
    locality_norm_constant,
    observable_stats,
    pauli_decompose,
)
from .channels import (
    ConfigError,
    PauliChannel,
    ProductChannel,
    TransferMatrix,
    amplitude_damping_ptm,
    channel_from_config,
    channel_to_config,
    depolarizing_probs,
    depolarizing_ptm,
    exact_eigenvalue,
    exact_transfer_matrix,
    is_weight_contracting,
    load_channel,
    reference_product_channel,
    save_channel,
    walsh_eigenvalues,
    walsh_probabilities,
)
from .exact import (
    DenseChannel,
    DenseState,
    brute_force_eigenvalues,
    brute_force_transfer,
    haar_random_state,
)
from .recovery import (
    BackwardObservable,
    IllConditionedError,
    RecoveryError,
    RecoveryFloorError,
    backward_observable,
    backward_observable_general,
    recover_expectation,
    recover_expectation_general,
    recovery_report,
    solve_upper_block_triangular,
)
from .clifford import (
    CliffordCircuit,
    Gate,
    conjugate_pauli,
    conjugate_through_circuit,
    exact_gate_estimates,
    mitigation_coefficients,
)
from .shadows import (
    EigenvalueEstimates,
    ShadowCounts,
    ShadowRecords,
    estimate_eigenvalues,
    estimate_gate_eigenvalues,
    estimate_spam_factor,
    estimate_state_expectations,
    estimate_transfer_entry,
    estimate_transfer_matrix,
    estimate_x,
    iter_channel_shadow_blocks,
    plan_sample_size,
    sample_channel_shadows,
    sample_gate_shadows,
)

__version__ = "0.1.0"

__all__ = [
    "PauliString",
    "enumerate_low_weight",
    "iter_all_paulis",
    "low_weight_count",
    "pauli_from_index",
    "pauli_index",
    "symplectic_product",
    "weight",
    "Observable",
    "heisenberg_observable",
    "locality_norm_constant",
    "observable_stats",
    "pauli_decompose",
    "ConfigError",
    "PauliChannel",
    "ProductChannel",
    "TransferMatrix",
    "amplitude_damping_ptm",
    "channel_from_config",
    "channel_to_config",
    "depolarizing_probs",
    "depolarizing_ptm",
    "exact_eigenvalue",
    "exact_transfer_matrix",
    "is_weight_contracting",
    "load_channel",
    "reference_product_channel",
    "save_channel",
    "walsh_eigenvalues",
    "walsh_probabilities",
    "DenseChannel",
    "DenseState",
    "brute_force_eigenvalues",
    "brute_force_transfer",
    "haar_random_state",
    "BackwardObservable",
    "IllConditionedError",
    "RecoveryError",
    "RecoveryFloorError",
    "backward_observable",
    "backward_observable_general",
    "recover_expectation",
    "recover_expectation_general",
    "recovery_report",
    "solve_upper_block_triangular",
    "CliffordCircuit",
    "Gate",
    "conjugate_pauli",
    "conjugate_through_circuit",
    "exact_gate_estimates",
    "mitigation_coefficients",
    "EigenvalueEstimates",
    "ShadowCounts",
    "ShadowRecords",
    "estimate_eigenvalues",
    "estimate_gate_eigenvalues",
    "estimate_spam_factor",
    "estimate_state_expectations",
    "estimate_transfer_entry",
    "estimate_transfer_matrix",
    "estimate_x",
    "iter_channel_shadow_blocks",
    "plan_sample_size",
    "sample_channel_shadows",
    "sample_gate_shadows",
]
