"""Variational Monte Carlo for 2D Rydberg atom arrays with autoregressive
neural wavefunctions, verified against an exact-diagonalization oracle."""

from .autodiff import Tensor, backward, record, zero_grad
from .checkpoint import load_checkpoint, restore_model, save_checkpoint
from .ed import (
    EdResult,
    ed_expectation,
    ed_ground_state,
    enumerate_normalization,
    fidelity,
)
from .lattice import (
    HamiltonianSpec,
    LatticeSpec,
    PatchScheme,
    all_configurations,
    build_hamiltonian,
    diagonal_energy,
    interaction_matrix,
    patch_order,
    staggered_magnetization,
)
from .optim import AdamState, TrainingFault, adam_update
from .runconfig import RunConfig, format_config, parse_config
from .vmc import (
    EnergyEstimate,
    TrainConfig,
    TrainState,
    energy_estimate,
    local_energies_grouped,
    local_energy,
    local_energy_grouped,
    measure_observable,
    train,
    training_step,
)
from .wavefunction import (
    ModelConfig,
    count_parameters,
    init_model,
    log_amplitude_batch,
)

__version__ = "0.1.0"
