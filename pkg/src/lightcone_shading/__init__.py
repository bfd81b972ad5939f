"""Per-channel bias bounds for noisy circuits and antinoise budgeting."""

from .allocation import (AllocationResult, allocate, cost_for_bias_target, priorities, probability_from_rate,
                         tradeoff_curve)
from .circuit import (Gate, LayeredCircuit, NoiseChannel, NoiseModel, Observable, build_tfim_1d,
                      conventional_lightcone, lightcone_intersection, local_pauli_noise)
from .evolution import EvolutionOutcome, evolve_backward, evolve_forward
from .norms import (BoundValue, nuclear_norm_zero_state, pauli_one_norm_fallback, spectral_norm_commutator)
from .pauli import PauliSum, PauliTerm, commutes, conjugate_clifford, conjugate_rotation, multiply, pauli_one_norm
from .shading import (ShadeConfig, ShadedLightcone, clifford_shade, conventional_shade, partition_plan, shade,
                      total_bias_bound)
from .speed_limit import LocalBounds, commutator_bound, init_bounds, propagate, ptm_abs, seed_from_exact

__version__ = "0.1.0"
