"""diffqc: differentiable circuit-scaffold optimization for small quantum
circuits -- gradient-based gate selection and pruning, joint angle
optimization, hardware-aware costs, and adaptive routing on a simulated
backend.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .axioms import AxiomSet, NoiseChannelSpec
from .gates import GateKind, HamiltonianSpec, PauliTerm, builtin_hamiltonian
from .optim import CurriculumSpec, OptimizerConfig, TrainingTrace, init_logits, train
from .scaffold import (
    DiscreteCircuit,
    DiscreteGate,
    GateSpec,
    Scaffold,
    extract_discrete,
    freeze_motif,
    tile_motif,
)

__version__ = "0.1.0"

__all__ = [
    "AxiomSet",
    "CurriculumSpec",
    "DiscreteCircuit",
    "DiscreteGate",
    "GateKind",
    "GateSpec",
    "HamiltonianSpec",
    "KERNEL_BACKEND",
    "NoiseChannelSpec",
    "OptimizerConfig",
    "PauliTerm",
    "Scaffold",
    "TrainingTrace",
    "builtin_hamiltonian",
    "extract_discrete",
    "freeze_motif",
    "init_logits",
    "tile_motif",
    "train",
    "__version__",
]
