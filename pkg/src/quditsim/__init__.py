"""quditsim: truncated-Fock qudit processor simulation and application workloads."""

from .hilbert import (
    FOCK,
    SYMMETRIC,
    DensityMatrix,
    DimensionError,
    OperatorTerm,
    QuantumState,
    RegisterSpec,
    embed,
    expectation,
    ladder_bosonic,
    ladder_cyclic,
    measure_sample,
    partial_trace,
)
from .gates import (
    GateMatrix,
    KrausChannel,
    beam_splitter,
    csum,
    displacement,
    edge_phase_separator,
    givens,
    photon_loss_channel,
    qudit_x,
    qudit_z,
    snap,
)
from .dynamics import (
    Circuit,
    Hamiltonian,
    LindbladModel,
    apply_channel,
    circuit_run,
    evolve_exact,
    lindblad_evolve,
    trotter_evolve,
)
from .sqed import LatticeSpec, SqedExperiment
from .qaoa import Graph, QaoaExperiment, parse_edge_list, planted_coloring_graph
from .reservoir import ReservoirConfig, ReservoirExperiment
from .synth import AnsatzLayout, Block, OptimizerOptions, SynthExperiment, parse_layout

__version__ = "0.1.0"
