"""Stochastic phase-space engine and exact oracle for the three-well
Bose-Hubbard beamsplitter: populations, number variances and the
Hillery-Zubairy entanglement witness between the end wells."""

__version__ = "0.1.0"

from .engine import DivergenceReport, IntegratorConfig, simulate_ensemble
from .estimator import (
    MomentAccumulator,
    TimeSeriesResult,
    accumulate,
    finalize,
    steering_witnesses,
)
from .integrator import TrajectoryRecord, integrate_trajectory, step
from .model import (
    FIRST_TRANSFER_TIME,
    DivergenceError,
    ModelParams,
    PhasePoint,
    Schedule,
    drift,
    noise_amplitudes,
)
from .oracle import (
    FockBasis,
    QuantumState,
    build_hamiltonian,
    coherent_initial,
    evolve,
    expectations,
    fock_initial,
)
from .runner import (
    RunConfig,
    compare_csv,
    compare_results,
    parse_config,
    preset,
    run,
)
from .sampling import SubstreamKey, sample_coherent, sample_fock, sample_initial

__all__ = [
    "DivergenceError",
    "DivergenceReport",
    "FIRST_TRANSFER_TIME",
    "FockBasis",
    "IntegratorConfig",
    "ModelParams",
    "MomentAccumulator",
    "PhasePoint",
    "QuantumState",
    "RunConfig",
    "Schedule",
    "SubstreamKey",
    "TimeSeriesResult",
    "TrajectoryRecord",
    "accumulate",
    "build_hamiltonian",
    "coherent_initial",
    "compare_csv",
    "compare_results",
    "drift",
    "evolve",
    "expectations",
    "finalize",
    "fock_initial",
    "integrate_trajectory",
    "noise_amplitudes",
    "parse_config",
    "preset",
    "run",
    "sample_coherent",
    "sample_fock",
    "sample_initial",
    "simulate_ensemble",
    "steering_witnesses",
    "step",
]
