"""Desk-scale W-state energy-estimation benchmark.

Exact and shot-sampled simulation of the three-qubit benchmark, a
noisy-device emulator with time-dependent scenarios, detector-tomography
readout mitigation, and time-series analysis of the sampled energies.
"""

from .analysis import (
    ConstantReport,
    EnergyHistogram,
    FitResult,
    OutlierReport,
    detect_constant,
    detect_outliers,
    error_correlation_table,
    fit_sinusoid,
    histogram,
    outcome_statistics,
    propagated_readout_error,
)
from .backends import EmulatedBackend, ExecutionBackend, IdealBackend
from .configs import JobConfig, load_job_config, load_scenario
from .errors import (
    BackendError,
    ConfigurationError,
    FitError,
    MitigationError,
    ParseError,
    SchemaMismatchError,
)
from .hamiltonians import (
    PauliHamiltonian,
    PauliTerm,
    experiment_circuit,
    fermionic_triangle,
    hamiltonian_matrix,
    hubbard_ring,
    premeasurement_circuit,
    w_state_circuit,
)
from .harness import (
    Packet,
    Realization,
    TimeSeries,
    expectation_from_histogram,
    run_experiment,
    run_job,
    run_realization,
)
from .mitigation import (
    CalibrationMatrix,
    QuasiDistribution,
    estimate_bitflip_p,
    estimate_calibration_matrix,
    marginalize_calibration,
    mitigate_histogram,
    mitigate_timeseries,
    mitigated_expectation,
)
from .noise import (
    DeviceSnapshot,
    GateNoise,
    Oscillation,
    ReadoutNoise,
    TemporalScenario,
    effective_noise_at,
    noisy_execute,
    snapshot,
    true_confusion_matrix,
)
from .statevector import (
    Circuit,
    Gate,
    ShotHistogram,
    StateVector,
    apply_gate,
    exact_expectation,
    exact_probabilities,
    fidelity,
    new_zero_state,
    run_circuit,
    sample_shots,
)

__version__ = "0.1.0"
