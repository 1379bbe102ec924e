"""Noisy-device emulation: symmetric readout bit flips, stochastic Pauli
gate errors, and time-dependent scenarios (oscillations, outlier packets,
delays and a constant-output fault).

Gate noise is realized as trajectories: after each gate, with the
configured probability, a uniformly random non-identity Pauli acts on the
gate's qubits.  Readout flips are pushed through the per-qubit confusion
matrix before sampling, which is exact in distribution and keeps emulated
jobs cheap.  Shots sharing a trajectory are grouped into one multinomial
draw for the same reason.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .mitigation import CalibrationMatrix
from .statevector import (
    Circuit,
    ShotHistogram,
    StateVector,
    _apply_matrix,
    _normalized,
    apply_gate,
    gate_matrix,
    histogram_from_vector,
    new_zero_state,
    probability_vector,
)

log = logging.getLogger(__name__)

_PAULI_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_INSERTIONS_1Q = tuple(_PAULI_1Q[l] for l in "XYZ")
_INSERTIONS_2Q = tuple(
    np.kron(
        _PAULI_1Q.get(a, np.eye(2, dtype=complex)),
        _PAULI_1Q.get(b, np.eye(2, dtype=complex)),
    )
    for a, b in itertools.product("IXYZ", repeat=2)
    if (a, b) != ("I", "I")
)


@dataclass(frozen=True)
class ReadoutNoise:
    """Per-qubit probability that a measured bit is reported flipped
    (symmetric 0<->1)."""

    per_qubit_flip: tuple[float, ...]

    def __post_init__(self):
        flips = tuple(float(p) for p in self.per_qubit_flip)
        for p in flips:
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"flip probability {p} outside [0, 1]")
        object.__setattr__(self, "per_qubit_flip", flips)

    @property
    def n_qubits(self) -> int:
        return len(self.per_qubit_flip)


@dataclass(frozen=True)
class GateNoise:
    """Depolarizing error probabilities per gate arity."""

    one_qubit_error: float = 0.0
    two_qubit_error: float = 0.0

    def __post_init__(self):
        for p in (self.one_qubit_error, self.two_qubit_error):
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"gate error {p} outside [0, 1]")


@dataclass(frozen=True)
class Oscillation:
    """Sinusoidal modulation (1 + a*sin(2*pi*t/T + phase)) of a noise channel."""

    amplitude_fraction: float
    period_minutes: float
    phase_radians: float = 0.0
    applies_to: str = "both"

    def __post_init__(self):
        if self.period_minutes <= 0:
            raise ConfigurationError(
                f"oscillation period must be positive, got {self.period_minutes}"
            )
        if self.applies_to not in ("readout", "gate", "both"):
            raise ConfigurationError(
                f"applies_to must be readout|gate|both, got {self.applies_to!r}"
            )


@dataclass(frozen=True)
class TemporalScenario:
    """Baseline noise plus its evolution over an emulated job.

    ``outlier_flips`` adds extra readout-flip probability for specific
    packet indices (global, in execution order); ``delays`` inserts extra
    minutes after specific packets; ``constant_fault`` makes the emulator
    return the first histogram ever produced for each circuit, verbatim.
    ``reported_*`` override what the device interface claims, independent
    of the true noise; they default to the baseline values.
    """

    readout: ReadoutNoise
    gate: GateNoise = GateNoise()
    oscillation: Oscillation | None = None
    outlier_flips: Mapping[int, float] = field(default_factory=dict)
    delays: Mapping[int, float] = field(default_factory=dict)
    constant_fault: bool = False
    reported_readout: tuple[float, ...] | None = None
    reported_one_qubit_error: float | None = None
    reported_two_qubit_error: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "outlier_flips",
            {int(k): float(v) for k, v in dict(self.outlier_flips).items()},
        )
        object.__setattr__(
            self, "delays", {int(k): float(v) for k, v in dict(self.delays).items()}
        )
        if self.reported_readout is not None:
            object.__setattr__(
                self, "reported_readout", tuple(float(p) for p in self.reported_readout)
            )


@dataclass(frozen=True)
class DeviceSnapshot:
    """Error figures as reported by the (emulated) device interface.

    Reported values stay constant within a job even when the true noise
    varies; that blindness is part of the emulated interface contract.
    """

    reported_readout_error: tuple[float, ...]
    reported_one_qubit_error: float
    reported_two_qubit_error: float
    timestamp: float


def snapshot(scenario: TemporalScenario, time: float) -> DeviceSnapshot:
    """Reported (baseline, unmodulated) error figures at ``time``."""
    readout = scenario.reported_readout
    if readout is None:
        readout = scenario.readout.per_qubit_flip
    one_q = scenario.reported_one_qubit_error
    two_q = scenario.reported_two_qubit_error
    return DeviceSnapshot(
        reported_readout_error=tuple(readout),
        reported_one_qubit_error=scenario.gate.one_qubit_error if one_q is None else float(one_q),
        reported_two_qubit_error=scenario.gate.two_qubit_error if two_q is None else float(two_q),
        timestamp=float(time),
    )


def _clamp(p: float, context: str) -> float:
    if 0.0 <= p <= 1.0:
        return p
    clamped = min(max(p, 0.0), 1.0)
    log.warning("clamping %s probability %.6g to %.6g", context, p, clamped)
    return clamped


def effective_noise_at(
    scenario: TemporalScenario, time: float, packet_index: int = 0
) -> tuple[ReadoutNoise, GateNoise]:
    """True noise at ``time``: baseline scaled by the oscillation on its
    channel(s), plus any extra flip probability scheduled for this packet.
    Modulated probabilities are clamped to [0, 1]."""
    if time < 0:
        raise ValueError(f"time must be >= 0, got {time}")
    readout_factor = gate_factor = 1.0
    osc = scenario.oscillation
    if osc is not None:
        factor = 1.0 + osc.amplitude_fraction * math.sin(
            2.0 * math.pi * time / osc.period_minutes + osc.phase_radians
        )
        if osc.applies_to in ("readout", "both"):
            readout_factor = factor
        if osc.applies_to in ("gate", "both"):
            gate_factor = factor
    extra_flip = scenario.outlier_flips.get(packet_index, 0.0)
    flips = tuple(
        _clamp(p * readout_factor + extra_flip, "readout flip")
        for p in scenario.readout.per_qubit_flip
    )
    gate = GateNoise(
        _clamp(scenario.gate.one_qubit_error * gate_factor, "one-qubit error"),
        _clamp(scenario.gate.two_qubit_error * gate_factor, "two-qubit error"),
    )
    return ReadoutNoise(flips), gate


def true_confusion_matrix(
    readout: ReadoutNoise, n_qubits: int | None = None
) -> CalibrationMatrix:
    """Analytic detector matrix: the tensor product of per-qubit
    [[1-p, p], [p, 1-p]] blocks.  Entry (i, j) multiplies p or 1-p per
    qubit according to whether bits i and j agree; columns sum to 1."""
    flips = readout.per_qubit_flip
    if n_qubits is None:
        n_qubits = len(flips)
    if len(flips) != n_qubits:
        raise ConfigurationError(
            f"readout noise covers {len(flips)} qubits, expected {n_qubits}"
        )
    matrix = np.array([[1.0]])
    for p in flips:
        matrix = np.kron(matrix, np.array([[1.0 - p, p], [p, 1.0 - p]]))
    return CalibrationMatrix(n_qubits, matrix)


class EmulatorCaches:
    """Reusable per-backend caches; results are pure so sharing them never
    changes sampled distributions, only speed.  The constant-fault
    histogram store is the one piece of shared state and is guarded by a
    lock so concurrent executions observe a consistent first histogram."""

    def __init__(self):
        self.ideal_probs: dict[Circuit, np.ndarray] = {}
        self.trajectories: dict[tuple, np.ndarray] = {}
        self.confusions: dict[tuple[float, ...], np.ndarray] = {}
        self.fault_histograms: dict[Circuit, ShotHistogram] = {}
        self.lock = threading.Lock()


def _ideal_probabilities(circuit: Circuit, caches: EmulatorCaches) -> np.ndarray:
    probs = caches.ideal_probs.get(circuit)
    if probs is None:
        state = new_zero_state(circuit.n_qubits)
        for gate in circuit.gates:
            state = apply_gate(state, gate)
        probs = probability_vector(state, circuit.measured_qubits)
        caches.ideal_probs[circuit] = probs
    return probs


def _confusion_operator(flips: tuple[float, ...], caches: EmulatorCaches) -> np.ndarray:
    op = caches.confusions.get(flips)
    if op is None:
        op = true_confusion_matrix(ReadoutNoise(flips)).matrix
        caches.confusions[flips] = op
    return op


def _trajectory_probabilities(
    circuit: Circuit, pattern: tuple[tuple[int, int], ...], caches: EmulatorCaches
) -> np.ndarray:
    """Outcome distribution of one error trajectory.

    ``pattern`` lists (gate index, Pauli choice) pairs; the chosen Pauli is
    inserted right after the failing gate, acting on that gate's qubits.
    """
    key = (circuit, pattern)
    probs = caches.trajectories.get(key)
    if probs is not None:
        return probs
    insertions = dict(pattern)
    n = circuit.n_qubits
    amps = new_zero_state(n).amplitudes
    for index, gate in enumerate(circuit.gates):
        axes = tuple(q - 1 for q in gate.qubits)
        amps = _apply_matrix(amps, gate_matrix(gate), axes, n)
        choice = insertions.get(index)
        if choice is not None:
            table = _INSERTIONS_2Q if len(axes) == 2 else _INSERTIONS_1Q
            amps = _apply_matrix(amps, table[choice], axes, n)
    probs = probability_vector(StateVector(n, amps), circuit.measured_qubits)
    caches.trajectories[key] = probs
    return probs


def noisy_execute(
    circuit: Circuit,
    shots: int,
    time: float,
    scenario: TemporalScenario,
    stream: int | np.random.Generator,
    packet_index: int = 0,
    caches: EmulatorCaches | None = None,
) -> ShotHistogram:
    """Sample ``shots`` outcomes of ``circuit`` under the scenario's noise
    at ``time``.

    Per shot: each gate fails independently with its (time-modulated)
    error probability and a random Pauli is inserted after it; the outcome
    is then drawn from the trajectory's distribution pushed through the
    readout confusion matrix.  With all noise off this reduces to the
    ideal sampler, bit-identical under the same stream.  Under
    ``constant_fault`` the first histogram produced for each circuit is
    returned verbatim forever after.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    caches = caches if caches is not None else EmulatorCaches()
    if scenario.constant_fault:
        with caches.lock:
            cached = caches.fault_histograms.get(circuit)
        if cached is not None:
            return cached

    rng = np.random.default_rng(stream)
    readout, gate_noise = effective_noise_at(scenario, time, packet_index)
    if readout.n_qubits < circuit.n_qubits:
        raise ConfigurationError(
            f"scenario covers {readout.n_qubits} qubits, circuit needs {circuit.n_qubits}"
        )
    site_probs = np.array(
        [
            gate_noise.two_qubit_error if len(g.qubits) == 2 else gate_noise.one_qubit_error
            for g in circuit.gates
        ]
    )
    flips = tuple(readout.per_qubit_flip[q - 1] for q in circuit.measured_qubits)
    ideal = _ideal_probabilities(circuit, caches)

    gate_active = site_probs.size > 0 and float(site_probs.max()) > 0.0
    if not gate_active and max(flips, default=0.0) == 0.0:
        counts = rng.multinomial(shots, _normalized(ideal))
        hist = histogram_from_vector(circuit.measured_qubits, counts, shots)
    else:
        confusion = _confusion_operator(flips, caches)
        if gate_active:
            draws = rng.random((shots, site_probs.size))
            error_rows = np.nonzero((draws < site_probs).any(axis=1))[0]
        else:
            draws = None
            error_rows = np.empty(0, dtype=int)
        clean_shots = shots - error_rows.size
        counts = np.zeros(len(ideal), dtype=np.int64)
        if clean_shots:
            counts += rng.multinomial(clean_shots, _normalized(confusion @ ideal))
        patterns: dict[tuple[tuple[int, int], ...], int] = {}
        for row in error_rows:
            failed = np.nonzero(draws[row] < site_probs)[0]
            pattern = tuple(
                (
                    int(site),
                    int(rng.integers(15 if len(circuit.gates[site].qubits) == 2 else 3)),
                )
                for site in failed
            )
            patterns[pattern] = patterns.get(pattern, 0) + 1
        for pattern, multiplicity in patterns.items():
            probs = _trajectory_probabilities(circuit, pattern, caches)
            counts += rng.multinomial(multiplicity, _normalized(confusion @ probs))
        hist = histogram_from_vector(circuit.measured_qubits, counts, shots)

    if scenario.constant_fault:
        with caches.lock:
            hist = caches.fault_histograms.setdefault(circuit, hist)
    return hist
