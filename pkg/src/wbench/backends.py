"""Execution backends: the ideal sampler and the noisy-device emulator.

Both are deterministic: under an explicit stream the result depends only
on the stream, otherwise an internal seed sequence hands out one child
stream per call in call order.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .errors import BackendError
from .noise import (
    DeviceSnapshot,
    EmulatorCaches,
    TemporalScenario,
    noisy_execute,
    snapshot,
)
from .statevector import (
    Circuit,
    ShotHistogram,
    _normalized,
    histogram_from_vector,
    probability_vector,
    run_circuit,
)


class ExecutionBackend(ABC):
    """Anything that can run a circuit for a number of shots at a point in
    simulated time and return a histogram."""

    n_qubits: int
    supports_time: bool = True

    def __init__(self, n_qubits: int, seed: int | None = 0):
        self.n_qubits = int(n_qubits)
        self._seedseq = np.random.SeedSequence(seed)

    def _stream(self, stream) -> np.random.Generator:
        if stream is None:
            return np.random.default_rng(self._seedseq.spawn(1)[0])
        return np.random.default_rng(stream)

    def _check(self, circuit: Circuit):
        if circuit.n_qubits > self.n_qubits:
            raise BackendError(
                f"circuit needs {circuit.n_qubits} qubits, backend has {self.n_qubits}"
            )

    @abstractmethod
    def execute(
        self,
        circuit: Circuit,
        shots: int,
        time: float = 0.0,
        *,
        stream=None,
        packet_index: int = 0,
    ) -> ShotHistogram:
        """Run ``circuit`` for ``shots`` shots at simulated ``time``."""

    @abstractmethod
    def device_snapshot(self, time: float = 0.0) -> DeviceSnapshot:
        """Error figures the device interface reports at ``time``."""


class IdealBackend(ExecutionBackend):
    """Noiseless sampler with perfect gates and readout."""

    def __init__(self, n_qubits: int = 3, seed: int | None = 0):
        super().__init__(n_qubits, seed)
        self._prob_cache: dict[Circuit, np.ndarray] = {}

    def execute(self, circuit, shots, time=0.0, *, stream=None, packet_index=0):
        self._check(circuit)
        if shots < 1:
            raise ValueError(f"shots must be >= 1, got {shots}")
        probs = self._prob_cache.get(circuit)
        if probs is None:
            probs = probability_vector(run_circuit(circuit), circuit.measured_qubits)
            self._prob_cache[circuit] = probs
        rng = self._stream(stream)
        counts = rng.multinomial(shots, _normalized(probs))
        return histogram_from_vector(circuit.measured_qubits, counts, shots)

    def device_snapshot(self, time=0.0):
        return DeviceSnapshot(
            reported_readout_error=(0.0,) * self.n_qubits,
            reported_one_qubit_error=0.0,
            reported_two_qubit_error=0.0,
            timestamp=float(time),
        )


class EmulatedBackend(ExecutionBackend):
    """Noisy device emulation driven by a temporal scenario."""

    def __init__(self, scenario: TemporalScenario, n_qubits: int | None = None, seed: int | None = 0):
        if n_qubits is None:
            n_qubits = scenario.readout.n_qubits
        super().__init__(n_qubits, seed)
        self.scenario = scenario
        self.caches = EmulatorCaches()

    def execute(self, circuit, shots, time=0.0, *, stream=None, packet_index=0):
        self._check(circuit)
        return noisy_execute(
            circuit,
            shots,
            time,
            self.scenario,
            self._stream(stream),
            packet_index=packet_index,
            caches=self.caches,
        )

    def device_snapshot(self, time=0.0):
        return snapshot(self.scenario, time)
