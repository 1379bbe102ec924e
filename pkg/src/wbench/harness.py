"""Benchmark orchestration against any execution backend.

Vocabulary: a *shot* is one prepare-run-measure cycle; an *experiment* is
many shots estimating one Pauli string's expectation value; a
*realization* is one energy sample, the coefficient-weighted sum of all
string expectations; a *packet* groups consecutive realizations under one
timestamp and device snapshot; a *time series* is the ordered packets of
one qubit triplet within a job.

All timing runs on a simulated clock in minutes since job start.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .backends import ExecutionBackend
from .errors import BackendError, ConfigurationError
from .hamiltonians import (
    PauliHamiltonian,
    PauliTerm,
    experiment_circuit,
    fermionic_triangle,
    w_state_circuit,
)
from .mitigation import CalibrationMatrix, estimate_calibration_matrix
from .noise import DeviceSnapshot, TemporalScenario
from .statevector import Circuit, ShotHistogram

log = logging.getLogger(__name__)

DEFAULT_SHOTS = 1024
DEFAULT_PACKET_SIZE = 50
DEFAULT_PACKET_DURATION = 14.5  # minutes of simulated wall clock per packet


def parity_sign(bits: str) -> int:
    """+1 for an even number of '1's in the bit string, -1 for odd."""
    return -1 if bits.count("1") % 2 else 1


def expectation_from_histogram(hist: ShotHistogram) -> float:
    """Parity-signed frequency sum over the measured bits."""
    return float(
        sum(parity_sign(b) * c for b, c in hist.counts.items()) / hist.total_shots
    )


@dataclass(frozen=True)
class Realization:
    """One energy sample with its per-string expectations and raw
    histograms (kept so mitigation can be re-run offline)."""

    energy: float
    per_term_expectations: Mapping[str, float]
    timestamp: float
    histograms: Mapping[str, ShotHistogram] | None = None
    extras: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self,
            "per_term_expectations",
            {str(k): float(v) for k, v in dict(self.per_term_expectations).items()},
        )
        if self.histograms is not None:
            object.__setattr__(self, "histograms", dict(self.histograms))


@dataclass(frozen=True)
class Packet:
    """A block of consecutive realizations sharing a timestamp, a device
    snapshot and, when collected, a calibration matrix."""

    realizations: tuple[Realization, ...]
    snapshot: DeviceSnapshot | None
    packet_timestamp: float
    calibration: CalibrationMatrix | None = None
    extras: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "realizations", tuple(self.realizations))

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.realizations])


@dataclass(frozen=True)
class TimeSeries:
    """Time-ordered packets of one qubit triplet within one job."""

    triplet: tuple[int, ...]
    packets: tuple[Packet, ...]
    job_id: str
    mitigation_mode: str = "none"
    hamiltonian: PauliHamiltonian | None = None
    extras: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "triplet", tuple(int(q) for q in self.triplet))
        object.__setattr__(self, "packets", tuple(self.packets))
        times = [p.packet_timestamp for p in self.packets]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"packet timestamps must strictly increase, got {times}")

    def energies(self) -> np.ndarray:
        return np.concatenate([p.energies() for p in self.packets]) if self.packets else np.array([])

    def packet_means(self) -> np.ndarray:
        return np.array([p.energies().mean() for p in self.packets])

    def packet_times(self) -> np.ndarray:
        return np.array([p.packet_timestamp for p in self.packets])


@lru_cache(maxsize=512)
def _experiment_circuit(prep: Circuit, term: PauliTerm) -> Circuit:
    return experiment_circuit(prep, term)


def run_experiment(
    backend: ExecutionBackend,
    term: PauliTerm,
    prep: Circuit,
    shots: int = DEFAULT_SHOTS,
    time: float = 0.0,
    stream=None,
    packet_index: int = 0,
) -> tuple[float, ShotHistogram]:
    """Estimate one Pauli string's expectation value.

    Runs preparation plus the string's premeasurement rotations, then sums
    outcome frequencies with parity signs over the measured (support)
    qubits.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    circuit = _experiment_circuit(prep, term)
    try:
        hist = backend.execute(
            circuit, shots, time, stream=stream, packet_index=packet_index
        )
    except BackendError as exc:
        raise BackendError(
            f"experiment {term.label()} at t={time:.3f} min failed: {exc}"
        ) from exc
    return expectation_from_histogram(hist), hist


def _streams(stream, count: int) -> list:
    """Expand a stream handle into per-experiment handles.

    A SeedSequence is split into disjoint children (safe to use
    concurrently); a Generator is reused sequentially; None defers to the
    backend's internal sequence.
    """
    if isinstance(stream, np.random.SeedSequence):
        return [np.random.default_rng(child) for child in stream.spawn(count)]
    return [stream] * count


def run_realization(
    backend: ExecutionBackend,
    hamiltonian: PauliHamiltonian,
    prep: Circuit,
    shots: int = DEFAULT_SHOTS,
    time: float = 0.0,
    stream=None,
    packet_index: int = 0,
) -> Realization:
    """One energy sample: an experiment per Hamiltonian term, summed with
    the term coefficients."""
    if hamiltonian.n_qubits > backend.n_qubits:
        raise ConfigurationError(
            f"hamiltonian needs {hamiltonian.n_qubits} qubits, backend has {backend.n_qubits}"
        )
    expectations: dict[str, float] = {}
    histograms: dict[str, ShotHistogram] = {}
    for term, term_stream in zip(hamiltonian.terms, _streams(stream, len(hamiltonian.terms))):
        value, hist = run_experiment(
            backend, term, prep, shots, time, stream=term_stream, packet_index=packet_index
        )
        expectations[term.letters] = value
        histograms[term.letters] = hist
    energy = sum(t.coefficient * expectations[t.letters] for t in hamiltonian.terms)
    return Realization(float(energy), expectations, float(time), histograms)


def _stream_key(seed: int, *key: int) -> np.random.SeedSequence:
    """Named, splittable stream: the spawn key makes streams independent
    of execution order across series, packets, realizations and
    experiments."""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))


def run_job(
    backend: ExecutionBackend,
    *,
    triplets: Sequence[Sequence[int]],
    packets_per_triplet: int,
    shots: int = DEFAULT_SHOTS,
    packet_size: int = DEFAULT_PACKET_SIZE,
    rotation: bool = False,
    packet_duration: float = DEFAULT_PACKET_DURATION,
    calibration: str = "none",
    calibration_shots: int | None = None,
    hamiltonian: PauliHamiltonian | None = None,
    prep: Circuit | None = None,
    seed: int = 0,
    scenario: TemporalScenario | None = None,
    job_id: str = "job",
    packet_sink: Callable[[int, Packet], None] | None = None,
) -> list[TimeSeries]:
    """Run the full packet protocol on one or more qubit triplets.

    ``rotation`` interleaves triplets packet-by-packet so that shared-time
    effects can be compared across triplets.  The simulated clock advances
    by ``packet_duration`` per packet, by a proportional charge for every
    calibration (mode ``static``: once at job start; ``dynamic``: before
    each packet; collected matrices are stored on the packets and applied
    only by explicit mitigation later), and by any scenario delay
    scheduled after a packet.  A backend failure inside an experiment
    aborts that packet; the job continues.

    Identical arguments produce bit-identical series.  ``packet_sink`` is
    called with (triplet index, packet) as packets complete.
    """
    triplets = [tuple(int(q) for q in t) for t in triplets]
    if not triplets:
        raise ConfigurationError("at least one qubit triplet is required")
    if packets_per_triplet < 1:
        raise ConfigurationError(f"packets_per_triplet must be >= 1, got {packets_per_triplet}")
    if packet_size < 1:
        raise ConfigurationError(f"packet_size must be >= 1, got {packet_size}")
    if calibration not in ("none", "static", "dynamic"):
        raise ConfigurationError(
            f"calibration must be none|static|dynamic, got {calibration!r}"
        )
    hamiltonian = hamiltonian if hamiltonian is not None else fermionic_triangle()
    prep = prep if prep is not None else w_state_circuit()
    calibration_shots = calibration_shots if calibration_shots is not None else shots
    n = hamiltonian.n_qubits
    # Calibration cost in clock time, pro-rated by circuit count.
    calibration_duration = packet_duration * (2**n) / (packet_size * len(hamiltonian.terms))

    if rotation:
        schedule = [(s, p) for p in range(packets_per_triplet) for s in range(len(triplets))]
    else:
        schedule = [(s, p) for s in range(len(triplets)) for p in range(packets_per_triplet)]

    clock = 0.0
    static_calibration: CalibrationMatrix | None = None
    if calibration == "static":
        static_calibration = estimate_calibration_matrix(
            backend,
            n,
            calibration_shots,
            time=clock,
            stream=np.random.default_rng(_stream_key(seed, 1, 0)),
        )
        clock += calibration_duration

    collected: list[list[Packet]] = [[] for _ in triplets]
    for global_index, (series_index, packet_index) in enumerate(schedule):
        packet_calibration = None
        if calibration == "dynamic":
            packet_calibration = estimate_calibration_matrix(
                backend,
                n,
                calibration_shots,
                time=clock,
                stream=np.random.default_rng(_stream_key(seed, 1, global_index + 1)),
            )
            clock += calibration_duration
        elif calibration == "static" and packet_index == 0:
            packet_calibration = static_calibration

        packet_start = clock
        spacing = packet_duration / packet_size
        realizations: list[Realization] = []
        try:
            for r in range(packet_size):
                realizations.append(
                    run_realization(
                        backend,
                        hamiltonian,
                        prep,
                        shots,
                        time=packet_start + r * spacing,
                        stream=_stream_key(seed, 0, series_index, packet_index, r),
                        packet_index=global_index,
                    )
                )
        except BackendError as exc:
            log.warning(
                "discarding packet %d of triplet %s after failure: %s",
                packet_index,
                triplets[series_index],
                exc,
            )
            realizations = []
        if realizations:
            collected[series_index].append(
                Packet(
                    realizations=tuple(realizations),
                    snapshot=backend.device_snapshot(packet_start),
                    packet_timestamp=packet_start,
                    calibration=packet_calibration,
                )
            )
            if packet_sink is not None:
                packet_sink(series_index, collected[series_index][-1])
        clock += packet_duration
        if scenario is not None:
            clock += scenario.delays.get(global_index, 0.0)

    return [
        TimeSeries(
            triplet=triplet,
            packets=tuple(packets),
            job_id=job_id,
            mitigation_mode="none",
            hamiltonian=hamiltonian,
        )
        for triplet, packets in zip(triplets, collected)
    ]
