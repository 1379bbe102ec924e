"""Dense statevector simulation of small qubit registers.

Conventions used throughout the package:

* Qubits are numbered 1..n and qubit 1 is the leftmost (most significant)
  bit of every bit string.  Basis index ``i`` therefore encodes qubit ``j``
  as ``(i >> (n - j)) & 1``, so for three qubits index 4 is ``|100>``.
* Unmeasured qubits are traced out: probabilities over a subset of qubits
  are Born-rule marginals.
* States are compared by fidelity ``|<a|b>|^2``, never amplitude-wise, so
  global phase is irrelevant.
* Every stochastic operation takes an explicit seed or ``numpy`` Generator;
  identical seeds give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError

MAX_QUBITS = 12

_SQ2 = 1.0 / math.sqrt(2.0)

_HADAMARD = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_S_DAGGER = np.array([[1, 0], [0, -1j]], dtype=complex)
# Two-qubit matrices are in (control, target) axis order.
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CHADAMARD = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, _SQ2, _SQ2], [0, 0, _SQ2, -_SQ2]],
    dtype=complex,
)

GATE_KINDS = ("ry", "h", "x", "sdg", "cx", "ch")


@dataclass(frozen=True)
class Gate:
    """A primitive gate acting on explicit 1-based qubit indices.

    ``kind`` is one of ``ry`` (y-rotation, needs ``angle``), ``h``
    (Hadamard), ``x`` (bit flip), ``sdg`` (S-dagger), ``cx``
    (controlled-not) and ``ch`` (controlled-Hadamard).  Two-qubit gates
    list ``(control, target)``.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        expected = 2 if self.kind in ("cx", "ch") else 1
        if len(self.qubits) != expected:
            raise ValueError(f"{self.kind} gate needs {expected} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit in {self.kind} gate: {self.qubits}")
        if (self.kind == "ry") != (self.angle is not None):
            raise ValueError("angle is required for ry and forbidden otherwise")
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))


def rot_y(qubit: int, angle: float) -> Gate:
    """Rotation about the Bloch-sphere y axis: [[cos a/2, -sin a/2], [sin a/2, cos a/2]]."""
    return Gate("ry", (qubit,), angle)


def hadamard(qubit: int) -> Gate:
    return Gate("h", (qubit,))


def pauli_x(qubit: int) -> Gate:
    return Gate("x", (qubit,))


def s_dagger(qubit: int) -> Gate:
    return Gate("sdg", (qubit,))


def cnot(control: int, target: int) -> Gate:
    return Gate("cx", (control, target))


def controlled_h(control: int, target: int) -> Gate:
    return Gate("ch", (control, target))


def gate_matrix(gate: Gate) -> np.ndarray:
    """Unitary matrix of ``gate`` (2x2, or 4x4 in (control, target) order)."""
    if gate.kind == "ry":
        c, s = math.cos(gate.angle / 2.0), math.sin(gate.angle / 2.0)
        return np.array([[c, -s], [s, c]], dtype=complex)
    return {
        "h": _HADAMARD,
        "x": _PAULI_X,
        "sdg": _S_DAGGER,
        "cx": _CNOT,
        "ch": _CHADAMARD,
    }[gate.kind]


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on ``n_qubits`` plus the qubits read out at the end."""

    n_qubits: int
    gates: tuple[Gate, ...]
    measured_qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(
            self, "measured_qubits", tuple(int(q) for q in self.measured_qubits)
        )
        if not self.measured_qubits:
            raise ValueError("measured_qubits must not be empty")
        if len(set(self.measured_qubits)) != len(self.measured_qubits):
            raise ValueError(f"duplicate measured qubit: {self.measured_qubits}")
        for q in self.measured_qubits:
            self._check_index(q)
        for gate in self.gates:
            for q in gate.qubits:
                self._check_index(q)

    def _check_index(self, q: int):
        if not 1 <= q <= self.n_qubits:
            raise ValueError(f"qubit index {q} outside register 1..{self.n_qubits}")


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the 2^n computational basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude array of shape {amps.shape} does not match {self.n_qubits} qubits"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2; the global-phase-free state comparison."""
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def new_zero_state(n_qubits: int) -> StateVector:
    """The all-zeros register |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}"
        )
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _apply_matrix(
    amps: np.ndarray, matrix: np.ndarray, axes: tuple[int, ...], n: int
) -> np.ndarray:
    """Apply a k-qubit unitary to the given tensor axes of a statevector.

    Reshape to a rank-n tensor, contract the matrix against the target
    axes, and move them back; correct for arbitrary axis order.
    """
    k = len(axes)
    tensor = np.moveaxis(amps.reshape((2,) * n), axes, range(k))
    out = np.tensordot(
        matrix.reshape((2,) * (2 * k)),
        tensor,
        axes=(tuple(range(k, 2 * k)), tuple(range(k))),
    )
    return np.moveaxis(out, range(k), axes).reshape(-1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """New state with ``gate`` applied; norm is preserved."""
    for q in gate.qubits:
        if not 1 <= q <= state.n_qubits:
            raise ValueError(
                f"qubit index {q} outside register 1..{state.n_qubits}"
            )
    axes = tuple(q - 1 for q in gate.qubits)
    amps = _apply_matrix(state.amplitudes, gate_matrix(gate), axes, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def run_circuit(circuit: Circuit) -> StateVector:
    """Apply the circuit's gates in order to |0...0>."""
    state = new_zero_state(circuit.n_qubits)
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def bitstring(index: int, width: int) -> str:
    return format(index, f"0{width}b")


def probability_vector(
    state: StateVector, measured_qubits: Iterable[int]
) -> np.ndarray:
    """Marginal Born-rule probabilities over ``measured_qubits``.

    Entry ``b`` corresponds to the bit string of ``b`` with the first
    listed qubit as its most significant bit.
    """
    measured = tuple(int(q) for q in measured_qubits)
    n = state.n_qubits
    if len(set(measured)) != len(measured) or not measured:
        raise ValueError(f"measured qubits must be a non-empty set, got {measured}")
    for q in measured:
        if not 1 <= q <= n:
            raise ValueError(f"qubit index {q} outside register 1..{n}")
    keep = [q - 1 for q in measured]
    other = tuple(ax for ax in range(n) if ax not in keep)
    marg = state.probabilities().reshape((2,) * n).sum(axis=other)
    kept_sorted = sorted(keep)
    perm = [kept_sorted.index(ax) for ax in keep]
    return np.transpose(marg, perm).reshape(-1)


def exact_probabilities(
    state: StateVector, measured_qubits: Iterable[int]
) -> dict[str, float]:
    """Marginal probabilities keyed by bit string, including zero entries."""
    vec = probability_vector(state, measured_qubits)
    width = int(np.log2(len(vec)))
    return {bitstring(i, width): float(p) for i, p in enumerate(vec)}


def _apply_pauli_string(state: StateVector, letters: str) -> np.ndarray:
    """Amplitudes of P|state> for the Pauli string given by ``letters``."""
    n = state.n_qubits
    if len(letters) != n:
        raise ValueError(f"Pauli string {letters!r} does not match {n} qubits")
    idx = np.arange(2**n)
    flip_mask = 0
    phase = np.ones(2**n, dtype=complex)
    for j, letter in enumerate(letters, start=1):
        bitpos = n - j
        bit = (idx >> bitpos) & 1
        if letter == "I":
            continue
        if letter == "X":
            flip_mask |= 1 << bitpos
        elif letter == "Y":
            flip_mask |= 1 << bitpos
            phase = phase * np.where(bit == 0, 1j, -1j)
        elif letter == "Z":
            phase = phase * np.where(bit == 0, 1.0, -1.0)
        else:
            raise ValueError(f"invalid Pauli letter {letter!r} in {letters!r}")
    out = np.empty_like(phase)
    out[idx ^ flip_mask] = phase * state.amplitudes
    return out


def exact_expectation(state: StateVector, operator) -> float:
    """Analytic expectation value <state|P|state>.

    ``operator`` may be a Pauli letter string like ``"YIY"``, a term with a
    ``letters`` attribute (its coefficient is NOT applied), or a
    Hamiltonian with a ``terms`` attribute, in which case the
    coefficient-weighted sum (the energy) is returned.
    """
    terms = getattr(operator, "terms", None)
    if terms is not None:
        return float(
            sum(t.coefficient * exact_expectation(state, t.letters) for t in terms)
        )
    letters = getattr(operator, "letters", operator)
    value = np.vdot(state.amplitudes, _apply_pauli_string(state, letters))
    if abs(value.imag) > 1e-12:
        raise ValueError(
            f"expectation of {letters!r} is not real ({value}); operator not Hermitian?"
        )
    return float(value.real)


@dataclass(frozen=True)
class ShotHistogram:
    """Counts over measured bit strings from one experiment.

    Only observed outcomes are stored; ``counts`` keys are bit strings over
    ``measured_qubits`` in listed order.
    """

    measured_qubits: tuple[int, ...]
    counts: Mapping[str, int]
    total_shots: int

    def __post_init__(self):
        object.__setattr__(
            self, "measured_qubits", tuple(int(q) for q in self.measured_qubits)
        )
        object.__setattr__(
            self, "counts", {str(b): int(c) for b, c in dict(self.counts).items()}
        )
        width = len(self.measured_qubits)
        for b, c in self.counts.items():
            if len(b) != width or set(b) - {"0", "1"}:
                raise ValueError(f"bad outcome key {b!r} for {width} measured qubits")
            if c < 0:
                raise ValueError(f"negative count for outcome {b!r}")
        if sum(self.counts.values()) != self.total_shots:
            raise ValueError(
                f"counts sum to {sum(self.counts.values())}, expected {self.total_shots}"
            )

    def frequencies(self) -> dict[str, float]:
        return {b: c / self.total_shots for b, c in self.counts.items()}

    def frequency_vector(self) -> np.ndarray:
        """Dense frequency vector over all 2^k outcomes in index order."""
        width = len(self.measured_qubits)
        vec = np.zeros(2**width)
        for b, c in self.counts.items():
            vec[int(b, 2)] = c / self.total_shots
        return vec


def histogram_from_vector(
    measured_qubits: tuple[int, ...], counts_vector: np.ndarray, total_shots: int
) -> ShotHistogram:
    width = len(measured_qubits)
    nonzero = np.nonzero(counts_vector)[0]
    counts = {bitstring(int(i), width): int(counts_vector[i]) for i in nonzero}
    return ShotHistogram(measured_qubits, counts, total_shots)


def sample_shots(
    state: StateVector,
    measured_qubits: Iterable[int],
    shots: int,
    rng: int | np.random.Generator,
) -> ShotHistogram:
    """Aggregate ``shots`` i.i.d. Born-rule draws into a histogram.

    ``rng`` is an integer seed or a Generator; identical seeds give
    bit-identical histograms.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    measured = tuple(int(q) for q in measured_qubits)
    probs = probability_vector(state, measured)
    gen = np.random.default_rng(rng)
    counts = gen.multinomial(shots, _normalized(probs))
    return histogram_from_vector(measured, counts, shots)


def _normalized(probs: np.ndarray) -> np.ndarray:
    """Clip float dust below zero and renormalize for multinomial sampling."""
    clipped = np.clip(probs, 0.0, None)
    return clipped / clipped.sum()
