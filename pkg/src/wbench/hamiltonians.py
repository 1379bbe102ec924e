"""Pauli-string Hamiltonians of spinless Fermi-Hubbard rings and the
benchmark circuits: W-state preparation and per-string premeasurement
rotations.

All energies are in units of the hopping amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .statevector import (
    Circuit,
    Gate,
    cnot,
    controlled_h,
    hadamard,
    pauli_x,
    rot_y,
    s_dagger,
)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliTerm:
    """A weighted Pauli string, e.g. coefficient -0.5 with letters "YZY"."""

    coefficient: float
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "letters", str(self.letters).upper())
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if not self.support():
            raise ValueError(f"Pauli term {self.letters!r} has empty support")

    def support(self) -> tuple[int, ...]:
        """1-based indices of the non-identity letters."""
        return tuple(j for j, letter in enumerate(self.letters, 1) if letter != "I")

    def label(self) -> str:
        """Subscripted display form, e.g. "Y1Z2Y3" for letters "YZY"."""
        return "".join(f"{l}{j}" for j, l in enumerate(self.letters, 1) if l != "I")


@dataclass(frozen=True)
class PauliHamiltonian:
    """A real-weighted sum of Pauli strings on a fixed register."""

    n_qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if len(term.letters) != self.n_qubits:
                raise ValueError(
                    f"term {term.letters!r} does not act on {self.n_qubits} qubits"
                )

    def coefficient_of(self, letters: str) -> float:
        for term in self.terms:
            if term.letters == letters:
                return term.coefficient
        raise KeyError(f"no term with letters {letters!r}")


def pauli_string_matrix(letters: str) -> np.ndarray:
    """Dense matrix of a bare Pauli string (no coefficient)."""
    matrix = PAULI_MATRICES[letters[0]]
    for letter in letters[1:]:
        matrix = np.kron(matrix, PAULI_MATRICES[letter])
    return matrix


def hamiltonian_matrix(hamiltonian: PauliHamiltonian) -> np.ndarray:
    """Dense 2^n x 2^n matrix of the coefficient-weighted string sum."""
    dim = 2**hamiltonian.n_qubits
    matrix = np.zeros((dim, dim), dtype=complex)
    for term in hamiltonian.terms:
        matrix += term.coefficient * pauli_string_matrix(term.letters)
    return matrix


def fermionic_triangle() -> PauliHamiltonian:
    """The 3-site spinless Fermi-Hubbard ring in qubit form.

    Six Pauli strings, each with coefficient -1/2; its ground state is the
    W state with energy -2.  Written out literally so that the general
    ring constructor can be cross-checked against it.
    """
    return PauliHamiltonian(
        3,
        tuple(
            PauliTerm(-0.5, letters)
            for letters in ("YZY", "XZX", "YYI", "XXI", "IYY", "IXX")
        ),
    )


def hubbard_ring(n_sites: int) -> PauliHamiltonian:
    """Spinless Fermi-Hubbard ring on ``n_sites`` after the Jordan-Wigner
    mapping: nearest-neighbour YY/XX pairs plus the two boundary strings
    that carry the Z-chain between the first and last site.  All
    coefficients are -1/2.
    """
    if n_sites < 3:
        raise ConfigurationError(f"ring needs at least 3 sites, got {n_sites}")
    terms = []
    chain = "Z" * (n_sites - 2)
    terms.append(PauliTerm(-0.5, "Y" + chain + "Y"))
    terms.append(PauliTerm(-0.5, "X" + chain + "X"))
    for j in range(n_sites - 1):
        prefix, suffix = "I" * j, "I" * (n_sites - j - 2)
        terms.append(PauliTerm(-0.5, prefix + "YY" + suffix))
        terms.append(PauliTerm(-0.5, prefix + "XX" + suffix))
    return PauliHamiltonian(n_sites, tuple(terms))


def w_state_circuit() -> Circuit:
    """Three-qubit circuit preparing (|001> + |010> + |100>)/sqrt(3).

    The opening y-rotation angle 2*arccos(1/sqrt(3)) puts amplitude
    1/sqrt(3) on |0>; the controlled gates then fan the remaining weight
    out over the one-excitation subspace.
    """
    alpha = 2.0 * math.acos(1.0 / math.sqrt(3.0))
    gates = (
        rot_y(1, alpha),
        controlled_h(1, 2),
        cnot(2, 3),
        cnot(1, 2),
        pauli_x(1),
    )
    return Circuit(3, gates, (1, 2, 3))


def premeasurement_circuit(term: PauliTerm | str) -> Circuit:
    """Rotation circuit mapping ``term``'s measurement onto Z-basis readout.

    Per qubit: letter Y appends S-dagger then Hadamard, letter X appends
    Hadamard, Z and I append nothing.  Only the support qubits are
    measured.
    """
    letters = getattr(term, "letters", term)
    gates: list[Gate] = []
    measured = []
    for j, letter in enumerate(letters, 1):
        if letter == "Y":
            gates.extend((s_dagger(j), hadamard(j)))
        elif letter == "X":
            gates.append(hadamard(j))
        elif letter not in ("Z", "I"):
            raise ValueError(f"invalid Pauli letter {letter!r} in {letters!r}")
        if letter != "I":
            measured.append(j)
    return Circuit(len(letters), tuple(gates), tuple(measured))


def experiment_circuit(prep: Circuit, term: PauliTerm | str) -> Circuit:
    """Preparation followed by ``term``'s premeasurement rotations; the
    measured qubits become the term's support."""
    rotation = premeasurement_circuit(term)
    if rotation.n_qubits != prep.n_qubits:
        raise ValueError(
            f"term on {rotation.n_qubits} qubits does not match "
            f"{prep.n_qubits}-qubit preparation"
        )
    return Circuit(
        prep.n_qubits, prep.gates + rotation.gates, rotation.measured_qubits
    )
