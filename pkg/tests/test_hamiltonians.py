import numpy as np
import pytest

from wbench.errors import ConfigurationError
from wbench.hamiltonians import (
    PauliHamiltonian,
    PauliTerm,
    experiment_circuit,
    fermionic_triangle,
    hamiltonian_matrix,
    hubbard_ring,
    pauli_string_matrix,
    premeasurement_circuit,
    w_state_circuit,
)
from wbench.statevector import (
    StateVector,
    exact_expectation,
    exact_probabilities,
    fidelity,
    new_zero_state,
    run_circuit,
)

# Exact outcome distributions of the rotated W state, keyed by Pauli
# string; the two-qubit entries are over the measured pair's outcomes.
EXACT_TWO_QUBIT = {"00": 5 / 12, "01": 1 / 12, "10": 1 / 12, "11": 5 / 12}
EXACT_THREE_QUBIT = {
    "000": 1 / 3,
    "001": 0.0,
    "010": 1 / 12,
    "011": 1 / 12,
    "100": 0.0,
    "101": 1 / 3,
    "110": 1 / 12,
    "111": 1 / 12,
}


def test_fermionic_triangle_terms():
    ham = fermionic_triangle()
    assert ham.n_qubits == 3
    assert len(ham.terms) == 6
    assert all(t.coefficient == -0.5 for t in ham.terms)
    assert {t.letters for t in ham.terms} == {"YZY", "XZX", "YYI", "XXI", "IYY", "IXX"}


def test_triangle_ground_state_energy(w_vector):
    w = StateVector(3, w_vector)
    assert exact_expectation(w, fermionic_triangle()) == pytest.approx(-2.0, abs=1e-12)


def test_triangle_minimum_eigenvalue_by_dense_solve():
    eigenvalues = np.linalg.eigvalsh(hamiltonian_matrix(fermionic_triangle()))
    assert eigenvalues.min() == pytest.approx(-2.0, abs=1e-10)


def test_ring_three_sites_matches_triangle_exactly():
    triangle = fermionic_triangle()
    ring = hubbard_ring(3)
    assert {(t.coefficient, t.letters) for t in ring.terms} == {
        (t.coefficient, t.letters) for t in triangle.terms
    }
    np.testing.assert_array_equal(
        hamiltonian_matrix(ring), hamiltonian_matrix(triangle)
    )


def test_ring_four_sites_expanded_by_hand():
    ham = hubbard_ring(4)
    expected = {
        "YZZY", "XZZX",  # boundary strings carry the Z chain
        "YYII", "XXII", "IYYI", "IXXI", "IIYY", "IIXX",
    }
    assert {t.letters for t in ham.terms} == expected
    assert all(t.coefficient == -0.5 for t in ham.terms)


def test_ring_rejects_fewer_than_three_sites():
    with pytest.raises(ConfigurationError):
        hubbard_ring(2)


@pytest.mark.parametrize("n", range(3, 9))
def test_ring_term_count_is_two_n(n):
    assert len(hubbard_ring(n).terms) == 2 * n


def test_pauli_term_validation():
    with pytest.raises(ValueError):
        PauliTerm(1.0, "IAI")
    with pytest.raises(ValueError):
        PauliTerm(1.0, "III")  # empty support
    with pytest.raises(ValueError):
        PauliHamiltonian(3, (PauliTerm(1.0, "XX"),))  # wrong length
    assert PauliTerm(-0.5, "YZY").support() == (1, 2, 3)
    assert PauliTerm(-0.5, "YIY").support() == (1, 3)
    assert PauliTerm(-0.5, "YZY").label() == "Y1Z2Y3"


def test_w_circuit_probabilities(w_vector):
    state = run_circuit(w_state_circuit())
    probs = exact_probabilities(state, (1, 2, 3))
    for bits in ("001", "010", "100"):
        assert probs[bits] == pytest.approx(1 / 3, abs=1e-12)
    assert fidelity(state, StateVector(3, w_vector)) == pytest.approx(1.0, abs=1e-12)


def test_w_circuit_amplitudes_equal_after_phase_alignment():
    amps = run_circuit(w_state_circuit()).amplitudes
    support = [amps[0b001], amps[0b010], amps[0b100]]
    aligned = np.array(support) / (support[0] / abs(support[0]))
    np.testing.assert_allclose(aligned, [1 / np.sqrt(3)] * 3, atol=1e-12)


def test_w_circuit_orthogonal_to_zero_state():
    assert fidelity(run_circuit(w_state_circuit()), new_zero_state(3)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_premeasurement_gate_sequences():
    circuit = premeasurement_circuit(PauliTerm(-0.5, "IYY"))
    assert [(g.kind, g.qubits) for g in circuit.gates] == [
        ("sdg", (2,)),
        ("h", (2,)),
        ("sdg", (3,)),
        ("h", (3,)),
    ]
    assert circuit.measured_qubits == (2, 3)

    circuit = premeasurement_circuit("ZZZ")
    assert circuit.gates == ()
    assert circuit.measured_qubits == (1, 2, 3)

    circuit = premeasurement_circuit("XZX")
    assert [(g.kind, g.qubits) for g in circuit.gates] == [("h", (1,)), ("h", (3,))]
    assert circuit.measured_qubits == (1, 2, 3)


@pytest.mark.parametrize("letters", ["YZY", "XZX", "YYI", "XXI", "IYY", "IXX"])
def test_rotated_probabilities_match_exact_table(letters):
    term = PauliTerm(-0.5, letters)
    state = run_circuit(experiment_circuit(w_state_circuit(), term))
    probs = exact_probabilities(state, term.support())
    expected = EXACT_THREE_QUBIT if len(term.support()) == 3 else EXACT_TWO_QUBIT
    for bits, p in expected.items():
        assert probs[bits] == pytest.approx(p, abs=1e-12), (letters, bits)


@pytest.mark.parametrize("letters", ["YZY", "XZX", "YYI", "XXI", "IYY", "IXX"])
def test_premeasurement_parity_reproduces_expectation(letters):
    # Rotate, read Z-basis probabilities, apply parity signs: must equal
    # the direct analytic expectation for every Hamiltonian string.
    term = PauliTerm(-0.5, letters)
    w = run_circuit(w_state_circuit())
    rotated = run_circuit(experiment_circuit(w_state_circuit(), term))
    probs = exact_probabilities(rotated, term.support())
    signed = sum(
        ((-1) ** bits.count("1")) * p for bits, p in probs.items()
    )
    assert signed == pytest.approx(exact_expectation(w, letters), abs=1e-12)


def test_experiment_circuit_dimension_mismatch():
    with pytest.raises(ValueError):
        experiment_circuit(w_state_circuit(), PauliTerm(1.0, "XXXX"))


def test_string_matrix_oracle_agreement():
    # kron assembly vs the statevector-side application must agree.
    rng = np.random.default_rng(5)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    state = StateVector(3, amps)
    for letters in ("YZY", "IXX", "ZIZ"):
        dense = np.vdot(amps, pauli_string_matrix(letters) @ amps).real
        assert exact_expectation(state, letters) == pytest.approx(dense, abs=1e-12)
