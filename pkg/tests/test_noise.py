import logging

import numpy as np
import pytest

from wbench.errors import ConfigurationError
from wbench.noise import (
    EmulatorCaches,
    GateNoise,
    Oscillation,
    ReadoutNoise,
    TemporalScenario,
    effective_noise_at,
    noisy_execute,
    snapshot,
    true_confusion_matrix,
)
from wbench.statevector import (
    Circuit,
    hadamard,
    pauli_x,
    run_circuit,
    sample_shots,
)
from wbench.hamiltonians import experiment_circuit, fermionic_triangle, w_state_circuit


def plain(readout=0.0, one_q=0.0, two_q=0.0, **kwargs):
    return TemporalScenario(
        readout=ReadoutNoise((readout,) * 3),
        gate=GateNoise(one_q, two_q),
        **kwargs,
    )


def test_effective_noise_unmodulated():
    scenario = plain(readout=0.02, two_q=0.01)
    for t in (0.0, 50.0, 1e4):
        readout, gate = effective_noise_at(scenario, t)
        assert readout.per_qubit_flip == (0.02,) * 3
        assert gate.two_qubit_error == 0.01


def test_effective_noise_sine_peak():
    scenario = plain(
        readout=0.02,
        oscillation=Oscillation(0.5, 120.0, 0.0, applies_to="readout"),
    )
    readout, gate = effective_noise_at(scenario, 30.0)  # sin(pi/2) = 1
    assert readout.per_qubit_flip[0] == pytest.approx(0.03, abs=1e-12)
    assert gate.one_qubit_error == 0.0


def test_effective_noise_channel_selection():
    scenario = plain(
        readout=0.02,
        two_q=0.01,
        oscillation=Oscillation(0.5, 120.0, 0.0, applies_to="gate"),
    )
    readout, gate = effective_noise_at(scenario, 30.0)
    assert readout.per_qubit_flip[0] == pytest.approx(0.02)
    assert gate.two_qubit_error == pytest.approx(0.015)


def test_effective_noise_outlier_packets():
    scenario = plain(readout=0.01, outlier_flips={4: 0.15})
    readout, _ = effective_noise_at(scenario, 10.0, packet_index=4)
    assert readout.per_qubit_flip[0] == pytest.approx(0.16)
    readout, _ = effective_noise_at(scenario, 10.0, packet_index=5)
    assert readout.per_qubit_flip[0] == pytest.approx(0.01)


def test_effective_noise_clamps_with_warning(caplog):
    scenario = plain(
        readout=0.8, oscillation=Oscillation(0.9, 100.0, 0.0, applies_to="readout")
    )
    with caplog.at_level(logging.WARNING, logger="wbench.noise"):
        readout, _ = effective_noise_at(scenario, 25.0)
    assert readout.per_qubit_flip[0] == 1.0
    assert any("clamping" in r.message for r in caplog.records)


def test_confusion_matrix_zero_flip_is_identity():
    cal = true_confusion_matrix(ReadoutNoise((0.0, 0.0, 0.0)))
    np.testing.assert_array_equal(cal.matrix, np.eye(8))


def test_confusion_matrix_uniform_p_brute_force():
    # Oracle: entry (i, j) = p^h (1-p)^(3-h) with h the Hamming distance.
    p = 0.07
    cal = true_confusion_matrix(ReadoutNoise((p,) * 3))
    for i in range(8):
        for j in range(8):
            h = bin(i ^ j).count("1")
            assert cal.matrix[i, j] == pytest.approx(
                p**h * (1 - p) ** (3 - h), abs=1e-12
            )
    np.testing.assert_allclose(cal.matrix.sum(axis=0), np.ones(8), atol=1e-12)


def test_confusion_matrix_average_diagonal():
    cal = true_confusion_matrix(ReadoutNoise((0.011,) * 3))
    assert cal.diagonal_mean() == pytest.approx((1 - 0.011) ** 3, abs=1e-12)
    assert cal.diagonal_mean() == pytest.approx(1 - 3 * 0.011, abs=6e-4)


def test_confusion_matrix_qubit_count_mismatch():
    with pytest.raises(ConfigurationError):
        true_confusion_matrix(ReadoutNoise((0.01,) * 2), n_qubits=3)


def test_snapshot_constant_and_blind_to_modulation():
    scenario = plain(
        readout=0.011,
        two_q=0.01,
        oscillation=Oscillation(0.9, 60.0, 0.0, applies_to="both"),
        outlier_flips={0: 0.5},
    )
    snaps = [snapshot(scenario, t) for t in (0.0, 15.0, 200.0)]
    assert all(s.reported_readout_error == (0.011,) * 3 for s in snaps)
    assert all(s.reported_two_qubit_error == 0.01 for s in snaps)
    assert [s.timestamp for s in snaps] == [0.0, 15.0, 200.0]


def test_snapshot_reported_override():
    scenario = plain(readout=0.0125, reported_readout=(0.011,) * 3)
    snap = snapshot(scenario, 3.0)
    assert snap.reported_readout_error == (0.011,) * 3
    assert all(
        r < t
        for r, t in zip(snap.reported_readout_error, scenario.readout.per_qubit_flip)
    )


def test_snapshot_zero_baseline():
    assert snapshot(plain(), 0.0).reported_readout_error == (0.0,) * 3


def test_zero_noise_matches_ideal_sampler_bit_exactly():
    circuit = experiment_circuit(w_state_circuit(), fermionic_triangle().terms[0])
    state = run_circuit(circuit)
    seed = 997
    ideal = sample_shots(state, circuit.measured_qubits, 4096, seed)
    noisy = noisy_execute(circuit, 4096, 0.0, plain(), np.random.default_rng(seed))
    assert noisy.counts == ideal.counts


def test_half_flip_scrambles_everything():
    circuit = experiment_circuit(w_state_circuit(), fermionic_triangle().terms[2])
    shots = 200_000
    hist = noisy_execute(circuit, shots, 0.0, plain(readout=0.5), np.random.default_rng(3))
    freqs = hist.frequency_vector()
    np.testing.assert_allclose(freqs, 0.25, atol=5 * np.sqrt(0.25 * 0.75 / shots))
    parity = sum(((-1) ** b.count("1")) * c for b, c in hist.counts.items()) / shots
    assert abs(parity) < 5 / np.sqrt(shots)


@pytest.mark.parametrize("term_index", [0, 2])
def test_readout_only_matches_confusion_pushforward(term_index):
    # Gate noise off: the sampled histogram must match the ideal
    # distribution pushed through the analytic confusion matrix.
    term = fermionic_triangle().terms[term_index]
    circuit = experiment_circuit(w_state_circuit(), term)
    state = run_circuit(circuit)
    p = 0.03
    shots = 400_000
    hist = noisy_execute(circuit, shots, 0.0, plain(readout=p), np.random.default_rng(17))
    from wbench.statevector import probability_vector

    ideal = probability_vector(state, circuit.measured_qubits)
    k = len(circuit.measured_qubits)
    pushed = true_confusion_matrix(ReadoutNoise((p,) * k)).matrix @ ideal
    sigma = np.sqrt(pushed * (1 - pushed) / shots)
    assert np.all(np.abs(hist.frequency_vector() - pushed) <= 5 * sigma)


def test_depolarizing_decay_of_z_expectation():
    # One X gate with error eps on |0>: a random X/Y/Z insertion maps
    # <Z> -> -<Z>, -<Z>, +<Z>, so the channel factor is 1 - 4*eps/3.
    eps = 0.3
    circuit = Circuit(1, (pauli_x(1),), (1,))
    shots = 300_000
    scenario = TemporalScenario(readout=ReadoutNoise((0.0,)), gate=GateNoise(eps, 0.0))
    hist = noisy_execute(circuit, shots, 0.0, scenario, np.random.default_rng(23))
    z = sum(((-1) ** b.count("1")) * c for b, c in hist.counts.items()) / shots
    expected = -(1 - 4 * eps / 3)
    assert z == pytest.approx(expected, abs=5 / np.sqrt(shots))


def test_two_qubit_depolarizing_against_channel_arithmetic():
    # H then CX makes a Bell pair; a two-qubit depolarizing fault after
    # the CX leaves <ZZ> = 1 with probability 3/15 (II..ZZ-type survivors
    # each give +-1): brute-force the 15 insertions to get the factor.
    import itertools

    from wbench.statevector import cnot

    eps = 0.25
    circuit = Circuit(2, (hadamard(1), cnot(1, 2)), (1, 2))
    paulis = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    zz = np.kron(paulis["Z"], paulis["Z"])
    survivors = []
    for a, b in itertools.product("IXYZ", repeat=2):
        if (a, b) == ("I", "I"):
            continue
        state = np.kron(paulis[a], paulis[b]) @ bell
        survivors.append(np.vdot(state, zz @ state).real)
    expected = (1 - eps) * 1.0 + eps * np.mean(survivors)

    scenario = TemporalScenario(readout=ReadoutNoise((0.0, 0.0)), gate=GateNoise(0.0, eps))
    shots = 300_000
    hist = noisy_execute(circuit, shots, 0.0, scenario, np.random.default_rng(29))
    zz_sampled = sum(((-1) ** b.count("1")) * c for b, c in hist.counts.items()) / shots
    assert zz_sampled == pytest.approx(expected, abs=5 / np.sqrt(shots))


def test_constant_fault_returns_first_histogram_verbatim():
    scenario = plain(readout=0.02, two_q=0.01, constant_fault=True)
    caches = EmulatorCaches()
    circuit = experiment_circuit(w_state_circuit(), fermionic_triangle().terms[0])
    first = noisy_execute(circuit, 512, 0.0, scenario, np.random.default_rng(1), caches=caches)
    for time, seed in [(10.0, 2), (500.0, 3)]:
        again = noisy_execute(
            circuit, 512, time, scenario, np.random.default_rng(seed), caches=caches
        )
        assert again is first
    # A different circuit gets its own cached histogram.
    other_circuit = experiment_circuit(w_state_circuit(), fermionic_triangle().terms[1])
    other = noisy_execute(
        other_circuit, 512, 0.0, scenario, np.random.default_rng(4), caches=caches
    )
    assert other.counts != first.counts or other is not first


def test_noisy_execute_deterministic_per_seed():
    scenario = plain(readout=0.0125, one_q=2e-4, two_q=0.009)
    circuit = experiment_circuit(w_state_circuit(), fermionic_triangle().terms[0])
    a = noisy_execute(circuit, 1024, 7.0, scenario, np.random.default_rng(55))
    b = noisy_execute(circuit, 1024, 7.0, scenario, np.random.default_rng(55))
    assert a.counts == b.counts


def test_scenario_validation():
    with pytest.raises(ConfigurationError):
        ReadoutNoise((1.5,))
    with pytest.raises(ConfigurationError):
        GateNoise(-0.1, 0.0)
    with pytest.raises(ConfigurationError):
        Oscillation(0.5, 0.0)
    with pytest.raises(ConfigurationError):
        Oscillation(0.5, 10.0, applies_to="everything")
