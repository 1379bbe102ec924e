import numpy as np
import pytest

from wbench.backends import EmulatedBackend, IdealBackend
from wbench.errors import BackendError, ConfigurationError
from wbench.hamiltonians import PauliTerm, fermionic_triangle, w_state_circuit
from wbench.harness import (
    Packet,
    Realization,
    TimeSeries,
    expectation_from_histogram,
    run_experiment,
    run_job,
    run_realization,
)
from wbench.noise import GateNoise, ReadoutNoise, TemporalScenario
from wbench.statevector import (
    Circuit,
    ShotHistogram,
    probability_vector,
    run_circuit,
)

HAM = fermionic_triangle()
PREP = w_state_circuit()


class ExactFrequencyBackend:
    """Returns counts exactly proportional to the analytic distribution
    (12 shots resolve the twelfths), emulating infinite statistics."""

    n_qubits = 3
    supports_time = True

    def execute(self, circuit, shots, time=0.0, *, stream=None, packet_index=0):
        probs = probability_vector(run_circuit(circuit), circuit.measured_qubits)
        counts = np.round(probs * shots).astype(int)
        assert counts.sum() == shots, "shots must resolve the exact probabilities"
        from wbench.statevector import histogram_from_vector

        return histogram_from_vector(circuit.measured_qubits, counts, shots)

    def device_snapshot(self, time=0.0):
        return IdealBackend(3).device_snapshot(time)


class CountingBackend:
    def __init__(self, inner):
        self.inner = inner
        self.n_qubits = inner.n_qubits
        self.calls = 0
        self.shot_total = 0

    def execute(self, circuit, shots, time=0.0, **kwargs):
        self.calls += 1
        self.shot_total += shots
        return self.inner.execute(circuit, shots, time, **kwargs)

    def device_snapshot(self, time=0.0):
        return self.inner.device_snapshot(time)


class FlakyBackend(CountingBackend):
    """Raises on one specific execute call."""

    def __init__(self, inner, fail_at):
        super().__init__(inner)
        self.fail_at = fail_at

    def execute(self, circuit, shots, time=0.0, **kwargs):
        if self.calls == self.fail_at:
            self.calls += 1
            raise BackendError("injected failure")
        return super().execute(circuit, shots, time, **kwargs)


def test_expectation_from_histogram_even_parity():
    hist = ShotHistogram((1, 2), {"00": 512, "11": 512}, 1024)
    assert expectation_from_histogram(hist) == 1.0


def test_expectation_sign_rule():
    hist = ShotHistogram((1, 2, 3), {"000": 2, "001": 1, "011": 1}, 4)
    # +2/4 - 1/4 + 1/4
    assert expectation_from_histogram(hist) == pytest.approx(0.5)


def test_run_experiment_z_term_on_zero_state():
    backend = IdealBackend(seed=0)
    prep = Circuit(3, (), (1, 2, 3))
    for shots in (1, 7, 1024):
        value, hist = run_experiment(backend, PauliTerm(1.0, "ZII"), prep, shots)
        assert value == 1.0
        assert hist.counts == {"0": shots}


def test_run_experiment_yy_converges():
    backend = IdealBackend(seed=1)
    term = next(t for t in HAM.terms if t.letters == "IYY")
    value, _ = run_experiment(
        backend, term, PREP, shots=10**6, stream=np.random.default_rng(12)
    )
    assert value == pytest.approx(2 / 3, abs=0.005)


def test_run_realization_exact_backend_gives_minus_two():
    realization = run_realization(ExactFrequencyBackend(), HAM, PREP, shots=12)
    assert realization.energy == pytest.approx(-2.0, abs=1e-12)
    assert set(realization.per_term_expectations) == {t.letters for t in HAM.terms}


def test_run_realization_ideal_band():
    backend = IdealBackend(seed=3)
    energies = [
        run_realization(
            backend, HAM, PREP, 1024, stream=np.random.SeedSequence(entropy=3, spawn_key=(i,))
        ).energy
        for i in range(60)
    ]
    mean = np.mean(energies)
    assert -2.1 < min(energies) and max(energies) < -1.9
    assert mean == pytest.approx(-2.0, abs=0.02)


def test_run_realization_scrambled_readout_gives_zero():
    scenario = TemporalScenario(readout=ReadoutNoise((0.5,) * 3))
    backend = EmulatedBackend(scenario, seed=4)
    realization = run_realization(
        backend, HAM, PREP, 4096, stream=np.random.SeedSequence(9)
    )
    assert realization.energy == pytest.approx(0.0, abs=0.1)


def test_energy_decomposition_invariant():
    backend = IdealBackend(seed=5)
    realization = run_realization(backend, HAM, PREP, 256, stream=np.random.SeedSequence(1))
    recomputed = sum(
        t.coefficient * realization.per_term_expectations[t.letters] for t in HAM.terms
    )
    assert realization.energy == pytest.approx(recomputed, abs=1e-12)


def test_shot_budget_is_terms_times_shots():
    backend = CountingBackend(IdealBackend(seed=6))
    run_realization(backend, HAM, PREP, 128, stream=np.random.SeedSequence(2))
    assert backend.calls == len(HAM.terms)
    assert backend.shot_total == len(HAM.terms) * 128


def test_histograms_stored_per_term():
    realization = run_realization(
        IdealBackend(seed=7), HAM, PREP, 64, stream=np.random.SeedSequence(3)
    )
    assert set(realization.histograms) == {t.letters for t in HAM.terms}
    assert all(h.total_shots == 64 for h in realization.histograms.values())


def test_run_job_produces_requested_volume():
    backend = IdealBackend(seed=8)
    series = run_job(
        backend,
        triplets=[(11, 14, 13)],
        packets_per_triplet=31,
        shots=16,
        packet_size=50,
        seed=8,
        job_id="volume",
    )
    assert len(series) == 1
    assert len(series[0].packets) == 31
    assert sum(len(p.realizations) for p in series[0].packets) == 1550


def test_run_job_rotation_interleaves_timestamps():
    backend = IdealBackend(seed=9)
    pair = run_job(
        backend,
        triplets=[(1, 2, 3), (4, 5, 6)],
        packets_per_triplet=10,
        shots=8,
        packet_size=2,
        rotation=True,
        seed=9,
    )
    tagged = sorted(
        [(p.packet_timestamp, 0) for p in pair[0].packets]
        + [(p.packet_timestamp, 1) for p in pair[1].packets]
    )
    order = [tag for _, tag in tagged]
    assert order == [0, 1] * 10  # strict interleave
    for series in pair:
        times = series.packet_times()
        assert np.all(np.diff(times) > 0)


def test_run_job_delay_schedule_creates_gap():
    scenario = TemporalScenario(readout=ReadoutNoise((0.0,) * 3), delays={0: 60.0})
    backend = EmulatedBackend(scenario, seed=10)
    series = run_job(
        backend,
        triplets=[(1, 2, 3)],
        packets_per_triplet=3,
        shots=8,
        packet_size=2,
        packet_duration=14.5,
        seed=10,
        scenario=scenario,
    )[0]
    gaps = np.diff(series.packet_times())
    assert gaps[0] >= 60.0
    assert gaps[1] == pytest.approx(14.5)


def test_run_job_seed_determinism():
    def go():
        backend = IdealBackend(seed=11)
        return run_job(
            backend,
            triplets=[(1, 2, 3)],
            packets_per_triplet=2,
            shots=64,
            packet_size=5,
            calibration="dynamic",
            seed=11,
            job_id="det",
        )[0]

    a, b = go(), go()
    assert a == b  # frozen dataclasses compare by value


def test_run_job_discards_failed_packet_and_continues():
    inner = IdealBackend(seed=12)
    # Fail inside the second packet (after 5 realizations * 6 experiments
    # of packet one, plus a bit), so packet 2 of 3 is discarded.
    backend = FlakyBackend(inner, fail_at=5 * 6 + 2)
    series = run_job(
        backend,
        triplets=[(1, 2, 3)],
        packets_per_triplet=3,
        shots=8,
        packet_size=5,
        seed=12,
    )[0]
    assert len(series.packets) == 2
    times = series.packet_times()
    assert np.all(np.diff(times) > 0)


def test_run_job_static_calibration_stored_on_first_packet():
    scenario = TemporalScenario(readout=ReadoutNoise((0.01,) * 3))
    backend = EmulatedBackend(scenario, seed=13)
    series = run_job(
        backend,
        triplets=[(1, 2, 3)],
        packets_per_triplet=3,
        shots=32,
        packet_size=2,
        calibration="static",
        seed=13,
        scenario=scenario,
    )[0]
    assert series.packets[0].calibration is not None
    assert all(p.calibration is None for p in series.packets[1:])


def test_run_job_dynamic_calibration_on_every_packet():
    scenario = TemporalScenario(readout=ReadoutNoise((0.01,) * 3))
    backend = EmulatedBackend(scenario, seed=14)
    series = run_job(
        backend,
        triplets=[(1, 2, 3)],
        packets_per_triplet=3,
        shots=32,
        packet_size=2,
        calibration="dynamic",
        seed=14,
        scenario=scenario,
    )[0]
    assert all(p.calibration is not None for p in series.packets)
    # Calibration circuits are charged against the clock.
    no_cal = run_job(
        EmulatedBackend(scenario, seed=14),
        triplets=[(1, 2, 3)],
        packets_per_triplet=3,
        shots=32,
        packet_size=2,
        calibration="none",
        seed=14,
        scenario=scenario,
    )[0]
    assert series.packets[-1].packet_timestamp > no_cal.packets[-1].packet_timestamp


def test_run_job_validation():
    backend = IdealBackend(seed=0)
    with pytest.raises(ConfigurationError):
        run_job(backend, triplets=[], packets_per_triplet=1)
    with pytest.raises(ConfigurationError):
        run_job(backend, triplets=[(1, 2, 3)], packets_per_triplet=0)
    with pytest.raises(ConfigurationError):
        run_job(backend, triplets=[(1, 2, 3)], packets_per_triplet=1, calibration="x")


def test_timeseries_requires_increasing_timestamps():
    r = Realization(-2.0, {"YZY": 0.6}, 0.0)
    snap = IdealBackend(3).device_snapshot(0.0)
    p0 = Packet((r,), snap, 5.0)
    p1 = Packet((r,), snap, 5.0)
    with pytest.raises(ValueError):
        TimeSeries((1, 2, 3), (p0, p1), "bad")


def test_experiment_context_attached_to_backend_error():
    class AlwaysFails:
        n_qubits = 3

        def execute(self, *a, **k):
            raise BackendError("device offline")

        def device_snapshot(self, time=0.0):
            raise AssertionError("unused")

    with pytest.raises(BackendError, match="Y1Z2Y3.*device offline"):
        run_experiment(AlwaysFails(), PauliTerm(-0.5, "YZY"), PREP, shots=4)
