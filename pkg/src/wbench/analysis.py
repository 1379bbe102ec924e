"""Statistics over realizations and time series: energy histograms,
sinusoidal fits of packet means, outlier and constant-output detectors,
and reported-error correlation rows for plotting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import lombscargle

from .errors import FitError
from .hamiltonians import experiment_circuit, w_state_circuit
from .harness import TimeSeries
from .statevector import Circuit, exact_expectation, exact_probabilities, run_circuit


@dataclass(frozen=True)
class EnergyHistogram:
    """Binned energies plus unbinned summary statistics."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    mean: float
    std: float
    peak_bin: int

    @property
    def peak_energy(self) -> float:
        """Center of the most populated bin."""
        return float((self.bin_edges[self.peak_bin] + self.bin_edges[self.peak_bin + 1]) / 2)


def histogram(energies: Iterable[float], bin_width: float = 0.01) -> EnergyHistogram:
    """Bin energies at fixed width; mean/std are computed on the raw
    samples so binning never affects the summary statistics."""
    values = np.asarray(list(energies), dtype=float)
    if values.size == 0:
        raise ValueError("at least one energy sample is required")
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    lo = math.floor(values.min() / bin_width) * bin_width
    n_bins = max(1, math.ceil((values.max() - lo) / bin_width + 1e-9))
    edges = lo + bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return EnergyHistogram(
        bin_edges=edges,
        counts=counts,
        n_samples=int(values.size),
        mean=float(values.mean()),
        std=float(values.std()),
        peak_bin=int(np.argmax(counts)),
    )


@dataclass(frozen=True)
class FitResult:
    """Sinusoid parameters offset + amplitude*sin(2*pi*t/period + phase),
    with an optional linear slope term."""

    offset: float
    amplitude: float
    period_minutes: float
    phase_radians: float
    offset_err: float
    amplitude_err: float
    period_err: float
    phase_err: float
    residual_rms: float
    converged: bool
    slope: float | None = None
    slope_err: float | None = None


def _initial_period(times: np.ndarray, values: np.ndarray) -> float:
    """Dominant period of the linearly detrended series from a
    Lomb-Scargle scan (robust to the uneven sampling delays produce)."""
    detrended = values - np.polyval(np.polyfit(times, values, 1), times)
    span = times.max() - times.min()
    min_gap = np.diff(np.sort(times)).min()
    periods = np.geomspace(max(2.0 * min_gap, span / 100.0), 2.0 * span, 512)
    power = lombscargle(times, detrended, 2.0 * math.pi / periods)
    return float(periods[int(np.argmax(power))])


def fit_sinusoid(
    times: Sequence[float], values: Sequence[float], with_slope: bool = False
) -> FitResult:
    """Nonlinear least squares of packet means against a sinusoid.

    The period is seeded from the dominant spectral peak, with a
    log-spaced multi-start fallback; bounds keep period > 0 and
    amplitude >= 0, and the phase is wrapped to [0, 2*pi).  Raises
    FitError on constant input or if every start fails to converge.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d arrays of equal length")
    if t.size < 8:
        raise ValueError(f"need at least 8 points to fit, got {t.size}")
    if np.ptp(y) == 0.0:
        raise FitError("constant input: amplitude indistinguishable from zero")
    span = float(t.max() - t.min())
    period0 = _initial_period(t, y)

    def model(tt, offset, amplitude, period, phase, *rest):
        out = offset + amplitude * np.sin(2.0 * math.pi * tt / period + phase)
        return out + rest[0] * tt if rest else out

    amplitude0 = float(np.sqrt(2.0) * np.std(y))
    lower = [-np.inf, 0.0, 1e-9, -np.inf]
    upper = [np.inf, np.inf, 10.0 * span, np.inf]
    if with_slope:
        lower.append(-np.inf)
        upper.append(np.inf)

    def attempt(period_seed):
        p0 = [float(np.mean(y)), amplitude0, period_seed, 0.0]
        if with_slope:
            p0.append(0.0)
        return curve_fit(
            model, t, y, p0=p0, bounds=(lower, upper), maxfev=20000, full_output=False
        )

    seeds = [period0] + list(np.geomspace(span / 20.0, 2.0 * span, 5))
    best = None
    failures = []
    for seed in seeds:
        try:
            popt, pcov = attempt(seed)
        except (RuntimeError, ValueError) as exc:
            failures.append(f"T0={seed:.4g}: {exc}")
            continue
        rss = float(np.sum((model(t, *popt) - y) ** 2))
        if best is None or rss < best[2]:
            best = (popt, pcov, rss)
        if seed == period0:
            break  # spectral seed converged; no need for the fallbacks
    if best is None:
        raise FitError("sinusoid fit did not converge: " + "; ".join(failures))

    popt, pcov, rss = best
    errors = np.sqrt(np.diag(pcov))
    phase = float(popt[3]) % (2.0 * math.pi)
    return FitResult(
        offset=float(popt[0]),
        amplitude=float(popt[1]),
        period_minutes=float(popt[2]),
        phase_radians=phase,
        offset_err=float(errors[0]),
        amplitude_err=float(errors[1]),
        period_err=float(errors[2]),
        phase_err=float(errors[3]),
        residual_rms=float(np.sqrt(rss / t.size)),
        converged=bool(np.isfinite(errors).all() and popt[2] <= span),
        slope=float(popt[4]) if with_slope else None,
        slope_err=float(errors[4]) if with_slope else None,
    )


@dataclass(frozen=True)
class OutlierReport:
    """Packets whose mean energy sits implausibly high."""

    flagged: tuple[int, ...]
    zscores: tuple[float, ...]
    threshold: float


def detect_outliers(series: TimeSeries, k: float = 5.0) -> OutlierReport:
    """Flag packets whose mean exceeds the median of packet means by more
    than ``k`` scaled median absolute deviations (one-sided: only upward
    excursions count, since the ground state bounds energies from below).
    """
    means = series.packet_means()
    if means.size < 5:
        raise ValueError(f"need at least 5 packets, got {means.size}")
    median = float(np.median(means))
    mad = float(np.median(np.abs(means - median))) * 1.4826
    deviations = means - median
    if mad > 0:
        z = deviations / mad
    else:
        # Degenerate spread: anything off the median is infinitely far out.
        z = np.where(deviations == 0.0, 0.0, np.sign(deviations) * np.inf)
    flagged = tuple(int(i) for i in np.nonzero(z > k)[0])
    return OutlierReport(flagged, tuple(float(v) for v in z), float(k))


@dataclass(frozen=True)
class ConstantReport:
    """Result of the constant-output detector."""

    found: bool
    span: tuple[int, int] | None  # inclusive packet index range


def detect_constant(series: TimeSeries, min_run: int = 3) -> ConstantReport:
    """True iff some run of >= ``min_run`` packets repeats bit-identical
    realization lists (energies and per-term expectations; timestamps keep
    advancing even under the fault, so they are ignored).  Such spans must
    be excluded from statistical analysis."""
    if len(series.packets) < 2:
        raise ValueError(f"need at least 2 packets, got {len(series.packets)}")

    def signature(packet):
        return tuple(
            (r.energy, tuple(sorted(r.per_term_expectations.items())))
            for r in packet.realizations
        )

    signatures = [signature(p) for p in series.packets]
    start = 0
    for i in range(1, len(signatures) + 1):
        if i == len(signatures) or signatures[i] != signatures[start]:
            if i - start >= min_run:
                return ConstantReport(True, (start, i - 1))
            start = i
    return ConstantReport(False, None)


def propagated_readout_error(p: float, n_qubits: int, n_terms: int) -> float:
    """Rough propagated effect of per-qubit flip probability ``p`` on the
    energy: n_qubits * p per string, added in quadrature over terms."""
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if n_qubits < 1 or n_terms < 1:
        raise ValueError("n_qubits and n_terms must be >= 1")
    return n_qubits * p * math.sqrt(n_terms)


@dataclass(frozen=True)
class OutcomeColumn:
    """Per-string outcome statistics: observed frequencies (mean and std
    across all experiments of a series) next to the analytic values."""

    label: str
    letters: str
    support: tuple[int, ...]
    frequencies: dict[str, tuple[float, float]]  # embedded bit string -> (mean, std)
    exact: dict[str, float]
    expectation_mean: float
    expectation_std: float
    exact_expectation: float


@dataclass(frozen=True)
class OutcomeTable:
    bit_strings: tuple[str, ...]
    columns: tuple[OutcomeColumn, ...]
    energy_mean: float
    energy_std: float
    n_realizations: int


def _embed_bits(bits: str, support: tuple[int, ...], n_qubits: int) -> str:
    """Place measured bits at their register positions; unmeasured qubits
    display as '0'."""
    full = ["0"] * n_qubits
    for bit, qubit in zip(bits, support):
        full[qubit - 1] = bit
    return "".join(full)


def outcome_statistics(series: TimeSeries, prep: Circuit | None = None) -> OutcomeTable:
    """Per-outcome frequency table across a whole series.

    For every Hamiltonian string: the mean and standard deviation of each
    outcome's frequency over all stored experiment histograms, the exact
    simulated distribution of the prepared-and-rotated state, and the
    expectation-value statistics.  Columns are ordered smaller supports
    first.  The bottom line is the energy mean and std over realizations.
    """
    if series.hamiltonian is None:
        raise ValueError("series carries no Hamiltonian")
    prep = prep if prep is not None else w_state_circuit()
    n = series.hamiltonian.n_qubits
    state = run_circuit(prep)
    order = {term: i for i, term in enumerate(series.hamiltonian.terms)}
    terms = sorted(series.hamiltonian.terms, key=lambda t: (len(t.support()), order[t]))
    columns = []
    for term in terms:
        support = term.support()
        freq_samples: dict[str, list[float]] = {}
        expectations = []
        for packet in series.packets:
            for realization in packet.realizations:
                hist = (realization.histograms or {}).get(term.letters)
                if hist is None:
                    raise ValueError(f"missing stored histogram for term {term.label()}")
                freqs = hist.frequencies()
                for i in range(2 ** len(support)):
                    bits = format(i, f"0{len(support)}b")
                    freq_samples.setdefault(bits, []).append(freqs.get(bits, 0.0))
                expectations.append(realization.per_term_expectations[term.letters])
        rotated = run_circuit(experiment_circuit(prep, term))
        exact = exact_probabilities(rotated, support)
        columns.append(
            OutcomeColumn(
                label=term.label(),
                letters=term.letters,
                support=support,
                frequencies={
                    _embed_bits(bits, support, n): (
                        float(np.mean(samples)),
                        float(np.std(samples)),
                    )
                    for bits, samples in freq_samples.items()
                },
                exact={_embed_bits(b, support, n): v for b, v in exact.items()},
                expectation_mean=float(np.mean(expectations)),
                expectation_std=float(np.std(expectations)),
                exact_expectation=exact_expectation(state, term.letters),
            )
        )
    energies = series.energies()
    return OutcomeTable(
        bit_strings=tuple(format(i, f"0{n}b") for i in range(2**n)),
        columns=tuple(columns),
        energy_mean=float(energies.mean()),
        energy_std=float(energies.std()),
        n_realizations=int(energies.size),
    )


def gate_counts(circuit: Circuit) -> tuple[int, int]:
    """(one-qubit, two-qubit) gate counts of a circuit."""
    one = sum(1 for g in circuit.gates if len(g.qubits) == 1)
    return one, len(circuit.gates) - one


def error_correlation_table(
    series_list: Sequence[TimeSeries], prep: Circuit | None = None
) -> list[tuple[float, float, float]]:
    """One (total readout error, total gate error, energy) row per
    realization, using the errors reported by the device snapshots.

    Total readout error sums the reported per-qubit figures over the
    triplet; total gate error sums the reported per-gate figures over
    every gate of every experiment in one realization (preparation plus
    premeasurement rotations).
    """
    prep = prep if prep is not None else w_state_circuit()
    rows: list[tuple[float, float, float]] = []
    for series in series_list:
        if series.hamiltonian is None:
            raise ValueError(f"series {series.job_id!r} carries no Hamiltonian")
        one_qubit_gates = two_qubit_gates = 0
        for term in series.hamiltonian.terms:
            ones, twos = gate_counts(experiment_circuit(prep, term))
            one_qubit_gates += ones
            two_qubit_gates += twos
        for packet in series.packets:
            if packet.snapshot is None:
                raise ValueError("packet carries no device snapshot")
            snap = packet.snapshot
            readout_total = float(sum(snap.reported_readout_error))
            gate_total = (
                one_qubit_gates * snap.reported_one_qubit_error
                + two_qubit_gates * snap.reported_two_qubit_error
            )
            for realization in packet.realizations:
                rows.append((readout_total, float(gate_total), realization.energy))
    return rows
