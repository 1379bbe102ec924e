"""Detector tomography and measurement-error mitigation.

The calibration matrix holds, per column j, the outcome distribution
observed when computational basis state j is prepared.  Applying its
inverse to measured frequencies yields a quasi-distribution (possibly
negative entries) from which unbiased expectation values are formed.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import MitigationError
from .statevector import Circuit, ShotHistogram, bitstring, pauli_x

log = logging.getLogger(__name__)

CONDITION_BOUND = 1e6


@dataclass(frozen=True, eq=False)
class CalibrationMatrix:
    """Column-stochastic detector matrix over a 2^n outcome space."""

    n_qubits: int
    matrix: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, CalibrationMatrix):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(
            self.matrix, other.matrix
        )

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        dim = 2**self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match {self.n_qubits} qubits"
            )
        if m.min() < -1e-9 or m.max() > 1.0 + 1e-9:
            raise ValueError("calibration entries must lie in [0, 1]")
        colsums = m.sum(axis=0)
        if np.abs(colsums - 1.0).max() > 1e-6:
            raise ValueError(f"columns must sum to 1, worst sum {colsums}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def diagonal_mean(self) -> float:
        return float(np.mean(np.diag(self.matrix)))


@dataclass(frozen=True)
class QuasiDistribution:
    """Possibly-negative outcome weights produced by detector inversion."""

    values: Mapping[str, float]
    total: float

    def __post_init__(self):
        object.__setattr__(
            self, "values", {str(b): float(v) for b, v in dict(self.values).items()}
        )


def basis_state_circuit(n_qubits: int, index: int) -> Circuit:
    """Preparation circuit for computational basis state ``index``:
    an X gate on every qubit whose bit is 1; all qubits measured."""
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    gates = tuple(
        pauli_x(j)
        for j in range(1, n_qubits + 1)
        if (index >> (n_qubits - j)) & 1
    )
    return Circuit(n_qubits, gates, tuple(range(1, n_qubits + 1)))


def estimate_calibration_matrix(
    backend,
    n_qubits: int,
    shots_per_state: int = 1024,
    time: float = 0.0,
    stream=None,
) -> CalibrationMatrix:
    """Measure all 2^n basis states on ``backend`` and collect the outcome
    frequencies column by column.  The circuit count scales exponentially
    with the register size."""
    if shots_per_state < 1:
        raise ValueError(f"shots_per_state must be >= 1, got {shots_per_state}")
    dim = 2**n_qubits
    matrix = np.zeros((dim, dim))
    for j in range(dim):
        hist = backend.execute(
            basis_state_circuit(n_qubits, j), shots_per_state, time, stream=stream
        )
        matrix[:, j] = hist.frequency_vector()
    return CalibrationMatrix(n_qubits, matrix)


def marginalize_calibration(
    cal: CalibrationMatrix, qubits: Iterable[int]
) -> CalibrationMatrix:
    """Restrict a full-register calibration matrix to a qubit subset.

    Rows outside the subset are summed, columns are averaged over the
    preparations of the dropped qubits.  For a tensor-product detector
    model this is exact.
    """
    keep = tuple(int(q) for q in qubits)
    n = cal.n_qubits
    for q in keep:
        if not 1 <= q <= n:
            raise ValueError(f"qubit index {q} outside register 1..{n}")
    if len(set(keep)) != len(keep) or not keep:
        raise ValueError(f"qubit subset must be non-empty and unique, got {keep}")
    k = len(keep)
    tensor = cal.matrix.reshape((2,) * (2 * n))
    keep_axes = [q - 1 for q in keep]
    drop_rows = tuple(ax for ax in range(n) if ax not in keep_axes)
    drop_cols = tuple(n + ax for ax in range(n) if ax not in keep_axes)
    reduced = tensor.sum(axis=drop_rows + drop_cols) / 2 ** (n - k)
    kept_sorted = sorted(keep_axes)
    perm = [kept_sorted.index(ax) for ax in keep_axes]
    reduced = np.transpose(reduced, perm + [k + p for p in perm])
    return CalibrationMatrix(k, reduced.reshape(2**k, 2**k))


def mitigate_histogram(
    cal: CalibrationMatrix, hist: ShotHistogram
) -> QuasiDistribution:
    """Solve cal * x = measured frequencies; the result is returned
    unclipped, so entries may be negative while still summing to 1."""
    width = len(hist.measured_qubits)
    if cal.n_qubits != width:
        raise ValueError(
            f"calibration over {cal.n_qubits} qubits does not match histogram "
            f"over {width} measured qubits"
        )
    condition = float(np.linalg.cond(cal.matrix))
    if not np.isfinite(condition) or condition > CONDITION_BOUND:
        raise MitigationError(
            f"calibration matrix condition number {condition:.3g} exceeds "
            f"{CONDITION_BOUND:.0e}",
            condition=condition,
        )
    quasi = np.linalg.solve(cal.matrix, hist.frequency_vector())
    values = {bitstring(i, width): float(v) for i, v in enumerate(quasi)}
    return QuasiDistribution(values, float(quasi.sum()))


def _parity_sign(bits: str) -> int:
    return -1 if bits.count("1") % 2 else 1


def mitigated_expectation(
    cal: CalibrationMatrix, hist: ShotHistogram, sign=_parity_sign
) -> float:
    """Parity-signed sum over the mitigated quasi-distribution.

    A full-register calibration matrix is marginalized onto the
    histogram's measured qubits first.  Quasi-probabilities may push the
    result slightly outside [-1, 1].
    """
    if cal.n_qubits != len(hist.measured_qubits):
        cal = marginalize_calibration(cal, hist.measured_qubits)
    quasi = mitigate_histogram(cal, hist)
    return float(sum(sign(b) * v for b, v in quasi.values.items()))


def estimate_bitflip_p(cal: CalibrationMatrix) -> float:
    """Per-qubit bit-flip probability from the diagonal of the detector
    matrix: p = (1 - mean diagonal) / n, exact to first order in p."""
    return (1.0 - cal.diagonal_mean()) / cal.n_qubits


def mitigate_timeseries(
    series,
    mode: str,
    backend=None,
    calibration: CalibrationMatrix | None = None,
):
    """Recompute a time series' expectations and energies from stored
    histograms through detector inversion.

    ``static`` applies one calibration matrix (an explicit ``calibration``,
    the first stored packet calibration, or one estimated via ``backend``
    at the series start) to every packet.  ``dynamic`` applies each
    packet's own stored matrix, estimating missing ones via ``backend`` at
    the packet timestamp.  Returns a new series with ``mitigation_mode``
    updated.
    """
    if mode not in ("static", "dynamic"):
        raise ValueError(f"mode must be 'static' or 'dynamic', got {mode!r}")
    if series.hamiltonian is None:
        raise MitigationError("series carries no Hamiltonian; cannot recompute energies")
    if not series.packets:
        raise MitigationError("series has no packets")

    def estimated(time: float) -> CalibrationMatrix:
        if backend is None:
            raise MitigationError(
                "no stored calibration and no backend to re-estimate from"
            )
        return estimate_calibration_matrix(
            backend, series.hamiltonian.n_qubits, time=time
        )

    if mode == "static":
        static_cal = calibration
        if static_cal is None:
            stored = [p.calibration for p in series.packets if p.calibration is not None]
            static_cal = stored[0] if stored else estimated(series.packets[0].packet_timestamp)

    coefficients = {t.letters: t.coefficient for t in series.hamiltonian.terms}
    marginal_cache: dict[tuple[int, tuple[int, ...]], CalibrationMatrix] = {}

    def marginal_for(cal: CalibrationMatrix, measured: tuple[int, ...]) -> CalibrationMatrix:
        if cal.n_qubits == len(measured):
            return cal
        key = (id(cal), measured)
        if key not in marginal_cache:
            marginal_cache[key] = marginalize_calibration(cal, measured)
        return marginal_cache[key]

    new_packets = []
    for packet in series.packets:
        if mode == "static":
            cal = static_cal
        else:
            cal = packet.calibration or estimated(packet.packet_timestamp)
        new_realizations = []
        for realization in packet.realizations:
            if not realization.histograms:
                raise MitigationError(
                    f"realization at t={realization.timestamp} has no stored histograms"
                )
            expectations = {}
            for letters in realization.per_term_expectations:
                hist = realization.histograms.get(letters)
                if hist is None:
                    raise MitigationError(f"missing histogram for term {letters!r}")
                expectations[letters] = mitigated_expectation(
                    marginal_for(cal, hist.measured_qubits), hist
                )
            energy = sum(coefficients[l] * e for l, e in expectations.items())
            new_realizations.append(
                dataclasses.replace(
                    realization, energy=energy, per_term_expectations=expectations
                )
            )
        new_packets.append(
            dataclasses.replace(
                packet,
                realizations=tuple(new_realizations),
                calibration=cal if mode == "dynamic" else packet.calibration,
            )
        )
    return dataclasses.replace(
        series, packets=tuple(new_packets), mitigation_mode=mode
    )
