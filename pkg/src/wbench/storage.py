"""Persistence of time series, packets and calibration matrices.

A series file is line-delimited JSON: one header record followed by one
packet record per line, each dumped canonically (sorted keys, compact
separators) so that serialize -> parse -> serialize is byte-identical.
Unknown fields survive the round trip via the ``extras`` mechanism.
Readers honor only complete lines, so a file being appended to can be
read concurrently.  See FORMATS.md for a worked byte-level example.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Mapping

import numpy as np

from .errors import ParseError, SchemaMismatchError
from .hamiltonians import PauliHamiltonian, PauliTerm
from .harness import Packet, Realization, TimeSeries
from .mitigation import CalibrationMatrix
from .noise import DeviceSnapshot
from .statevector import ShotHistogram

SCHEMA_VERSION = 1
DEFAULT_ANCHOR_TIME = "2022-01-01T00:00:00Z"

_HEADER_KEYS = {
    "kind",
    "schema_version",
    "job_id",
    "triplet",
    "mitigation_mode",
    "hamiltonian",
    "anchor_time",
}
_PACKET_KEYS = {"kind", "packet_timestamp", "snapshot", "calibration", "realizations"}
_REALIZATION_KEYS = {"energy", "expectations", "histograms", "timestamp"}


def dumps_record(record: Mapping) -> str:
    """Canonical one-line JSON form of a record."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _histogram_to_obj(hist: ShotHistogram) -> dict:
    return {
        "measured": list(hist.measured_qubits),
        "shots": hist.total_shots,
        "counts": dict(hist.counts),
    }


def _obj_to_histogram(obj: Mapping) -> ShotHistogram:
    return ShotHistogram(tuple(obj["measured"]), dict(obj["counts"]), int(obj["shots"]))


def calibration_to_obj(cal: CalibrationMatrix) -> dict:
    """Dense row-major serialization with a qubit-count header."""
    return {"n_qubits": cal.n_qubits, "matrix": [float(v) for v in cal.matrix.reshape(-1)]}


def obj_to_calibration(obj: Mapping) -> CalibrationMatrix:
    n = int(obj["n_qubits"])
    matrix = np.array(obj["matrix"], dtype=float).reshape(2**n, 2**n)
    return CalibrationMatrix(n, matrix)


def _snapshot_to_obj(snap: DeviceSnapshot) -> dict:
    return {
        "readout_error": list(snap.reported_readout_error),
        "one_qubit_error": snap.reported_one_qubit_error,
        "two_qubit_error": snap.reported_two_qubit_error,
        "timestamp": snap.timestamp,
    }


def _obj_to_snapshot(obj: Mapping) -> DeviceSnapshot:
    return DeviceSnapshot(
        reported_readout_error=tuple(obj["readout_error"]),
        reported_one_qubit_error=float(obj["one_qubit_error"]),
        reported_two_qubit_error=float(obj["two_qubit_error"]),
        timestamp=float(obj["timestamp"]),
    )


def _realization_to_obj(realization: Realization) -> dict:
    obj = dict(realization.extras)
    obj.update(
        {
            "energy": realization.energy,
            "expectations": dict(realization.per_term_expectations),
            "timestamp": realization.timestamp,
            "histograms": {
                letters: _histogram_to_obj(h)
                for letters, h in (realization.histograms or {}).items()
            },
        }
    )
    return obj


def _obj_to_realization(obj: Mapping) -> Realization:
    histograms = {
        letters: _obj_to_histogram(h) for letters, h in obj.get("histograms", {}).items()
    }
    extras = {k: v for k, v in obj.items() if k not in _REALIZATION_KEYS}
    return Realization(
        energy=float(obj["energy"]),
        per_term_expectations=dict(obj["expectations"]),
        timestamp=float(obj["timestamp"]),
        histograms=histograms or None,
        extras=extras,
    )


def packet_to_record(packet: Packet) -> dict:
    record = dict(packet.extras)
    record.update(
        {
            "kind": "packet",
            "packet_timestamp": packet.packet_timestamp,
            "snapshot": None if packet.snapshot is None else _snapshot_to_obj(packet.snapshot),
            "calibration": None
            if packet.calibration is None
            else calibration_to_obj(packet.calibration),
            "realizations": [_realization_to_obj(r) for r in packet.realizations],
        }
    )
    return record


def record_to_packet(record: Mapping) -> Packet:
    extras = {k: v for k, v in record.items() if k not in _PACKET_KEYS}
    return Packet(
        realizations=tuple(_obj_to_realization(r) for r in record["realizations"]),
        snapshot=None if record.get("snapshot") is None else _obj_to_snapshot(record["snapshot"]),
        packet_timestamp=float(record["packet_timestamp"]),
        calibration=None
        if record.get("calibration") is None
        else obj_to_calibration(record["calibration"]),
        extras=extras,
    )


def write_packet(fh: IO[str], packet: Packet) -> None:
    """Append one packet record line."""
    fh.write(dumps_record(packet_to_record(packet)) + "\n")


def read_packet(line: str, line_number: int | None = None) -> Packet:
    """Parse one packet record line; unknown fields land in ``extras``."""
    record = _parse_line(line, line_number)
    if record.get("kind") != "packet":
        raise ParseError(f"expected a packet record, got kind={record.get('kind')!r}", line_number)
    try:
        return record_to_packet(record)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed packet record: {exc}", line_number) from exc


def _parse_line(line: str, line_number: int | None) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", line_number) from exc
    if not isinstance(record, dict):
        raise ParseError("record is not a JSON object", line_number)
    return record


def _hamiltonian_to_obj(ham: PauliHamiltonian | None):
    if ham is None:
        return None
    return [[t.coefficient, t.letters] for t in ham.terms]


def _obj_to_hamiltonian(obj) -> PauliHamiltonian | None:
    if obj is None:
        return None
    terms = tuple(PauliTerm(float(c), str(letters)) for c, letters in obj)
    return PauliHamiltonian(len(terms[0].letters), terms)


def header_record(series: TimeSeries, anchor_time: str = DEFAULT_ANCHOR_TIME) -> dict:
    record = dict(series.extras)
    record.update(
        {
            "kind": "header",
            "schema_version": SCHEMA_VERSION,
            "job_id": series.job_id,
            "triplet": list(series.triplet),
            "mitigation_mode": series.mitigation_mode,
            "hamiltonian": _hamiltonian_to_obj(series.hamiltonian),
            "anchor_time": anchor_time,
        }
    )
    return record


class SeriesWriter:
    """Streams packets of one series to a line-delimited file.

    Writes the header immediately so that concurrent readers always see a
    parseable file; packets are flushed line by line as they complete.
    """

    def __init__(self, path: str | Path, series_meta: TimeSeries, anchor_time: str = DEFAULT_ANCHOR_TIME):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._fh.write(dumps_record(header_record(series_meta, anchor_time)) + "\n")
        self._fh.flush()

    def write(self, packet: Packet) -> None:
        write_packet(self._fh, packet)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *_exc):
        self.close()


def write_series(path: str | Path, series: TimeSeries, anchor_time: str = DEFAULT_ANCHOR_TIME) -> None:
    with SeriesWriter(path, series, anchor_time) as writer:
        for packet in series.packets:
            writer.write(packet)


def read_series(path: str | Path) -> TimeSeries:
    """Load a series file; the trailing line is ignored if incomplete
    (a writer may still be appending)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if not text.endswith("\n") and lines:
        lines = lines[:-1]  # drop the in-progress fragment
    lines = [l for l in lines if l]
    if not lines:
        raise ParseError(f"{path}: empty series file")
    header = _parse_line(lines[0], 1)
    if header.get("kind") != "header":
        raise ParseError(f"first record must be a header, got kind={header.get('kind')!r}", 1)
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"schema version {version!r} is not supported (expected {SCHEMA_VERSION})", 1
        )
    packets = [read_packet(line, i) for i, line in enumerate(lines[1:], start=2)]
    extras = {k: v for k, v in header.items() if k not in _HEADER_KEYS}
    return TimeSeries(
        triplet=tuple(header["triplet"]),
        packets=tuple(packets),
        job_id=str(header["job_id"]),
        mitigation_mode=str(header["mitigation_mode"]),
        hamiltonian=_obj_to_hamiltonian(header.get("hamiltonian")),
        extras=extras,
    )


def write_calibration(path: str | Path, cal: CalibrationMatrix) -> None:
    Path(path).write_text(dumps_record(calibration_to_obj(cal)) + "\n", encoding="utf-8")


def read_calibration(path: str | Path) -> CalibrationMatrix:
    try:
        obj = _parse_line(Path(path).read_text(encoding="utf-8").strip(), 1)
        return obj_to_calibration(obj)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed calibration record: {exc}", 1) from exc


def write_table(fh: IO[str], columns: list[str], rows) -> None:
    """Tab-separated export with a single header line naming columns and
    units; floats are written with repr-level precision."""
    fh.write("\t".join(columns) + "\n")
    for row in rows:
        fh.write("\t".join(_format_cell(v) for v in row) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
