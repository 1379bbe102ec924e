"""Plain-text configuration files: emulator scenarios and job configs.

Both use a flat sectioned key/value format (INI) with units spelled out in
key names, so configs stay diff-friendly.  See FORMATS.md.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .harness import DEFAULT_PACKET_DURATION, DEFAULT_PACKET_SIZE, DEFAULT_SHOTS
from .noise import GateNoise, Oscillation, ReadoutNoise, TemporalScenario


def _read_ini(path: str | Path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return parser


def _floats(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"expected numbers, got {raw!r}") from exc


def _packet_schedule(section) -> dict[int, float]:
    """Keys like ``packet_7 = 0.15`` into {7: 0.15}."""
    schedule = {}
    for key, raw in section.items():
        if not key.startswith("packet_"):
            raise ConfigurationError(f"schedule keys must look like packet_<index>, got {key!r}")
        try:
            schedule[int(key[len("packet_"):])] = float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad schedule entry {key}={raw!r}") from exc
    return schedule


def load_scenario(path: str | Path) -> TemporalScenario:
    """Parse a scenario file: required [baseline] plus optional [reported],
    [oscillation], [outliers], [delays] and [fault] sections."""
    parser = _read_ini(path)
    if "baseline" not in parser:
        raise ConfigurationError(f"{path}: scenario needs a [baseline] section")
    base = parser["baseline"]
    n_qubits = base.getint("n_qubits", 3)
    flips = _floats(base.get("readout_flip", "0"))
    if len(flips) == 1:
        flips = flips * n_qubits
    if len(flips) != n_qubits:
        raise ConfigurationError(
            f"{path}: readout_flip lists {len(flips)} values for {n_qubits} qubits"
        )
    readout = ReadoutNoise(flips)
    gate = GateNoise(
        base.getfloat("one_qubit_error", 0.0), base.getfloat("two_qubit_error", 0.0)
    )

    oscillation = None
    if "oscillation" in parser:
        osc = parser["oscillation"]
        oscillation = Oscillation(
            amplitude_fraction=osc.getfloat("amplitude_fraction"),
            period_minutes=osc.getfloat("period_minutes"),
            phase_radians=osc.getfloat("phase_radians", 0.0),
            applies_to=osc.get("applies_to", "both"),
        )

    reported_readout = None
    reported_1q = reported_2q = None
    if "reported" in parser:
        rep = parser["reported"]
        if "readout_error" in rep:
            reported_readout = _floats(rep["readout_error"])
            if len(reported_readout) == 1:
                reported_readout = reported_readout * n_qubits
        if "one_qubit_error" in rep:
            reported_1q = rep.getfloat("one_qubit_error")
        if "two_qubit_error" in rep:
            reported_2q = rep.getfloat("two_qubit_error")

    return TemporalScenario(
        readout=readout,
        gate=gate,
        oscillation=oscillation,
        outlier_flips=_packet_schedule(parser["outliers"]) if "outliers" in parser else {},
        delays=_packet_schedule(parser["delays"]) if "delays" in parser else {},
        constant_fault=parser.getboolean("fault", "constant", fallback=False),
        reported_readout=reported_readout,
        reported_one_qubit_error=reported_1q,
        reported_two_qubit_error=reported_2q,
    )


@dataclass(frozen=True)
class JobConfig:
    """Everything a job run needs, resolved from one config file."""

    job_id: str
    backend: str  # "ideal" | "emulated"
    scenario_path: str | None
    seed: int
    anchor_time: str
    triplets: tuple[tuple[int, ...], ...]
    packets_per_triplet: int
    shots: int = DEFAULT_SHOTS
    packet_size: int = DEFAULT_PACKET_SIZE
    rotation: bool = False
    packet_duration: float = DEFAULT_PACKET_DURATION
    calibration: str = "none"
    calibration_shots: int | None = None


def _parse_triplets(raw: str) -> tuple[tuple[int, ...], ...]:
    triplets = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            triplet = tuple(int(v) for v in chunk.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigurationError(f"bad triplet {chunk!r}") from exc
        if len(triplet) != 3:
            raise ConfigurationError(f"a triplet needs exactly 3 qubit labels, got {chunk!r}")
        triplets.append(triplet)
    if not triplets:
        raise ConfigurationError("at least one triplet is required")
    return tuple(triplets)


def load_job_config(path: str | Path) -> JobConfig:
    parser = _read_ini(path)
    for section in ("job", "protocol"):
        if section not in parser:
            raise ConfigurationError(f"{path}: missing [{section}] section")
    job, protocol = parser["job"], parser["protocol"]

    backend = job.get("backend", "ideal").strip().lower()
    if backend not in ("ideal", "emulated"):
        raise ConfigurationError(f"{path}: backend must be ideal|emulated, got {backend!r}")
    scenario_path = job.get("scenario", fallback=None)
    if backend == "emulated" and not scenario_path:
        raise ConfigurationError(f"{path}: emulated backend needs a scenario file")
    if scenario_path:
        scenario_path = str((Path(path).parent / scenario_path).resolve()
                            if not Path(scenario_path).is_absolute() else scenario_path)

    calibration = protocol.get("calibration", "none").strip().lower()
    if calibration not in ("none", "static", "dynamic"):
        raise ConfigurationError(
            f"{path}: calibration must be none|static|dynamic, got {calibration!r}"
        )
    try:
        config = JobConfig(
            job_id=job.get("id", Path(path).stem),
            backend=backend,
            scenario_path=scenario_path,
            seed=job.getint("seed", 0),
            anchor_time=job.get("anchor_time", "2022-01-01T00:00:00Z"),
            triplets=_parse_triplets(protocol.get("triplets", "1,2,3")),
            packets_per_triplet=protocol.getint("packets_per_triplet"),
            shots=protocol.getint("shots", DEFAULT_SHOTS),
            packet_size=protocol.getint("packet_size", DEFAULT_PACKET_SIZE),
            rotation=protocol.getboolean("rotation", False),
            packet_duration=protocol.getfloat("packet_duration_minutes", DEFAULT_PACKET_DURATION),
            calibration=calibration,
            calibration_shots=protocol.getint("calibration_shots", fallback=None),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if config.packets_per_triplet is None:
        raise ConfigurationError(f"{path}: packets_per_triplet is required")
    return config
