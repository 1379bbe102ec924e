from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.scenario"


@pytest.fixture(scope="session")
def w_vector() -> np.ndarray:
    """Independent amplitude oracle for the W state (qubit 1 = leftmost bit)."""
    amps = np.zeros(8, dtype=complex)
    amps[0b001] = amps[0b010] = amps[0b100] = 1.0 / np.sqrt(3.0)
    return amps
