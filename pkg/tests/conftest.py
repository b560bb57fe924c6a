import json
from pathlib import Path

import pytest

from stbeam.field_engine import SPEED_OF_LIGHT
from stbeam.signal_model import half_wavelength, make_linear_fda

SCENARIOS_DIR = Path(__file__).resolve().parents[1] / "scenarios"

CARRIER = 10e9
DELTA_F = 10e3


@pytest.fixture(scope="session")
def scenarios_dir() -> Path:
    return SCENARIOS_DIR


@pytest.fixture()
def load_stbeam():
    from stbeam import cli

    cli.loads_commands()
    return cli.stbeam_cli


@pytest.fixture()
def fda19():
    return make_linear_fda(19, half_wavelength(CARRIER), CARRIER, DELTA_F)


@pytest.fixture()
def write_scenario(tmp_path):
    """Write a scenario dict (or raw text) to a file and return its path."""

    def _write(data, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        if isinstance(data, str):
            path.write_text(data, encoding="utf-8")
        else:
            path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path

    return _write


@pytest.fixture()
def scenario_data(scenarios_dir):
    """Decoded copy of a bundled scenario, safe to modify."""

    def _load(name: str) -> dict:
        return json.loads((scenarios_dir / name).read_text(encoding="utf-8"))

    return _load


@pytest.fixture()
def c() -> float:
    return SPEED_OF_LIGHT
