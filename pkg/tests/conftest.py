import copy

import pytest

from qpf.runcard import load_platform, platform_from_dict

# one transmon, 2 levels, no decoherence, rotating frame; a rectangular
# 50 ns pi pulse: kappa * A * T = 1/2 with kappa = 20 MHz -> A = 0.5
BASE = {
    "name": "unit",
    "sampling_rate_gsps": 1.0,
    "elements": {
        "q0": {
            "kind": "qubit",
            "channels": {
                "drive": {"name": "q0/drive", "frequency_hz": 5.0e9},
                "probe": {"name": "q0/probe", "frequency_hz": 7.0e9},
                "acquisition": "q0/acquisition",
            },
            "frequency_hz": 5.0e9,
            "anharmonicity_hz": -2.0e8,
            "drive_coupling_hz": 2.0e7,
        }
    },
    "native_gates": {
        "q0": {
            "rx": {"amplitude": 0.5, "duration_ns": 50, "envelope": "rectangular"},
            "measure": {
                "probe": {"amplitude": 0.1, "duration_ns": 100},
                "acquisition_duration_ns": 100,
                "v0": -1.0,
                "v1": 1.0,
                "integration_noise_sigma": 0.0,
            },
        }
    },
    "simulation": {"levels_per_transmon": 2, "frame": "rotating", "solver": {"max_step_ns": 10.0}},
}


def runcard(**changes) -> dict:
    """Copy of BASE with dotted-path overrides, e.g. ``runcard(**{"elements.q0.t1_ns": 1e4})``."""
    data = copy.deepcopy(BASE)
    for path, value in changes.items():
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        node[keys[-1]] = value
    return data


@pytest.fixture
def unit_platform():
    platform = platform_from_dict(runcard())
    with platform:
        yield platform


@pytest.fixture
def emulator_1q():
    platform = load_platform("emulator_1q")
    with platform:
        yield platform


@pytest.fixture
def emulator_2q():
    platform = load_platform("emulator_2q")
    with platform:
        yield platform


# acceptance verdicts, echoed once more at the end of the pytest run
VERDICTS: dict[int, str] = {}


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
