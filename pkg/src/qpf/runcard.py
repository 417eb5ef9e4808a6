"""Runcard parsing: ``platform.yml`` (or ``.yaml``/``.json``) into a Platform."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .emulator import PulseSimulator, SimulationSettings
from .engine import SolverSettings
from .errors import NotFoundError, RuncardParseError, ValidationError
from .platform import (
    MeasureNative,
    Platform,
    QuantumElement,
    QubitPair,
    SingleQubitNatives,
)
from .pulses import ChannelConfig, ChannelId, ChannelRole, Drag, Gaussian, Pulse, Rectangular

RUNCARD_NAMES = ("platform.yml", "platform.yaml", "platform.json")
BUNDLED = Path(__file__).parent / "platforms"

_ELEMENT_KEYS = {
    "kind",
    "channels",
    "frequency_hz",
    "anharmonicity_hz",
    "t1_ns",
    "t2_ns",
    "drive_coupling_hz",
}
_TOP_KEYS = {"name", "sampling_rate_gsps", "elements", "pairs", "native_gates", "simulation"}


def find_runcard(directory: Union[str, Path]) -> Path:
    """Locate the runcard in ``directory``; bare names resolve to bundled platforms."""
    directory = Path(directory)
    if not directory.exists() and (BUNDLED / str(directory)).is_dir():
        directory = BUNDLED / str(directory)
    for name in RUNCARD_NAMES:
        path = directory / name
        if path.is_file():
            return path
    raise NotFoundError(f"no runcard ({', '.join(RUNCARD_NAMES)}) in {str(directory)!r}")


def read_runcard(path: Union[str, Path]) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise RuncardParseError("<file>", f"not a valid runcard: {exc}") from None
    if not isinstance(data, dict):
        raise RuncardParseError("<root>", "runcard must be a mapping")
    return data


def _number(value: Any, key: str, optional: bool = False) -> Optional[float]:
    if value is None and optional:
        return None
    # yaml reads "1e-8" as a string, so accept numeric strings
    try:
        if isinstance(value, bool):
            raise TypeError
        return float(value)
    except (TypeError, ValueError):
        raise RuncardParseError(key, f"expected a number, got {value!r}") from None


def _mapping(value: Any, key: str) -> dict:
    if not isinstance(value, dict):
        raise RuncardParseError(key, "expected a mapping")
    return value


def _check_keys(data: dict, allowed: set, key: str) -> None:
    for name in data:
        if name not in allowed:
            raise RuncardParseError(f"{key}.{name}" if key else str(name), "unknown key")


def _require(data: dict, name: str, key: str) -> Any:
    if name not in data:
        raise RuncardParseError(f"{key}.{name}", "missing required key")
    return data[name]


def parse_envelope(data: dict, key: str):
    kind = data.get("envelope", "rectangular")
    if kind == "rectangular":
        return Rectangular()
    if kind == "gaussian":
        return Gaussian(_number(data.get("rel_sigma", 0.2), f"{key}.rel_sigma"))
    if kind == "drag":
        return Drag(
            _number(data.get("rel_sigma", 0.2), f"{key}.rel_sigma"),
            _number(data.get("beta", 0.0), f"{key}.beta"),
        )
    raise RuncardParseError(f"{key}.envelope", f"unknown envelope {kind!r}")


def parse_pulse(data: Any, key: str) -> Pulse:
    data = _mapping(data, key)
    _check_keys(data, {"amplitude", "duration_ns", "envelope", "rel_sigma", "beta", "relative_phase"}, key)
    try:
        return Pulse(
            duration=_number(_require(data, "duration_ns", key), f"{key}.duration_ns"),
            amplitude=_number(_require(data, "amplitude", key), f"{key}.amplitude"),
            envelope=parse_envelope(data, key),
            relative_phase=_number(data.get("relative_phase", 0.0), f"{key}.relative_phase"),
        )
    except ValueError as exc:
        if isinstance(exc, RuncardParseError):
            raise
        raise RuncardParseError(key, str(exc)) from None


def _parse_channels(name: str, data: Any, sampling_rate: float, default_drive: Optional[float]):
    key = f"elements.{name}.channels"
    data = _mapping(data, key)
    channels, configs = {}, {}
    for role_name, spec in data.items():
        try:
            role = ChannelRole(role_name)
        except ValueError:
            raise RuncardParseError(f"{key}.{role_name}", "unknown channel role") from None
        if isinstance(spec, str):
            spec = {"name": spec}
        spec = _mapping(spec, f"{key}.{role_name}")
        _check_keys(spec, {"name", "frequency_hz", "sampling_rate_gsps"}, f"{key}.{role_name}")
        channel_name = str(spec.get("name", f"{name}/{role.value}"))
        frequency = _number(spec.get("frequency_hz"), f"{key}.{role_name}.frequency_hz", optional=True)
        if frequency is None and role is ChannelRole.DRIVE:
            frequency = default_drive
        if frequency is None and role.has_carrier:
            raise RuncardParseError(f"{key}.{role_name}.frequency_hz", "missing carrier frequency")
        if frequency is not None and not role.has_carrier:
            raise RuncardParseError(f"{key}.{role_name}.frequency_hz", f"{role.value} channels have no carrier")
        rate = _number(spec.get("sampling_rate_gsps", sampling_rate), f"{key}.{role_name}.sampling_rate_gsps")
        channels[role] = ChannelId(channel_name, role)
        configs[channel_name] = ChannelConfig(frequency, rate)
    return channels, configs


def _parse_simulation(data: Any) -> SimulationSettings:
    data = _mapping(data or {}, "simulation")
    _check_keys(data, {"levels_per_transmon", "solver", "frame", "trajectory_stride_ns", "workers"}, "simulation")
    frame = data.get("frame", "lab")
    if frame not in ("lab", "rotating"):
        raise RuncardParseError("simulation.frame", f"expected lab or rotating, got {frame!r}")
    solver = _mapping(data.get("solver", {}), "simulation.solver")
    _check_keys(solver, {"rtol", "atol", "max_step_ns"}, "simulation.solver")
    default_step = 0.1 if frame == "lab" else 10.0
    levels = data.get("levels_per_transmon", 3)
    if not isinstance(levels, int) or levels < 2:
        raise RuncardParseError("simulation.levels_per_transmon", "expected an integer >= 2")
    return SimulationSettings(
        levels_per_transmon=levels,
        frame=frame,
        solver=SolverSettings(
            rtol=_number(solver.get("rtol", 1e-8), "simulation.solver.rtol"),
            atol=_number(solver.get("atol", 1e-10), "simulation.solver.atol"),
            max_step_ns=_number(solver.get("max_step_ns", default_step), "simulation.solver.max_step_ns"),
            frame=frame,
        ),
        trajectory_stride_ns=_number(data.get("trajectory_stride_ns", 1.0), "simulation.trajectory_stride_ns"),
        workers=int(data.get("workers", 1)),
    )


def platform_from_dict(data: dict) -> Platform:
    _check_keys(data, _TOP_KEYS, "")
    name = str(_require(data, "name", ""))
    rate = _number(data.get("sampling_rate_gsps", 1.0), "sampling_rate_gsps")
    elements, channels, configs = {}, {}, {}
    for element_name, spec in _mapping(_require(data, "elements", ""), "elements").items():
        key = f"elements.{element_name}"
        spec = _mapping(spec, key)
        _check_keys(spec, _ELEMENT_KEYS, key)
        frequency = _number(spec.get("frequency_hz"), f"{key}.frequency_hz", optional=True)
        element_channels, element_configs = _parse_channels(
            element_name, _require(spec, "channels", key), rate, frequency
        )
        for role, channel in element_channels.items():
            if channel.name in channels:
                raise ValidationError(f"channel name {channel.name!r} used twice")
            channels[channel.name] = channel
        configs.update(element_configs)
        elements[element_name] = QuantumElement(
            name=element_name,
            kind=spec.get("kind", "qubit"),
            channels=element_channels,
            frequency=frequency,
            anharmonicity=_number(spec.get("anharmonicity_hz", 0.0), f"{key}.anharmonicity_hz"),
            t1=_number(spec.get("t1_ns"), f"{key}.t1_ns", optional=True),
            t2=_number(spec.get("t2_ns"), f"{key}.t2_ns", optional=True),
            drive_coupling=_number(spec.get("drive_coupling_hz"), f"{key}.drive_coupling_hz", optional=True),
        )

    pairs = []
    for k, spec in enumerate(data.get("pairs") or []):
        key = f"pairs[{k}]"
        spec = _mapping(spec, key)
        _check_keys(spec, {"a", "b", "coupling_hz", "native_gate"}, key)
        a, b = str(_require(spec, "a", key)), str(_require(spec, "b", key))
        for element_name in (a, b):
            if element_name not in elements:
                raise ValidationError(f"{key} references unknown element {element_name!r}")
        pairs.append(
            QubitPair(a, b, _number(spec.get("coupling_hz", 0.0), f"{key}.coupling_hz"), spec.get("native_gate"))
        )

    natives = {}
    for qubit, spec in _mapping(data.get("native_gates") or {}, "native_gates").items():
        key = f"native_gates.{qubit}"
        if qubit not in elements:
            raise ValidationError(f"{key} references unknown element {qubit!r}")
        spec = _mapping(spec, key)
        _check_keys(spec, {"rx", "rx90", "measure"}, key)
        rx = parse_pulse(_require(spec, "rx", key), f"{key}.rx")
        if "rx90" in spec:
            rx90 = parse_pulse(spec["rx90"], f"{key}.rx90")
        else:
            rx90 = Pulse(rx.duration, rx.amplitude / 2, rx.envelope, rx.relative_phase)
        measure = _mapping(_require(spec, "measure", key), f"{key}.measure")
        mkey = f"{key}.measure"
        _check_keys(measure, {"probe", "acquisition_duration_ns", "v0", "v1", "integration_noise_sigma"}, mkey)
        natives[qubit] = SingleQubitNatives(
            rx=rx,
            rx90=rx90,
            measure=MeasureNative(
                probe=parse_pulse(_require(measure, "probe", mkey), f"{mkey}.probe"),
                acquisition_duration=_number(
                    _require(measure, "acquisition_duration_ns", mkey), f"{mkey}.acquisition_duration_ns"
                ),
                v0=_number(measure.get("v0", -1.0), f"{mkey}.v0"),
                v1=_number(measure.get("v1", 1.0), f"{mkey}.v1"),
                sigma=_number(measure.get("integration_noise_sigma", 0.0), f"{mkey}.integration_noise_sigma"),
            ),
        )

    settings = _parse_simulation(data.get("simulation"))
    return Platform(
        name=name,
        elements=elements,
        channels=channels,
        configs=configs,
        natives=natives,
        pairs=pairs,
        controller=PulseSimulator(settings),
        sampling_rate=rate,
    )


def load_platform(directory: Union[str, Path]) -> Platform:
    """Build a validated platform from the runcard in ``directory``."""
    return platform_from_dict(read_runcard(find_runcard(directory)))


def dump_runcard(data: dict, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "platform.yml"
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path
