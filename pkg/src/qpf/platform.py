"""Platform: quantum elements, channels, native gates and a controller."""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .errors import NotFoundError, StateError, ValidationError
from .execution import (
    AveragingMode,
    ExecutionOptions,
    ExecutionResult,
    ExecutionStats,
    Sweeper,
    derive_seed,
    fresh_seed,
    grid_points,
    substitute,
    validate_sweepers,
)
from .pulses import (
    ChannelId,
    ChannelRole,
    Pulse,
    PulseSequence,
    UnrollMap,
    _next_uid,
    unroll,
)


class ElementKind(str, Enum):
    QUBIT = "qubit"
    COUPLER = "coupler"


_REQUIRED_ROLES = {
    ElementKind.QUBIT: {ChannelRole.DRIVE, ChannelRole.PROBE, ChannelRole.ACQUISITION},
    ElementKind.COUPLER: {ChannelRole.FLUX},
}


@dataclass
class QuantumElement:
    """Anything pulses are sent to: a computational qubit or a coupler.

    Physical parameters are in Hz and ns; ``None`` means not characterized.
    """

    name: str
    kind: ElementKind
    channels: dict
    frequency: Optional[float] = None
    anharmonicity: float = 0.0
    t1: Optional[float] = None
    t2: Optional[float] = None
    drive_coupling: Optional[float] = None

    def __post_init__(self):
        self.kind = ElementKind(self.kind)
        self.channels = {ChannelRole(role): ch for role, ch in self.channels.items()}
        missing = _REQUIRED_ROLES[self.kind] - set(self.channels)
        if missing:
            names = ", ".join(sorted(r.value for r in missing))
            raise ValidationError(f"{self.kind.value} {self.name!r} lacks channels: {names}")
        if self.kind is ElementKind.COUPLER and set(self.channels) != {ChannelRole.FLUX}:
            raise ValidationError(f"coupler {self.name!r} may only own a flux channel")
        for role, ch in self.channels.items():
            if ch.role is not role:
                raise ValidationError(f"channel {ch.name!r} registered under the wrong role")

    def channel(self, role: Union[ChannelRole, str]) -> ChannelId:
        try:
            return self.channels[ChannelRole(role)]
        except (KeyError, ValueError):
            raise NotFoundError(f"element {self.name!r} has no {role} channel") from None

    @property
    def drive(self) -> ChannelId:
        return self.channel(ChannelRole.DRIVE)

    @property
    def probe(self) -> ChannelId:
        return self.channel(ChannelRole.PROBE)

    @property
    def acquisition(self) -> ChannelId:
        return self.channel(ChannelRole.ACQUISITION)


@dataclass
class QubitPair:
    a: str
    b: str
    coupling_strength: float = 0.0
    native_gate: Optional[str] = None

    @property
    def elements(self) -> tuple[str, str]:
        return self.a, self.b


@dataclass
class MeasureNative:
    """Readout recipe: a probe pulse and an acquisition window.

    ``v0``/``v1``/``sigma`` describe the in-phase voltage returned in
    integration mode for each state.
    """

    probe: Pulse
    acquisition_duration: float
    v0: float = -1.0
    v1: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.v0 == self.v1:
            raise ValidationError("readout voltages v0 and v1 must differ")
        if self.sigma < 0:
            raise ValidationError("integration noise must be non-negative")


@dataclass
class SingleQubitNatives:
    rx: Pulse
    rx90: Pulse
    measure: MeasureNative


def fresh(pulse: Pulse, **changes) -> Pulse:
    """Copy of a native template with a new identity."""
    return replace(pulse, uid=_next_uid(), **changes)


class Controller(ABC):
    """Backend executing sequences. Only an emulator ships with the package."""

    supports_unroll = False

    def connect(self, platform: "Platform") -> None:
        pass

    def disconnect(self) -> None:
        pass

    @abstractmethod
    def play(
        self,
        platform: "Platform",
        sequence: PulseSequence,
        configs: dict,
        options: ExecutionOptions,
        sweepers: Sequence[Sweeper],
        seed: int,
    ) -> dict:
        """Single-shot arrays per acquisition id, shaped ``grid + (n_shots,)``."""

    def play_unrolled(
        self,
        platform: "Platform",
        sequence: PulseSequence,
        unrolled: UnrollMap,
        configs: dict,
        options: ExecutionOptions,
        seeds: Sequence[int],
    ) -> dict:
        raise NotImplementedError


@dataclass
class Platform:
    """Orchestrates one device: elements, channels, native gates, backend."""

    name: str
    elements: dict
    channels: dict
    configs: dict
    natives: dict
    pairs: list = field(default_factory=list)
    controller: Optional[Controller] = None
    sampling_rate: float = 1.0
    _connected: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name, channel in self.channels.items():
            if channel.name != name:
                raise ValidationError(f"channel registered as {name!r} is named {channel.name!r}")
            if name not in self.configs:
                raise ValidationError(f"channel {name!r} has no configuration")
            self.configs[name].check_role(channel.role)
        for element in self.elements.values():
            for channel in element.channels.values():
                if self.channels.get(channel.name) != channel:
                    raise ValidationError(
                        f"element {element.name!r} references unknown channel {channel.name!r}"
                    )
        for pair in self.pairs:
            for name in pair.elements:
                if name not in self.elements:
                    raise ValidationError(f"pair references unknown element {name!r}")
        for qubit in self.qubits:
            if qubit not in self.natives:
                raise ValidationError(f"qubit {qubit!r} has no native gates")
        for name in self.natives:
            if name not in self.elements:
                raise ValidationError(f"native gates for unknown element {name!r}")

    @property
    def qubits(self) -> list[str]:
        return [n for n, e in self.elements.items() if e.kind is ElementKind.QUBIT]

    @property
    def couplers(self) -> list[str]:
        return [n for n, e in self.elements.items() if e.kind is ElementKind.COUPLER]

    def element(self, name: str) -> QuantumElement:
        try:
            return self.elements[name]
        except KeyError:
            raise NotFoundError(f"unknown element {name!r}") from None

    def element_of_channel(self, channel: Union[ChannelId, str]) -> QuantumElement:
        name = channel.name if isinstance(channel, ChannelId) else channel
        for element in self.elements.values():
            if any(ch.name == name for ch in element.channels.values()):
                return element
        raise NotFoundError(f"channel {name!r} belongs to no element")

    # connection lifecycle

    @property
    def is_connected(self) -> bool:
        return self._connected

    def connect(self) -> None:
        if self._connected:
            raise StateError(f"platform {self.name!r} is already connected")
        if self.controller is None:
            raise StateError(f"platform {self.name!r} has no controller")
        self.controller.connect(self)
        self._connected = True

    def disconnect(self) -> None:
        if not self._connected:
            raise StateError(f"platform {self.name!r} is not connected")
        self.controller.disconnect()
        self._connected = False

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, *exc):
        if self._connected:
            self.disconnect()

    # parameters

    def set_channel_parameter(self, element: str, role, parameter: str, value: float) -> None:
        channel = self.element(element).channel(role)
        config = self.configs[channel.name]
        if parameter == "frequency" and not channel.role.has_carrier:
            raise ValidationError(f"{channel.role.value} channel {channel.name!r} has no carrier")
        if parameter not in ("frequency", "sampling_rate"):
            raise NotFoundError(f"unknown channel parameter {parameter!r}")
        self.configs[channel.name] = replace(config, **{parameter: float(value)})

    def update_native(self, qubit: str, gate: str, **changes) -> None:
        """Edit a native pulse template, e.g. after a calibration."""
        natives = self.natives[qubit]
        if gate == "measure":
            natives.measure = replace(natives.measure, **changes)
        elif gate in ("rx", "rx90"):
            setattr(natives, gate, replace(getattr(natives, gate), **changes))
        else:
            raise NotFoundError(f"unknown native gate {gate!r}")

    # execution

    def _check_sequence(self, sequence: PulseSequence) -> None:
        for channel in sequence.channels:
            known = self.channels.get(channel.name)
            if known is None:
                raise ValidationError(f"sequence uses unknown channel {channel.name!r}")
            if known.role is not channel.role:
                raise ValidationError(f"channel {channel.name!r} used with the wrong role")

    def ideal_time_ns(
        self,
        sequences: Sequence[PulseSequence],
        options: ExecutionOptions,
        sweepers: Sequence[Sweeper] = (),
    ) -> float:
        """Qubit occupancy of an execution: shots times sequence plus relaxation."""
        total = 0.0
        for sequence in sequences:
            for _, values in grid_points(sweepers):
                seq, _ = substitute(sequence, self.configs, sweepers, values)
                total += seq.duration() + options.relaxation_time
        return options.n_shots * total

    def execute(
        self,
        sequences: Union[PulseSequence, Sequence[PulseSequence]],
        options: ExecutionOptions = ExecutionOptions(),
        sweepers: Sequence[Sweeper] = (),
    ) -> list[ExecutionResult]:
        """Run a batch of sequences, optionally swept, in one session.

        Every ``(sequence, grid point)`` draws its shots from its own stream:
        the root seed for a lone unswept sequence, ``derive_seed(root, i)``
        for sequence ``i`` of a batch, and ``derive_seed(that, g)`` for the
        flat grid index ``g``.
        """
        start = time.perf_counter()
        if not self._connected:
            raise StateError(f"platform {self.name!r} is not connected")
        if isinstance(sequences, PulseSequence):
            sequences = [sequences]
        sequences = list(sequences)
        sweepers = tuple(sweepers)
        for sequence in sequences:
            self._check_sequence(sequence)
            validate_sweepers(sequence, self.configs, sweepers)
        root = options.seed if options.seed is not None else fresh_seed()
        seeds = [root] if len(sequences) == 1 else [derive_seed(root, i) for i in range(len(sequences))]
        configs = dict(self.configs)
        stats = ExecutionStats()

        controller_time = 0.0
        if len(sequences) > 1 and not sweepers and self.controller.supports_unroll:
            merged, mapping = unroll(sequences, options.relaxation_time)
            tic = time.perf_counter()
            raw = self.controller.play_unrolled(self, merged, mapping, configs, options, seeds)
            controller_time += time.perf_counter() - tic
            inverse = mapping.inverse()
            outputs = [{} for _ in sequences]
            for new_id, shots in raw.items():
                index, original = inverse[new_id]
                outputs[index][original] = shots
        else:
            outputs = []
            for sequence, seed in zip(sequences, seeds):
                tic = time.perf_counter()
                outputs.append(
                    self.controller.play(self, sequence, configs, options, sweepers, seed)
                )
                controller_time += time.perf_counter() - tic

        results = []
        for output, seed in zip(outputs, seeds):
            data = {}
            for key, shots in output.items():
                shots = np.asarray(shots)
                if options.averaging is AveragingMode.AVERAGED:
                    shots = shots.mean(axis=-1)
                data[key] = shots
            results.append(ExecutionResult(data, sweepers, seed, options, stats))
        stats.controller_seconds = controller_time
        stats.ideal_ns = self.ideal_time_ns(sequences, options, sweepers)
        stats.points = len(sequences) * int(np.prod([len(s) for s in sweepers]))
        stats.total_seconds = time.perf_counter() - start
        return results
