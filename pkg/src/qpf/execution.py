"""Execution options, sweepers, results and the shot seed schedule."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError, ValidationError
from .pulses import ChannelConfig, ChannelId, Delay, Pulse, PulseSequence


class AveragingMode(str, Enum):
    SINGLESHOT = "singleshot"
    AVERAGED = "averaged"


class AcquisitionMode(str, Enum):
    DISCRIMINATION = "discrimination"
    INTEGRATION = "integration"


@dataclass(frozen=True)
class ExecutionOptions:
    n_shots: int = 1000
    relaxation_time: float = 100_000.0
    averaging: AveragingMode = AveragingMode.SINGLESHOT
    acquisition_mode: AcquisitionMode = AcquisitionMode.DISCRIMINATION
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "averaging", AveragingMode(self.averaging))
        object.__setattr__(self, "acquisition_mode", AcquisitionMode(self.acquisition_mode))
        if int(self.n_shots) != self.n_shots or self.n_shots < 1:
            raise InvalidArgumentError(f"n_shots must be a positive integer, got {self.n_shots}")
        if not self.relaxation_time >= 0:
            raise InvalidArgumentError("relaxation_time must be non-negative")

    def to_dict(self) -> dict:
        return {
            "n_shots": int(self.n_shots),
            "relaxation_time": float(self.relaxation_time),
            "averaging": self.averaging.value,
            "acquisition_mode": self.acquisition_mode.value,
            "seed": self.seed,
        }


class Parameter(str, Enum):
    AMPLITUDE = "pulse.amplitude"
    DURATION = "pulse.duration"
    RELATIVE_PHASE = "pulse.relative_phase"
    FREQUENCY = "channel.frequency"
    DELAY_DURATION = "delay.duration"

    @property
    def attribute(self) -> str:
        return self.value.split(".", 1)[1]


Target = Union[Pulse, Delay, ChannelId, str]


@dataclass(frozen=True)
class Sweeper:
    """One parameter taking every value in ``values`` on all ``targets``.

    Pulse and delay targets are matched by ``uid``; channel targets by name.
    """

    parameter: Parameter
    values: np.ndarray
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "parameter", Parameter(self.parameter))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("sweeper values must be a non-empty 1-d array")
        object.__setattr__(self, "values", values)
        targets = tuple(self.targets) if isinstance(self.targets, (list, tuple)) else (self.targets,)
        if not targets:
            raise ValidationError("sweeper needs at least one target")
        expected = {
            Parameter.FREQUENCY: (ChannelId, str),
            Parameter.DELAY_DURATION: (Delay,),
        }.get(self.parameter, (Pulse,))
        for target in targets:
            if not isinstance(target, expected):
                raise ValidationError(
                    f"{self.parameter.value} cannot target {type(target).__name__}"
                )
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return len(self.values)

    def channel_names(self) -> list[str]:
        return [t.name if isinstance(t, ChannelId) else t for t in self.targets]


def grid_shape(sweepers: Sequence[Sweeper]) -> tuple[int, ...]:
    return tuple(len(s) for s in sweepers)


def grid_points(sweepers: Sequence[Sweeper]) -> Iterable[tuple[tuple[int, ...], tuple[float, ...]]]:
    """Cartesian grid, first sweeper outermost."""
    for index in itertools.product(*(range(len(s)) for s in sweepers)):
        yield index, tuple(s.values[i] for s, i in zip(sweepers, index))


def validate_sweepers(sequence: PulseSequence, configs: dict, sweepers: Sequence[Sweeper]) -> None:
    uids = {item.uid for _, item in sequence}
    for sweeper in sweepers:
        if sweeper.parameter is Parameter.FREQUENCY:
            for name in sweeper.channel_names():
                if name not in configs:
                    raise ValidationError(f"sweeper targets unknown channel {name!r}")
                if configs[name].frequency is None:
                    raise ValidationError(f"channel {name!r} has no carrier to sweep")
            continue
        for target in sweeper.targets:
            if target.uid not in uids:
                raise ValidationError(
                    f"sweeper targets a {type(target).__name__.lower()} absent from the sequence"
                )


def substitute(
    sequence: PulseSequence,
    configs: dict[str, ChannelConfig],
    sweepers: Sequence[Sweeper],
    values: Sequence[float],
) -> tuple[PulseSequence, dict[str, ChannelConfig]]:
    """Apply one grid point to a sequence and its channel configs."""
    items = {item.uid: item for _, item in sequence}
    updated: dict[int, object] = {}
    configs = dict(configs)
    for sweeper, value in zip(sweepers, values):
        if sweeper.parameter is Parameter.FREQUENCY:
            for name in sweeper.channel_names():
                configs[name] = replace(configs[name], frequency=float(value))
            continue
        attribute = sweeper.parameter.attribute
        for target in sweeper.targets:
            current = updated.get(target.uid, items[target.uid])
            updated[target.uid] = replace(current, **{attribute: float(value)})
    return sequence.replace_items(updated), configs


def derive_seed(root: int, *key: int) -> int:
    """Deterministic child seed for a stream identified by ``key``."""
    words = np.random.SeedSequence(root, spawn_key=tuple(int(k) for k in key)).generate_state(
        2, np.uint32
    )
    return int(words[0]) << 32 | int(words[1])


def fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(2, np.uint64)[0])


@dataclass
class ExecutionStats:
    """Timings of one ``execute`` call; shared by all results it returned."""

    controller_seconds: float = 0.0
    total_seconds: float = 0.0
    ideal_ns: float = 0.0
    points: int = 0


@dataclass
class ExecutionResult:
    """Shot data per acquisition id.

    Arrays are shaped ``(len(sweeper_1), ..., len(sweeper_k), n_shots)`` in
    single-shot mode; averaged mode drops the last axis.
    """

    data: dict
    sweepers: tuple = ()
    seed: Optional[int] = None
    options: Optional[ExecutionOptions] = None
    stats: ExecutionStats = field(default_factory=ExecutionStats)

    def __getitem__(self, acquisition_id):
        return self.data[acquisition_id]

    def __contains__(self, acquisition_id) -> bool:
        return acquisition_id in self.data

    def __iter__(self):
        return iter(self.data)

    def keys(self):
        return self.data.keys()

    def items(self):
        return self.data.items()
