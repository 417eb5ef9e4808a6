"""Pulse intermediate representation and waveform synthesis.

Times are in nanoseconds, sampling rates in samples per nanosecond and
frequencies (held by channels, never by pulses) in Hz.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .errors import InvalidArgumentError, NotFoundError, ValidationError

__all__ = [
    "Rectangular",
    "Gaussian",
    "Drag",
    "Envelope",
    "Pulse",
    "Delay",
    "Acquisition",
    "ChannelRole",
    "ChannelId",
    "ChannelConfig",
    "PulseSequence",
    "Waveform",
    "UnrollMap",
    "sample_envelope",
    "pulse_quadratures",
    "sequence_duration",
    "unroll",
]

DEFAULT_SAMPLING_RATE = 1.0

_uids = itertools.count()


def _next_uid() -> int:
    return next(_uids)


@dataclass(frozen=True)
class Rectangular:
    """Constant envelope."""

    kind = "rectangular"

    def shape(self, times: np.ndarray, width: float) -> np.ndarray:
        return np.ones_like(times)

    def derivative(self, times: np.ndarray, width: float) -> np.ndarray:
        return np.zeros_like(times)


@dataclass(frozen=True)
class Gaussian:
    """Gaussian truncated to the pulse window, peak normalized to one.

    ``rel_sigma`` is the standard deviation as a fraction of the window.
    """

    rel_sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.rel_sigma > 0:
            raise InvalidArgumentError(f"rel_sigma must be positive, got {self.rel_sigma}")

    def shape(self, times: np.ndarray, width: float) -> np.ndarray:
        sigma = self.rel_sigma * width
        return np.exp(-0.5 * (times / sigma) ** 2)

    def derivative(self, times: np.ndarray, width: float) -> np.ndarray:
        sigma = self.rel_sigma * width
        return -times / sigma**2 * self.shape(times, width)


@dataclass(frozen=True)
class Drag(Gaussian):
    """Gaussian with a derivative correction on the orthogonal quadrature.

    ``beta`` multiplies the time derivative of the envelope taken in ns, so
    the correction does not depend on the sampling rate.
    """

    beta: float = 0.0
    kind = "drag"


Envelope = Union[Rectangular, Gaussian, Drag]


def _sample_times(duration: float, sampling_rate: float) -> np.ndarray:
    """Sample midpoints relative to the window center, in ns."""
    if not duration > 0:
        raise InvalidArgumentError(f"duration must be positive, got {duration}")
    if not sampling_rate > 0:
        raise InvalidArgumentError(f"sampling_rate must be positive, got {sampling_rate}")
    n = int(math.floor(duration * sampling_rate))
    # offsets are exact half-integers, so mirrored samples are bit-identical
    return (np.arange(n) + 0.5 - n / 2) / sampling_rate


def sample_envelope(
    envelope: Envelope, duration: float, sampling_rate: float = DEFAULT_SAMPLING_RATE
) -> np.ndarray:
    """Sample ``envelope`` on ``floor(duration * sampling_rate)`` points."""
    times = _sample_times(duration, sampling_rate)
    return envelope.shape(times, duration)


@dataclass(frozen=True)
class Pulse:
    """A shaped waveform on a channel.

    The carrier frequency is a property of the channel the pulse is played
    on, so a pulse only holds its baseband description.
    """

    duration: float
    amplitude: float
    envelope: Envelope = field(default_factory=Rectangular)
    relative_phase: float = 0.0
    uid: int = field(default_factory=_next_uid, compare=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(f"pulse duration must be positive, got {self.duration}")
        if not abs(self.amplitude) <= 1:
            raise InvalidArgumentError(f"pulse amplitude must lie in [-1, 1], got {self.amplitude}")

    def envelope_samples(self, sampling_rate: float = DEFAULT_SAMPLING_RATE) -> np.ndarray:
        return sample_envelope(self.envelope, self.duration, sampling_rate)


@dataclass(frozen=True)
class Delay:
    """Wait on a channel; nothing is played for ``duration`` ns."""

    duration: float
    uid: int = field(default_factory=_next_uid, compare=False)

    def __post_init__(self):
        if not self.duration >= 0:
            raise InvalidArgumentError(f"delay duration must be non-negative, got {self.duration}")


@dataclass(frozen=True)
class Acquisition:
    """Acquisition window, scheduled independently of the probe pulse."""

    duration: float
    id: str
    uid: int = field(default_factory=_next_uid, compare=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(
                f"acquisition duration must be positive, got {self.duration}"
            )


Item = Union[Pulse, Delay, Acquisition]


class ChannelRole(str, Enum):
    DRIVE = "drive"
    FLUX = "flux"
    PROBE = "probe"
    ACQUISITION = "acquisition"

    @property
    def has_carrier(self) -> bool:
        return self in (ChannelRole.DRIVE, ChannelRole.PROBE)


@dataclass(frozen=True)
class ChannelId:
    name: str
    role: ChannelRole

    def __post_init__(self):
        object.__setattr__(self, "role", ChannelRole(self.role))


@dataclass(frozen=True)
class ChannelConfig:
    """Carrier frequency (Hz) and sampling rate (samples/ns) of a channel."""

    frequency: Optional[float] = None
    sampling_rate: float = DEFAULT_SAMPLING_RATE

    def __post_init__(self):
        if self.frequency is not None and not self.frequency >= 0:
            raise InvalidArgumentError(f"frequency must be non-negative, got {self.frequency}")
        if not self.sampling_rate > 0:
            raise InvalidArgumentError(
                f"sampling_rate must be positive, got {self.sampling_rate}"
            )

    def check_role(self, role: ChannelRole) -> None:
        if role.has_carrier and self.frequency is None:
            raise ValidationError(f"{role.value} channel requires a frequency")
        if not role.has_carrier and self.frequency is not None:
            raise ValidationError(f"{role.value} channel cannot carry a frequency")


class PulseSequence:
    """Ordered collection of ``(channel, item)`` pairs.

    Each channel has its own timeline: items are played back to back
    starting at t = 0, so the start of an item is the sum of the durations
    of the items preceding it on the same channel.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[ChannelId, Item]] = ()):
        entries = tuple((ch, item) for ch, item in entries)
        acq_ids = set()
        for ch, item in entries:
            if not isinstance(ch, ChannelId):
                raise ValidationError(f"expected ChannelId, got {ch!r}")
            if isinstance(item, Acquisition):
                if ch.role is not ChannelRole.ACQUISITION:
                    raise ValidationError(
                        f"acquisition {item.id!r} placed on {ch.role.value} channel {ch.name!r}"
                    )
                if item.id in acq_ids:
                    raise ValidationError(f"duplicate acquisition id {item.id!r}")
                acq_ids.add(item.id)
            elif isinstance(item, Pulse):
                if ch.role is ChannelRole.ACQUISITION:
                    raise ValidationError(f"pulse placed on acquisition channel {ch.name!r}")
            elif not isinstance(item, Delay):
                raise ValidationError(f"unknown sequence item {item!r}")
        names = {}
        for ch, _ in entries:
            if names.setdefault(ch.name, ch.role) is not ch.role:
                raise ValidationError(f"channel {ch.name!r} used with two roles")
        self._entries = entries

    def __iter__(self) -> Iterator[tuple[ChannelId, Item]]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, PulseSequence) and self._entries == other._entries

    def __add__(self, other) -> "PulseSequence":
        return PulseSequence(self._entries + tuple(other))

    def __repr__(self) -> str:
        return f"PulseSequence({list(self._entries)!r})"

    @property
    def channels(self) -> list[ChannelId]:
        return list(dict.fromkeys(ch for ch, _ in self._entries))

    def channel(self, name: str) -> ChannelId:
        for ch, _ in self._entries:
            if ch.name == name:
                return ch
        raise NotFoundError(f"channel {name!r} not in sequence")

    def channel_items(self, channel: Union[ChannelId, str]) -> list[Item]:
        name = channel.name if isinstance(channel, ChannelId) else channel
        return [item for ch, item in self._entries if ch.name == name]

    def schedule(self) -> Iterator[tuple[ChannelId, Item, float]]:
        """Yield ``(channel, item, start_time)`` in insertion order."""
        clock: dict[str, float] = {}
        for ch, item in self._entries:
            start = clock.get(ch.name, 0.0)
            clock[ch.name] = start + item.duration
            yield ch, item, start

    def pulses(self) -> list[Item]:
        return [item for _, item in self._entries if isinstance(item, Pulse)]

    def acquisitions(self) -> list[tuple[ChannelId, Acquisition]]:
        return [(ch, item) for ch, item in self._entries if isinstance(item, Acquisition)]

    def duration(self, channel: Union[ChannelId, str, None] = None) -> float:
        return sequence_duration(self, channel)

    def replace_items(self, mapping: dict[int, Item]) -> "PulseSequence":
        """Return a copy with items swapped by ``uid``."""
        return PulseSequence((ch, mapping.get(item.uid, item)) for ch, item in self._entries)

    def align(self, channels: Iterable[ChannelId], time: Optional[float] = None) -> "PulseSequence":
        """Pad ``channels`` with delays so that all of them end at ``time``.

        ``time`` defaults to the latest end among the given channels.
        """
        channels = list(channels)
        ends = {ch.name: self.duration(ch) if ch.name in self._names() else 0.0 for ch in channels}
        target = max(ends.values(), default=0.0) if time is None else time
        padding = [(ch, Delay(target - ends[ch.name])) for ch in channels if target > ends[ch.name]]
        return self + padding

    def _names(self) -> set[str]:
        return {ch.name for ch, _ in self._entries}


@dataclass(frozen=True)
class Waveform:
    """Baseband in-phase (x) and quadrature (y) samples."""

    samples_x: np.ndarray
    samples_y: np.ndarray
    start_time: float = 0.0
    sampling_rate: float = DEFAULT_SAMPLING_RATE

    def __post_init__(self):
        x = np.asarray(self.samples_x, dtype=float)
        y = np.asarray(self.samples_y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise InvalidArgumentError("quadratures must be 1-d arrays of equal length")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "samples_x", x)
        object.__setattr__(self, "samples_y", y)

    def __len__(self) -> int:
        return len(self.samples_x)

    @property
    def end_time(self) -> float:
        return self.start_time + len(self) / self.sampling_rate


def pulse_quadratures(pulse: Pulse, sampling_rate: float = DEFAULT_SAMPLING_RATE) -> Waveform:
    """Baseband quadratures of ``pulse`` before carrier mixing."""
    times = _sample_times(pulse.duration, sampling_rate)
    env = pulse.envelope.shape(times, pulse.duration)
    # complex baseband amplitude * (env + i beta env') * exp(i phase)
    signal = pulse.amplitude * env.astype(complex)
    if isinstance(pulse.envelope, Drag):
        signal = signal + 1j * pulse.amplitude * pulse.envelope.beta * pulse.envelope.derivative(
            times, pulse.duration
        )
    signal = signal * np.exp(1j * pulse.relative_phase)
    return Waveform(signal.real, signal.imag, 0.0, sampling_rate)


def sequence_duration(
    seq: PulseSequence, channel: Union[ChannelId, str, None] = None
) -> float:
    """Length of one channel timeline, or of the longest one."""
    if channel is None:
        totals: dict[str, float] = {}
        for ch, item in seq:
            totals[ch.name] = totals.get(ch.name, 0.0) + item.duration
        return max(totals.values(), default=0.0)
    name = channel.name if isinstance(channel, ChannelId) else channel
    items = seq.channel_items(name)
    if not items and name not in {ch.name for ch in seq.channels}:
        raise NotFoundError(f"channel {name!r} not in sequence")
    return float(sum(item.duration for item in items))


@dataclass(frozen=True)
class UnrollMap:
    """Bookkeeping for an unrolled batch.

    ``acquisitions`` maps ``(sequence index, original id)`` to the id used in
    the merged sequence, ``offsets`` holds the start time of every sequence
    in the merged timeline and ``padding`` the uids of inserted delays.
    """

    acquisitions: dict
    offsets: tuple
    durations: tuple
    padding: frozenset = frozenset()

    def inverse(self) -> dict:
        return {new: key for key, new in self.acquisitions.items()}


def unroll(
    sequences: list[PulseSequence], relaxation_time: float = 0.0
) -> tuple[PulseSequence, UnrollMap]:
    """Concatenate ``sequences`` into one multi-measurement sequence.

    Before each sequence after the first, every channel is padded to the end
    of the merged sequence plus ``relaxation_time``.
    """
    if relaxation_time < 0:
        raise InvalidArgumentError("relaxation_time must be non-negative")
    entries: list = []
    seen: dict = {}  # channels in order of first use
    clock: dict[str, float] = {}  # end time of every channel seen so far
    mapping: dict = {}
    offsets = []
    durations = []
    padding = set()
    for index, seq in enumerate(sequences):
        if index > 0:
            target = max(clock.values(), default=0.0) + relaxation_time
            for ch in {**seen, **dict.fromkeys(seq.channels)}:
                end = clock.get(ch.name, 0.0)
                if target > end:
                    delay = Delay(target - end)
                    entries.append((ch, delay))
                    padding.add(delay.uid)
                    clock[ch.name] = target
        offsets.append(max(clock.values(), default=0.0) if index > 0 else 0.0)
        durations.append(seq.duration())
        for ch, item in seq:
            if isinstance(item, Acquisition):
                new_id = f"{item.id}@{index}"
                mapping[(index, item.id)] = new_id
                item = replace(item, id=new_id)
            entries.append((ch, item))
            seen.setdefault(ch)
            clock[ch.name] = clock.get(ch.name, 0.0) + item.duration
    merged = PulseSequence(entries)
    return merged, UnrollMap(mapping, tuple(offsets), tuple(durations), frozenset(padding))
