"""Gate-to-pulse compilation against a platform's native gates.

Z rotations are virtual: they shift the phase of every later drive pulse
on the same qubit and take no time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import NotFoundError, UnsupportedError, ValidationError
from .platform import Platform, fresh
from .pulses import Acquisition, Delay, PulseSequence

GATES = ("rx", "rz", "x", "h", "measure")


@dataclass(frozen=True)
class Gate:
    name: str
    qubit: str
    angle: Optional[float] = None

    def __post_init__(self):
        if self.name not in GATES:
            raise UnsupportedError(f"unknown gate {self.name!r}")
        if self.name in ("rx", "rz") and self.angle is None:
            raise ValidationError(f"{self.name} needs an angle")


def RX(qubit: str, angle: float) -> Gate:
    return Gate("rx", qubit, angle)


def RZ(qubit: str, angle: float) -> Gate:
    return Gate("rz", qubit, angle)


def X(qubit: str) -> Gate:
    return Gate("x", qubit)


def H(qubit: str) -> Gate:
    return Gate("h", qubit)


def Measure(qubit: str) -> Gate:
    return Gate("measure", qubit)


@dataclass
class Circuit:
    """Ordered moments of single-qubit gates and measurements."""

    moments: list = field(default_factory=list)

    def __post_init__(self):
        self.moments = [list(m) if isinstance(m, (list, tuple)) else [m] for m in self.moments]
        measured = set()
        for moment in self.moments:
            qubits = [g.qubit for g in moment]
            if len(set(qubits)) != len(qubits):
                raise ValidationError("a moment acts at most once on each qubit")
            for gate in moment:
                if gate.qubit in measured:
                    raise ValidationError(f"gate after measurement on {gate.qubit!r}")
                if gate.name == "measure":
                    measured.add(gate.qubit)

    @classmethod
    def from_gates(cls, gates: Iterable[Gate]) -> "Circuit":
        return cls([[g] for g in gates])

    def gates(self) -> list[Gate]:
        return [g for moment in self.moments for g in moment]

    @property
    def qubits(self) -> list[str]:
        return list(dict.fromkeys(g.qubit for g in self.gates()))


def decompose(gate: Gate) -> list[tuple[str, float]]:
    """Native steps ``("rz", theta)``, ``("rx", pi)`` or ``("rx", pi/2)``."""
    if gate.name == "x":
        return [("rx", math.pi)]
    if gate.name == "h":
        # H = RZ(pi/2) RX(pi/2) RZ(pi/2) up to a global phase
        return [("rz", math.pi / 2), ("rx", math.pi / 2), ("rz", math.pi / 2)]
    if gate.name == "rz":
        return [("rz", gate.angle)]
    if gate.name == "rx":
        if math.isclose(gate.angle, math.pi):
            return [("rx", math.pi)]
        if math.isclose(gate.angle, math.pi / 2):
            return [("rx", math.pi / 2)]
        raise UnsupportedError(f"no native pulse for RX({gate.angle})")
    return []


def compile_circuit(circuit: Circuit, platform: Platform) -> PulseSequence:
    """Translate ``circuit`` into a pulse sequence.

    Drive timelines are serialized per qubit in circuit order. All
    measurements share one readout layer starting when the last drive
    timeline ends.
    """
    entries = []
    clock: dict[str, float] = {}
    phase: dict[str, float] = {}
    measured = []
    for gate in circuit.gates():
        if gate.qubit not in platform.elements:
            raise NotFoundError(f"unknown qubit {gate.qubit!r}")
        if gate.qubit not in platform.natives:
            raise UnsupportedError(f"element {gate.qubit!r} has no native gates")
        if gate.name == "measure":
            measured.append(gate.qubit)
            continue
        natives = platform.natives[gate.qubit]
        drive = platform.elements[gate.qubit].drive
        for step, angle in decompose(gate):
            if step == "rz":
                phase[gate.qubit] = phase.get(gate.qubit, 0.0) + angle
                continue
            template = natives.rx if math.isclose(angle, math.pi) else natives.rx90
            pulse = fresh(template, relative_phase=template.relative_phase - phase.get(gate.qubit, 0.0))
            entries.append((drive, pulse))
            clock[gate.qubit] = clock.get(gate.qubit, 0.0) + pulse.duration
    sequence = PulseSequence(entries)
    if not measured:
        return sequence
    start = max(clock.values(), default=0.0)
    readout = []
    for qubit in measured:
        element = platform.elements[qubit]
        measure = platform.natives[qubit].measure
        for channel, item in (
            (element.probe, fresh(measure.probe)),
            (element.acquisition, Acquisition(measure.acquisition_duration, qubit)),
        ):
            if start > 0:
                readout.append((channel, Delay(start)))
            readout.append((channel, item))
    return sequence + readout


# ideal unitaries, used to check compilation and to build Clifford tables

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def rotation(axis_phase: float, angle: float) -> np.ndarray:
    """Rotation by ``angle`` about the equatorial axis at ``axis_phase``."""
    n = math.cos(axis_phase) * _SX + math.sin(axis_phase) * _SY
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * n


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def gate_unitary(gates: Sequence[Gate]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for gate in gates:
        for step, angle in decompose(gate):
            u = (rz(angle) if step == "rz" else rotation(0.0, angle)) @ u
    return u


def same_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-9) -> bool:
    overlap = abs(np.trace(u.conj().T @ v)) / u.shape[0]
    return abs(overlap - 1) < atol
