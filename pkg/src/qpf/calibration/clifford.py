"""Single-qubit Clifford group written with virtual Z and RX(pi/2) pulses."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from ..compiler import RX, RZ, Gate, gate_unitary, same_up_to_phase

QUARTERS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


def _steps_to_gates(steps, qubit: str) -> list[Gate]:
    gates = []
    for kind, angle in steps:
        if kind == "rz" and angle == 0:
            continue
        gates.append(RZ(qubit, angle) if kind == "rz" else RX(qubit, math.pi / 2))
    return gates


def _candidates():
    """ZXZ...Z words ordered by pulse count, then by number of Z rotations."""
    words = []
    for n_pulses in range(3):
        for angles in itertools.product(QUARTERS, repeat=n_pulses + 1):
            steps = [("rz", angles[0])]
            for angle in angles[1:]:
                steps += [("rx", math.pi / 2), ("rz", angle)]
            words.append((n_pulses, sum(a != 0 for a in angles), tuple(steps)))
    words.sort(key=lambda w: (w[0], w[1]))
    return [w[2] for w in words]


@lru_cache(maxsize=None)
def clifford_table() -> tuple:
    """The 24 Cliffords as ``(steps, unitary)`` with the fewest pulses each."""
    table = []
    for steps in _candidates():
        u = gate_unitary(_steps_to_gates(steps, "q"))
        if not any(same_up_to_phase(u, v) for _, v in table):
            table.append((steps, u))
    assert len(table) == 24
    return tuple(table)


def clifford_gates(index: int, qubit: str) -> list[Gate]:
    return _steps_to_gates(clifford_table()[index][0], qubit)


def clifford_unitary(index: int) -> np.ndarray:
    return clifford_table()[index][1]


def inverse_index(unitary: np.ndarray) -> int:
    target = unitary.conj().T
    for k, (_, u) in enumerate(clifford_table()):
        if same_up_to_phase(u, target):
            return k
    raise ValueError("not a Clifford")


def rb_sequence(depth: int, rng: np.random.Generator, qubit: str) -> list[Gate]:
    """``depth`` random Cliffords followed by the one inverting them."""
    total = np.eye(2, dtype=complex)
    gates = []
    for k in rng.integers(0, 24, size=depth):
        gates += clifford_gates(int(k), qubit)
        total = clifford_unitary(int(k)) @ total
    gates += clifford_gates(inverse_index(total), qubit)
    return gates
