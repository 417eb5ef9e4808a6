"""Duffing-oscillator Hamiltonians, collapse operators and the Lindblad generator."""

from __future__ import annotations

import math
from functools import reduce
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError
from .model import TWO_PI, DeviceModel, DriveTerm


def ladder_ops(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation operators truncated to ``d`` levels."""
    if d < 2:
        raise InvalidArgumentError(f"need at least 2 levels, got {d}")
    b = np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)
    return b, b.conj().T


def embed(op: np.ndarray, index: int, levels: Sequence[int]) -> np.ndarray:
    """Kronecker-embed a single-transmon operator into the full space."""
    factors = [op if k == index else np.eye(d) for k, d in enumerate(levels)]
    return reduce(np.kron, factors)


def lowest_two(op2: np.ndarray, d: int) -> np.ndarray:
    """Place a 2x2 operator on levels 0 and 1 of a d-level system."""
    out = np.zeros((d, d), dtype=complex)
    out[:2, :2] = op2
    return out


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _number_terms(model: DeviceModel, detunings: Sequence[float]) -> np.ndarray:
    dim = model.dimension
    h = np.zeros((dim, dim), dtype=complex)
    for i, d in enumerate(model.levels):
        n = np.diag(np.arange(d)).astype(complex)
        local = detunings[i] * n + 0.5 * model.alphas[i] * n @ (n - np.eye(d))
        h += embed(local, i, model.levels)
    return h


def exchange_operator(model: DeviceModel, i: int, j: int) -> np.ndarray:
    """``b_i^dag b_j`` on the full space."""
    bi, _ = ladder_ops(model.levels[i])
    bj, _ = ladder_ops(model.levels[j])
    return embed(bi.conj().T, i, model.levels) @ embed(bj, j, model.levels)


def build_static_hamiltonian(model: DeviceModel) -> np.ndarray:
    """Transmon energies, anharmonicity and exchange couplings.

    The exchange term is taken in hermitian form ``g (b_i^dag b_j + h.c.)``.
    """
    h = _number_terms(model, model.omegas)
    for (i, j), g in model.couplings.items():
        hop = exchange_operator(model, i, j)
        h += g * (hop + hop.conj().T)
    return 0.5 * (h + h.conj().T)


def drive_operator(model: DeviceModel, index: int) -> np.ndarray:
    b, bd = ladder_ops(model.levels[index])
    return embed(b + bd, index, model.levels)


def build_drive_hamiltonian(model: DeviceModel, drives: Sequence[DriveTerm], t: float) -> np.ndarray:
    """Lab-frame drive term at time ``t``."""
    dim = model.dimension
    h = np.zeros((dim, dim), dtype=complex)
    for drive in drives:
        ox, oy = drive.amplitudes(t)
        if ox == 0 and oy == 0:
            continue
        coeff = model.drive_couplings[drive.transmon] * (
            ox * math.cos(drive.carrier * t) + oy * math.sin(drive.carrier * t)
        )
        h += coeff * drive_operator(model, drive.transmon)
    return h


def collapse_ops(model: DeviceModel) -> list[tuple[np.ndarray, float]]:
    """Relaxation and dephasing operators with their rates.

    Per transmon: lowering operator on the two lowest levels at rate 2 pi/T1
    and sigma_z on the two lowest levels at rate 2 pi/T2.
    """
    ops = []
    lowering = 0.5 * (SIGMA_X + 1j * SIGMA_Y)
    for i, d in enumerate(model.levels):
        if model.t1[i] is not None:
            ops.append((embed(lowest_two(lowering, d), i, model.levels), TWO_PI / model.t1[i]))
        if model.t2[i] is not None:
            ops.append((embed(lowest_two(SIGMA_Z, d), i, model.levels), TWO_PI / model.t2[i]))
    return ops


def lindblad_rhs(
    model: DeviceModel, drives: Sequence[DriveTerm], t: float, rho: np.ndarray
) -> np.ndarray:
    """Time derivative of ``rho`` under the lab-frame master equation."""
    dim = model.dimension
    if rho.shape != (dim, dim):
        raise InvalidArgumentError(f"expected a {dim}x{dim} density matrix, got {rho.shape}")
    h = build_static_hamiltonian(model) + build_drive_hamiltonian(model, drives, t)
    out = -1j * (h @ rho - rho @ h)
    for a, gamma in collapse_ops(model):
        ad = a.conj().T
        ada = ad @ a
        out += 0.5 * gamma * (2 * a @ rho @ ad - rho @ ada - ada @ rho)
    return out


# superoperators acting on row-major vectorized density matrices


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Matrix of ``rho -> -i [h, rho]``."""
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def dissipator_superop(a: np.ndarray, gamma: float) -> np.ndarray:
    eye = np.eye(a.shape[0])
    ada = a.conj().T @ a
    return 0.5 * gamma * (2 * np.kron(a, a.conj()) - np.kron(eye, ada.T) - np.kron(ada, eye))
