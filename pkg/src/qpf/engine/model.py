"""Data types consumed by the simulation engine.

Internal units: time in ns, angular frequencies in rad/ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..pulses import Waveform

TWO_PI = 2 * math.pi


def hz_to_rad_per_ns(value_hz: float) -> float:
    return TWO_PI * value_hz * 1e-9


@dataclass(frozen=True)
class DeviceModel:
    """Physical parameters of N coupled transmons.

    ``t1``/``t2`` entries may be ``None`` to drop the corresponding
    dissipator. ``couplings`` maps index pairs ``(i, j)`` with ``i < j`` to
    the exchange strength in rad/ns.
    """

    omegas: tuple
    alphas: tuple
    levels: tuple
    t1: tuple = None
    t2: tuple = None
    drive_couplings: tuple = None
    couplings: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.omegas)
        levels = self.levels
        if isinstance(levels, int):
            levels = (levels,) * n
        fill = lambda value, default: tuple(value) if value is not None else (default,) * n
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "levels", tuple(int(d) for d in levels))
        object.__setattr__(self, "t1", fill(self.t1, None))
        object.__setattr__(self, "t2", fill(self.t2, None))
        object.__setattr__(self, "drive_couplings", fill(self.drive_couplings, 1.0))
        couplings = {}
        for (i, j), g in dict(self.couplings).items():
            if i == j:
                raise InvalidArgumentError("coupling needs two distinct transmons")
            key = (min(i, j), max(i, j))
            couplings[key] = couplings.get(key, 0.0) + float(g)
        object.__setattr__(self, "couplings", couplings)
        for name in ("alphas", "levels", "t1", "t2", "drive_couplings"):
            if len(getattr(self, name)) != n:
                raise InvalidArgumentError(f"{name} must have one entry per transmon")
        if any(d < 2 for d in self.levels):
            raise InvalidArgumentError("every transmon needs at least 2 levels")
        for t in self.t1 + self.t2:
            if t is not None and not t > 0:
                raise InvalidArgumentError("relaxation times must be positive")
        for i, j in self.couplings:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidArgumentError(f"coupling ({i}, {j}) references a missing transmon")

    @property
    def n_transmons(self) -> int:
        return len(self.omegas)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.levels))


@dataclass(frozen=True)
class DriveTerm:
    """Drive on one transmon: carrier in rad/ns plus baseband quadratures."""

    transmon: int
    carrier: float
    waveform: Waveform

    def __post_init__(self):
        if not (np.all(np.isfinite(self.waveform.samples_x)) and np.all(np.isfinite(self.waveform.samples_y))):
            raise InvalidArgumentError("drive samples must be finite")

    def amplitudes(self, t: float) -> tuple[float, float]:
        """Zero-order-hold quadratures at time ``t``; zero outside the waveform."""
        wf = self.waveform
        k = int(math.floor((t - wf.start_time) * wf.sampling_rate))
        if 0 <= k < len(wf):
            return float(wf.samples_x[k]), float(wf.samples_y[k])
        return 0.0, 0.0


@dataclass(frozen=True)
class SolverSettings:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step_ns: float = 0.1
    frame: str = "lab"

    def __post_init__(self):
        if self.frame not in ("lab", "rotating"):
            raise InvalidArgumentError(f"frame must be 'lab' or 'rotating', got {self.frame!r}")
        if not (self.rtol > 0 and self.atol > 0 and self.max_step_ns > 0):
            raise InvalidArgumentError("solver tolerances and max step must be positive")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def ground_state(model: DeviceModel) -> np.ndarray:
    rho = np.zeros((model.dimension, model.dimension), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def basis_state(model: DeviceModel, occupation: Sequence[int]) -> np.ndarray:
    """Projector on the product state with the given level per transmon."""
    index = int(np.ravel_multi_index(tuple(occupation), model.levels))
    rho = np.zeros((model.dimension, model.dimension), dtype=complex)
    rho[index, index] = 1.0
    return rho


def reduced_populations(rho: np.ndarray, levels: Sequence[int], index: int) -> np.ndarray:
    """Diagonal of the reduced state of transmon ``index``."""
    diag = np.real(np.diagonal(rho)).reshape(tuple(levels))
    axes = tuple(k for k in range(len(levels)) if k != index)
    return diag.sum(axis=axes) if axes else diag


def check_density_matrix(
    rho: np.ndarray,
    trace_tol: float = 1e-8,
    herm_tol: float = 1e-10,
    pos_tol: float = 1e-8,
) -> Optional[str]:
    """Return a description of the first violated invariant, or None."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        return "not hermitian"
    if abs(np.trace(rho).real - 1) > trace_tol:
        return f"trace {np.trace(rho).real!r}"
    low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if low < -pos_tol:
        return f"negative eigenvalue {low!r}"
    return None
