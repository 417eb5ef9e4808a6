"""Adaptive Dormand-Prince 5(4) integration of the Lindblad master equation.

The drive quadratures are held constant over each sample period, so the
generator is smooth only between sample boundaries. The time axis is cut
into segments at every boundary where a sample value changes and at every
requested output time; the integrator never steps across a cut. Inside a
segment the generator is ``L_const + sum_j f_j(t) M_j`` with
``f_j(t) = a_j cos(w_j t) + b_j sin(w_j t)``. Segments whose generator is
constant (no drive, equal frames) are propagated exactly with a matrix
exponential, which keeps long idle delays cheap.

Integration always runs in one frame rotating at a common frequency w0 for
every transmon: idle exchange coupling is then static and idle segments
stay exact. The rotating frame drops the counter-rotating drive terms; the
lab frame keeps them, so it solves the lab-frame equation exactly without
following the bare precession at the qubit frequency. Returned states are
mapped to the reporting frame (per-transmon frames, or the lab) with the
diagonal unitary ``exp(-i sum_i (w0 - f_i) N_i t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from ..errors import InvalidArgumentError, SolverError
from .hamiltonian import (
    _number_terms,
    collapse_ops,
    commutator_superop,
    dissipator_superop,
    drive_operator,
    embed,
    exchange_operator,
    ladder_ops,
)
from .model import DeviceModel, DriveTerm, SolverSettings, Trajectory

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B_LOW = np.array(
    [5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_LOW

_SAFETY = 0.9
# rtol/atol are treated as targets for the accumulated error; each step is
# held to this fraction of them since local errors add up over many steps
_LOCAL = 0.1
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class _Segment:
    start: float
    stop: float
    constant: np.ndarray
    mats: Optional[np.ndarray]
    cos_coef: np.ndarray
    sin_coef: np.ndarray
    freqs: np.ndarray
    max_step: float

    def __post_init__(self):
        if self.mats is None:
            return
        # one cos and one sin matrix per distinct frequency, stacked under
        # the constant part so that rhs is a single matrix product
        n = self.constant.shape[0]
        self._freqs = np.unique(self.freqs)
        blocks = [self.constant]
        for w in self._freqs:
            pick = self.freqs == w
            blocks.append(np.tensordot(self.cos_coef[pick], self.mats[pick], axes=1))
            blocks.append(np.tensordot(self.sin_coef[pick], self.mats[pick], axes=1))
        self._stack = np.concatenate(blocks).reshape(len(blocks) * n, n)
        self._coef = np.empty(len(blocks))
        self._coef[0] = 1.0

    def rhs(self, t: float, v: np.ndarray) -> np.ndarray:
        if self.mats is None:
            return self.constant @ v
        phase = self._freqs * t
        self._coef[1::2] = np.cos(phase)
        self._coef[2::2] = np.sin(phase)
        return self._coef @ (self._stack @ v).reshape(len(self._coef), -1)


class _GeneratorFactory:
    """Precomputed superoperators shared by all segments of one evolution."""

    def __init__(self, model: DeviceModel, drives: Sequence[DriveTerm], frame: str, frames):
        self.model = model
        self.counter_rotating = frame == "lab"
        levels = model.levels
        dissipation = sum(
            (dissipator_superop(a, g) for a, g in collapse_ops(model)),
            np.zeros((model.dimension**2,) * 2, dtype=complex),
        )
        self.drive_x = {}
        self.drive_y = {}
        for drive in drives:
            i = drive.transmon
            if i not in self.drive_x:
                self.drive_x[i] = commutator_superop(drive_operator(model, i))
                b, bd = ladder_ops(levels[i])
                self.drive_y[i] = commutator_superop(embed(1j * (bd - b), i, levels))
        self.timed = []  # (matrix, a, b, w) terms that do not depend on the segment
        self.frames = np.asarray(frames, dtype=float)
        h = _number_terms(model, np.asarray(model.omegas) - self.frames)
        for (i, j), g in model.couplings.items():
            hop = exchange_operator(model, i, j)
            sym = g * (hop + hop.conj().T)
            delta = self.frames[i] - self.frames[j]
            if delta == 0:
                h = h + sym
            else:
                anti = g * 1j * (hop - hop.conj().T)
                self.timed.append((commutator_superop(sym), 1.0, 0.0, delta))
                self.timed.append((commutator_superop(anti), 0.0, 1.0, delta))
        self.constant = commutator_superop(0.5 * (h + h.conj().T)) + dissipation

    def segment(self, start, stop, amplitudes, max_step) -> _Segment:
        model = self.model
        constant = self.constant
        terms = list(self.timed)
        for drive, (ox, oy) in amplitudes:
            if ox == 0 and oy == 0:
                continue
            i = drive.transmon
            half = 0.5 * model.drive_couplings[i]
            delta = drive.carrier - self.frames[i]
            if delta == 0:
                constant = constant + half * ox * self.drive_x[i] + half * oy * self.drive_y[i]
            else:
                terms.append((self.drive_x[i], half * ox, half * oy, delta))
                terms.append((self.drive_y[i], half * oy, -half * ox, delta))
            if self.counter_rotating:
                total = drive.carrier + self.frames[i]
                terms.append((self.drive_x[i], half * ox, half * oy, total))
                terms.append((self.drive_y[i], -half * oy, half * ox, total))
        if terms:
            mats = np.stack([m for m, *_ in terms])
            a = np.array([t[1] for t in terms])
            b = np.array([t[2] for t in terms])
            w = np.array([t[3] for t in terms])
        else:
            mats, a, b, w = None, np.zeros(0), np.zeros(0), np.zeros(0)
        return _Segment(start, stop, constant, mats, a, b, w, max_step)


def _cut_points(drives: Sequence[DriveTerm], t0: float, t1: float) -> list[float]:
    cuts = {t0, t1}
    for drive in drives:
        wf = drive.waveform
        n = len(wf)
        if n == 0:
            continue
        x, y = wf.samples_x, wf.samples_y
        changed = np.flatnonzero((x[1:] != x[:-1]) | (y[1:] != y[:-1])) + 1
        for k in np.concatenate([[0], changed, [n]]):
            t = wf.start_time + k / wf.sampling_rate
            if t0 < t < t1:
                cuts.add(float(t))
    return sorted(cuts)


def _error_norm(err, y, y_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


def _integrate_segment(seg: _Segment, y: np.ndarray, h: Optional[float], rtol, atol):
    t = seg.start
    k1 = seg.rhs(t, y)
    if h is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((np.abs(y) / scale) ** 2))
        d1 = np.sqrt(np.mean((np.abs(k1) / scale) ** 2))
        h = 1e-3 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    ks = np.empty((7, y.size), dtype=complex)
    while t < seg.stop:
        remaining = seg.stop - t
        step = min(h, seg.max_step, remaining)
        last = step >= remaining * (1 - 1e-12)
        if last:
            step = remaining
        if step < 1e-12 * max(1.0, abs(t)):
            raise SolverError("step size underflow", t)
        ks[0] = k1
        for s in range(1, 7):
            acc = y + step * (_A[s, :s] @ ks[:s])
            ks[s] = seg.rhs(t + _C[s] * step, acc)
        y_new = acc  # stage 7 is evaluated at the 5th-order solution
        err = step * (_E @ ks)
        norm = _error_norm(err, y, y_new, rtol, atol)
        if not np.isfinite(norm):
            raise SolverError("non-finite state", t)
        if norm <= 1.0:
            t = seg.stop if last else t + step
            y = y_new
            k1 = ks[6].copy()
            factor = _MAX_FACTOR if norm == 0 else min(_MAX_FACTOR, _SAFETY * norm ** -0.2)
            # a step clipped to the segment end says nothing about the next one
            if not (last and step < min(h, seg.max_step)):
                h = step * factor
        else:
            h = step * max(_MIN_FACTOR, _SAFETY * norm ** -0.2)
    return y, h


def _frame_energies(model: DeviceModel, frequencies: Sequence[float]) -> np.ndarray:
    """Diagonal of ``sum_i frequencies[i] N_i``."""
    energy = np.zeros(model.dimension)
    for i, d in enumerate(model.levels):
        number = embed(np.diag(np.arange(d, dtype=float)), i, model.levels)
        energy += frequencies[i] * np.diag(number).real
    return energy


def _default_frames(model: DeviceModel, drives: Sequence[DriveTerm]) -> list[float]:
    frames = list(model.omegas)
    seen = set()
    for drive in drives:
        if drive.transmon not in seen:
            frames[drive.transmon] = drive.carrier
            seen.add(drive.transmon)
    return frames


def evolve(
    model: DeviceModel,
    drives: Sequence[DriveTerm],
    t_span: tuple[float, float],
    rho0: np.ndarray,
    sample_times: Sequence[float],
    settings: SolverSettings = SolverSettings(),
    frame_frequencies: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate the master equation and return states at ``sample_times``.

    In the rotating frame each transmon rotates at ``frame_frequencies``
    (default: the carrier of its first drive, else its own frequency) and
    counter-rotating drive terms are dropped; coherences are reported in
    that frame. The lab frame is exact and reports lab-frame states.
    """
    t0, t1 = map(float, t_span)
    dim = model.dimension
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise InvalidArgumentError(f"expected a {dim}x{dim} initial state, got {rho0.shape}")
    if t1 < t0:
        raise InvalidArgumentError("t_span must be increasing")
    times = np.asarray(sample_times, dtype=float)
    if times.size and (times[0] < t0 or times[-1] > t1 or np.any(np.diff(times) <= 0)):
        raise InvalidArgumentError("sample_times must be strictly increasing inside t_span")
    for drive in drives:
        if not 0 <= drive.transmon < model.n_transmons:
            raise InvalidArgumentError(f"drive on missing transmon {drive.transmon}")

    if settings.frame == "lab":
        reporting = np.zeros(model.n_transmons)
        common = float(np.mean(model.omegas))
    else:
        reporting = np.asarray(
            _default_frames(model, drives) if frame_frequencies is None else frame_frequencies, dtype=float
        )
        common = float(np.mean(reporting))
    factory = _GeneratorFactory(model, drives, settings.frame, np.full(model.n_transmons, common))
    energy = _frame_energies(model, common - reporting)
    remap = bool(np.any(energy != 0))

    def to_reporting(rho: np.ndarray, t: float) -> np.ndarray:
        phase = np.exp(-1j * energy * t)
        return phase[:, None] * rho * phase.conj()[None, :]

    cuts = sorted(set(_cut_points(drives, t0, t1)) | set(times.tolist()))
    wanted = set(times.tolist())
    states = []
    y = (to_reporting(rho0, -t0) if remap else rho0).reshape(-1).copy()
    if t0 in wanted:
        states.append(0.5 * (rho0 + rho0.conj().T))
    h = None
    for start, stop in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (start + stop)
        amplitudes = [(d, d.amplitudes(mid)) for d in drives]
        active = [d.waveform.sampling_rate for d, (ox, oy) in amplitudes if ox != 0 or oy != 0]
        max_step = settings.max_step_ns
        if active:
            max_step = min(max_step, 1.0 / max(active))
        seg = factory.segment(start, stop, amplitudes, max_step)
        if seg.mats is None:
            y = expm(seg.constant * (stop - start)) @ y
        else:
            y, h = _integrate_segment(seg, y, h, _LOCAL * settings.rtol, _LOCAL * settings.atol)
        if stop in wanted:
            rho = y.reshape(dim, dim)
            if remap:
                rho = to_reporting(rho, stop)
            states.append(0.5 * (rho + rho.conj().T))
    return Trajectory(times.copy(), tuple(states))
