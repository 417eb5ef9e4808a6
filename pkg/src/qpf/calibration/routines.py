"""Single-qubit calibration routines and their timing ledgers.

Every routine builds its sequences against the platform natives, executes
them once through ``Platform.execute``, fits the result and records how the
wall clock splits between framework and controller.
"""

from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..compiler import Circuit, Measure, compile_circuit
from ..errors import AnalysisError, NotFoundError, ValidationError
from ..execution import (
    AcquisitionMode,
    AveragingMode,
    ExecutionOptions,
    ExecutionResult,
    Parameter,
    Sweeper,
)
from ..platform import Platform, fresh
from ..pulses import Acquisition, Delay, Pulse, PulseSequence, Rectangular
from ..results import save_results
from .clifford import rb_sequence
from .fitting import (
    FitResult,
    fit_damped_cosine,
    fit_exponential,
    fit_lorentzian,
    fit_rb,
    fit_sinusoid,
)
from .timing import TimingLedger

ROUTINES = (
    "qubit_spectroscopy",
    "rabi_amplitude",
    "ramsey_detuned",
    "t1",
    "single_shot_classification",
    "standard_rb",
)

# desk-scale defaults; None means "derived from the runcard"
DEFAULTS = {
    "qubit_spectroscopy": {
        "span_hz": 4e6,
        "points": 41,
        "duration_ns": 2000.0,
        "amplitude": None,
        "n_shots": 1000,
    },
    "rabi_amplitude": {"max_amplitude": 1.0, "points": 41, "n_shots": 1000},
    "ramsey_detuned": {"detuning_hz": 250e3, "max_delay_ns": 20000.0, "points": 81, "n_shots": 1000},
    "t1": {"max_delay_ns": None, "points": 41, "n_shots": 1000},
    "single_shot_classification": {"n_shots": 5000},
    "standard_rb": {"depths": (1, 5, 10, 20, 30, 50), "samples": 10, "n_shots": 500},
}

_COUNTS = ("points", "n_shots", "samples")
_POSITIVE = ("span_hz", "duration_ns", "amplitude", "max_amplitude", "max_delay_ns")


@dataclass(frozen=True)
class Routine:
    name: str
    qubit: str
    params: dict = field(default_factory=dict)
    relaxation_ns: float = 100_000.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.name not in DEFAULTS:
            raise NotFoundError(f"unknown routine {self.name!r}; expected one of {', '.join(ROUTINES)}")
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise ValidationError(f"{self.name} has no parameter(s) {', '.join(sorted(unknown))}")
        merged = {**DEFAULTS[self.name], **self.params}
        for key, value in merged.items():
            if key == "depths" or value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float, np.number)) or not math.isfinite(value):
                raise ValidationError(f"{key} must be a finite number, got {value!r}")
            if key in _POSITIVE and value <= 0:
                raise ValidationError(f"{key} must be positive, got {value}")
        for key in _COUNTS:
            if key in merged and (int(merged[key]) != merged[key] or merged[key] < 1):
                raise ValidationError(f"{key} must be a positive integer, got {merged[key]}")
            if key in merged:
                merged[key] = int(merged[key])
        if "depths" in merged:
            try:
                depths = [int(d) for d in np.atleast_1d(merged["depths"])]
                if list(np.atleast_1d(merged["depths"])) != depths:
                    raise ValueError
            except (TypeError, ValueError):
                raise ValidationError(f"RB depths must be integers, got {merged['depths']!r}") from None
            if not depths or min(depths) < 0 or np.any(np.diff(depths) <= 0):
                raise ValidationError("RB depths must be non-negative and strictly increasing")
            merged["depths"] = tuple(depths)
        object.__setattr__(self, "params", merged)

    def __getitem__(self, key):
        return self.params[key]


@dataclass
class RoutineRun:
    """Raw data, fit and timing of one routine; unpacks as a 3-tuple."""

    routine: Routine
    raw: ExecutionResult
    fit: FitResult
    timing: TimingLedger
    axes: list = field(default_factory=list)  # [{"name", "values"}] per leading data axis

    def __iter__(self):
        return iter((self.raw, self.fit, self.timing))


def readout(platform: Platform, qubit: str, start: float) -> list:
    """Probe and acquisition entries starting at ``start`` ns."""
    element = platform.elements[qubit]
    measure = platform.natives[qubit].measure
    entries = []
    for channel, item in (
        (element.probe, fresh(measure.probe)),
        (element.acquisition, Acquisition(measure.acquisition_duration, qubit)),
    ):
        entries += [(channel, Delay(start)), (channel, item)]
    return entries


def _options(routine: Routine, **kw) -> ExecutionOptions:
    return ExecutionOptions(
        n_shots=routine["n_shots"], relaxation_time=routine.relaxation_ns, seed=routine.seed, **kw
    )


def _averaged(routine: Routine) -> ExecutionOptions:
    return _options(routine, averaging=AveragingMode.AVERAGED)


def _stack(results: list[ExecutionResult], shape: tuple = ()) -> ExecutionResult:
    """Merge a batch into one result with the sequence index as leading axes."""
    first = results[0]
    data = {}
    for key in first:
        stacked = np.stack([r[key] for r in results])
        data[key] = stacked.reshape(tuple(shape) + stacked.shape[1:]) if shape else stacked
    return ExecutionResult(data, (), first.seed, first.options, first.stats)


# routine bodies: each returns (raw, axes, analysis) where analysis is a
# zero-argument callable producing the FitResult


def _spectroscopy(platform: Platform, routine: Routine, qubit: str):
    element = platform.elements[qubit]
    duration = routine["duration_ns"]
    amplitude = routine["amplitude"]
    if amplitude is None:
        # pulse area of pi on resonance
        amplitude = min(1.0, 1.0 / (2 * element.drive_coupling * duration * 1e-9))
    center = platform.configs[element.drive.name].frequency
    offsets = np.linspace(-routine["span_hz"] / 2, routine["span_hz"] / 2, routine["points"])
    pulse = Pulse(duration, amplitude, Rectangular())
    sequence = PulseSequence([(element.drive, pulse)] + readout(platform, qubit, duration))
    sweeper = Sweeper(Parameter.FREQUENCY, center + offsets, element.drive)
    raw = platform.execute(sequence, _averaged(routine), [sweeper])[0]

    def analyse():
        fit = fit_lorentzian(offsets, raw[qubit])
        fit.derived["frequency_hz"] = center + fit.params["x0"]
        fit.derived["fwhm_hz"] = 2 * abs(fit.params["width"])
        return fit

    return raw, [{"name": "detuning_hz", "values": offsets}], analyse


def _rabi(platform: Platform, routine: Routine, qubit: str):
    element = platform.elements[qubit]
    rx = fresh(platform.natives[qubit].rx)
    amplitudes = np.linspace(0.0, routine["max_amplitude"], routine["points"])
    sequence = PulseSequence([(element.drive, rx)] + readout(platform, qubit, rx.duration))
    raw = platform.execute(sequence, _averaged(routine), [Sweeper(Parameter.AMPLITUDE, amplitudes, rx)])[0]

    def analyse():
        fit = fit_sinusoid(amplitudes, raw[qubit])
        f, phase = fit.params["frequency"], fit.params["phase"]
        if f <= 0:
            raise AnalysisError("no Rabi oscillation found", data=(amplitudes, raw[qubit]))
        # first maximum of offset + A cos(2 pi f x + phase), A >= 0
        fit.derived["pi_amplitude"] = ((-phase) % (2 * math.pi)) / (2 * math.pi * f)
        return fit

    return raw, [{"name": "amplitude", "values": amplitudes}], analyse


def _ramsey(platform: Platform, routine: Routine, qubit: str):
    element = platform.elements[qubit]
    rx90 = platform.natives[qubit].rx90
    detuning = routine["detuning_hz"]
    delays = np.linspace(0.0, routine["max_delay_ns"], routine["points"])
    sequences = []
    for tau in delays:
        # the detuning is a virtual phase advance of the second pulse
        second = fresh(rx90, relative_phase=rx90.relative_phase + 2 * math.pi * detuning * tau * 1e-9)
        drive = [(element.drive, fresh(rx90))]
        if tau > 0:
            drive.append((element.drive, Delay(float(tau))))
        drive.append((element.drive, second))
        sequences.append(PulseSequence(drive + readout(platform, qubit, 2 * rx90.duration + tau)))
    raw = _stack(platform.execute(sequences, _averaged(routine)))

    def analyse():
        fit = fit_damped_cosine(delays, raw[qubit])
        fit.derived["detuning_hz"] = fit.params["frequency"] * 1e9
        fit.derived["t2_star_ns"] = fit.params["decay"]
        return fit

    return raw, [{"name": "delay_ns", "values": delays}], analyse


def _t1(platform: Platform, routine: Routine, qubit: str):
    element = platform.elements[qubit]
    rx = fresh(platform.natives[qubit].rx)
    max_delay = routine["max_delay_ns"]
    if max_delay is None:
        # five time constants under the gamma = 2 pi / T1 convention
        max_delay = 5 * element.t1 / (2 * math.pi) if element.t1 else 100_000.0
    delays = np.linspace(0.0, max_delay, routine["points"])
    entries = readout(platform, qubit, rx.duration)
    waits = [item for _, item in entries if isinstance(item, Delay)]
    sequence = PulseSequence([(element.drive, rx)] + entries)
    sweeper = Sweeper(Parameter.DELAY_DURATION, rx.duration + delays, waits)
    raw = platform.execute(sequence, _averaged(routine), [sweeper])[0]

    def analyse():
        fit = fit_exponential(delays, raw[qubit])
        fit.derived["decay_ns"] = fit.params["decay"]
        fit.derived["t1_ns"] = 2 * math.pi * fit.params["decay"]
        return fit

    return raw, [{"name": "delay_ns", "values": delays}], analyse


def classify(zeros: np.ndarray, ones: np.ndarray) -> tuple[float, float]:
    """Threshold maximizing assignment fidelity; states above it read as 1.

    Returns ``(threshold, fidelity)`` with
    ``fidelity = 1 - (P(1|0) + P(0|1)) / 2``.
    """
    zeros = np.sort(np.asarray(zeros, dtype=float))
    ones = np.sort(np.asarray(ones, dtype=float))
    sign = 1.0 if np.mean(ones) >= np.mean(zeros) else -1.0
    z, o = sign * zeros, sign * ones
    z.sort()
    o.sort()
    candidates = np.unique(np.concatenate([z, o]))
    # fraction of each population strictly above each candidate
    above_z = 1 - np.searchsorted(z, candidates, side="right") / len(z)
    above_o = 1 - np.searchsorted(o, candidates, side="right") / len(o)
    fidelity = 1 - (above_z + (1 - above_o)) / 2
    k = int(np.argmax(fidelity))
    upper = candidates[k + 1] if k + 1 < len(candidates) else candidates[k]
    threshold = sign * 0.5 * (candidates[k] + upper)
    return float(threshold), float(fidelity[k])


def _single_shot(platform: Platform, routine: Routine, qubit: str):
    element = platform.elements[qubit]
    rx = platform.natives[qubit].rx
    ground = PulseSequence(readout(platform, qubit, 0.0))
    excited = PulseSequence([(element.drive, fresh(rx))] + readout(platform, qubit, rx.duration))
    options = _options(routine, acquisition_mode=AcquisitionMode.INTEGRATION)
    raw = _stack(platform.execute([ground, excited], options))

    def analyse():
        zeros, ones = raw[qubit][0], raw[qubit][1]
        threshold, fidelity = classify(zeros, ones)
        return FitResult(
            "threshold",
            {"threshold": threshold, "mean_0": float(np.mean(zeros)), "mean_1": float(np.mean(ones))},
            {"threshold": 0.0, "mean_0": float(np.std(zeros) / np.sqrt(len(zeros))),
             "mean_1": float(np.std(ones) / np.sqrt(len(ones)))},
            fidelity,
            {"assignment_fidelity": fidelity},
        )

    return raw, [{"name": "prepared_state", "values": [0, 1]}], analyse


def _rb(platform: Platform, routine: Routine, qubit: str):
    depths = routine["depths"]
    samples = routine["samples"]
    rng = np.random.default_rng(routine.seed)
    sequences = []
    for depth in depths:
        for _ in range(samples):
            gates = rb_sequence(depth, rng, qubit) + [Measure(qubit)]
            sequences.append(compile_circuit(Circuit.from_gates(gates), platform))
    raw = _stack(platform.execute(sequences, _averaged(routine)), (len(depths), samples))

    def analyse():
        survival = 1 - raw[qubit]
        fit = fit_rb(depths, survival.mean(axis=1))
        fit.derived["average_gate_fidelity"] = (1 + fit.params["p"]) / 2
        return fit

    axes = [{"name": "depth", "values": list(depths)}, {"name": "sample", "values": list(range(samples))}]
    return raw, axes, analyse


_BODIES: dict[str, Callable] = {
    "qubit_spectroscopy": _spectroscopy,
    "rabi_amplitude": _rabi,
    "ramsey_detuned": _ramsey,
    "t1": _t1,
    "single_shot_classification": _single_shot,
    "standard_rb": _rb,
}


def run_routine(platform: Platform, routine: Routine) -> RoutineRun:
    """Build, execute and fit ``routine``.

    Raises AnalysisError when the fit fails; its ``data`` is then the raw
    ExecutionResult.
    """
    qubit = routine.qubit
    if qubit not in platform.elements:
        raise NotFoundError(f"unknown qubit {qubit!r}")
    if qubit not in platform.natives:
        raise ValidationError(f"qubit {qubit!r} has no native gates to calibrate with")
    # garbage left by earlier work would otherwise be collected, and billed, here
    gc.collect()
    tic = time.perf_counter()
    raw, axes, analyse = _BODIES[routine.name](platform, routine, qubit)
    wall = time.perf_counter() - tic
    controller = raw.stats.controller_seconds
    tic = time.perf_counter()
    try:
        fit = analyse()
    except AnalysisError as exc:
        exc.data = raw
        exc.axes = axes
        raise
    ledger = TimingLedger(
        t_ideal=raw.stats.ideal_ns * 1e-9,
        t_framework=max(wall - controller, 0.0),
        t_controller=controller,
        t_wall=wall,
        t_analysis=time.perf_counter() - tic,
    )
    return RoutineRun(routine, raw, fit, ledger, axes)


def save_run(run: RoutineRun, directory) -> None:
    """Write a routine run in the platform result format."""
    save_results(
        directory,
        run.raw.data,
        grids=run.axes,
        options=run.raw.options.to_dict(),
        seed=run.raw.seed,
        timing=run.timing.to_dict(),
        fit=run.fit.to_dict(),
        extra={"routine": run.routine.name, "qubit": run.routine.qubit, "params": run.routine.params},
    )
