"""Emulator controller bridging platform sequences and the simulation engine."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import (
    DeviceModel,
    DriveTerm,
    SolverSettings,
    Trajectory,
    evolve,
    ground_state,
    hz_to_rad_per_ns,
    reduced_populations,
)
from .errors import InvalidArgumentError, NotFoundError, NumericalStateError, UnsupportedError
from .execution import (
    AcquisitionMode,
    ExecutionOptions,
    derive_seed,
    grid_points,
    grid_shape,
    substitute,
)
from .platform import Controller, ElementKind, Platform
from .pulses import (
    Acquisition,
    ChannelRole,
    Pulse,
    PulseSequence,
    UnrollMap,
    Waveform,
    pulse_quadratures,
)


@dataclass(frozen=True)
class SimulationSettings:
    levels_per_transmon: int = 3
    frame: str = "lab"
    solver: SolverSettings = field(default_factory=SolverSettings)
    trajectory_stride_ns: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.levels_per_transmon < 2:
            raise InvalidArgumentError("levels_per_transmon must be at least 2")
        if self.solver.frame != self.frame:
            object.__setattr__(
                self,
                "solver",
                SolverSettings(self.solver.rtol, self.solver.atol, self.solver.max_step_ns, self.frame),
            )
        if not self.trajectory_stride_ns > 0:
            raise InvalidArgumentError("trajectory stride must be positive")


@dataclass(frozen=True)
class AcquisitionSpec:
    id: str
    transmon: int
    end_time: float
    v0: float = -1.0
    v1: float = 1.0
    sigma: float = 0.0


@dataclass(frozen=True)
class OverlapSeries:
    """Population of every level of one transmon along a trajectory."""

    times: np.ndarray
    overlaps: np.ndarray  # shape (levels, len(times))

    def __getitem__(self, level: int) -> np.ndarray:
        return self.overlaps[level]

    @property
    def levels(self) -> int:
        return self.overlaps.shape[0]

    def to_csv(self, path) -> Path:
        path = Path(path)
        header = ",".join(["time_ns"] + [f"p{m}" for m in range(self.levels)])
        table = np.column_stack([self.times, self.overlaps.T])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.10g")
        return path

    @classmethod
    def from_csv(cls, path) -> "OverlapSeries":
        table = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
        return cls(table[:, 0], table[:, 1:].T)


def transmon_index(platform: Platform) -> dict[str, int]:
    """Qubits are modeled in runcard order; couplers are not modeled."""
    return {name: k for k, name in enumerate(platform.qubits)}


def build_device_model(platform: Platform, settings: SimulationSettings) -> DeviceModel:
    index = transmon_index(platform)
    omegas, alphas, t1, t2, kappa = [], [], [], [], []
    for name in platform.qubits:
        element = platform.elements[name]
        if element.frequency is None or element.drive_coupling is None:
            raise InvalidArgumentError(f"qubit {name!r} lacks frequency or drive coupling")
        omegas.append(hz_to_rad_per_ns(element.frequency))
        alphas.append(hz_to_rad_per_ns(element.anharmonicity))
        t1.append(element.t1)
        t2.append(element.t2)
        kappa.append(hz_to_rad_per_ns(element.drive_coupling))
    couplings = {}
    for pair in platform.pairs:
        if pair.a in index and pair.b in index:
            couplings[(index[pair.a], index[pair.b])] = hz_to_rad_per_ns(pair.coupling_strength)
    return DeviceModel(
        omegas=omegas,
        alphas=alphas,
        levels=settings.levels_per_transmon,
        t1=t1,
        t2=t2,
        drive_couplings=kappa,
        couplings=couplings,
    )


def sequence_to_drives(
    platform: Platform, sequence: PulseSequence, configs: Optional[dict] = None
) -> list[DriveTerm]:
    """One drive term per drive channel carrying pulses.

    The waveform starts at the first pulse; gaps between pulses are filled
    with zeros. Probe pulses are inert since no resonator is modeled.
    """
    configs = platform.configs if configs is None else configs
    index = transmon_index(platform)
    placed: dict[str, list] = {}
    for channel, item, start in sequence.schedule():
        if channel.role is ChannelRole.FLUX and isinstance(item, Pulse):
            raise UnsupportedError("flux pulses are not part of the emulator model")
        element = platform.element_of_channel(channel)
        if element.kind is not ElementKind.QUBIT or element.name not in index:
            raise NotFoundError(f"channel {channel.name!r} maps to no modeled transmon")
        if channel.role is ChannelRole.DRIVE and isinstance(item, Pulse):
            placed.setdefault(channel.name, []).append((start, item))
    drives = []
    for name, pulses in placed.items():
        config = configs[name]
        rate = config.sampling_rate
        first = pulses[0][0]
        chunks = [(round((start - first) * rate), pulse_quadratures(p, rate)) for start, p in pulses]
        length = max(offset + len(wf) for offset, wf in chunks)
        x = np.zeros(length)
        y = np.zeros(length)
        for offset, wf in chunks:
            x[offset : offset + len(wf)] += wf.samples_x
            y[offset : offset + len(wf)] += wf.samples_y
        transmon = index[platform.element_of_channel(name).name]
        drives.append(
            DriveTerm(transmon, hz_to_rad_per_ns(config.frequency), Waveform(x, y, first, rate))
        )
    return drives


def acquisition_specs(platform: Platform, sequence: PulseSequence) -> list[AcquisitionSpec]:
    """Acquisitions ordered by end time; ties keep sequence order."""
    index = transmon_index(platform)
    specs = []
    for channel, item, start in sequence.schedule():
        if not isinstance(item, Acquisition):
            continue
        qubit = platform.element_of_channel(channel).name
        measure = platform.natives[qubit].measure
        specs.append(
            AcquisitionSpec(item.id, index[qubit], start + item.duration, measure.v0, measure.v1, measure.sigma)
        )
    return sorted(specs, key=lambda s: s.end_time)


def acquire(
    state: np.ndarray,
    spec: AcquisitionSpec,
    mode: AcquisitionMode,
    n_shots: int,
    rng: np.random.Generator,
    levels: Sequence[int],
) -> np.ndarray:
    """Sample single shots of one transmon from a density matrix.

    Any level above the ground state reads as 1. In integration mode the
    discriminated bit selects an in-phase voltage with Gaussian noise.
    """
    populations = reduced_populations(state, levels, spec.transmon)
    if populations.min() < -1e-8:
        raise NumericalStateError(f"negative population {populations.min():.3g}")
    populations = np.clip(populations, 0.0, None)
    populations /= populations.sum()
    outcomes = rng.choice(len(populations), size=n_shots, p=populations)
    bits = (outcomes >= 1).astype(int)
    if AcquisitionMode(mode) is AcquisitionMode.DISCRIMINATION:
        return bits
    voltages = np.where(bits == 1, spec.v1, spec.v0).astype(float)
    if spec.sigma > 0:
        voltages += rng.normal(0.0, spec.sigma, n_shots)
    return voltages


def state_overlaps(trajectory: Trajectory, transmon: int, levels: Sequence[int]) -> OverlapSeries:
    overlaps = np.array(
        [reduced_populations(rho, levels, transmon) for rho in trajectory.states]
    ).T
    return OverlapSeries(np.asarray(trajectory.times), overlaps)


class PulseSimulator(Controller):
    """Controller that integrates the device model instead of driving hardware.

    Every shot starts from the ground state: relaxation between shots is
    assumed complete, so shots are i.i.d. draws from one trajectory.
    """

    supports_unroll = True

    def __init__(self, settings: SimulationSettings = SimulationSettings()):
        self.settings = settings
        self._model = None

    def connect(self, platform: Platform) -> None:
        self._model = build_device_model(platform, self.settings)

    def disconnect(self) -> None:
        self._model = None

    def model(self, platform: Platform) -> DeviceModel:
        # parameters may change between sessions, so only cache while connected
        return self._model if self._model is not None else build_device_model(platform, self.settings)

    def simulate(
        self,
        platform: Platform,
        sequence: PulseSequence,
        configs: Optional[dict] = None,
        sample_times: Optional[Sequence[float]] = None,
    ) -> Trajectory:
        """Trajectory from the ground state, sampled every stride by default."""
        model = self.model(platform)
        drives = sequence_to_drives(platform, sequence, configs)
        end = sequence.duration()
        if sample_times is None:
            stride = self.settings.trajectory_stride_ns
            sample_times = np.append(np.arange(0.0, end, stride), end)
            sample_times = np.unique(sample_times)
        return evolve(model, drives, (0.0, end), ground_state(model), sample_times, self.settings.solver)

    def run(
        self,
        platform: Platform,
        sequence: PulseSequence,
        options: ExecutionOptions,
        seed: int,
        configs: Optional[dict] = None,
    ) -> dict:
        """Shots for every acquisition of one sequence at one grid point."""
        model = self.model(platform)
        specs = acquisition_specs(platform, sequence)
        if not specs:
            return {}
        drives = sequence_to_drives(platform, sequence, configs)
        ends = sorted({s.end_time for s in specs})
        trajectory = evolve(
            model, drives, (0.0, ends[-1]), ground_state(model), ends, self.settings.solver
        )
        states = dict(zip(ends, trajectory.states))
        rng = np.random.default_rng(seed)
        return {
            spec.id: acquire(
                states[spec.end_time], spec, options.acquisition_mode, options.n_shots, rng, model.levels
            )
            for spec in specs
        }

    def _map(self, fn, jobs):
        if self.settings.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(self.settings.workers) as pool:
                return list(pool.map(fn, jobs))
        return [fn(job) for job in jobs]

    def play(self, platform, sequence, configs, options, sweepers, seed) -> dict:
        if not sweepers:
            return self.run(platform, sequence, options, seed, configs)
        points = list(grid_points(sweepers))
        shape = grid_shape(sweepers)

        def job(args):
            flat, (_, values) = args
            seq, cfg = substitute(sequence, configs, sweepers, values)
            return self.run(platform, seq, options, derive_seed(seed, flat), cfg)

        outputs = self._map(job, list(enumerate(points)))
        return {
            key: np.stack([out[key] for out in outputs]).reshape(shape + (options.n_shots,))
            for key in outputs[0]
        }

    def play_unrolled(self, platform, sequence, unrolled: UnrollMap, configs, options, seeds) -> dict:
        """Each unrolled sequence restarts from the ground state at its offset."""
        segments = split_unrolled(sequence, unrolled)
        outputs = self._map(
            lambda args: self.run(platform, args[0], options, args[1], configs),
            list(zip(segments, seeds)),
        )
        merged = {}
        for out in outputs:
            merged.update(out)
        return merged


def split_unrolled(sequence: PulseSequence, unrolled: UnrollMap) -> list[PulseSequence]:
    """Recover the per-sequence pieces of an unrolled sequence."""
    bounds = list(unrolled.offsets[1:]) + [math.inf]
    pieces: list[list] = [[] for _ in unrolled.offsets]
    for channel, item, start in sequence.schedule():
        if item.uid in unrolled.padding:
            continue
        k = next(i for i, b in enumerate(bounds) if start < b - 1e-9)
        pieces[k].append((channel, item))
    return [PulseSequence(p) for p in pieces]
