"""Ideal execution time and the real/ideal timing ledger."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from ..errors import ValidationError


def t_ideal(durations_ns: Iterable[float], n_shots: int, relaxation_ns: float) -> float:
    """Seconds the qubit is busy: ``n_shots * sum(T_sequence + T_relaxation)``."""
    durations = list(durations_ns)
    if any(d < 0 for d in durations):
        raise ValidationError("sequence durations must be non-negative")
    # whole or binary-fraction ns sum exactly, leaving one rounding in the division
    total = math.fsum(durations) + len(durations) * relaxation_ns
    return n_shots * total / 1e9


@dataclass
class TimingLedger:
    """Timing of one routine.

    ``t_ideal`` is simulated qubit time. On the emulator the instrument share
    of the real time is the controller's wall clock, so
    ``t_real = t_ideal + t_framework + t_controller``; ``t_wall`` keeps the
    raw wall clock of acquisition (analysis excluded).
    """

    t_ideal: float
    t_framework: float
    t_controller: float
    t_wall: float
    t_analysis: float = 0.0

    @property
    def t_real(self) -> float:
        return self.t_ideal + self.t_framework + self.t_controller

    @property
    def t_overhead(self) -> float:
        return self.t_real - self.t_ideal

    @property
    def framework_share(self) -> float:
        """Fraction of the acquisition wall time spent outside the controller."""
        return self.t_framework / self.t_wall if self.t_wall > 0 else 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(t_real=self.t_real, t_overhead=self.t_overhead, framework_share=self.framework_share)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "TimingLedger":
        return cls(
            t_ideal=data["t_ideal"],
            t_framework=data["t_framework"],
            t_controller=data["t_controller"],
            t_wall=data["t_wall"],
            t_analysis=data.get("t_analysis", 0.0),
        )


REPORT_COLUMNS = ("routine", "t_ideal_s", "t_real_s", "ratio")


def benchmark_report(ledgers: Mapping[str, object]) -> list[dict]:
    """Absolute times and real/ideal ratios per routine.

    Entries may be ledgers or plain ``(t_ideal, t_real)`` pairs.
    """
    rows = []
    for name, ledger in ledgers.items():
        if isinstance(ledger, TimingLedger):
            ideal, real = ledger.t_ideal, ledger.t_real
        else:
            ideal, real = ledger
        if ideal < 0 or real < ideal:
            raise ValidationError(f"{name}: real time {real} below ideal time {ideal}")
        rows.append(
            {"routine": name, "t_ideal_s": ideal, "t_real_s": real, "ratio": real / ideal if ideal > 0 else float("inf")}
        )
    return rows
