"""Least-squares fits used by the calibration routines.

Initial guesses are analytic (FFT peak for oscillations, log-linear
regression for decays); refinement is scipy's trust-region reflective
least squares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from ..errors import AnalysisError

TOLERANCE = 1e-9
FLAT = 1e-12  # peak-to-peak below this means no signal
RB_RESOLVED = 0.1  # largest standard error on A or B that still counts as a free fit


@dataclass
class FitResult:
    model: str
    params: dict
    errors: dict
    goodness: float
    derived: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if key in self.params:
            return self.params[key]
        return self.derived[key]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": {k: float(v) for k, v in self.params.items()},
            "errors": {k: float(v) for k, v in self.errors.items()},
            "goodness": float(self.goodness),
            "derived": {k: float(v) for k, v in self.derived.items()},
        }


def _fit(name: str, fn: Callable, x, y, p0: Sequence[float], names: Sequence[str], bounds=(-np.inf, np.inf)) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.all(np.isfinite(y)) and np.ptp(y) <= FLAT:
        raise AnalysisError(f"{name} fit: the data are flat, there is no signal to fit", data=(x, y))
    try:
        # an undetermined covariance surfaces below as a degenerate fit
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                fn, x, y, p0=p0, bounds=bounds, method="trf", xtol=TOLERANCE, ftol=TOLERANCE, gtol=TOLERANCE,
                maxfev=20000,
            )
    except (RuntimeError, ValueError) as exc:
        raise AnalysisError(f"{name} fit failed: {exc}", data=(x, y)) from None
    errors = np.sqrt(np.abs(np.diag(pcov)))
    if not np.all(np.isfinite(errors)):
        raise AnalysisError(f"{name} fit is degenerate", data=(x, y))
    residual = y - fn(x, *popt)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(residual**2) / total if total > 0 else 1.0
    return FitResult(name, dict(zip(names, popt)), dict(zip(names, errors)), float(r2))


def fft_frequency(x: np.ndarray, y: np.ndarray) -> float:
    """Dominant non-zero frequency of uniformly sampled data (cycles per unit x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    step = (x[-1] - x[0]) / (len(x) - 1)
    n = 16 * len(x)
    spectrum = np.abs(np.fft.rfft(y, n))
    freqs = np.fft.rfftfreq(n, step)
    spectrum[0] = 0
    return float(freqs[np.argmax(spectrum)])


def lorentzian(x, x0, width, amplitude, offset):
    return offset + amplitude * width**2 / ((x - x0) ** 2 + width**2)


def fit_lorentzian(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    offset = np.median(y)
    k = np.argmax(np.abs(y - offset))
    amplitude = y[k] - offset
    above = np.abs(y - offset) >= abs(amplitude) / 2
    width = max(np.ptp(x[above]) / 2, np.min(np.diff(np.sort(x))))
    return _fit("lorentzian", lorentzian, x, y, [x[k], width, amplitude, offset], ["x0", "width", "amplitude", "offset"])


def cosine(x, amplitude, frequency, phase, offset):
    return offset + amplitude * np.cos(2 * np.pi * frequency * x + phase)


def fit_sinusoid(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    frequency = fft_frequency(x, y)
    offset = np.mean(y)
    amplitude = np.ptp(y) / 2
    # phase from projection on the guessed frequency
    c = np.sum((y - offset) * np.cos(2 * np.pi * frequency * x))
    s = np.sum((y - offset) * np.sin(2 * np.pi * frequency * x))
    phase = np.arctan2(-s, c)
    result = _fit(
        "sinusoid",
        cosine,
        x,
        y,
        [amplitude, frequency, phase, offset],
        ["amplitude", "frequency", "phase", "offset"],
        bounds=([0, 0, -np.inf, -np.inf], [np.inf, np.inf, np.inf, np.inf]),
    )
    return result


def damped_cosine(x, amplitude, frequency, phase, offset, decay):
    return offset + amplitude * np.exp(-x / decay) * np.cos(2 * np.pi * frequency * x + phase)


def fit_damped_cosine(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    frequency = fft_frequency(x, y)
    offset = np.mean(y)
    amplitude = np.ptp(y) / 2
    c = np.sum((y - offset) * np.cos(2 * np.pi * frequency * x))
    s = np.sum((y - offset) * np.sin(2 * np.pi * frequency * x))
    phase = np.arctan2(-s, c)
    span = np.ptp(x)
    return _fit(
        "damped_cosine",
        damped_cosine,
        x,
        y,
        [amplitude, frequency, phase, offset, span],
        ["amplitude", "frequency", "phase", "offset", "decay"],
        bounds=([0, 0, -np.inf, -np.inf, 1e-3 * span], [np.inf, np.inf, np.inf, np.inf, 1e6 * span]),
    )


def exponential(x, amplitude, decay, offset):
    return offset + amplitude * np.exp(-x / decay)


def fit_exponential(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    offset = min(y.min(), y[-1]) - 1e-3 * np.ptp(y)
    shifted = np.clip(y - offset, 1e-12, None)
    slope, intercept = np.polyfit(x, np.log(shifted), 1)
    decay = -1.0 / slope if slope < 0 else np.ptp(x)
    return _fit(
        "exponential",
        exponential,
        x,
        y,
        [np.exp(intercept), decay, offset],
        ["amplitude", "decay", "offset"],
        bounds=([-np.inf, 1e-9, -np.inf], [np.inf, np.inf, np.inf]),
    )


def rb_decay(m, amplitude, p, offset):
    return amplitude * p**m + offset


def fit_rb(depths, survival) -> FitResult:
    """Fit ``A p^m + B``.

    When the decay is too shallow to separate ``A`` from ``B`` (the fit
    fails or either error exceeds ``RB_RESOLVED``) the offset is fixed at
    the single-qubit depolarized value ``B = 1/2``.
    """
    m = np.asarray(depths, dtype=float)
    y = np.asarray(survival, dtype=float)
    if np.ptp(y) <= FLAT:
        # no decay resolved at any depth
        return FitResult(
            "rb",
            {"amplitude": float(y[0]) - 0.5, "p": 1.0, "offset": 0.5},
            {"amplitude": 0.0, "p": 0.0, "offset": 0.0},
            1.0,
        )
    guess_p = 0.99
    if y[0] > 0.5 and y[-1] > 0.5 and y[-1] < y[0]:
        guess_p = float(np.clip(((y[-1] - 0.5) / (y[0] - 0.5)) ** (1 / max(m[-1] - m[0], 1)), 0.5, 0.9999))
    try:
        full = _fit("rb", rb_decay, m, y, [0.5, guess_p, 0.5], ["amplitude", "p", "offset"], bounds=([0, 0, 0], [1, 1, 1]))
        if max(full.errors["amplitude"], full.errors["offset"]) < RB_RESOLVED:
            return full
    except AnalysisError:
        pass
    fixed = _fit(
        "rb",
        lambda m, a, p: rb_decay(m, a, p, 0.5),
        m,
        y,
        [0.5, guess_p],
        ["amplitude", "p"],
        bounds=([0, 0], [1, 1]),
    )
    fixed.params["offset"] = 0.5
    fixed.errors["offset"] = 0.0
    return fixed
