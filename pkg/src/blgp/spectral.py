"""Spectral diagnostics: periodograms and support summaries.

The primary estimator is the Lomb-Scargle least-squares periodogram, which
handles the unevenly sampled series everything else in the package produces.
A Welch-averaged estimator is provided for uniformly sampled series when a
low-variance power estimate matters more than frequency resolution.

Estimated power is normalised so that it integrates to the sample variance
of the input.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lombscargle, welch

from .bandpass import Band
from .errors import ValidationError
from .gp import TimeSeries

__all__ = [
    "PsdEstimate",
    "default_frequency_grid",
    "periodogram",
    "welch_uniform",
    "support_estimate",
]


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided power estimate on a strictly increasing frequency grid."""

    frequencies: np.ndarray
    power: np.ndarray
    method: str

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.power, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "power", p)
        if f.ndim != 1 or f.shape != p.shape:
            raise ValidationError("frequencies and power must be matching 1-d arrays")
        if np.any(np.diff(f) <= 0):
            raise ValidationError("frequencies must be strictly increasing")
        if np.any(p < 0):
            raise ValidationError("power must be non-negative")

    @property
    def peak_frequency(self):
        return float(self.frequencies[int(np.argmax(self.power))])


def default_frequency_grid(ts: TimeSeries, oversample=4):
    """Frequency grid from the Rayleigh resolution to the pseudo-Nyquist rate.

    Spacing is ``1 / (oversample * span)``; the upper limit is
    ``0.5 / median(dt)``, the usual pseudo-Nyquist for uneven sampling.
    """
    if len(ts) < 2:
        raise ValidationError("need at least two samples to build a frequency grid")
    span = ts.span
    if span <= 0:
        raise ValidationError("series span must be positive")
    df = 1.0 / (oversample * span)
    fmax = 0.5 / float(np.median(np.diff(ts.times)))
    grid = np.arange(df, fmax + 0.5 * df, df)
    if grid.size < 2:
        raise ValidationError("degenerate frequency grid; series too short")
    return grid


def _normalise_total_power(freqs, raw, variance):
    total = np.trapezoid(raw, freqs)
    if total <= 0:
        return np.zeros_like(raw)
    return raw * (variance / total)


def periodogram(ts: TimeSeries, freq_grid=None) -> PsdEstimate:
    """Lomb-Scargle periodogram of a (possibly unevenly sampled) series.

    The input is mean-centred; the output integrates to the sample variance.
    A constant series yields all-zero power with a warning.
    """
    if len(ts) < 4:
        raise ValidationError("periodogram needs at least 4 samples")
    if freq_grid is None:
        freq_grid = default_frequency_grid(ts)
    freq_grid = np.asarray(freq_grid, dtype=float)
    if np.any(freq_grid <= 0) or np.any(np.diff(freq_grid) <= 0):
        raise ValidationError("freq_grid must be positive and strictly increasing")
    y = ts.values - ts.values.mean()
    variance = float(np.var(y))
    if variance == 0.0:
        warnings.warn("constant series: periodogram power is identically zero")
        return PsdEstimate(freq_grid, np.zeros_like(freq_grid), "lomb-scargle")
    raw = lombscargle(ts.times, y, 2.0 * np.pi * freq_grid)
    return PsdEstimate(freq_grid, _normalise_total_power(freq_grid, raw, variance), "lomb-scargle")


def welch_uniform(ts: TimeSeries, nperseg=None) -> PsdEstimate:
    """Welch-averaged power estimate for a uniformly sampled series.

    Segment averaging trades frequency resolution for much lower variance per
    bin, so white noise shows no spurious dominant peaks.
    """
    if len(ts) < 8:
        raise ValidationError("welch_uniform needs at least 8 samples")
    dt = np.diff(ts.times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
        raise ValidationError("welch_uniform requires uniform sampling")
    fs = 1.0 / float(dt[0])
    y = ts.values - ts.values.mean()
    variance = float(np.var(y))
    if variance == 0.0:
        warnings.warn("constant series: power is identically zero")
        freqs = np.linspace(fs / len(ts), fs / 2, 8)
        return PsdEstimate(freqs, np.zeros_like(freqs), "welch-uniform")
    if nperseg is None:
        nperseg = max(8, len(ts) // 8)
    freqs, power = welch(y, fs=fs, nperseg=nperseg)
    keep = freqs > 0
    return PsdEstimate(
        freqs[keep], _normalise_total_power(freqs[keep], power[keep], variance), "welch-uniform"
    )


def support_estimate(psd: PsdEstimate, threshold):
    """Maximal frequency intervals where power >= threshold * max(power).

    Returns a list of :class:`~blgp.bandpass.Band`.  Interval edges are padded
    by half a grid bin so that single-bin runs form a valid band.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    power = psd.power
    peak = power.max() if power.size else 0.0
    if peak <= 0:
        return []
    above = power >= threshold * peak
    bands = []
    freqs = psd.frequencies
    half_bin = 0.5 * float(np.median(np.diff(freqs))) if freqs.size > 1 else 0.0
    i = 0
    while i < above.size:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < above.size and above[j + 1]:
            j += 1
        a = max(0.0, freqs[i] - half_bin)
        b = freqs[j] + half_bin
        bands.append(Band(a, b))
        i = j + 1
    return bands
