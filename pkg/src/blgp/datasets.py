"""Data ingestion, synthetic series generation and corruption.

CSV is the interchange format throughout: observation files carry a
``time,value`` header, posterior files ``t,mean,variance``.  All writes are
atomic (temp file + rename).  Randomness flows from a single seed per run,
split per component by fixed string labels so results are reproducible across
module boundaries.
"""

from __future__ import annotations

import csv
import os
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gp import GPModel, TimeSeries, sample
from .kernels import CentredSincKernel, SincParams

__all__ = [
    "rng_for",
    "load_csv",
    "write_csv",
    "write_series_csv",
    "write_posterior_csv",
    "SyntheticRecipe",
    "SyntheticData",
    "make_synthetic",
    "corrupt",
]


def rng_for(seed, label):
    """Deterministic per-component generator: one seed, fixed string labels."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(label.encode())]))


# ---------------------------------------------------------------------------
# CSV input and output
# ---------------------------------------------------------------------------


def load_csv(path) -> TimeSeries:
    """Read a ``time,value`` CSV into a validated, sorted series.

    Malformed rows fail with their line number; exact duplicate times are
    rejected by name.
    """
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file")
        if [h.strip().lower() for h in header[:2]] != ["time", "value"]:
            raise ValidationError(f"{path}: expected header 'time,value', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValidationError(f"{path}:{lineno}: expected two columns, got {row!r}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric row {row!r}")
            if not (np.isfinite(t) and np.isfinite(v)):
                raise ValidationError(f"{path}:{lineno}: non-finite row {row!r}")
            rows.append((t, v))
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    times = np.array([r[0] for r in rows])
    dup = np.flatnonzero(np.diff(times) == 0)
    if dup.size:
        raise ValidationError(f"{path}: duplicate time {times[dup[0]]!r}")
    return TimeSeries(times, np.array([r[1] for r in rows]))


def write_csv(path, header, rows):
    """Atomically write rows (iterable of sequences) under a header."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_series_csv(path, ts: TimeSeries):
    write_csv(path, ["time", "value"], zip(ts.times, ts.values))


def write_posterior_csv(path, summary):
    write_csv(path, ["t", "mean", "variance"],
              zip(summary.query_times, summary.mean, summary.variance))


# ---------------------------------------------------------------------------
# synthetic recipes
# ---------------------------------------------------------------------------

_KINDS = ("gp-sinc-draw", "band-limited-noise", "sinusoid-mixture", "modulated-stereo")
_SAMPLING = ("uniform", "jittered-uniform", "uniform-random")


@dataclass(frozen=True)
class SyntheticRecipe:
    """Recipe for a reproducible synthetic series.

    Kinds
    -----
    gp-sinc-draw
        One draw from a band-limited GP; ``params`` is a :class:`SincParams`.
    band-limited-noise
        White noise on a fine uniform grid, spectrally truncated at
        ``cutoff`` (hard cut, the idealised low-pass), rescaled to unit std.
    sinusoid-mixture
        Deterministic sum of cosines: ``frequencies``, optional ``amplitudes``
        and ``phases``.
    modulated-stereo
        Two independent baseband draws (power ``sigma2``, bandwidth
        ``delta``) on quadrature carriers at ``carrier``.  ``excess`` adds a
        per-channel wide-band residual at the given relative power: real
        channels are never perfectly band-limited, and that roughness is what
        limits demodulation accuracy at high sampling rates.
    """

    kind: str
    length: int
    span: tuple = (0.0, 100.0)
    sampling: str = "uniform"
    params: object = None
    cutoff: float = 0.25
    frequencies: tuple = (0.1, 0.4)
    amplitudes: tuple = None
    phases: tuple = None
    sigma2: float = 1.0
    delta: float = 0.05
    carrier: float = 1.0
    excess: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown recipe kind {self.kind!r}")
        if self.sampling not in _SAMPLING:
            raise ValidationError(f"unknown sampling mode {self.sampling!r}")
        if self.length < 1:
            raise ValidationError("length must be >= 1")
        if self.span[1] <= self.span[0]:
            raise ValidationError("span must be increasing")


@dataclass(frozen=True)
class SyntheticData:
    """A generated series plus whatever ground truth the recipe defines."""

    series: TimeSeries
    components: dict = field(default_factory=dict)


def _sample_times(recipe: SyntheticRecipe, rng):
    t0, t1 = recipe.span
    n = recipe.length
    if recipe.sampling == "uniform":
        return np.linspace(t0, t1, n)
    if recipe.sampling == "jittered-uniform":
        base = np.linspace(t0, t1, n)
        step = (t1 - t0) / max(n - 1, 1)
        jitter = rng.uniform(-0.4, 0.4, size=n) * step
        times = np.sort(base + jitter)
    else:
        times = np.sort(rng.uniform(t0, t1, size=n))
    # enforce strict monotonicity after sorting random draws
    eps = 1e-9 * max(t1 - t0, 1.0)
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            times[i] = times[i - 1] + eps
    return times


def make_synthetic(recipe: SyntheticRecipe, seed) -> SyntheticData:
    """Generate a series per the recipe, deterministically for a given seed."""
    rng = rng_for(seed, f"synthetic:{recipe.kind}")
    times = _sample_times(recipe, rng)

    if recipe.kind == "gp-sinc-draw":
        params = recipe.params or SincParams(recipe.sigma2, 0.0, recipe.delta)
        from .kernels import SincKernel

        kernel = CentredSincKernel(params.sigma2, params.delta) if params.xi0 == 0 \
            else SincKernel(params)
        draw = sample(GPModel(kernel), times, seed=rng.integers(2**63), count=1)[0]
        return SyntheticData(TimeSeries(times, draw))

    if recipe.kind == "band-limited-noise":
        if recipe.sampling != "uniform":
            raise ValidationError("band-limited-noise requires uniform sampling")
        white = rng.standard_normal(times.size)
        dt = times[1] - times[0] if times.size > 1 else 1.0
        spec = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(times.size, d=dt)
        spec[freqs > recipe.cutoff] = 0.0
        values = np.fft.irfft(spec, n=times.size)
        std = values.std()
        if std > 0:
            values = values / std
        return SyntheticData(TimeSeries(times, values))

    if recipe.kind == "sinusoid-mixture":
        freqs = np.asarray(recipe.frequencies, dtype=float)
        amps = np.ones_like(freqs) if recipe.amplitudes is None \
            else np.asarray(recipe.amplitudes, dtype=float)
        phases = np.zeros_like(freqs) if recipe.phases is None \
            else np.asarray(recipe.phases, dtype=float)
        if not (freqs.shape == amps.shape == phases.shape):
            raise ValidationError("frequencies, amplitudes, phases must match in length")
        parts = amps[:, None] * np.cos(2.0 * np.pi * freqs[:, None] * times[None, :]
                                       + phases[:, None])
        components = {f"tone_{f:g}": TimeSeries(times, parts[i])
                      for i, f in enumerate(freqs)}
        return SyntheticData(TimeSeries(times, parts.sum(axis=0)), components)

    # modulated-stereo
    from .demod import StereoChannels, modulate

    model = GPModel(CentredSincKernel(recipe.sigma2, recipe.delta))
    draws = sample(model, times, seed=rng.integers(2**63), count=2)
    channels = []
    for k in range(2):
        values = draws[k]
        rho = recipe.excess[k]
        if rho > 0:
            rough = rng.standard_normal(times.size)
            values = values + np.sqrt(rho * recipe.sigma2) * rough / max(rough.std(), 1e-12)
        channels.append(TimeSeries(times, values))
    stereo = StereoChannels(channels[0], channels[1])
    mixed = modulate(stereo, recipe.carrier, times)
    return SyntheticData(mixed, {"channel_1": channels[0], "channel_2": channels[1]})


def corrupt(ts: TimeSeries, noise_fraction, subsample_count, seed) -> TimeSeries:
    """Subsample without replacement and add scaled Gaussian noise.

    Noise std is ``noise_fraction * std(values)``.  ``subsample_count == 0``
    yields an empty series (downstream code falls back to the prior).
    """
    if noise_fraction < 0:
        raise ValidationError("noise_fraction must be >= 0")
    if not 0 <= subsample_count <= len(ts):
        raise ValidationError(
            f"subsample_count must be in [0, {len(ts)}], got {subsample_count}"
        )
    rng = rng_for(seed, "corrupt")
    keep = np.sort(rng.choice(len(ts), size=subsample_count, replace=False))
    times = ts.times[keep]
    values = ts.values[keep].copy()
    if noise_fraction > 0 and len(ts) > 0:
        values = values + rng.normal(0.0, noise_fraction * ts.values.std(), size=values.size)
    return TimeSeries(times, values)
