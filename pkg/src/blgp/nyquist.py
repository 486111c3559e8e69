"""Closed-form reconstruction on critically sampled grids.

For a baseband kernel of bandwidth ``delta``, samples spaced ``1/delta``
apart decorrelate exactly: the observation covariance is diagonal, and the
noiseless posterior collapses to closed forms,

    mean(t) = sum_i y_i sinc(delta (t - t_i))
    var(t)  = sigma2 (1 - sum_i sinc^2(delta (t - t_i))),

the classical sinc-interpolation formula with an explicit finite-sample
variance.  These forms are both a fast feature and an independent oracle for
the dense GP solver; the variance partial sum quantifies how many samples a
target accuracy needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, ValidationError
from .gp import GPModel, TimeSeries, posterior
from .kernels import CentredSincKernel, normalized_sinc

__all__ = [
    "NyquistGrid",
    "check_nyquist_spacing",
    "whittaker_mean",
    "nyquist_variance",
    "OracleReport",
    "oracle_match",
]

# Relative tolerance on spacing * delta == 1 before an input is rejected.
GRID_RTOL = 1e-12


@dataclass(frozen=True)
class NyquistGrid:
    """Uniform time grid at the critical rate for bandwidth ``delta``."""

    start: float
    count: int
    delta: float

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if self.delta <= 0:
            raise ValidationError("delta must be > 0")

    @property
    def spacing(self):
        return 1.0 / self.delta

    @property
    def times(self):
        return self.start + np.arange(self.count) * self.spacing


def check_nyquist_spacing(times, delta):
    """Reject times not uniformly spaced at 1/delta (within 1e-12 relative).

    The closed forms rely on the diagonal observation covariance, which only
    holds on the critical grid.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return
    rel = np.abs(np.diff(times) * delta - 1.0)
    if np.max(rel) > GRID_RTOL:
        raise GridMismatchError(
            f"times are not spaced at 1/delta = {1.0 / delta:.6g} "
            f"(max relative deviation {np.max(rel):.3e})"
        )


def whittaker_mean(obs: TimeSeries, delta, t):
    """Sinc-interpolated mean for noiseless critically spaced observations."""
    check_nyquist_spacing(obs.times, delta)
    t = np.asarray(t, dtype=float)
    weights = normalized_sinc(delta * (np.atleast_1d(t)[:, None] - obs.times[None, :]))
    out = weights @ obs.values
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def nyquist_variance(times, delta, sigma2, t):
    """Closed-form posterior variance on the critical grid.

        sigma2 * (1 - sum_i sinc^2(delta (t - t_i)))

    Exact zeros at the observation times; round-off below -1e-12 * sigma2 is
    an error, smaller negatives are clamped to 0.
    """
    times = np.asarray(times, dtype=float)
    check_nyquist_spacing(times, delta)
    t = np.asarray(t, dtype=float)
    s = normalized_sinc(delta * (np.atleast_1d(t)[:, None] - times[None, :]))
    var = sigma2 * (1.0 - np.sum(s * s, axis=1))
    if np.any(var < -1e-12 * max(sigma2, 1e-300)):
        raise ValidationError(
            f"variance partial sum exceeded 1 beyond round-off (min {var.min():.3e})"
        )
    var = np.maximum(var, 0.0)
    if np.ndim(t) == 0:
        return float(var[0])
    return var


@dataclass(frozen=True)
class OracleReport:
    """Maximum deviations between the dense GP path and the closed forms."""

    max_mean_deviation: float
    max_variance_deviation: float


# The dense-solver path uses a tiny jitter so the comparison is dominated by
# the algebra, not the regulariser; the closed forms use none at all.
ORACLE_JITTER = 1e-12


def oracle_match(sigma2, delta, obs: TimeSeries, query) -> OracleReport:
    """Compare the dense GP posterior against the closed forms.

    Requires noiseless observations on the critical grid for ``delta``;
    returns the maximum absolute deviations in mean and variance.
    """
    check_nyquist_spacing(obs.times, delta)
    model = GPModel(CentredSincKernel(sigma2, delta), noise_var=0.0)
    post = posterior(model, obs, query, jitter=ORACLE_JITTER)
    mean_ref = whittaker_mean(obs, delta, query)
    var_ref = nyquist_variance(obs.times, delta, sigma2, query)
    return OracleReport(
        max_mean_deviation=float(np.max(np.abs(post.mean - mean_ref))),
        max_variance_deviation=float(np.max(np.abs(post.variance - var_ref))),
    )
