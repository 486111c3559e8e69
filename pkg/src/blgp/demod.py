"""Stereo amplitude modulation and Bayesian demodulation.

Two independent baseband processes ride quadrature carriers of a shared
frequency:

    x(t) = x1(t) cos(2 pi xi0 t) + x2(t) sin(2 pi xi0 t).

When the channels are draws from a centred band-limited kernel the modulated
signal is itself a GP with the non-centred kernel of the same power and
bandwidth, so the modulated kernel acts as a generative model for stereo
amplitude modulation.  Demodulation is then plain Gaussian conditioning: the
posterior over each channel given noisy observations of ``x`` uses the
channel/observation cross-covariance

    cov(x1(t), x(t_i)) = sigma2 sinc(delta (t - t_i)) cos(2 pi xi0 t_i)

and its sine analogue for channel 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gp import DEFAULT_JITTER, TimeSeries, _condition, chol_with_jitter, _summarize
from .kernels import SincKernel, SincParams, gram_matrix, normalized_sinc, sinc_kernel

__all__ = [
    "StereoChannels",
    "CarrierConfig",
    "modulate",
    "channel_obs_cov",
    "demodulate",
    "mogp_cov_check",
]


@dataclass(frozen=True)
class StereoChannels:
    """Two channel series sharing one time grid."""

    x1: TimeSeries
    x2: TimeSeries

    def __post_init__(self):
        if len(self.x1) != len(self.x2) or not np.array_equal(self.x1.times, self.x2.times):
            raise ValidationError("channels must share an identical time grid")

    @property
    def times(self):
        return self.x1.times


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier frequency plus the shared centred channel prior.

    A carrier below half the channel bandwidth folds the channel spectra
    across zero frequency, which makes the channels unidentifiable; that
    configuration is permitted but warned about.
    """

    xi0: float
    base: SincParams

    def __post_init__(self):
        if self.xi0 <= 0:
            raise ValidationError("carrier frequency must be > 0")
        if self.base.xi0 != 0.0:
            object.__setattr__(
                self, "base", SincParams(self.base.sigma2, 0.0, self.base.delta)
            )
        if self.xi0 <= self.base.delta / 2.0:
            warnings.warn(
                f"carrier {self.xi0} is at or below half the channel bandwidth "
                f"{self.base.delta / 2.0}; channel spectra alias across zero"
            )


def modulate(channels: StereoChannels, xi0, times) -> TimeSeries:
    """Mix the two channels onto quadrature carriers at ``xi0``.

    ``times`` must match the channels' grid exactly.
    """
    times = np.asarray(times, dtype=float)
    if not np.array_equal(times, channels.times):
        raise ValidationError("requested times do not match the channel grid")
    phase = 2.0 * np.pi * xi0 * times
    values = channels.x1.values * np.cos(phase) + channels.x2.values * np.sin(phase)
    return TimeSeries(times, values)


def channel_obs_cov(channel, params: SincParams, carrier_xi0, t, obs_times):
    """Covariance vector between one channel at ``t`` and the modulated signal.

    Entry i is ``sigma2 sinc(delta (t - t_i)) cos(2 pi xi0 t_i)`` for channel
    1, with ``sin`` in place of ``cos`` for channel 2.  The channel prior is
    centred, so ``params.xi0`` must be 0.
    """
    if channel not in (1, 2):
        raise ValidationError(f"channel must be 1 or 2, got {channel}")
    if params.xi0 != 0.0:
        raise ValidationError("channel prior must be centred (params.xi0 == 0)")
    obs_times = np.asarray(obs_times, dtype=float)
    t = np.asarray(t, dtype=float)
    carrier = np.cos if channel == 1 else np.sin
    weights = params.sigma2 * normalized_sinc(
        params.delta * (np.atleast_1d(t)[:, None] - obs_times[None, :])
    )
    out = weights * carrier(2.0 * np.pi * carrier_xi0 * obs_times)[None, :]
    if np.ndim(t) == 0:
        return out[0]
    return out


def demodulate(obs: TimeSeries, params: SincParams, noise_var, query,
               jitter=DEFAULT_JITTER):
    """Joint-Gaussian posterior over both channels given the modulated signal.

    ``params`` carries the carrier frequency in ``xi0`` and the shared channel
    power and bandwidth.  Returns a (channel 1, channel 2) pair of posterior
    summaries over ``query``.
    """
    if noise_var < 0:
        raise ValidationError("noise_var must be >= 0")
    query = np.atleast_1d(np.asarray(query, dtype=float))
    base = SincParams(params.sigma2, 0.0, params.delta)
    prior_qq = params.sigma2 * normalized_sinc(
        params.delta * np.abs(query[:, None] - query[None, :])
    )
    if len(obs) == 0:
        return (
            _summarize(query, np.zeros(query.size), prior_qq.copy(), params.sigma2),
            _summarize(query, np.zeros(query.size), prior_qq.copy(), params.sigma2),
        )
    lam = gram_matrix(SincKernel(params), obs.times, obs.times)
    lam[np.diag_indices_from(lam)] += noise_var
    chol = chol_with_jitter(lam, jitter=jitter)
    out = []
    for channel in (1, 2):
        k_cross = channel_obs_cov(channel, base, params.xi0, query, obs.times)
        out.append(
            _condition(chol, obs.values, k_cross, prior_qq.copy(), query, params.sigma2)
        )
    return tuple(out)


def mogp_cov_check(params: SincParams, carrier_xi0, t, t_prime):
    """Residual of the two-channel quadrature decomposition of the kernel.

    The modulated kernel factors exactly through the block-diagonal
    two-output covariance of the channels:

        K(t - t') = [cos, sin](t) diag(Kc, Kc)(t - t') [cos, sin](t')

    with ``Kc`` the centred kernel.  Returns |K - decomposition|, which is
    zero up to round-off.
    """
    t = np.asarray(t, dtype=float)
    t_prime = np.asarray(t_prime, dtype=float)
    modulated = sinc_kernel(
        SincParams(params.sigma2, carrier_xi0, params.delta), t - t_prime
    )
    centred = params.sigma2 * normalized_sinc(params.delta * (t - t_prime))
    w, wp = 2.0 * np.pi * carrier_xi0 * t, 2.0 * np.pi * carrier_xi0 * t_prime
    decomposed = centred * (np.cos(w) * np.cos(wp) + np.sin(w) * np.sin(wp))
    out = np.abs(modulated - decomposed)
    if np.ndim(out) == 0:
        return float(out)
    return out
