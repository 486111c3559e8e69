"""Band-limited Gaussian process modelling built on the sinc kernel."""

from .bandpass import Band, BandKernel, band_kernel, bandpass_posterior, brick_wall
from .demod import (
    CarrierConfig,
    StereoChannels,
    channel_obs_cov,
    demodulate,
    modulate,
    mogp_cov_check,
)
from .errors import (
    GridMismatchError,
    IllConditionedError,
    NumericalError,
    ValidationError,
)
from .gp import (
    GPModel,
    PosteriorSummary,
    TimeSeries,
    log_marginal_likelihood,
    posterior,
    sample,
)
from .kernels import (
    CentredSincKernel,
    GeneralisedSincKernel,
    Kernel,
    SincKernel,
    SincParams,
    SpectralEnvelope,
    SpectralMixtureKernel,
    SumKernel,
    WhiteNoiseKernel,
    centred_sinc_kernel,
    gram_matrix,
    gsk_approx,
    kernel_eval,
    kernel_from_json,
    kernel_psd,
    kernel_to_json,
    normalized_sinc,
    sinc_kernel,
    symmetric_rect_psd,
)
from .nyquist import (
    NyquistGrid,
    OracleReport,
    nyquist_variance,
    oracle_match,
    whittaker_mean,
)
from .sparse import InducingSet, nyquist_inducing, sparse_posterior
from .spectral import PsdEstimate, periodogram, support_estimate, welch_uniform
from .training import FitResult, TrainingConfig, fit, periodogram_init

__version__ = "0.1.0"
