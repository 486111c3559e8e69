"""Exact Gaussian-process inference: conditioning, evidence, sampling.

Everything routes through Cholesky factorisations; covariance matrices are
never inverted explicitly.  Band-limited kernels produce severely
ill-conditioned Gram matrices on oversampled grids, so factorisations add a
small diagonal jitter by default and retry once with a larger one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import IllConditionedError, ValidationError
from .kernels import Kernel, gram_matrix, kernel_from_json_dict

__all__ = [
    "TimeSeries",
    "GPModel",
    "PosteriorSummary",
    "posterior",
    "log_marginal_likelihood",
    "sample",
    "DEFAULT_JITTER",
]

# Relative (to the largest diagonal entry) jitter: first attempt, then retry.
DEFAULT_JITTER = 1e-8
RETRY_JITTER = 1e-6

# Round-off tolerance for predicted variances, relative to the prior scale.
# Within it negative values are clamped to zero; beyond it they are a bug.
VARIANCE_CLAMP = 1e-9


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Irregularly sampled observations: strictly increasing times and values.

    ``noise_std`` optionally records a known per-dataset observation noise.
    An empty series is permitted; inference falls back to the prior.
    """

    times: np.ndarray
    values: np.ndarray
    noise_std: float | None = None

    def __post_init__(self):
        times = _readonly(np.atleast_1d(self.times))
        values = _readonly(np.atleast_1d(self.values))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1 or times.size != values.size:
            raise ValidationError("times and values must be 1-d arrays of equal length")
        if times.size and not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("times and values must be finite")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing")
        if self.noise_std is not None and self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")

    def __len__(self):
        return self.times.size

    @property
    def span(self):
        if len(self) == 0:
            return 0.0
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class GPModel:
    """A kernel plus observation-noise variance."""

    kernel: Kernel
    noise_var: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kernel, Kernel):
            raise ValidationError("GPModel.kernel must be a Kernel")
        if not np.isfinite(self.noise_var) or self.noise_var < 0:
            raise ValidationError(f"noise_var must be finite and >= 0, got {self.noise_var}")

    def to_json_dict(self):
        out = self.kernel.to_json_dict()
        out["noise_var"] = self.noise_var
        return out

    @classmethod
    def from_json_dict(cls, obj):
        obj = dict(obj)
        noise_var = obj.pop("noise_var", 0.0)
        return cls(kernel_from_json_dict(obj), noise_var)


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior mean, marginal variance and full covariance on a query grid."""

    query_times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "query_times", _readonly(self.query_times))
        object.__setattr__(self, "mean", _readonly(self.mean))
        object.__setattr__(self, "variance", _readonly(self.variance))
        object.__setattr__(self, "covariance", _readonly(self.covariance))


def _summarize(query, mean, cov, prior_scale, variance_floor=None):
    """Symmetrise a posterior covariance and clamp round-off on its diagonal.

    Negative diagonal entries above ``variance_floor`` (default
    ``-1e-9 * prior_scale``, pure round-off for exact kernels) are set to
    zero; anything below the floor indicates a numerical failure and raises.
    Paths built on approximate kernels pass a floor matching their
    approximation error; ``variance_floor=-inf`` clamps unconditionally.
    """
    cov = 0.5 * (cov + cov.T)
    var = np.diag(cov).copy()
    if variance_floor is None:
        variance_floor = -VARIANCE_CLAMP * max(prior_scale, 1e-300)
    if np.any(var < variance_floor):
        raise IllConditionedError(
            f"posterior variance fell below the round-off floor "
            f"(min {var.min():.3e} vs floor {variance_floor:.3e})"
        )
    neg = var < 0
    var[neg] = 0.0
    if np.any(neg):
        cov = cov.copy()
        cov[np.diag_indices_from(cov)] = np.where(neg, 0.0, np.diag(cov))
    return PosteriorSummary(np.asarray(query, dtype=float), mean, var, cov)


def chol_with_jitter(mat, jitter=DEFAULT_JITTER, retry_jitter=RETRY_JITTER):
    """Cholesky of a PSD matrix with relative diagonal jitter.

    ``jitter`` and ``retry_jitter`` scale the largest diagonal entry.  Returns
    the lower-triangular factor.  Raises :class:`IllConditionedError` with a
    smallest-eigenvalue estimate if both attempts fail.
    """
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    scale = float(np.max(np.diag(mat)))
    if scale <= 0.0:
        if np.allclose(mat, 0.0):
            return np.zeros_like(mat)
        raise IllConditionedError("matrix has non-positive diagonal")
    eye = np.eye(n)
    for level in (jitter, retry_jitter):
        try:
            c, low = cho_factor(mat + level * scale * eye, lower=True)
            return np.tril(c)
        except np.linalg.LinAlgError:
            continue
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    raise IllConditionedError(
        "covariance factorisation failed after jitter retries", min_eigenvalue=min_eig
    )


def _condition(chol, y, k_cross, k_prior_qq, query, prior_scale, variance_floor=None):
    """Shared conditioning algebra.

    ``chol`` is the lower Cholesky factor of the observation covariance,
    ``k_cross`` the (n_query, n_obs) covariance between targets and
    observations, ``k_prior_qq`` the prior covariance of the targets.
    """
    alpha = cho_solve((chol, True), y)
    mean = k_cross @ alpha
    v = solve_triangular(chol, k_cross.T, lower=True)
    cov = k_prior_qq - v.T @ v
    return _summarize(query, mean, cov, prior_scale, variance_floor=variance_floor)


def posterior(model: GPModel, obs: TimeSeries, query, jitter=DEFAULT_JITTER):
    """Exact GP posterior over ``query`` given noisy observations.

    mean = K(q, t) (K(t, t) + noise I)^-1 y
    cov  = K(q, q) - K(q, t) (K(t, t) + noise I)^-1 K(t, q)

    With no observations the prior is returned (zero mean, prior covariance).
    """
    query = np.asarray(query, dtype=float)
    if query.ndim != 1:
        query = np.atleast_1d(query.ravel())
    if not np.all(np.isfinite(query)):
        raise ValidationError("query times must be finite")
    k_qq = gram_matrix(model.kernel, query, query)
    if len(obs) == 0:
        return _summarize(query, np.zeros(query.size), k_qq, model.kernel.variance())
    lam = gram_matrix(model.kernel, obs.times, obs.times)
    lam[np.diag_indices_from(lam)] += model.noise_var
    chol = chol_with_jitter(lam, jitter=jitter)
    k_cross = gram_matrix(model.kernel, query, obs.times)
    return _condition(chol, obs.values, k_cross, k_qq, query, model.kernel.variance())


def log_marginal_likelihood(model: GPModel, obs: TimeSeries, jitter=DEFAULT_JITTER):
    """Gaussian evidence of the observations under the model.

        -1/2 y^T L^-1 y - 1/2 log|L| - n/2 log(2 pi),  L = K(t,t) + noise I
    """
    n = len(obs)
    if n == 0:
        return 0.0
    lam = gram_matrix(model.kernel, obs.times, obs.times)
    lam[np.diag_indices_from(lam)] += model.noise_var
    chol = chol_with_jitter(lam, jitter=jitter)
    alpha = cho_solve((chol, True), obs.values)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * obs.values @ alpha - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi))


def sample(model: GPModel, times, seed, count=1, jitter=DEFAULT_JITTER):
    """Zero-mean draws with the model covariance (noise excluded).

    Returns an array of shape ``(count, len(times))``; deterministic for a
    given seed.
    """
    times = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(times)):
        raise ValidationError("sample times must be finite")
    if count < 1:
        raise ValidationError("count must be >= 1")
    gram = gram_matrix(model.kernel, times, times)
    chol = chol_with_jitter(gram, jitter=jitter)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, times.size))
    return z @ chol.T
