"""Nyquist-informed sparse GP prediction.

A band-limited process carries a finite information rate: the total width of
its spectral support.  Placing inducing points on a uniform grid at the
matching critical spacing captures (essentially) everything the process can
do over the span, so the inducing count is set by bandwidth, not by the
number of observations.  Prediction goes through the deterministic training
conditional (projected process), whose full-rank limit is the exact GP.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ValidationError
from .gp import TimeSeries, _summarize, chol_with_jitter
from .kernels import Kernel, gram_matrix

__all__ = ["InducingSet", "nyquist_inducing", "sparse_posterior"]


@dataclass(frozen=True)
class InducingSet:
    """Uniform inducing locations at the critical spacing for a total bandwidth."""

    locations: np.ndarray
    delta_total: float

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        object.__setattr__(self, "locations", loc)
        if loc.ndim != 1 or loc.size < 1:
            raise ValidationError("locations must be a non-empty 1-d array")
        if self.delta_total <= 0:
            raise ValidationError("delta_total must be > 0")
        if loc.size > 1:
            rel = np.abs(np.diff(loc) * self.delta_total - 1.0)
            if np.max(rel) > 1e-12:
                raise ValidationError("locations must be uniform at spacing 1/delta_total")

    @property
    def spacing(self):
        return 1.0 / self.delta_total

    def __len__(self):
        return self.locations.size


def nyquist_inducing(spec: Kernel, span) -> InducingSet:
    """Inducing grid over ``span`` at the critical spacing of ``spec``.

    The total bandwidth is the sum of the component band widths of the
    kernel's compact spectral support; the grid is anchored at the span start
    with ``ceil(span_length * delta_total) + 1`` points, so it always covers
    the span.  Kernels with unbounded support have no critical spacing and
    are rejected.
    """
    t_min, t_max = float(span[0]), float(span[1])
    if not t_max > t_min:
        raise ValidationError(f"span must satisfy t_max > t_min, got [{t_min}, {t_max}]")
    widths = spec.positive_band_widths()
    if widths is None:
        raise ValidationError(
            "kernel has unbounded spectral support; Nyquist spacing is undefined"
        )
    delta_total = float(sum(widths))
    count = int(np.ceil((t_max - t_min) * delta_total)) + 1
    locations = t_min + np.arange(count) / delta_total
    return InducingSet(locations, delta_total)


def sparse_posterior(obs: TimeSeries, spec: Kernel, noise_var, inducing: InducingSet,
                     query, jitter=1e-8):
    """Deterministic-training-conditional predictive through the inducing set.

    Cost is O(n M^2) for n observations and M inducing points.  The predictive
    variance never undercuts the exact GP's.  Exact when the inducing set
    equals the observation set.
    """
    if noise_var < 0:
        raise ValidationError("noise_var must be >= 0")
    n, m = len(obs), len(inducing)
    if m > n > 0:
        warnings.warn(f"more inducing points ({m}) than observations ({n})")
    query = np.atleast_1d(np.asarray(query, dtype=float))
    k_qq_diag_prior = float(spec.variance())
    u = inducing.locations
    k_uu = gram_matrix(spec, u, u)
    l_uu = chol_with_jitter(k_uu, jitter=jitter)
    k_uq = gram_matrix(spec, u, query)
    if n == 0:
        cov = gram_matrix(spec, query, query)
        return _summarize(query, np.zeros(query.size), cov, k_qq_diag_prior)
    k_uf = gram_matrix(spec, u, obs.times)
    # whitened features: a = L^-1 K_uf, so  B = noise I + a a^T
    a = solve_triangular(l_uu, k_uf, lower=True)
    b = noise_var * np.eye(m) + a @ a.T
    l_b = chol_with_jitter(b, jitter=jitter)
    a_q = solve_triangular(l_uu, k_uq, lower=True)
    mean = a_q.T @ cho_solve((l_b, True), a @ obs.values)
    # cov = K_qq - a_q^T a_q + noise * a_q^T B^-1 a_q
    k_qq = gram_matrix(spec, query, query)
    w = solve_triangular(l_b, a_q, lower=True)
    cov = k_qq - a_q.T @ a_q + noise_var * (w.T @ w)
    return _summarize(query, mean, cov, k_qq_diag_prior)
