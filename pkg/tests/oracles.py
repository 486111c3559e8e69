"""Independent reference implementations used to cross-check the package.

Everything here deliberately avoids the code paths under test: kernels are
reconstructed from their spectra by brute-force quadrature, band-limited
draws are built from explicit random sinusoid mixtures, and gradients come
from central differences.
"""

import numpy as np


def psd_quadrature_kernel(spec, taus, n_nodes=20000, f_max=None):
    """Reconstruct a covariance from its spectral density by quadrature.

    Mid-point nodes over [0, f_max] (doubled for the mirrored negative axis),
    so rectangle edges never coincide with a node.
    """
    if f_max is None:
        f_max = spec.max_frequency()
        if f_max is None:
            raise ValueError("spec has unbounded support; pass f_max explicitly")
    nodes = (np.arange(n_nodes) + 0.5) * (f_max / n_nodes)
    weights = np.asarray(spec.psd(nodes), dtype=float)
    taus = np.asarray(taus, dtype=float)
    phases = 2.0 * np.pi * np.multiply.outer(taus, nodes)
    return 2.0 * (f_max / n_nodes) * (np.cos(phases) @ weights)


def sinusoid_mixture_draws(sigma2, xi0, delta, times, n_draws, n_bins, rng):
    """Band-limited draws as finite mixtures of random sinusoids.

    Frequencies are the mid-points of ``n_bins`` bins over the band
    ``[xi0 - delta/2, xi0 + delta/2]``; the sine and cosine magnitudes are
    independent zero-mean Gaussians with variance ``sigma2 * bin_width``, the
    discretisation of a constant spectral density of total power sigma2.
    Returns an (n_draws, len(times)) array.
    """
    times = np.asarray(times, dtype=float)
    bin_width = delta / n_bins
    freqs = xi0 - delta / 2.0 + (np.arange(n_bins) + 0.5) * bin_width
    phases = 2.0 * np.pi * np.outer(freqs, times)  # (n_bins, n_times)
    sin_b, cos_b = np.sin(phases), np.cos(phases)
    scale = np.sqrt(sigma2 * bin_width)
    a = rng.standard_normal((n_draws, n_bins)) * scale
    b = rng.standard_normal((n_draws, n_bins)) * scale
    return a @ sin_b + b @ cos_b


def empirical_cov_check(x, y, expected, n_draws):
    """Deviation of an empirical covariance from its target, in standard errors.

    ``x`` and ``y`` are paired zero-mean draws; the estimator variance for
    jointly Gaussian pairs is (var_x var_y + cov^2) / n.
    """
    est = np.mean(x * y)
    se = np.sqrt((np.var(x) * np.var(y) + expected**2) / n_draws)
    return abs(est - expected) / se


def central_difference(fn, theta, h):
    """Central-difference gradient of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad
