"""Maximum-likelihood hyperparameter training.

Positive hyperparameters (power, bandwidth, noise variance) are optimised in
log space; centre frequencies stay linear with a lower bound of zero.  The
default optimiser is a derivative-free direction-set method, which copes well
with the mildly oscillatory dependence of the evidence on centre frequency; a
quasi-Newton method with finite-difference gradients is selectable.

Initialisation comes from the periodogram: centre frequency at the dominant
peak, bandwidth from the width of the region above 10% of the peak, power
from the sample variance.  Restarts re-seed the centre frequency from the
next-highest periodogram peaks.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import find_peaks

from .errors import NumericalError, ValidationError
from .gp import GPModel, TimeSeries, log_marginal_likelihood
from .kernels import (
    CentredSincKernel,
    Kernel,
    SincKernel,
    SincParams,
    SpectralMixtureKernel,
    SumKernel,
)

__all__ = ["TrainingConfig", "FitResult", "fit", "periodogram_init", "write_trace_csv"]

logger = logging.getLogger(__name__)

_OPTIMIZERS = {"direction-set": "Powell", "quasi-newton": "L-BFGS-B"}


@dataclass(frozen=True)
class TrainingConfig:
    optimizer: str = "direction-set"
    max_iters: int = 500
    restarts: int = 1
    init_strategy: str = "periodogram"
    # bounds on the log-scale parameters (log power / bandwidth / noise var)
    log_bounds: tuple = (-20.0, 20.0)
    # optional tighter lower bound on log bandwidth only; data of span T
    # cannot resolve supports much narrower than 1/T, and near-zero widths
    # break downstream band quadratures
    bandwidth_log_floor: float | None = None
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in _OPTIMIZERS:
            raise ValidationError(
                f"optimizer must be one of {sorted(_OPTIMIZERS)}, got {self.optimizer!r}"
            )
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.init_strategy not in ("periodogram", "manual"):
            raise ValidationError(f"unknown init_strategy {self.init_strategy!r}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    sigma2: float
    xi0: float
    delta: float
    noise_var: float


@dataclass
class FitResult:
    model: GPModel
    trace: list = field(default_factory=list)
    objective: float = -np.inf
    warning: bool = False  # set when every restart failed and the result is best-effort


def write_trace_csv(trace, path):
    """Write a training trace as iter,objective,sigma2,xi0,delta,noise_var."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "sigma2", "xi0", "delta", "noise_var"])
        for rec in trace:
            writer.writerow(
                [rec.iteration, rec.objective, rec.sigma2, rec.xi0, rec.delta, rec.noise_var]
            )


# ---------------------------------------------------------------------------
# parameter packing per kernel variant
# ---------------------------------------------------------------------------


def _pack(model: GPModel):
    """Flatten a model into the optimisation vector (log scales, linear xi0)."""
    k = model.kernel
    log_noise = np.log(max(model.noise_var, 1e-12))
    if isinstance(k, CentredSincKernel):
        return np.array([np.log(k.sigma2), np.log(k.delta), log_noise])
    if isinstance(k, SincKernel):
        p = k.params
        return np.array([np.log(p.sigma2), p.xi0, np.log(p.delta), log_noise])
    if isinstance(k, SpectralMixtureKernel):
        return np.array([np.log(k.sigma2), k.xi0, np.log(k.gamma), log_noise])
    if isinstance(k, SumKernel):
        theta = []
        for c in k.components:
            if isinstance(c, CentredSincKernel):
                theta += [np.log(c.sigma2), np.log(c.delta)]
            elif isinstance(c, SincKernel):
                theta += [np.log(c.params.sigma2), c.params.xi0, np.log(c.params.delta)]
            else:
                raise ValidationError(
                    "fit supports sums of sinc-family components only"
                )
        theta.append(log_noise)
        return np.array(theta)
    raise ValidationError(f"fit does not support kernel variant {type(k).__name__}")


def _unpack(theta, template: Kernel) -> GPModel:
    theta = np.asarray(theta, dtype=float)
    if isinstance(template, CentredSincKernel):
        kernel = CentredSincKernel(np.exp(theta[0]), np.exp(theta[1]))
        noise = np.exp(theta[2])
    elif isinstance(template, SincKernel):
        kernel = SincKernel(SincParams(np.exp(theta[0]), max(theta[1], 0.0), np.exp(theta[2])))
        noise = np.exp(theta[3])
    elif isinstance(template, SpectralMixtureKernel):
        kernel = SpectralMixtureKernel(np.exp(theta[0]), max(theta[1], 0.0), np.exp(theta[2]))
        noise = np.exp(theta[3])
    elif isinstance(template, SumKernel):
        comps, i = [], 0
        for c in template.components:
            if isinstance(c, CentredSincKernel):
                comps.append(CentredSincKernel(np.exp(theta[i]), np.exp(theta[i + 1])))
                i += 2
            else:
                comps.append(
                    SincKernel(
                        SincParams(np.exp(theta[i]), max(theta[i + 1], 0.0), np.exp(theta[i + 2]))
                    )
                )
                i += 3
        kernel = SumKernel(comps)
        noise = np.exp(theta[i])
    else:
        raise ValidationError(f"fit does not support kernel variant {type(template).__name__}")
    return GPModel(kernel, noise)


def _bounds(template: Kernel, config: TrainingConfig):
    lo, hi = config.log_bounds
    blo = lo if config.bandwidth_log_floor is None else max(lo, config.bandwidth_log_floor)
    if isinstance(template, CentredSincKernel):
        return [(lo, hi), (blo, hi), (lo, hi)]
    if isinstance(template, (SincKernel, SpectralMixtureKernel)):
        return [(lo, hi), (0.0, None), (blo, hi), (lo, hi)]
    if isinstance(template, SumKernel):
        out = []
        for c in template.components:
            if isinstance(c, CentredSincKernel):
                out += [(lo, hi), (blo, hi)]
            else:
                out += [(lo, hi), (0.0, None), (blo, hi)]
        return out + [(lo, hi)]
    raise ValidationError(f"fit does not support kernel variant {type(template).__name__}")


def _dominant_params(kernel: Kernel):
    """(sigma2, xi0, delta-or-scale) of the highest-power component, for the trace."""
    if isinstance(kernel, CentredSincKernel):
        return kernel.sigma2, 0.0, kernel.delta
    if isinstance(kernel, SincKernel):
        return kernel.params.sigma2, kernel.params.xi0, kernel.params.delta
    if isinstance(kernel, SpectralMixtureKernel):
        return kernel.sigma2, kernel.xi0, kernel.gamma
    if isinstance(kernel, SumKernel):
        best = max(kernel.components, key=lambda c: c.variance())
        return _dominant_params(best)
    return np.nan, np.nan, np.nan


# ---------------------------------------------------------------------------
# initialisation
# ---------------------------------------------------------------------------


def periodogram_init(obs: TimeSeries, template: Kernel, noise_fraction=0.1):
    """Data-driven starting model plus the top periodogram peak frequencies.

    Returns ``(model, peak_frequencies)``; the peaks feed restart proposals.
    """
    from .spectral import periodogram, support_estimate

    psd = periodogram(obs)
    power, freqs = psd.power, psd.frequencies
    var = float(np.var(obs.values))
    if var == 0.0 or power.max() <= 0.0:
        # degenerate flat data: any small-but-valid model will do
        delta = 1.0 / max(obs.span, 1.0)
        if isinstance(template, SumKernel):
            k = len(template.components)
            comps = [
                CentredSincKernel(1e-6 / k, delta)
                if isinstance(c, CentredSincKernel)
                else SincKernel(SincParams(1e-6 / k, 0.0, delta))
                for c in template.components
            ]
            return GPModel(SumKernel(comps), 1e-6), [0.0]
        fallback = _replace_sinc_family(template, 1e-6, 0.0, delta, None)
        return GPModel(fallback, 1e-6), [0.0]
    idx, _ = find_peaks(power)
    if idx.size == 0:
        idx = np.array([int(np.argmax(power))])
    order = idx[np.argsort(power[idx])[::-1]]
    peaks = [float(freqs[i]) for i in order[:3]]

    bands = support_estimate(psd, 0.1)
    peak_f = peaks[0]
    band = next((b for b in bands if b.a <= peak_f <= b.b), None)
    if band is None:
        band = bands[0] if bands else None
    if band is None:
        a, b = 0.0, peak_f if peak_f > 0 else freqs[-1]
    else:
        a, b = band.a, band.b

    noise_var = noise_fraction * var
    if isinstance(template, SpectralMixtureKernel):
        # moment-match the estimated spectrum: centre at the power centroid,
        # Gaussian variance at the spectral spread
        mass = np.trapezoid(power, freqs)
        centroid = float(np.trapezoid(power * freqs, freqs) / mass)
        spread2 = float(np.trapezoid(power * (freqs - centroid) ** 2, freqs) / mass)
        kernel = SpectralMixtureKernel(var, centroid, max(spread2, 1e-12))
        return GPModel(kernel, noise_var), peaks
    if isinstance(template, SumKernel):
        comps = []
        use = bands if bands else [None]
        masses = []
        for bb in use[: len(template.components)]:
            if bb is None:
                masses.append(1.0)
            else:
                sel = (freqs >= bb.a) & (freqs <= bb.b)
                masses.append(float(np.trapezoid(power[sel], freqs[sel])) or 1.0)
        masses = np.asarray(masses) / np.sum(masses)
        for k, c in enumerate(template.components):
            bb = use[min(k, len(use) - 1)]
            share = masses[min(k, len(masses) - 1)]
            if bb is None:
                cx, cd = peak_f, max(peak_f, freqs[1] - freqs[0])
            else:
                cx, cd = bb.xi0, bb.delta
            if isinstance(c, CentredSincKernel):
                comps.append(CentredSincKernel(var * share, max(2 * cx + cd, 1e-6)))
            else:
                comps.append(SincKernel(SincParams(var * share, cx, max(cd, 1e-6))))
        return GPModel(SumKernel(comps), noise_var), peaks

    kernel = _replace_sinc_family(template, var, (a + b) / 2.0, max(b - a, 1e-6), b)
    return GPModel(kernel, noise_var), peaks


def _replace_sinc_family(template, sigma2, xi0, delta, upper_edge):
    if isinstance(template, CentredSincKernel):
        # baseband support is [-delta/2, delta/2]: the positive edge doubles
        return CentredSincKernel(sigma2, 2.0 * upper_edge if upper_edge else delta)
    if isinstance(template, SincKernel):
        return SincKernel(SincParams(sigma2, xi0, delta))
    if isinstance(template, SpectralMixtureKernel):
        return SpectralMixtureKernel(sigma2, xi0, max((delta / 4.0) ** 2, 1e-12))
    raise ValidationError(f"fit does not support kernel variant {type(template).__name__}")


def _restart_theta(theta0, template, peaks, restart):
    """Perturb the starting point for restart > 0."""
    theta = theta0.copy()
    if restart == 0:
        return theta
    if isinstance(template, CentredSincKernel):
        theta[1] += np.log([1.0, 0.5, 2.0][restart % 3])
        return theta
    if isinstance(template, (SincKernel, SpectralMixtureKernel)):
        theta[1] = peaks[restart % len(peaks)]
        return theta
    if isinstance(template, SumKernel):
        # nudge every bandwidth; centre frequencies stay at their band peaks
        scale = np.log([1.0, 0.5, 2.0][restart % 3])
        i = 0
        for c in template.components:
            if isinstance(c, CentredSincKernel):
                theta[i + 1] += scale
                i += 2
            else:
                theta[i + 2] += scale
                i += 3
        return theta
    return theta


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def fit(obs: TimeSeries, initial: GPModel, config: TrainingConfig = TrainingConfig()) -> FitResult:
    """Maximise the evidence over the model's hyperparameters.

    ``initial`` fixes the kernel variant (and, for sums, the component
    layout).  With ``init_strategy='periodogram'`` the starting values are
    estimated from the data; ``'manual'`` starts from ``initial`` as given.
    The trace records the best objective seen at each accepted iteration and
    is monotone non-decreasing.
    """
    if len(obs) < 4:
        raise ValidationError(f"fit needs at least 4 observations, got {len(obs)}")
    template = initial.kernel

    if config.init_strategy == "periodogram":
        start_model, peaks = periodogram_init(obs, template)
    else:
        start_model, peaks = initial, []
        if not peaks:
            peaks = [_dominant_params(template)[1]]
    theta0 = _pack(start_model)
    bounds = _bounds(template, config)

    def objective(theta):
        try:
            value = log_marginal_likelihood(_unpack(theta, template), obs)
        except NumericalError:
            return 1e12
        if not np.isfinite(value):
            logger.warning("non-finite objective at parameter vector %s", np.array2string(theta))
            return 1e12
        return -value

    f0 = objective(theta0)
    best = FitResult(model=start_model, objective=(-f0 if f0 < 1e11 else -np.inf))
    trace = []
    # running best across every restart: the trace reports the accepted
    # (kept) model at each iteration, so it is monotone non-decreasing
    accepted = {"objective": best.objective, "theta": theta0.copy()}
    any_success = False

    def callback(xk):
        value = -objective(xk)
        if value > accepted["objective"]:
            accepted["objective"] = value
            accepted["theta"] = np.array(xk)
        model_k = _unpack(accepted["theta"], template)
        s2, x0, d = _dominant_params(model_k.kernel)
        trace.append(
            TraceRecord(len(trace), accepted["objective"], s2, x0, d, model_k.noise_var)
        )

    method = _OPTIMIZERS[config.optimizer]
    options = {"maxiter": config.max_iters, "ftol": config.rel_tol}

    lo_vec = np.array([b[0] if b[0] is not None else -np.inf for b in bounds])
    hi_vec = np.array([b[1] if b[1] is not None else np.inf for b in bounds])

    for restart in range(config.restarts):
        theta_r = _restart_theta(theta0, template, peaks or [0.0], restart)
        theta_r = np.clip(theta_r, lo_vec, hi_vec)
        try:
            res = minimize(objective, theta_r, method=method, bounds=bounds,
                           options=options, callback=callback)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            logger.warning("restart %d failed: %s", restart, exc)
            continue
        value = -res.fun if np.isfinite(res.fun) else -np.inf
        if value > -1e11 and np.isfinite(value):
            any_success = True
            if value > best.objective:
                best = FitResult(model=_unpack(res.x, template), objective=float(value))

    best.trace = trace
    best.warning = not any_success
    if best.warning:
        logger.warning("all restarts failed; returning the starting model")
    return best
