"""Spectral densities and their Fourier-pair covariance kernels.

All kernels here are stationary and real-valued, designed in the frequency
domain: choose a symmetric, non-negative power spectral density (PSD) and the
inverse Fourier transform yields a positive-definite covariance.  The central
family models the PSD as a pair of rectangles of width ``delta`` centred at
``+/- xi0`` carrying total power ``sigma2``, whose covariance is

    K(tau) = sigma2 * sinc(delta * tau) * cos(2 pi xi0 tau),

with ``sinc(x) = sin(pi x) / (pi x)``.  Sample paths of a GP with this kernel
carry no energy outside the band ``[xi0 - delta/2, xi0 + delta/2]``.

Frequencies are in cycles per time unit throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "SincParams",
    "SpectralEnvelope",
    "Kernel",
    "CentredSincKernel",
    "SincKernel",
    "GeneralisedSincKernel",
    "SpectralMixtureKernel",
    "WhiteNoiseKernel",
    "SumKernel",
    "normalized_sinc",
    "symmetric_rect_psd",
    "sinc_kernel",
    "centred_sinc_kernel",
    "gsk_approx",
    "kernel_eval",
    "kernel_psd",
    "gram_matrix",
    "kernel_to_json",
    "kernel_from_json",
]

# Below this threshold on |pi*x| the direct ratio sin(pi x)/(pi x) loses
# digits to cancellation; a two-term Taylor tail is exact to double precision.
_SINC_SERIES_CUTOFF = 1e-4


def normalized_sinc(x):
    """Normalised sinc function ``sin(pi x) / (pi x)`` with ``sinc(0) = 1``.

    Stable near the removable singularity: for ``|pi x| < 1e-4`` the value is
    computed from the series ``1 - (pi x)^2/6 + (pi x)^4/120``.

    Accepts scalars or arrays; returns the same shape.
    """
    x = np.asarray(x, dtype=float)
    px = np.pi * x
    small = np.abs(px) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, px)
    px2 = px * px
    out = np.where(small, 1.0 - px2 / 6.0 + px2 * px2 / 120.0, np.sin(safe) / safe)
    if out.ndim == 0:
        return float(out)
    return out


def _rect(u):
    """Rectangle function: 1 inside (-1/2, 1/2), 1/2 on the boundary, else 0."""
    u = np.abs(np.asarray(u, dtype=float))
    return np.where(u < 0.5, 1.0, np.where(u == 0.5, 0.5, 0.0))


@dataclass(frozen=True)
class SincParams:
    """Hyperparameters of the rectangular-PSD family.

    Attributes
    ----------
    sigma2 : float
        Total power (signal variance), >= 0.
    xi0 : float
        Centre frequency of the band, cycles per time unit, >= 0.
    delta : float
        Bandwidth (width of each rectangle), > 0.

    Overlapping rectangles (``delta > 2 * xi0``) are a valid configuration.
    """

    sigma2: float
    xi0: float
    delta: float

    def __post_init__(self):
        if not np.isfinite([self.sigma2, self.xi0, self.delta]).all():
            raise ValidationError("SincParams must be finite")
        if self.sigma2 < 0:
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.xi0 < 0:
            raise ValidationError(f"xi0 must be >= 0, got {self.xi0}")
        if self.delta <= 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")


def symmetric_rect_psd(params: SincParams, xi):
    """PSD of the sinc kernel: two rectangles at ``+/- xi0``, total power sigma2.

        S(xi) = sigma2/(2 delta) * (rect((xi - xi0)/delta) + rect((xi + xi0)/delta))

    Boundary points of each rectangle contribute with factor 1/2; overlapping
    rectangles sum.
    """
    xi = np.asarray(xi, dtype=float)
    height = params.sigma2 / (2.0 * params.delta)
    out = height * (
        _rect((xi - params.xi0) / params.delta) + _rect((xi + params.xi0) / params.delta)
    )
    if out.ndim == 0:
        return float(out)
    return out


def sinc_kernel(params: SincParams, tau):
    """Covariance ``sigma2 * sinc(delta tau) * cos(2 pi xi0 tau)``."""
    tau = np.asarray(tau, dtype=float)
    out = params.sigma2 * normalized_sinc(params.delta * tau) * np.cos(
        2.0 * np.pi * params.xi0 * tau
    )
    if np.ndim(out) == 0:
        return float(out)
    return out


def centred_sinc_kernel(sigma2, delta, tau):
    """Baseband covariance ``sigma2 * sinc(delta tau)``.

    Identical, bit for bit, to :func:`sinc_kernel` with ``xi0 = 0``.
    """
    return sinc_kernel(SincParams(sigma2, 0.0, delta), tau)


class SpectralEnvelope:
    """Non-negative, symmetric frequency weighting for band-limited PSDs.

    The envelope modulates the rectangular PSD inside its band.  Only the
    values on the band matter; the function must satisfy ``gamma(xi) ==
    gamma(-xi)`` and ``gamma(xi) >= 0``, and be continuous almost everywhere
    (required for the Riemann-sum kernel approximation to converge).
    """

    def __init__(self, fn, description, spec=None):
        self._fn = fn
        self.description = description
        self._spec = spec  # JSON-able dict, None for ad-hoc envelopes

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.asarray(self._fn(np.abs(xi)), dtype=float)
        if np.any(out < 0):
            raise ValidationError(f"envelope '{self.description}' returned a negative weight")
        if out.ndim == 0:
            return float(out)
        return out

    def __repr__(self):
        return f"SpectralEnvelope({self.description})"

    @classmethod
    def constant(cls, value=1.0):
        if value < 0:
            raise ValidationError("constant envelope value must be >= 0")
        return cls(
            lambda xi: np.full_like(xi, float(value)),
            f"constant({value})",
            {"kind": "constant", "value": float(value)},
        )

    @classmethod
    def triangular(cls, centre, width):
        """Unit peak at ``+/- centre`` decaying linearly to 0 over ``width/2``."""
        if width <= 0:
            raise ValidationError("triangular envelope width must be > 0")
        half = width / 2.0

        def fn(abs_xi):
            return np.maximum(0.0, 1.0 - np.abs(abs_xi - centre) / half)

        return cls(
            fn,
            f"triangular(centre={centre}, width={width})",
            {"kind": "triangular", "centre": float(centre), "width": float(width)},
        )

    @classmethod
    def from_table(cls, frequencies, weights):
        """Piecewise-linear envelope through (|frequency|, weight) samples."""
        freqs = np.asarray(frequencies, dtype=float)
        w = np.asarray(weights, dtype=float)
        if freqs.ndim != 1 or freqs.shape != w.shape or freqs.size < 2:
            raise ValidationError("table envelope needs matching 1-d arrays, length >= 2")
        if np.any(np.diff(freqs) <= 0):
            raise ValidationError("table envelope frequencies must be strictly increasing")
        if np.any(w < 0):
            raise ValidationError("table envelope weights must be >= 0")
        return cls(
            lambda abs_xi: np.interp(abs_xi, freqs, w),
            f"table({freqs.size} nodes)",
            {"kind": "table", "frequencies": freqs.tolist(), "weights": w.tolist()},
        )

    def to_json_dict(self):
        if self._spec is None:
            raise ValidationError(
                f"envelope '{self.description}' was built from a raw callable "
                "and cannot be serialised"
            )
        return dict(self._spec)

    @classmethod
    def from_json_dict(cls, obj):
        kind = obj.get("kind")
        if kind == "constant":
            return cls.constant(obj["value"])
        if kind == "triangular":
            return cls.triangular(obj["centre"], obj["width"])
        if kind == "table":
            return cls.from_table(obj["frequencies"], obj["weights"])
        raise ValidationError(f"unknown envelope kind {kind!r}")


def gsk_approx(params: SincParams, gamma: SpectralEnvelope, order: int, tau):
    """Riemann-sum approximation of the envelope-weighted band-limited kernel.

    The band ``[xi0 - delta/2, xi0 + delta/2]`` is split into ``order``
    equal sub-rectangles with mid-point frequencies

        xi_i = xi0 - delta * (order + 1 - 2 i) / (2 order),   i = 1..order,

    each carrying power ``sigma2 / order`` and weighted by ``gamma(xi_i)``:

        K_N(tau) = sinc(delta tau / N) * (sigma2 / N)
                   * sum_i gamma(xi_i) * cos(2 pi xi_i tau).

    For a unit envelope the sum telescopes and the result equals
    :func:`sinc_kernel` exactly, for every ``order``.
    """
    if order < 1:
        raise ValidationError(f"order must be a positive integer, got {order}")
    tau = np.asarray(tau, dtype=float)
    i = np.arange(1, order + 1)
    sub_centres = params.xi0 - params.delta * (order + 1 - 2 * i) / (2.0 * order)
    weights = np.asarray(gamma(sub_centres), dtype=float)
    phases = 2.0 * np.pi * np.multiply.outer(tau, sub_centres)
    osc = np.cos(phases) @ weights
    out = normalized_sinc(params.delta * tau / order) * (params.sigma2 / order) * osc
    if np.ndim(out) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# kernel variants
# ---------------------------------------------------------------------------


class Kernel:
    """A stationary covariance evaluable in time and frequency domains.

    Subclasses implement ``eval`` (covariance at a lag), ``psd`` (spectral
    density at a frequency) and JSON round-tripping.  All instances are
    immutable and safe for concurrent use.
    """

    def eval(self, tau):
        raise NotImplementedError

    def psd(self, xi):
        raise NotImplementedError

    def variance(self):
        """Prior variance K(0)."""
        return self.eval(0.0)

    def positive_band_widths(self):
        """Widths of the compact positive-frequency support bands, or None.

        Returns a list with one nominal band width per band-limited
        component, counting each component's ``delta`` once.  ``None`` marks
        unbounded spectral support (white noise, smooth-PSD baselines).
        """
        return None

    def max_frequency(self):
        """Upper edge of the spectral support, or None if unbounded."""
        return None

    def to_json_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class CentredSincKernel(Kernel):
    """Baseband rectangle PSD on ``[-delta/2, delta/2]``."""

    sigma2: float
    delta: float
    params: SincParams = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "params", SincParams(self.sigma2, 0.0, self.delta))

    def eval(self, tau):
        return sinc_kernel(self.params, tau)

    def psd(self, xi):
        return symmetric_rect_psd(self.params, xi)

    def positive_band_widths(self):
        return [self.delta]

    def max_frequency(self):
        return self.delta / 2.0

    def to_json_dict(self):
        return {"variant": "centred_sinc", "sigma2": self.sigma2, "delta": self.delta}


@dataclass(frozen=True)
class SincKernel(Kernel):
    """Rectangle-pair PSD at ``+/- xi0``, the modulated (band-pass) case."""

    params: SincParams

    def eval(self, tau):
        return sinc_kernel(self.params, tau)

    def psd(self, xi):
        return symmetric_rect_psd(self.params, xi)

    def positive_band_widths(self):
        return [self.params.delta]

    def max_frequency(self):
        return self.params.xi0 + self.params.delta / 2.0

    def to_json_dict(self):
        p = self.params
        return {"variant": "sinc", "sigma2": p.sigma2, "xi0": p.xi0, "delta": p.delta}


@dataclass(frozen=True)
class GeneralisedSincKernel(Kernel):
    """Envelope-weighted band-limited kernel, mid-point approximation of
    the exact frequency-weighted covariance at resolution ``order``."""

    params: SincParams
    envelope: SpectralEnvelope
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError(f"order must be >= 1, got {self.order}")

    def eval(self, tau):
        return gsk_approx(self.params, self.envelope, self.order, tau)

    def psd(self, xi):
        base = symmetric_rect_psd(self.params, xi)
        return base * self.envelope(xi)

    def positive_band_widths(self):
        return [self.params.delta]

    def max_frequency(self):
        return self.params.xi0 + self.params.delta / 2.0

    def to_json_dict(self):
        p = self.params
        return {
            "variant": "gsk",
            "sigma2": p.sigma2,
            "xi0": p.xi0,
            "delta": p.delta,
            "gamma": self.envelope.to_json_dict(),
            "order": self.order,
        }


@dataclass(frozen=True)
class SpectralMixtureKernel(Kernel):
    """Single-component spectral-mixture baseline.

        K(tau) = sigma2 * exp(-2 pi^2 gamma tau^2) * cos(2 pi xi0 tau)

    Its PSD is a pair of Gaussians of variance ``gamma`` at ``+/- xi0``:
    smooth with unbounded support, the contrast case to the rectangle family.
    """

    sigma2: float
    xi0: float
    gamma: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.xi0 < 0:
            raise ValidationError(f"xi0 must be >= 0, got {self.xi0}")
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")

    def eval(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = self.sigma2 * np.exp(-2.0 * np.pi**2 * self.gamma * tau**2) * np.cos(
            2.0 * np.pi * self.xi0 * tau
        )
        if np.ndim(out) == 0:
            return float(out)
        return out

    def psd(self, xi):
        xi = np.asarray(xi, dtype=float)
        norm = self.sigma2 / (2.0 * np.sqrt(2.0 * np.pi * self.gamma))
        out = norm * (
            np.exp(-((xi - self.xi0) ** 2) / (2.0 * self.gamma))
            + np.exp(-((xi + self.xi0) ** 2) / (2.0 * self.gamma))
        )
        if np.ndim(out) == 0:
            return float(out)
        return out

    def to_json_dict(self):
        return {
            "variant": "sm",
            "sigma2": self.sigma2,
            "xi0": self.xi0,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class WhiteNoiseKernel(Kernel):
    """Discrete delta kernel: K(0) = sigma2, K(tau != 0) = 0.

    The idealised uncorrelated-process limit, only ever evaluated on finite
    time sets.  Its spectral density is flat at ``sigma2``.
    """

    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2}")

    def eval(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.where(tau == 0.0, self.sigma2, 0.0)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def psd(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.full_like(xi, self.sigma2)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def to_json_dict(self):
        return {"variant": "white", "sigma2": self.sigma2}


@dataclass(frozen=True)
class SumKernel(Kernel):
    """Sum of independent components; covariances and PSDs add."""

    components: tuple

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValidationError("SumKernel needs at least one component")
        for c in components:
            if not isinstance(c, Kernel):
                raise ValidationError(f"SumKernel component {c!r} is not a kernel")
        object.__setattr__(self, "components", components)

    def eval(self, tau):
        out = self.components[0].eval(tau)
        for c in self.components[1:]:
            out = out + c.eval(tau)
        return out

    def psd(self, xi):
        out = self.components[0].psd(xi)
        for c in self.components[1:]:
            out = out + c.psd(xi)
        return out

    def positive_band_widths(self):
        widths = []
        for c in self.components:
            w = c.positive_band_widths()
            if w is None:
                return None
            widths.extend(w)
        return widths

    def max_frequency(self):
        edges = [c.max_frequency() for c in self.components]
        if any(e is None for e in edges):
            return None
        return max(edges)

    def to_json_dict(self):
        return {
            "variant": "sum",
            "components": [c.to_json_dict() for c in self.components],
        }


# ---------------------------------------------------------------------------
# functional surface and serialisation
# ---------------------------------------------------------------------------


def kernel_eval(spec: Kernel, tau):
    """Evaluate the stationary covariance of ``spec`` at lag ``tau``."""
    return spec.eval(tau)


def kernel_psd(spec: Kernel, xi):
    """Evaluate the power spectral density of ``spec`` at frequency ``xi``."""
    return spec.psd(xi)


def gram_matrix(spec: Kernel, times_a, times_b):
    """Covariance matrix with entries ``K(times_a[i] - times_b[j])``.

    Lags are evaluated through their absolute value, so the square case
    ``times_a == times_b`` is exactly symmetric in storage.
    """
    ta = np.asarray(times_a, dtype=float)
    tb = np.asarray(times_b, dtype=float)
    if not (np.all(np.isfinite(ta)) and np.all(np.isfinite(tb))):
        raise ValidationError("gram_matrix times must be finite")
    lags = np.abs(ta[:, None] - tb[None, :])
    return np.asarray(spec.eval(lags), dtype=float)


def kernel_to_json(spec: Kernel) -> str:
    """Serialise a kernel to its JSON interchange form."""
    return json.dumps(spec.to_json_dict())


def kernel_from_json_dict(obj) -> Kernel:
    if not isinstance(obj, dict) or "variant" not in obj:
        raise ValidationError("kernel JSON must be an object with a 'variant' field")
    variant = obj["variant"]
    try:
        if variant == "centred_sinc":
            return CentredSincKernel(obj["sigma2"], obj["delta"])
        if variant == "sinc":
            return SincKernel(SincParams(obj["sigma2"], obj["xi0"], obj["delta"]))
        if variant == "gsk":
            return GeneralisedSincKernel(
                SincParams(obj["sigma2"], obj["xi0"], obj["delta"]),
                SpectralEnvelope.from_json_dict(obj["gamma"]),
                int(obj["order"]),
            )
        if variant == "sm":
            return SpectralMixtureKernel(obj["sigma2"], obj["xi0"], obj["gamma"])
        if variant == "white":
            return WhiteNoiseKernel(obj["sigma2"])
        if variant == "sum":
            return SumKernel([kernel_from_json_dict(c) for c in obj["components"]])
    except KeyError as exc:
        raise ValidationError(f"kernel JSON missing field {exc} for variant {variant!r}")
    raise ValidationError(f"unknown kernel variant {variant!r}")


def kernel_from_json(text: str) -> Kernel:
    """Parse a kernel from its JSON interchange form."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid kernel JSON: {exc}")
    return kernel_from_json_dict(obj)
