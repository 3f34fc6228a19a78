"""Discrete filter construction for the STMD pipelines.

Every filter used by the detectors is sampled here from its continuous
definition: Gamma kernels and their band-pass difference for the temporal
stages, Gaussians and rectified difference-of-Gaussians for the spatial
stages, exponentials for the delayed inhibition surround, and a circular
difference-of-Gaussians over the preferred-direction bins.

Sampling conventions (shared by all constructors):

* temporal kernels are sampled at t = 0, step, 2*step, ... where one step
  is one frame (1 ms at the default 1000 Hz frame rate), truncated once
  the remaining tail mass of the continuous density falls below
  ``mass_cutoff``, and renormalized so a single density sums to exactly 1.
  A difference of two unit-sum densities therefore sums to exactly 0,
  which is what gives the band-pass stages their DC rejection.
* spatial Gaussians are sampled at integer pixel offsets on a square grid
  of radius ceil(truncation_radius_sigmas * sigma) and renormalized to
  unit sum.
"""

from dataclasses import dataclass, field
from math import ceil, factorial, pi

import numpy as np
from scipy.stats import gamma as _gamma_dist

__all__ = [
    "DiscreteKernel1D",
    "DiscreteKernel2D",
    "gamma_kernel",
    "temporal_bandpass",
    "gaussian2d",
    "gaussian_taps_1d",
    "dog_split",
    "exp_kernel",
    "w2_kernel",
    "w3_kernel",
]


def _readonly(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DiscreteKernel1D:
    """Sampled, truncated 1-D filter taps.

    ``taps[k]`` weights the sample ``k * step`` frames in the past; all
    kernels built here are causal.  Single densities carry unit sum,
    differences of two unit-sum densities carry zero sum.
    """

    taps: np.ndarray
    step: float = 1.0
    causal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "taps", _readonly(self.taps))
        if self.taps.ndim != 1 or self.taps.size < 1:
            raise ValueError("taps must be a non-empty 1-D array")

    def __len__(self):
        return self.taps.size


@dataclass(frozen=True)
class DiscreteKernel2D:
    """Square grid of filter taps with side ``2 * radius + 1`` pixels."""

    taps: np.ndarray
    radius: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "taps", _readonly(self.taps))
        t = self.taps
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] % 2 != 1:
            raise ValueError("taps must be a square grid with odd side")
        object.__setattr__(self, "radius", t.shape[0] // 2)


def _gamma_density(t, n, tau):
    # (n t)^n exp(-n t / tau) / ((n-1)! tau^(n+1)); unit-mass density in t
    t = np.asarray(t, dtype=np.float64)
    return (n * t) ** n * np.exp(-n * t / tau) / (factorial(n - 1) * tau ** (n + 1))


def gamma_kernel(n, tau, step=1.0, mass_cutoff=1e-3):
    """Sampled Gamma kernel of integer order ``n`` and time constant ``tau``.

    The continuous kernel peaks at t = tau and integrates to one.  Taps are
    kept until the remaining tail mass drops below ``mass_cutoff`` (with a
    hard cap of ceil(10 * tau / step) taps) and renormalized to unit sum.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"gamma kernel order must be an integer >= 1, got {n!r}")
    if tau <= 0:
        raise ValueError(f"gamma kernel time constant must be > 0, got {tau!r}")
    if not (0.0 < mass_cutoff < 1.0):
        raise ValueError(f"mass_cutoff must lie in (0, 1), got {mass_cutoff!r}")
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step!r}")
    # the sampled density is an Erlang(n + 1, n / tau): its tail mass is
    # available in closed form through the regularized gamma function
    tail_end = _gamma_dist.ppf(1.0 - mass_cutoff, n + 1, scale=tau / n)
    n_taps = int(ceil(tail_end / step)) + 1
    n_taps = max(2, min(n_taps, int(ceil(10.0 * tau / step))))
    t = np.arange(n_taps) * step
    taps = _gamma_density(t, n, tau)
    return DiscreteKernel1D(taps / taps.sum(), step=step)


def temporal_bandpass(n1, tau1, n2, tau2, step=1.0, mass_cutoff=1e-3):
    """Band-pass filter: difference of two unit-sum Gamma kernels.

    The shorter kernel is zero-padded to the longer support, so the result
    sums to zero and rejects temporally constant input exactly.
    """
    fast = gamma_kernel(n1, tau1, step=step, mass_cutoff=mass_cutoff)
    slow = gamma_kernel(n2, tau2, step=step, mass_cutoff=mass_cutoff)
    length = max(len(fast), len(slow))
    taps = np.zeros(length)
    taps[: len(fast)] += fast.taps
    taps[: len(slow)] -= slow.taps
    return DiscreteKernel1D(taps, step=step)


def exp_kernel(lam, step=1.0, mass_cutoff=1e-3):
    """Causal exponential density (1/lam) exp(-t/lam), unit-sum after truncation."""
    if lam <= 0:
        raise ValueError(f"exponential time constant must be > 0, got {lam!r}")
    if not (0.0 < mass_cutoff < 1.0):
        raise ValueError(f"mass_cutoff must lie in (0, 1), got {mass_cutoff!r}")
    tail_end = -lam * np.log(mass_cutoff)
    n_taps = int(ceil(tail_end / step)) + 1
    n_taps = max(2, min(n_taps, int(ceil(10.0 * lam / step))))
    t = np.arange(n_taps) * step
    taps = np.exp(-t / lam) / lam
    return DiscreteKernel1D(taps / taps.sum(), step=step)


def gaussian_taps_1d(sigma, radius):
    """Unit-sum 1-D Gaussian taps at integer offsets -radius..radius."""
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x**2) / (2.0 * sigma**2))
    return taps / taps.sum()


def gaussian2d(sigma, truncation_radius_sigmas=3.0):
    """Unit-sum 2-D Gaussian sampled at integer offsets.

    The grid radius is ceil(truncation_radius_sigmas * sigma).  Because the
    support is square, the normalized grid is exactly the outer product of
    the normalized 1-D taps, which the spatial engine exploits.
    """
    if sigma <= 0:
        raise ValueError(f"gaussian sigma must be > 0, got {sigma!r}")
    radius = int(ceil(truncation_radius_sigmas * sigma))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    taps = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2)) / (2.0 * pi * sigma**2)
    return DiscreteKernel2D(taps / taps.sum())


def _embed(kernel, radius):
    """Zero-pad a 2-D kernel's taps to the given (larger or equal) radius."""
    pad = radius - kernel.radius
    if pad < 0:
        raise ValueError("cannot embed a kernel into a smaller support")
    if pad == 0:
        return np.array(kernel.taps)
    return np.pad(np.array(kernel.taps), pad)


def dog_split(sigma2, sigma3, truncation_radius_sigmas=3.0):
    """Difference-of-Gaussians split into its positive and negative parts.

    Both Gaussians are unit-sum on their own supports and differenced on
    the union support, so the two parts recompose to a zero-sum kernel:
    an excitatory center disc and an inhibitory surround annulus.
    """
    if not (sigma3 > sigma2 > 0):
        raise ValueError(
            f"dog_split requires sigma3 > sigma2 > 0, got ({sigma2!r}, {sigma3!r})"
        )
    narrow = gaussian2d(sigma2, truncation_radius_sigmas)
    wide = gaussian2d(sigma3, truncation_radius_sigmas)
    radius = max(narrow.radius, wide.radius)
    dog = _embed(narrow, radius) - _embed(wide, radius)
    positive = np.maximum(dog, 0.0)
    negative = np.minimum(dog, 0.0)
    return DiscreteKernel2D(positive), DiscreteKernel2D(negative)


def w2_kernel(sigma4, sigma5, e=1.0, rho=0.0, A=1.0, B=3.0, truncation_radius_sigmas=3.0):
    """Second-order lateral inhibition kernel.

    Built from g = G(sigma4) - e * G(sigma5) - rho on the union support,
    with the positive (center) part weighted by ``A`` and the negative
    (surround) part by ``B``.  With the default weights the surround
    inhibition carries three times the mass of the center excitation.
    """
    if not (sigma5 > sigma4 > 0):
        raise ValueError(
            f"w2_kernel requires sigma5 > sigma4 > 0, got ({sigma4!r}, {sigma5!r})"
        )
    center = gaussian2d(sigma4, truncation_radius_sigmas)
    surround = gaussian2d(sigma5, truncation_radius_sigmas)
    radius = max(center.radius, surround.radius)
    g = _embed(center, radius) - e * _embed(surround, radius) - rho
    taps = A * np.maximum(g, 0.0) + B * np.minimum(g, 0.0)
    return DiscreteKernel2D(taps)


def w3_kernel(sigma6, sigma7, n_bins=8):
    """Circular difference-of-Gaussians over the preferred-direction bins.

    Sampled at integer bin offsets (one unit = one direction bin, 45 deg
    for the default eight directions), offsets -n_bins/2 .. n_bins/2 - 1.
    Each Gaussian is normalized to unit sum over the circular support
    before differencing, so the taps sum to zero.
    """
    if not (sigma7 >= sigma6 > 0):
        raise ValueError(
            f"w3_kernel requires sigma7 >= sigma6 > 0, got ({sigma6!r}, {sigma7!r})"
        )
    if n_bins < 2:
        raise ValueError(f"need at least two direction bins, got {n_bins!r}")
    offsets = np.arange(n_bins) - n_bins // 2
    narrow = np.exp(-(offsets**2) / (2.0 * sigma6**2))
    wide = np.exp(-(offsets**2) / (2.0 * sigma7**2))
    taps = narrow / narrow.sum() - wide / wide.sum()
    return DiscreteKernel1D(taps, causal=False)
