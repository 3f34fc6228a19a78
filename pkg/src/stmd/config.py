"""Pipeline configuration.

One frozen dataclass carries every model parameter for both detector
variants.  Temporal constants (tau, lambda) are expressed in frames; at
the default 1000 Hz sampling one frame is one millisecond, and ``step``
rescales the kernels for other frame rates.
"""

from dataclasses import dataclass, field, asdict, replace
from math import pi

__all__ = ["PipelineConfig", "DEFAULT_DIRECTIONS"]

DEFAULT_DIRECTIONS = tuple(k * pi / 4.0 for k in range(8))


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of the DSTMD and ESTMD detectors.

    The defaults are the published operating point of the model; they are
    what every tuning and detection experiment in the evaluation harness
    assumes unless overridden.
    """

    # retina blur
    sigma1: float = 1.0
    # lamina temporal band-pass (fast minus slow Gamma kernel)
    n1: int = 2
    tau1: float = 3.0
    n2: int = 6
    tau2: float = 9.0
    # lamina spatial inhibition surround (difference of Gaussians split)
    sigma2: float = 1.5
    sigma3: float = 3.0
    # lamina temporal inhibition (fast center, slow surround exponentials)
    lambda1: float = 3.0
    lambda2: float = 9.0
    # second-order lateral inhibition kernel weights
    A: float = 1.0
    B: float = 3.0
    sigma4: float = 1.5
    sigma5: float = 3.0
    e: float = 1.0
    rho: float = 0.0
    # ESTMD delay line
    n3: int = 5
    tau3: float = 25.0
    # DSTMD delay lines: delayed ON at the trailing sample point,
    # short-delayed OFF at the lead point, long-delayed OFF at the trail
    n4: int = 3
    tau4: float = 15.0
    n5: int = 5
    tau5: float = 25.0
    n6: int = 8
    tau6: float = 40.0
    # correlation baseline between the two sampled positions, pixels
    alpha1: float = 3.0
    # direction inhibition kernel over the preferred-direction bins
    sigma6: float = 1.5
    sigma7: float = 3.0
    # preferred directions, radians, image convention (y grows downward)
    directions: tuple = field(default=DEFAULT_DIRECTIONS)
    # temporal sampling: taps per frame, warm-up discard length in frames
    step: float = 1.0
    warmup: int = 200
    # kernel truncation
    mass_cutoff: float = 1e-3
    spatial_truncation: float = 3.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "sigma3", "sigma4", "sigma5",
                     "sigma6", "sigma7", "tau1", "tau2", "tau3", "tau4",
                     "tau5", "tau6", "lambda1", "lambda2", "alpha1", "step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("n1", "n2", "n3", "n4", "n5", "n6"):
            value = getattr(self, name)
            if not (isinstance(value, (int,)) and value >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
        if self.sigma3 <= self.sigma2:
            raise ValueError("sigma3 must exceed sigma2")
        if self.sigma5 <= self.sigma4:
            raise ValueError("sigma5 must exceed sigma4")
        if self.sigma7 <= self.sigma6:
            raise ValueError("sigma7 must exceed sigma6")
        if self.lambda2 <= self.lambda1:
            raise ValueError("lambda2 must exceed lambda1")
        if not (0.0 < self.mass_cutoff < 1.0):
            raise ValueError("mass_cutoff must lie in (0, 1)")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if len(self.directions) < 2:
            raise ValueError("need at least two preferred directions")
        object.__setattr__(self, "directions", tuple(float(d) for d in self.directions))

    @property
    def n_directions(self):
        return len(self.directions)

    def with_updates(self, **changes):
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)
