"""The directionally selective small-target motion detector.

Four causal stages run per frame:

1. retina: Gaussian blur of the incoming luminance frame.
2. lamina: temporal band-pass (difference of Gamma kernels) followed by
   spatiotemporal lateral inhibition, evaluated through its two
   space-time separable components.
3. medulla: half-wave split into ON / OFF channels plus three delayed
   maps (Gamma-kernel delay lines).
4. lobula: two-point correlation of the four medulla signals per
   preferred direction, second-order lateral inhibition on each
   direction channel, and lateral inhibition across direction bins.

The output is one non-negative response grid per preferred direction.
A channel's delayed signals are sampled a fixed baseline *behind* its
direction, so the channel labelled theta responds maximally to motion
heading along theta; diagonal sample offsets land between pixels and are
resolved by bilinear interpolation rather than rounding, which would
bias the diagonal channels against the axis-aligned ones.

Pixels whose ON signal is zero contribute exactly zero response, so each
per-frame step restricts the expensive correlation and inhibition work
to the bounding box of the active ON region; outputs outside it are
written as exact zeros.  The box is grown by every kernel radius
involved, keeping the restricted evaluation identical to the dense one.
"""

from dataclasses import dataclass
from math import cos, sin

import numpy as np

from .config import PipelineConfig
from .engine import (
    CenterSurroundConv,
    SeparableGaussianConv,
    TemporalStream,
    rectify_neg,
    rectify_pos,
    shift_bilinear,
)
from .kernels import exp_kernel, gamma_kernel, temporal_bandpass, w3_kernel

__all__ = [
    "KernelSet",
    "MedullaState",
    "DirectionalResponse",
    "DstmdPipeline",
]


def _snap(v, tol=1e-9):
    r = round(v)
    return float(r) if abs(v - r) < tol else float(v)


@dataclass(frozen=True)
class KernelSet:
    """Every discrete filter the detectors use, built from one config."""

    band: object          # lamina temporal band-pass
    inhibit_fast: object  # lamina temporal inhibition, center
    inhibit_slow: object  # lamina temporal inhibition, surround
    delay_on: object      # Gamma delay for the ON channel (n4, tau4)
    delay_off_short: object  # Gamma delay for OFF at the lead point (n5, tau5)
    delay_off_long: object   # Gamma delay for OFF at the trail point (n6, tau6)
    delay_estmd: object      # Gamma delay for the ESTMD correlation (n3, tau3)
    w3: object            # direction inhibition taps

    @classmethod
    def from_config(cls, cfg: PipelineConfig):
        step, cut = cfg.step, cfg.mass_cutoff
        return cls(
            band=temporal_bandpass(cfg.n1, cfg.tau1, cfg.n2, cfg.tau2, step, cut),
            inhibit_fast=exp_kernel(cfg.lambda1, step, cut),
            inhibit_slow=exp_kernel(cfg.lambda2, step, cut),
            delay_on=gamma_kernel(cfg.n4, cfg.tau4, step, cut),
            delay_off_short=gamma_kernel(cfg.n5, cfg.tau5, step, cut),
            delay_off_long=gamma_kernel(cfg.n6, cfg.tau6, step, cut),
            delay_estmd=gamma_kernel(cfg.n3, cfg.tau3, step, cut),
            w3=w3_kernel(cfg.sigma6, cfg.sigma7, cfg.n_directions),
        )


@dataclass
class MedullaState:
    """Per-pixel medulla maps for one frame (all non-negative)."""

    on: np.ndarray
    off: np.ndarray
    delayed_on: np.ndarray         # ON through the (n4, tau4) delay
    delayed_off_short: np.ndarray  # OFF through the (n5, tau5) delay
    delayed_off_long: np.ndarray   # OFF through the (n6, tau6) delay


@dataclass
class DirectionalResponse:
    """Model output for one frame: one response grid per direction."""

    frame_index: int
    e: np.ndarray          # (n_directions, height, width), >= 0
    directions: tuple
    warmed_up: bool

    def max_map(self):
        """Pixelwise maximum response over the direction channels."""
        return self.e.max(axis=0)


def _support_box(mask_source, rel_eps=1e-12):
    """Bounding box (r0, r1, c0, c1) of entries above rel_eps * max, or None.

    The relative floor keeps double-precision dust (for example the
    ~1e-16 residue of the zero-sum band-pass on a static scene) from
    inflating the active region; dropping products that small is far
    below every tolerance in the contract and keeps the pipeline exactly
    scale-equivariant.
    """
    peak = mask_source.max()
    if peak <= 0.0:
        return None
    mask = mask_source > peak * rel_eps
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _expand_box(box, margin, shape):
    r0, r1, c0, c1 = box
    return (
        max(r0 - margin, 0),
        min(r1 + margin, shape[0] - 1),
        max(c0 - margin, 0),
        min(c1 + margin, shape[1] - 1),
    )


class _FrontEnd:
    """Shared retina + lamina stages (both detector variants use them)."""

    def __init__(self, cfg: PipelineConfig, shape, kernels: KernelSet):
        self.cfg = cfg
        self.shape = shape
        self.blur = SeparableGaussianConv(cfg.sigma1, cfg.spatial_truncation)
        self.band = kernels.band
        self.inhibit_fast = kernels.inhibit_fast
        self.inhibit_slow = kernels.inhibit_slow
        # rectified parts of the lamina surround kernel: the positive disc
        # feeds the fast temporal path, the negative annulus the slow one
        self.surround_pos = CenterSurroundConv(
            cfg.sigma2, cfg.sigma3, A=1.0, B=0.0,
            truncation_radius_sigmas=cfg.spatial_truncation)
        self.surround_neg = CenterSurroundConv(
            cfg.sigma2, cfg.sigma3, A=0.0, B=1.0,
            truncation_radius_sigmas=cfg.spatial_truncation)
        self.p_stream = TemporalStream(shape, len(self.band))
        self.l_stream = TemporalStream(
            shape, max(len(self.inhibit_fast), len(self.inhibit_slow)))

    def retina_step(self, raw):
        return self.blur.apply(np.asarray(raw, dtype=np.float64))

    def band_step(self, p):
        """Temporal band-pass: the luminance-change signal."""
        self.p_stream.push(p)
        return self.p_stream.apply(self.band)

    def inhibit_step(self, l):
        """Spatiotemporal lateral inhibition of the luminance-change signal.

        The inhibition kernel is a sum of two space-time separable terms
        (excitatory disc with a fast exponential, inhibitory annulus with
        a slow one); the linear stages commute, so time is filtered first
        and space once per frame.
        """
        self.l_stream.push(l)
        fast, slow = self.l_stream.apply_many([self.inhibit_fast, self.inhibit_slow])
        return self.surround_pos.apply(fast) + self.surround_neg.apply(slow)

    def lamina_step(self, p):
        return self.inhibit_step(self.band_step(p))


class DstmdPipeline:
    """Stateful frame-by-frame DSTMD detector for one frame geometry."""

    def __init__(self, cfg: PipelineConfig = None, shape=(250, 500)):
        self.cfg = cfg or PipelineConfig()
        self.shape = (int(shape[0]), int(shape[1]))
        self.kernels = KernelSet.from_config(self.cfg)
        self.front = _FrontEnd(self.cfg, self.shape, self.kernels)
        self.on_stream = TemporalStream(self.shape, len(self.kernels.delay_on))
        self.off_stream = TemporalStream(
            self.shape,
            max(len(self.kernels.delay_off_short), len(self.kernels.delay_off_long)),
        )
        cfgd = self.cfg
        # sample offsets pointing against each preferred direction: the
        # delayed signals come from where the target has already been
        self.offsets = [
            (_snap(-cfgd.alpha1 * cos(th)), _snap(-cfgd.alpha1 * sin(th)))
            for th in cfgd.directions
        ]
        self.inhibit = CenterSurroundConv(
            cfgd.sigma4, cfgd.sigma5, e=cfgd.e, rho=cfgd.rho,
            A=cfgd.A, B=cfgd.B, truncation_radius_sigmas=cfgd.spatial_truncation)
        n = cfgd.n_directions
        taps = self.kernels.w3.taps
        self.w3_matrix = np.array(
            [[taps[(i - j + n // 2) % n] for j in range(n)] for i in range(n)]
        )
        self.frames_seen = 0

    @property
    def w2(self):
        """The assembled second-order lateral inhibition kernel."""
        return self.inhibit.kernel

    # ---- individual stages (full-frame in, full-frame out) ----

    def retina_step(self, raw):
        return self.front.retina_step(raw)

    def lamina_step(self, p):
        return self.front.lamina_step(p)

    def medulla_step(self, l_i):
        on = rectify_pos(l_i)
        off = rectify_neg(l_i)
        self.on_stream.push(on)
        delayed_on = self.on_stream.apply(self.kernels.delay_on)
        self.off_stream.push(off)
        delayed_short, delayed_long = self.off_stream.apply_many(
            [self.kernels.delay_off_short, self.kernels.delay_off_long])
        return MedullaState(on, off, delayed_on, delayed_short, delayed_long)

    def lobula_correlate(self, med: MedullaState):
        """Two-point correlation: one pre-inhibition grid per direction."""
        n = self.cfg.n_directions
        d = np.zeros((n,) + self.shape)
        box = _support_box(med.on)
        if box is None:
            return d
        r0, r1, c0, c1 = box
        rows = np.arange(r0, r1 + 1)
        cols = np.arange(c0, c1 + 1)
        on_w = med.on[r0:r1 + 1, c0:c1 + 1]
        short_w = med.delayed_off_short[r0:r1 + 1, c0:c1 + 1]
        for k, (dx, dy) in enumerate(self.offsets):
            don = shift_bilinear(med.delayed_on, dx, dy, rows, cols)
            dofl = shift_bilinear(med.delayed_off_long, dx, dy, rows, cols)
            d[k, r0:r1 + 1, c0:c1 + 1] = on_w * (short_w + don) * dofl
        return d

    def spatial_inhibition(self, d):
        """Second-order lateral inhibition on every direction channel."""
        d = np.asarray(d, dtype=np.float64)
        out = np.zeros_like(d)
        box = _support_box(d.max(axis=0))
        if box is None:
            return out
        r = self.inhibit.radius
        ro = _expand_box(box, r, self.shape)       # where output can be non-zero
        ri = _expand_box(ro, r, self.shape)        # input needed for that output
        sub = d[:, ri[0]:ri[1] + 1, ri[2]:ri[3] + 1]
        conv = self.inhibit.apply(sub)
        out[:, ro[0]:ro[1] + 1, ro[2]:ro[3] + 1] = rectify_pos(
            conv[:, ro[0] - ri[0]:ro[1] - ri[0] + 1, ro[2] - ri[2]:ro[3] - ri[2] + 1])
        return out

    def direction_inhibition(self, d_i):
        """Lateral inhibition across the direction bins (circular)."""
        d_i = np.asarray(d_i, dtype=np.float64)
        out = np.zeros_like(d_i)
        box = _support_box(d_i.max(axis=0))
        if box is None:
            return out
        r0, r1, c0, c1 = box
        sub = d_i[:, r0:r1 + 1, c0:c1 + 1]
        mixed = np.tensordot(self.w3_matrix, sub, axes=1)
        out[:, r0:r1 + 1, c0:c1 + 1] = rectify_pos(mixed)
        return out

    # ---- full step ----

    def process_frame(self, raw):
        """Run all four stages on the next frame of the sequence."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != self.shape:
            raise ValueError(
                f"frame shape {raw.shape} does not match pipeline shape {self.shape}")
        p = self.retina_step(raw)
        l_i = self.lamina_step(p)
        med = self.medulla_step(l_i)
        d = self.lobula_correlate(med)
        d_i = self.spatial_inhibition(d)
        e = self.direction_inhibition(d_i)
        index = self.frames_seen
        self.frames_seen += 1
        return DirectionalResponse(
            frame_index=index,
            e=e,
            directions=self.cfg.directions,
            warmed_up=index >= self.cfg.warmup,
        )

    def run(self, frames):
        """Process an iterable of frames, yielding one response per frame."""
        for frame in frames:
            yield self.process_frame(frame)
