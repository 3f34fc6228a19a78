"""The single-position, non-directional STMD baseline.

Shares the retina and lamina stages with the directional detector but
applies the second-order lateral inhibition to the ON and OFF signals
directly in the medulla, then correlates the inhibited ON map with the
delayed inhibited OFF map at the same pixel.  With only one sampled
position the output carries no direction information.
"""

from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .dstmd import KernelSet, _FrontEnd, _expand_box, _support_box
from .engine import CenterSurroundConv, TemporalStream, rectify_neg, rectify_pos

__all__ = ["EstmdMedullaState", "EstmdResponse", "EstmdPipeline"]


@dataclass
class EstmdMedullaState:
    """Laterally inhibited medulla maps for one frame."""

    on_inhibited: np.ndarray
    off_inhibited: np.ndarray
    delayed_off_inhibited: np.ndarray
    # delayed ON map; defined by the model's medulla but not consumed by
    # the single-position correlation
    delayed_on_inhibited: np.ndarray


@dataclass
class EstmdResponse:
    """Baseline output for one frame: a single non-negative grid."""

    frame_index: int
    d: np.ndarray
    warmed_up: bool


class EstmdPipeline:
    """Stateful frame-by-frame ESTMD detector for one frame geometry."""

    def __init__(self, cfg: PipelineConfig = None, shape=(250, 500)):
        self.cfg = cfg or PipelineConfig()
        self.shape = (int(shape[0]), int(shape[1]))
        self.kernels = KernelSet.from_config(self.cfg)
        self.front = _FrontEnd(self.cfg, self.shape, self.kernels)
        cfgd = self.cfg
        self.inhibit = CenterSurroundConv(
            cfgd.sigma4, cfgd.sigma5, e=cfgd.e, rho=cfgd.rho,
            A=cfgd.A, B=cfgd.B, truncation_radius_sigmas=cfgd.spatial_truncation)
        self.on_stream = TemporalStream(self.shape, len(self.kernels.delay_estmd))
        self.off_stream = TemporalStream(self.shape, len(self.kernels.delay_estmd))
        self.frames_seen = 0

    @property
    def w2(self):
        return self.inhibit.kernel

    def _inhibit_map(self, m):
        """Rectified lateral inhibition restricted to the active region."""
        out = np.zeros_like(m)
        box = _support_box(m)
        if box is None:
            return out
        r = self.inhibit.radius
        ro = _expand_box(box, r, self.shape)
        ri = _expand_box(ro, r, self.shape)
        conv = self.inhibit.apply(m[ri[0]:ri[1] + 1, ri[2]:ri[3] + 1])
        out[ro[0]:ro[1] + 1, ro[2]:ro[3] + 1] = rectify_pos(
            conv[ro[0] - ri[0]:ro[1] - ri[0] + 1, ro[2] - ri[2]:ro[3] - ri[2] + 1])
        return out

    def medulla_step(self, l_i):
        on = self._inhibit_map(rectify_pos(l_i))
        off = self._inhibit_map(rectify_neg(l_i))
        self.on_stream.push(on)
        delayed_on = self.on_stream.apply(self.kernels.delay_estmd)
        self.off_stream.push(off)
        delayed_off = self.off_stream.apply(self.kernels.delay_estmd)
        return EstmdMedullaState(on, off, delayed_off, delayed_on)

    def correlate(self, med: EstmdMedullaState):
        """Single-position correlation of inhibited ON with delayed OFF."""
        return med.on_inhibited * med.delayed_off_inhibited

    def process_frame(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != self.shape:
            raise ValueError(
                f"frame shape {raw.shape} does not match pipeline shape {self.shape}")
        p = self.front.retina_step(raw)
        l_i = self.front.lamina_step(p)
        med = self.medulla_step(l_i)
        d = self.correlate(med)
        index = self.frames_seen
        self.frames_seen += 1
        return EstmdResponse(frame_index=index, d=d, warmed_up=index >= self.cfg.warmup)

    def run(self, frames):
        for frame in frames:
            yield self.process_frame(frame)
