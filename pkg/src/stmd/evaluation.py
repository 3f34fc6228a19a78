"""Quantitative evaluation harness.

Implements the measurement protocols the detectors are judged by:
detection-to-truth matching, detection rate / false alarm sweeps over a
threshold grid, single-parameter tuning curves on white-background
clips, and per-frame direction-estimation error series.

All experiments are deterministic; sweep points are independent and may
be evaluated in parallel without changing any result.
"""

import csv
from dataclasses import dataclass
from math import ceil, hypot

import numpy as np
from joblib import Parallel, delayed

from .config import PipelineConfig
from .dstmd import DstmdPipeline
from .estmd import EstmdPipeline
from .estimation import (UndefinedDirectionError, detect, population_vector,
                         select_target_pixels)
from .stimulus import (
    GroundTruth,
    LinearPath,
    SinusoidPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    render_sequence,
)

__all__ = [
    "RocPoint",
    "TuningCurve",
    "TuningProtocol",
    "match_detections",
    "frame_peaks",
    "collect_peaks",
    "default_gamma_grid",
    "roc_from_peaks",
    "roc_sweep",
    "roc_experiment",
    "tuning_curve",
    "direction_experiment",
    "direction_error_series",
    "write_roc_csv",
    "write_tuning_csv",
    "write_direction_csv",
]

TUNING_PARAMETERS = ("contrast", "velocity", "width", "height")


@dataclass(frozen=True)
class RocPoint:
    gamma: float
    d_r: float  # true detections / actual targets, in [0, 1]
    f_a: float  # false detections per frame, >= 0


@dataclass
class TuningCurve:
    """Normalized model response against one swept target parameter."""

    parameter: str
    values: np.ndarray
    responses: np.ndarray  # self-normalized to max 1

    def argmax_value(self):
        """Swept value with the largest response."""
        return float(self.values[int(np.argmax(self.responses))])

    def interpolated_argmax(self):
        """Sub-grid peak location via a parabola through the top sample.

        Falls back to the grid argmax at the sweep boundaries.  Gives
        monotonicity checks across parameter settings a resolution finer
        than the sweep step.
        """
        i = int(np.argmax(self.responses))
        if i == 0 or i == len(self.values) - 1:
            return float(self.values[i])
        x0, x1, x2 = (float(v) for v in self.values[i - 1:i + 2])
        y0, y1, y2 = (float(r) for r in self.responses[i - 1:i + 2])
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
        b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
        if a >= 0:
            return float(self.values[i])
        return float(np.clip(-b / (2.0 * a), x0, x2))


def match_detections(detections, truth, radius=5.0):
    """Count true and false detections against per-frame ground truth.

    A detection is true iff its Euclidean distance to its frame's truth
    center is within ``radius`` (inclusive); the nearest detection claims
    the truth, every other detection in the frame is false.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    by_frame = {}
    for det in detections:
        by_frame.setdefault(det.frame_index, []).append(det)
    true_count = 0
    false_count = 0
    for frame_index, dets in by_frame.items():
        if truth is None or frame_index >= len(truth):
            false_count += len(dets)
            continue
        tx, ty = truth.x[frame_index], truth.y[frame_index]
        distances = [hypot(d.x - tx, d.y - ty) for d in dets]
        best = int(np.argmin(distances))
        if distances[best] <= radius:
            true_count += 1
            false_count += len(dets) - 1
        else:
            false_count += len(dets)
    return true_count, false_count


def frame_peaks(response, suppress_radius=5.0):
    """All NMS-surviving local maxima of one frame as (x, y, value) rows.

    Thresholding commutes with greedy suppression (a suppressor is always
    at least as strong as what it suppresses), so collecting peaks once
    with a zero threshold and filtering later reproduces
    :func:`stmd.estimation.detect` at every gamma.
    """
    dets = detect(response, gamma=0.0, suppress_radius=suppress_radius)
    return [(d.x, d.y, d.response) for d in dets]


def default_gamma_grid(peak_responses, n_points=50, span_decades=3.0):
    """Log-spaced threshold grid over the observed response range."""
    top = float(max(peak_responses)) if len(peak_responses) else 0.0
    if top <= 0.0:
        return np.linspace(0.0, 1.0, n_points)
    return np.logspace(
        np.log10(top) - span_decades, np.log10(top), n_points)


def collect_peaks(responses, suppress_radius=5.0, first_frame=0):
    """Reduce an iterable of per-frame responses to indexed peak lists.

    Consumes lazily, so ``responses`` may be a generator over a live
    detector run; only the (x, y, value) peak rows are kept.
    """
    return [(first_frame + i, frame_peaks(r, suppress_radius))
            for i, r in enumerate(responses)]


def roc_from_peaks(peaks, truth, gammas=None, n_gammas=50, match_radius=5.0):
    """Threshold sweep over pre-collected per-frame peak lists.

    With ``gammas`` omitted, a log-spaced grid over the observed peak
    range is used.
    """
    if gammas is None:
        tops = [max((r for (_, _, r) in rows), default=0.0) for _, rows in peaks]
        gammas = default_gamma_grid(tops, n_gammas)
    gammas = np.asarray(list(gammas), dtype=np.float64)
    if gammas.size == 0:
        raise ValueError("gamma grid must be non-empty")
    n_frames = len(peaks)
    points = []
    for gamma in gammas:
        true_count = 0
        false_count = 0
        for frame_index, rows in peaks:
            dets = [(x, y, r) for (x, y, r) in rows if r > gamma]
            if not dets:
                continue
            if truth is not None and frame_index < len(truth):
                tx, ty = truth.x[frame_index], truth.y[frame_index]
                distances = [hypot(x - tx, y - ty) for (x, y, _) in dets]
                best = int(np.argmin(distances))
                if distances[best] <= match_radius:
                    true_count += 1
                    false_count += len(dets) - 1
                else:
                    false_count += len(dets)
            else:
                false_count += len(dets)
        d_r = true_count / n_frames if (truth is not None and n_frames) else 0.0
        points.append(RocPoint(float(gamma), d_r, false_count / max(n_frames, 1)))
    return points


def roc_sweep(responses, truth, gammas, suppress_radius=5.0, match_radius=5.0,
              first_frame=0):
    """Detection rate and false alarms per frame over a threshold grid.

    ``responses`` is an iterable of per-frame responses (response objects
    or channel-max maps) starting at frame index ``first_frame``; frames
    before it (warm-up) must already be excluded by the caller.
    """
    peaks = collect_peaks(responses, suppress_radius, first_frame)
    return roc_from_peaks(peaks, truth, gammas, match_radius=match_radius)


def _model_pipeline(cfg, shape, model):
    if model == "dstmd":
        return DstmdPipeline(cfg, shape)
    if model == "estmd":
        return EstmdPipeline(cfg, shape)
    raise ValueError(f"unknown model {model!r}, expected 'dstmd' or 'estmd'")


def _response_map(response):
    return response.e.max(axis=0) if hasattr(response, "e") else response.d


def roc_experiment(cfg, frames, truth, model="dstmd", gammas=None, n_gammas=50,
                   suppress_radius=5.0, match_radius=5.0):
    """Run a detector over a clip and sweep the detection threshold."""
    pipe = _model_pipeline(cfg, frames[0].shape, model)

    def post_warmup_maps():
        for t, frame in enumerate(frames):
            response = pipe.process_frame(frame)
            if t >= cfg.warmup:
                yield _response_map(response)

    peaks = collect_peaks(post_warmup_maps(), suppress_radius,
                          first_frame=cfg.warmup)
    return roc_from_peaks(peaks, truth, gammas, n_gammas, match_radius)


# ---- tuning protocol ----

@dataclass(frozen=True)
class TuningProtocol:
    """Stimulus geometry for single-parameter tuning sweeps.

    The base target is the published operating point: a dark (luminance
    0) 5x5 target at 250 px/s on a white background, full Weber contrast.
    One parameter is swept while the other three stay fixed.  The margin
    keeps the target's trajectory clear of every kernel's border reach;
    measurement skips the warm-up and a guard window at both ends.
    """

    frame_width: int = 500
    frame_height: int = 250
    duration: int = 1000
    fps: float = 1000.0
    velocity: float = 250.0
    width: int = 5
    height: int = 5
    contrast: float = 1.0
    guard: int = 50
    border_trim: int = 2

    def margin(self, cfg):
        reach = (int(ceil(cfg.spatial_truncation * cfg.sigma1))
                 + int(ceil(cfg.spatial_truncation * cfg.sigma3))
                 + int(ceil(cfg.spatial_truncation * cfg.sigma5))
                 + int(ceil(cfg.alpha1)) + 2)
        return reach + max(self.width, self.height)

    def spec_for(self, cfg, parameter, value):
        """Stimulus spec for one sweep point (rightward linear motion)."""
        velocity = self.velocity
        width, height, contrast = self.width, self.height, self.contrast
        if parameter == "velocity":
            velocity = float(value)
        elif parameter == "width":
            width = int(value)
        elif parameter == "height":
            height = int(value)
        elif parameter == "contrast":
            contrast = float(value)
        else:
            raise ValueError(
                f"unknown tuning parameter {parameter!r}, expected one of "
                f"{TUNING_PARAMETERS}")
        margin = self.margin(cfg)
        usable = self.frame_width - 2 * margin
        if usable <= 0:
            raise ValueError("frame too narrow for the configured margins")
        duration = min(self.duration,
                       int(usable / velocity * self.fps))
        min_duration = cfg.warmup + 2 * self.guard + 20
        if duration < min_duration:
            raise ValueError(
                f"sweep point {parameter}={value}: clip of {duration} frames "
                f"is shorter than the required {min_duration}")
        path = LinearPath((float(margin), self.frame_height / 2.0),
                          (velocity, 0.0))
        return StimulusSpec(
            width=self.frame_width, height=self.frame_height, fps=self.fps,
            duration=duration,
            background=SolidBackground(255.0 * contrast),
            target=TargetSpec(width, height, 0.0, path))


def measure_clip_response(cfg, spec, truth_required=True, model="dstmd",
                          guard=50, border_trim=2):
    """Mean over measured frames of the peak response to the target.

    The per-frame measure is the maximum response over the direction
    channels and the frame interior (a thin border band is trimmed).  On
    the single-object tuning clips that peak is the target's response
    wherever the detector's group delay has displaced it; anchoring the
    measure on the instantaneous target position instead would clip the
    response of fast or wide targets and distort every tuning curve.
    """
    frames, truth = render_sequence(spec)
    if truth is None and truth_required:
        raise ValueError("tuning clips must contain a target")
    pipe = _model_pipeline(cfg, frames.shape[1:], model)
    lo = cfg.warmup + guard
    hi = spec.duration - guard
    if hi <= lo:
        raise ValueError("empty measurement window")
    trim = slice(border_trim, -border_trim) if border_trim else slice(None)
    total = 0.0
    count = 0
    for t in range(spec.duration):
        response = pipe.process_frame(frames[t])
        if lo <= t < hi:
            m = _response_map(response)
            total += float(m[trim, trim].max())
            count += 1
    return total / count


def tuning_curve(parameter, values, cfg=None, protocol=None, model="dstmd",
                 n_jobs=1):
    """Sweep one target parameter and record the normalized response."""
    cfg = cfg or PipelineConfig()
    protocol = protocol or TuningProtocol()
    values = list(values)
    specs = [protocol.spec_for(cfg, parameter, v) for v in values]
    worker = delayed(measure_clip_response)
    raw = Parallel(n_jobs=n_jobs)(
        worker(cfg, spec, model=model, guard=protocol.guard,
               border_trim=protocol.border_trim)
        for spec in specs)
    raw = np.asarray(raw, dtype=np.float64)
    top = raw.max()
    if top <= 0:
        raise ValueError(f"{parameter} sweep produced no positive responses")
    return TuningCurve(parameter, np.asarray(values, dtype=np.float64), raw / top)


# ---- direction estimation experiment ----

def direction_error_series(estimates, truth):
    """Per-frame angular error in degrees, circular, in [0, 180].

    ``estimates`` holds one angle in radians per frame with NaN marking
    frames without an estimate; those stay NaN (absent, not zero).
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    true_angles = truth.direction if isinstance(truth, GroundTruth) else np.asarray(truth)
    true_angles = np.asarray(true_angles, dtype=np.float64)[: len(estimates)]
    diff = np.degrees(np.abs(np.angle(np.exp(1j * (estimates - true_angles)))))
    diff[np.isnan(estimates)] = np.nan
    return diff


def direction_experiment(cfg=None, spec=None, gamma_fraction=0.05,
                         select_radius=5.0, frames=None, truth=None):
    """Per-frame direction decoding on a moving-target clip.

    By default renders the white-background sinusoidal-sway clip and runs
    the directional detector; for each post-warm-up frame the strongest
    detection is decoded with the population vector over pixels within
    ``select_radius`` whose response exceeds ``gamma_fraction`` times the
    detection response.  The low default threshold admits the whole
    responding region, matching the decoder's summation domain (every
    neuron responding to the target).

    The reference for each estimate is the trajectory tangent at the
    trace point nearest the response centroid.  The detector's evidence
    spans its delay lines, so the response (and its decoded direction)
    belongs to the spot the target occupied a group delay ago; comparing
    against the tangent at that spot measures decoding quality without
    charging the detector for its intrinsic latency.

    Returns (frame indices, estimates in radians with NaN for absent,
    matched trace tangents in radians, errors in degrees).
    """
    cfg = cfg or PipelineConfig()
    if frames is None:
        spec = spec or StimulusSpec(target=TargetSpec(path=SinusoidPath()))
        frames, truth = render_sequence(spec)
    if truth is None:
        raise ValueError("direction experiment needs ground truth")
    pipe = DstmdPipeline(cfg, frames[0].shape)
    indices = []
    estimates = []
    matched = []
    trace = np.stack([truth.x, truth.y], axis=1)
    for t, frame in enumerate(frames):
        response = pipe.process_frame(frame)
        if t < cfg.warmup:
            continue
        indices.append(t)
        dets = detect(response, gamma=0.0, suppress_radius=select_radius)
        if not dets:
            estimates.append(np.nan)
            matched.append(truth.direction[t])
            continue
        top = dets[0]
        pixels = select_target_pixels(
            response, top, radius=select_radius,
            gamma=gamma_fraction * top.response)
        ys, xs = pixels
        weights = response.max_map()[ys, xs]
        xc = float((xs * weights).sum() / weights.sum())
        yc = float((ys * weights).sum() / weights.sum())
        nearest = int(np.argmin(
            np.hypot(trace[:t + 1, 0] - xc, trace[:t + 1, 1] - yc)))
        matched.append(truth.direction[nearest])
        try:
            angle = population_vector(response, pixels,
                                      directions=cfg.directions)
        except UndefinedDirectionError:
            estimates.append(np.nan)
            continue
        estimates.append(angle)
    indices = np.asarray(indices)
    estimates = np.asarray(estimates, dtype=np.float64)
    matched = np.asarray(matched, dtype=np.float64)
    errors = direction_error_series(estimates, matched)
    return indices, estimates, matched, errors


# ---- CSV emitters (schemas shared with the command line interface) ----

def write_roc_csv(path, points):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "dr", "fa"])
        for p in points:
            writer.writerow([f"{p.gamma:.9g}", f"{p.d_r:.6f}", f"{p.f_a:.6f}"])


def write_tuning_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "response"])
        for v, r in zip(curve.values, curve.responses):
            writer.writerow([f"{v:.9g}", f"{r:.9f}"])


def write_direction_csv(path, indices, estimates, truth_angles, errors):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "est_deg", "true_deg", "err_deg"])
        for i, est, tru, err in zip(indices, estimates, truth_angles, errors):
            est_txt = "" if np.isnan(est) else f"{np.degrees(est):.4f}"
            err_txt = "" if np.isnan(err) else f"{err:.4f}"
            writer.writerow([int(i), est_txt, f"{np.degrees(tru):.4f}", err_txt])
