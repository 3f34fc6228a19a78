"""Procedural grayscale stimulus generation with analytic ground truth.

Renders sequences of a rectangular target moving over a plain or panning
background.  Coordinates follow the image convention (x rightward along
columns, y downward along rows); time is counted in frames, with frame t
rendered at t / fps seconds.  Rendering is deterministic: the same spec
always produces bit-identical sequences.

Luminance is kept in float64 throughout so non-integer backgrounds (from
contrast sweeps) survive; the 8-bit quantization happens only when
frames are written to disk.
"""

import csv
import re
from dataclasses import dataclass, field
from math import atan2, ceil, cos, floor, pi, sin
from pathlib import Path

import numpy as np

__all__ = [
    "LinearPath",
    "SinusoidPath",
    "TargetSpec",
    "SolidBackground",
    "ImageBackground",
    "StimulusSpec",
    "GroundTruth",
    "render_sequence",
    "weber_contrast",
    "actual_direction",
    "make_clutter_background",
    "write_pgm",
    "read_pgm",
    "load_frame",
    "save_sequence",
    "load_sequence",
    "DEFAULT_SINUSOID",
]


@dataclass(frozen=True)
class LinearPath:
    """Straight-line motion: start position in px, velocity in px/s."""

    start: tuple
    velocity: tuple

    def position(self, t, fps):
        s = t / fps
        return (self.start[0] + self.velocity[0] * s,
                self.start[1] + self.velocity[1] * s)

    def velocity_at(self, t, fps):
        return (float(self.velocity[0]), float(self.velocity[1]))


@dataclass(frozen=True)
class SinusoidPath:
    """Leftward drift with a vertical sinusoidal sway.

    position(t) = (x_start - vx * (t + offset) / fps,
                   y_center + amplitude * sin(angular_freq * (t + offset) / fps))
    with angular_freq in rad/s and offset in frames.
    """

    vx: float = 250.0
    amplitude: float = 15.0
    angular_freq: float = 4.0 * pi
    x_start: float = 500.0
    y_center: float = 125.0
    offset: float = 300.0

    def position(self, t, fps):
        s = (t + self.offset) / fps
        return (self.x_start - self.vx * s,
                self.y_center + self.amplitude * sin(self.angular_freq * s))

    def velocity_at(self, t, fps):
        s = (t + self.offset) / fps
        return (-self.vx,
                self.amplitude * self.angular_freq * cos(self.angular_freq * s))


DEFAULT_SINUSOID = SinusoidPath()


@dataclass(frozen=True)
class TargetSpec:
    """Rectangular target: width along x, height along y, luminance 0-255."""

    width: int = 5
    height: int = 5
    luminance: float = 0.0
    path: object = field(default=DEFAULT_SINUSOID)


@dataclass(frozen=True)
class SolidBackground:
    luminance: float = 255.0


@dataclass(frozen=True)
class ImageBackground:
    """A wide image panned horizontally with wraparound.

    ``velocity`` is the content velocity in px/s (positive moves the
    scenery rightward).  Nearest-integer panning is the default; the
    subpixel mode blends adjacent columns instead.
    """

    image: np.ndarray
    velocity: float = 250.0
    subpixel: bool = False


@dataclass(frozen=True)
class StimulusSpec:
    width: int = 500
    height: int = 250
    fps: float = 1000.0
    duration: int = 1000
    background: object = field(default_factory=SolidBackground)
    target: TargetSpec = None
    antialias_target: bool = False

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be > 0")
        if self.width < 1 or self.height < 1 or self.duration < 1:
            raise ValueError("width, height and duration must be >= 1")


@dataclass
class GroundTruth:
    """Analytic per-frame target center and motion tangent."""

    x: np.ndarray          # px, float
    y: np.ndarray          # px, float
    direction: np.ndarray  # radians in [0, 2*pi)

    def __len__(self):
        return len(self.x)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "x", "y", "direction_deg"])
            for i in range(len(self.x)):
                writer.writerow(
                    [i, f"{self.x[i]:.6f}", f"{self.y[i]:.6f}",
                     f"{np.degrees(self.direction[i]):.6f}"])

    @classmethod
    def read_csv(cls, path):
        xs, ys, dirs = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                xs.append(float(row["x"]))
                ys.append(float(row["y"]))
                dirs.append(np.radians(float(row["direction_deg"])))
        return cls(np.array(xs), np.array(ys), np.array(dirs))


def actual_direction(path, t, fps=1000.0):
    """Angle of the analytic trajectory tangent at frame ``t`` (image convention)."""
    vx, vy = path.velocity_at(t, fps)
    if vx == 0.0 and vy == 0.0:
        raise ValueError("trajectory derivative vanishes; direction undefined")
    return atan2(vy, vx) % (2.0 * pi)


def _paint_background(spec, t):
    bg = spec.background
    if isinstance(bg, SolidBackground):
        return np.full((spec.height, spec.width), float(bg.luminance))
    img = np.asarray(bg.image, dtype=np.float64)
    if img.shape[0] < spec.height or img.shape[1] < spec.width:
        raise ValueError(
            f"background image {img.shape} smaller than frame "
            f"({spec.height}, {spec.width})")
    shift = bg.velocity * t / spec.fps
    cols = np.arange(spec.width)
    if bg.subpixel:
        base = floor(shift)
        frac = shift - base
        c0 = (cols - base) % img.shape[1]
        c1 = (cols - base - 1) % img.shape[1]
        window = (1.0 - frac) * img[:spec.height, c0] + frac * img[:spec.height, c1]
    else:
        c0 = (cols - round(shift)) % img.shape[1]
        window = img[:spec.height, c0]
    return np.ascontiguousarray(window)


def _paint_target(frame, spec, cx, cy):
    tgt = spec.target
    w, h = tgt.width, tgt.height
    if spec.antialias_target:
        x_lo, x_hi = cx - w / 2.0, cx + w / 2.0
        y_lo, y_hi = cy - h / 2.0, cy + h / 2.0
        xs = np.arange(floor(x_lo), ceil(x_hi))
        ys = np.arange(floor(y_lo), ceil(y_hi))
        if xs[0] < 0 or ys[0] < 0 or xs[-1] >= spec.width or ys[-1] >= spec.height:
            raise ValueError("target leaves the frame")
        cov_x = np.clip(np.minimum(xs + 1, x_hi) - np.maximum(xs, x_lo), 0.0, 1.0)
        cov_y = np.clip(np.minimum(ys + 1, y_hi) - np.maximum(ys, y_lo), 0.0, 1.0)
        cov = np.outer(cov_y, cov_x)
        region = frame[ys[0]:ys[-1] + 1, xs[0]:xs[-1] + 1]
        frame[ys[0]:ys[-1] + 1, xs[0]:xs[-1] + 1] = (
            region * (1.0 - cov) + tgt.luminance * cov)
        return
    # nearest-integer placement keeps the painted center within half a
    # pixel of the analytic position for any target parity
    left = round(cx - (w - 1) / 2.0)
    top = round(cy - (h - 1) / 2.0)
    if left < 0 or top < 0 or left + w > spec.width or top + h > spec.height:
        raise ValueError(
            f"target box ({left}, {top}, {w}, {h}) leaves the frame "
            f"({spec.height}, {spec.width})")
    frame[top:top + h, left:left + w] = tgt.luminance


def render_sequence(spec: StimulusSpec):
    """Render all frames of a spec.

    Returns (frames, truth): frames is a (duration, height, width)
    float64 array, truth the analytic per-frame target state (or None
    for target-free sequences).
    """
    frames = np.empty((spec.duration, spec.height, spec.width))
    if spec.target is None:
        for t in range(spec.duration):
            frames[t] = _paint_background(spec, t)
        return frames, None
    path = spec.target.path
    xs = np.empty(spec.duration)
    ys = np.empty(spec.duration)
    dirs = np.empty(spec.duration)
    for t in range(spec.duration):
        frame = _paint_background(spec, t)
        cx, cy = path.position(t, spec.fps)
        _paint_target(frame, spec, cx, cy)
        frames[t] = frame
        xs[t] = cx
        ys[t] = cy
        dirs[t] = actual_direction(path, t, spec.fps)
    return frames, GroundTruth(xs, ys, dirs)


def weber_contrast(frame, center, w, h, d=10):
    """|mean(target box) - mean(surrounding ring)| / 255.

    The target box is the w-by-h rectangle a renderer would paint at
    ``center``; the ring is the (w+2d)-by-(h+2d) rectangle around it
    minus the box.  Boxes must lie inside the frame.
    """
    frame = np.asarray(frame, dtype=np.float64)
    cx, cy = center
    left = round(cx - (w - 1) / 2.0)
    top = round(cy - (h - 1) / 2.0)
    oleft, otop = left - d, top - d
    ow, oh = w + 2 * d, h + 2 * d
    if oleft < 0 or otop < 0 or oleft + ow > frame.shape[1] or otop + oh > frame.shape[0]:
        raise ValueError("background rectangle leaves the frame")
    inner = frame[top:top + h, left:left + w]
    outer = frame[otop:otop + oh, oleft:oleft + ow]
    ring_sum = outer.sum() - inner.sum()
    ring_count = outer.size - inner.size
    return abs(inner.mean() - ring_sum / ring_count) / 255.0


def make_clutter_background(width, height, rng, n_blobs=40, n_bars=8):
    """Band-limited noise plus dark blobs and vertical bars, values 0-255.

    A stand-in for natural-scene photographs: low-frequency luminance
    structure with scattered dark features of assorted sizes.  Fully
    determined by the supplied generator.
    """
    from scipy import ndimage as ndi

    base = rng.uniform(0.0, 1.0, size=(height, width))
    smooth = ndi.gaussian_filter(base, sigma=12.0, mode="wrap")
    smooth = (smooth - smooth.min()) / max(smooth.max() - smooth.min(), 1e-12)
    img = 120.0 + 130.0 * smooth
    for _ in range(n_blobs):
        bw = int(rng.integers(4, 40))
        bh = int(rng.integers(4, 30))
        x0 = int(rng.integers(0, width))
        y0 = int(rng.integers(0, max(height - bh, 1)))
        lum = float(rng.uniform(20.0, 110.0))
        xs = (x0 + np.arange(bw)) % width
        img[y0:y0 + bh, xs] = lum
    for _ in range(n_bars):
        bw = int(rng.integers(8, 30))
        x0 = int(rng.integers(0, width))
        lum = float(rng.uniform(10.0, 80.0))
        xs = (x0 + np.arange(bw)) % width
        img[:, xs] = lum
    return np.clip(img, 0.0, 255.0)


# ---- 8-bit grayscale I/O (portable graymap plus anything Pillow reads) ----

def write_pgm(path, frame):
    """Write a frame as a binary 8-bit portable graymap."""
    data = np.clip(np.rint(np.asarray(frame)), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens = []
    idx = 0
    while len(tokens) < 4:
        match = re.match(rb"\s*(?:#[^\n]*\n)*\s*(\S+)", raw[idx:])
        if match is None:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(match.group(1))
        idx += match.end()
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit graymaps are supported")
    data = np.frombuffer(raw[idx + 1:idx + 1 + width * height], dtype=np.uint8)
    if data.size != width * height:
        raise ValueError(f"{path}: truncated PGM data")
    return data.reshape(height, width).astype(np.float64)


def load_frame(path):
    """Load one grayscale frame; color inputs use Rec. 601 luminance."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.float64)


def save_sequence(directory, frames, truth=None):
    """Write frame_%06d.pgm files plus truth.csv into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_pgm(directory / f"frame_{i:06d}.pgm", frame)
    if truth is not None:
        truth.write_csv(directory / "truth.csv")


def load_sequence(directory):
    """Yield frames from a directory in lexicographic filename order."""
    directory = Path(directory)
    paths = sorted(
        p for p in directory.iterdir()
        if p.suffix.lower() in (".pgm", ".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")
    )
    if not paths:
        raise FileNotFoundError(f"no image files found in {directory}")
    for p in paths:
        yield load_frame(p)
