"""Decoding detections and motion direction from model responses.

Thresholding plus greedy non-maximum suppression finds target
candidates; the motion direction of a detection is decoded from the
direction-tuned responses around it by a population vector (weighted
vector sum over pixels and direction channels).

Angles follow the image convention used throughout: x grows rightward,
y grows downward, directions in radians in [0, 2*pi).
"""

from dataclasses import dataclass
from math import atan2, hypot, pi

import numpy as np
from scipy import ndimage

__all__ = [
    "Detection",
    "UndefinedDirectionError",
    "detect",
    "select_target_pixels",
    "population_vector",
    "estimate_direction",
]


class UndefinedDirectionError(ValueError):
    """The direction-tuned responses cancel; no direction can be decoded."""


@dataclass
class Detection:
    """One detected target candidate in one frame."""

    frame_index: int
    x: int
    y: int
    response: float
    direction: float = None  # radians in [0, 2*pi), or None when not decoded


def _as_stack(e):
    """Accept a (channels, h, w) stack, a bare (h, w) map, or a response object."""
    if hasattr(e, "e"):
        e = e.e
    elif hasattr(e, "d"):
        e = e.d
    e = np.asarray(e, dtype=np.float64)
    if e.ndim == 2:
        e = e[None, :, :]
    if e.ndim != 3:
        raise ValueError(f"expected a 2-D map or 3-D channel stack, got shape {e.shape}")
    return e


def detect(e, gamma, suppress_radius=5.0, frame_index=0):
    """Local maxima of the channel-max response above ``gamma``.

    Candidates are pixels that are maximal within their 3x3 neighbourhood
    and exceed the threshold; any weaker candidate within
    ``suppress_radius`` pixels (Euclidean) of a stronger one is greedily
    suppressed.  Ties are broken by scan order so results are
    deterministic.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma!r}")
    stack = _as_stack(e)
    m = stack.max(axis=0)
    peak_mask = (m == ndimage.maximum_filter(m, size=3, mode="nearest")) & (m > gamma)
    ys, xs = np.nonzero(peak_mask)
    if ys.size == 0:
        return []
    responses = m[ys, xs]
    order = np.lexsort((xs, ys, -responses))
    kept_x, kept_y, detections = [], [], []
    r2 = float(suppress_radius) ** 2
    for i in order:
        x, y, resp = int(xs[i]), int(ys[i]), float(responses[i])
        suppressed = False
        for kx, ky in zip(kept_x, kept_y):
            if (kx - x) ** 2 + (ky - y) ** 2 <= r2:
                suppressed = True
                break
        if not suppressed:
            kept_x.append(x)
            kept_y.append(y)
            detections.append(Detection(frame_index, x, y, resp))
    return detections


def select_target_pixels(e, detection, radius=5.0, gamma=0.0):
    """Pixels near a detection whose channel-max response exceeds ``gamma``.

    Returns (ys, xs) index arrays; the detection's own pixel always
    qualifies, so the set is never empty.
    """
    stack = _as_stack(e)
    h, w = stack.shape[1:]
    r = int(np.ceil(radius))
    y0, y1 = max(detection.y - r, 0), min(detection.y + r, h - 1)
    x0, x1 = max(detection.x - r, 0), min(detection.x + r, w - 1)
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = (ys - detection.y) ** 2 + (xs - detection.x) ** 2 <= float(radius) ** 2
    above = stack[:, y0:y1 + 1, x0:x1 + 1].max(axis=0) > gamma
    keep = inside & above
    keep[detection.y - y0, detection.x - x0] = True
    return ys[keep], xs[keep]


def population_vector(e, pixels, directions=None):
    """Decode one motion direction from direction-tuned responses.

    Sums response-weighted unit vectors over the given pixels and all
    direction channels and returns the angle of the resultant, mapped to
    [0, 2*pi).  An (almost) vanishing resultant means the response is
    isotropic and no direction is defined.
    """
    stack = _as_stack(e)
    if directions is None:
        directions = tuple(k * 2.0 * pi / stack.shape[0] for k in range(stack.shape[0]))
    if len(directions) != stack.shape[0]:
        raise ValueError("directions length must match the number of channels")
    ys, xs = pixels
    ys = np.atleast_1d(ys)
    xs = np.atleast_1d(xs)
    if ys.size == 0:
        raise ValueError("pixel set must be non-empty")
    weights = stack[:, ys, xs].sum(axis=1)
    vx = float(np.dot(weights, np.cos(directions)))
    vy = float(np.dot(weights, np.sin(directions)))
    if hypot(vx, vy) < 1e-12:
        raise UndefinedDirectionError("direction-tuned responses cancel")
    return atan2(vy, vx) % (2.0 * pi)


def estimate_direction(e, detection, radius=5.0, gamma=0.0, directions=None):
    """Population-vector direction for the pixels around one detection."""
    pixels = select_target_pixels(e, detection, radius=radius, gamma=gamma)
    return population_vector(e, pixels, directions=directions)
