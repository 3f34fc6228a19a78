"""Streaming signal-processing primitives.

Frames are plain 2-D float64 arrays of shape (height, width), row-major,
with x addressing columns and y addressing rows (y grows downward).  The
module provides causal temporal FIR filtering over a ring-buffered frame
history, same-size 2-D convolution with a replicate border, half-wave
rectifiers, and bilinear sampling with border clamping.

All arithmetic is double precision; 8-bit inputs are converted once at
ingestion by the callers.
"""

from math import ceil

import numpy as np
from scipy import ndimage

from .kernels import DiscreteKernel2D, gaussian2d, gaussian_taps_1d

__all__ = [
    "as_frame",
    "conv2d",
    "TemporalStream",
    "temporal_step",
    "rectify_pos",
    "rectify_neg",
    "sample_bilinear",
    "shift_bilinear",
]


def as_frame(a, name="frame"):
    """Validate and convert an array-like to a float64 (height, width) frame."""
    f = np.asarray(a, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D array, got shape {np.shape(a)}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite values")
    return f


def conv2d(frame, kernel, border="replicate"):
    """Same-size 2-D convolution of a frame with a square kernel.

    The only supported border policy is replicate (coordinates clamped to
    the image), which avoids the spurious luminance edges a zero border
    would inject into the temporal band-pass stages downstream.
    """
    if border != "replicate":
        raise ValueError(f"unsupported border policy {border!r}")
    frame = as_frame(frame)
    taps = kernel.taps if isinstance(kernel, DiscreteKernel2D) else np.asarray(kernel)
    radius = taps.shape[0] // 2
    if radius >= min(frame.shape):
        raise ValueError(
            f"kernel radius {radius} does not fit frame {frame.shape}"
        )
    return ndimage.convolve(frame, taps, mode="nearest")


def rectify_pos(frame):
    """Positive half-wave: max(v, 0) per pixel."""
    return np.maximum(frame, 0.0)


def rectify_neg(frame):
    """Magnitude of the negative half-wave: -min(v, 0) per pixel."""
    return -np.minimum(frame, 0.0)


class TemporalStream:
    """Ring-buffered frame history for causal FIR filtering.

    Single writer: frames must be pushed in temporal order.  Missing
    history during cold start is treated as zero; callers are expected to
    discard a warm-up prefix before measuring anything.
    """

    def __init__(self, shape, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.shape = (int(shape[0]), int(shape[1]))
        self.capacity = int(capacity)
        self._buf = np.zeros((self.capacity, self.shape[0] * self.shape[1]))
        self._pos = 0  # slot holding the newest frame
        self.frames_seen = 0

    def push(self, frame):
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape != self.shape:
            raise ValueError(
                f"frame shape {frame.shape} does not match stream shape {self.shape}"
            )
        self._pos = (self._pos - 1) % self.capacity if self.frames_seen else 0
        self._buf[self._pos] = frame.reshape(-1)
        self.frames_seen += 1

    def _aligned_taps(self, kernels):
        weights = np.zeros((len(kernels), self.capacity))
        for i, kernel in enumerate(kernels):
            taps = kernel.taps
            if len(taps) > self.capacity:
                raise ValueError(
                    f"kernel length {len(taps)} exceeds stream capacity {self.capacity}"
                )
            idx = (self._pos + np.arange(len(taps))) % self.capacity
            weights[i, idx] = taps
        return weights

    def apply(self, kernel):
        """FIR output sum_k taps[k] * history[k] for the current history."""
        return self.apply_many([kernel])[0]

    def apply_many(self, kernels):
        """Apply several kernels against one shared history in a single pass."""
        weights = self._aligned_taps(kernels)
        out = weights @ self._buf
        return [row.reshape(self.shape) for row in out]


def temporal_step(stream, new_frame, kernel):
    """Push a frame into the stream and return the causal FIR output."""
    stream.push(new_frame)
    return stream.apply(kernel)


def sample_bilinear(frame, x, y):
    """Bilinear interpolation of the four surrounding pixels.

    Out-of-bounds coordinates clamp to the border, consistent with the
    replicate policy used by the spatial convolutions.
    """
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    fx = x - x0
    fy = y - y0
    xa = min(max(x0, 0), w - 1)
    xb = min(max(x0 + 1, 0), w - 1)
    ya = min(max(y0, 0), h - 1)
    yb = min(max(y0 + 1, 0), h - 1)
    top = (1.0 - fx) * frame[ya, xa] + fx * frame[ya, xb]
    bot = (1.0 - fx) * frame[yb, xa] + fx * frame[yb, xb]
    return float((1.0 - fy) * top + fy * bot)


def shift_bilinear(frame, dx, dy, rows=None, cols=None):
    """Sample ``frame`` at (x + dx, y + dy) for every pixel, border-clamped.

    With ``rows``/``cols`` (integer index arrays) only that sub-grid of
    output pixels is produced; sample coordinates still clamp against the
    full frame, matching :func:`sample_bilinear` exactly.
    """
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape
    if rows is None:
        rows = np.arange(h)
    if cols is None:
        cols = np.arange(w)
    x0 = int(np.floor(dx))
    y0 = int(np.floor(dy))
    fx = dx - x0
    fy = dy - y0
    ca = np.clip(cols + x0, 0, w - 1)
    ra = np.clip(rows + y0, 0, h - 1)
    if fx == 0.0 and fy == 0.0:
        return frame[np.ix_(ra, ca)]
    cb = np.clip(cols + x0 + 1, 0, w - 1)
    rb = np.clip(rows + y0 + 1, 0, h - 1)
    top = (1.0 - fx) * frame[np.ix_(ra, ca)] + fx * frame[np.ix_(ra, cb)]
    bot = (1.0 - fx) * frame[np.ix_(rb, ca)] + fx * frame[np.ix_(rb, cb)]
    return (1.0 - fy) * top + fy * bot


class SeparableGaussianConv:
    """Replicate-border Gaussian blur via two 1-D passes.

    The sampled square-grid Gaussian is exactly the outer product of its
    normalized 1-D taps, so the separated evaluation matches
    :func:`conv2d` with the full grid to rounding error.
    """

    def __init__(self, sigma, truncation_radius_sigmas=3.0):
        self.radius = int(ceil(truncation_radius_sigmas * sigma))
        self.taps = gaussian_taps_1d(sigma, self.radius)

    def apply(self, stack):
        """Convolve along the last two axes of a 2-D or 3-D array."""
        out = ndimage.convolve1d(stack, self.taps, axis=-1, mode="nearest")
        return ndimage.convolve1d(out, self.taps, axis=-2, mode="nearest")


class BoxSumConv:
    """Replicate-border moving-window sum over a (2r+1)^2 square."""

    def __init__(self, radius):
        self.radius = int(radius)
        self.taps = np.ones(2 * self.radius + 1)

    def apply(self, stack):
        out = ndimage.convolve1d(stack, self.taps, axis=-1, mode="nearest")
        return ndimage.convolve1d(out, self.taps, axis=-2, mode="nearest")


class CenterSurroundConv:
    """Fast applicator for kernels of the form A*[g]+ + B*[g]-.

    Here g = G(sigma_c) - e * G(sigma_s) - rho on the union support, the
    family behind both the lamina surround parts (A or B zero) and the
    second-order lateral inhibition kernel.  Writing the kernel as
    B*g + (A-B)*[g]+ turns the expensive full-grid convolution into two
    separable Gaussians, a separable box sum (only when rho != 0) and one
    small direct convolution with the compact positive disc.  The result
    equals :func:`conv2d` with the assembled kernel to rounding error.
    """

    def __init__(self, sigma_c, sigma_s, e=1.0, rho=0.0, A=1.0, B=1.0,
                 truncation_radius_sigmas=3.0):
        self.e = float(e)
        self.rho = float(rho)
        self.A = float(A)
        self.B = float(B)
        self.center = SeparableGaussianConv(sigma_c, truncation_radius_sigmas)
        self.surround = SeparableGaussianConv(sigma_s, truncation_radius_sigmas)
        radius = max(self.center.radius, self.surround.radius)
        self.radius = radius

        narrow = gaussian2d(sigma_c, truncation_radius_sigmas).taps
        wide = gaussian2d(sigma_s, truncation_radius_sigmas).taps
        pad_n = radius - narrow.shape[0] // 2
        pad_w = radius - wide.shape[0] // 2
        g = np.pad(narrow, pad_n) - self.e * np.pad(wide, pad_w) - self.rho
        self.kernel = DiscreteKernel2D(
            self.A * np.maximum(g, 0.0) + self.B * np.minimum(g, 0.0)
        )

        self.box = BoxSumConv(radius) if rho != 0.0 else None
        pos = np.maximum(g, 0.0)
        nz = np.argwhere(pos > 0.0)
        if nz.size == 0 or self.A == self.B:
            self.pos_taps = None
        else:
            r = int(np.abs(nz - radius).max())
            sl = slice(radius - r, radius + r + 1)
            self.pos_taps = np.ascontiguousarray(pos[sl, sl])

    def apply(self, stack):
        """Convolve a 2-D frame or a 3-D channel stack along its last two axes."""
        stack = np.asarray(stack, dtype=np.float64)
        if self.B != 0.0:
            out = self.B * (self.center.apply(stack) - self.e * self.surround.apply(stack))
            if self.box is not None:
                out -= self.B * self.rho * self.box.apply(stack)
        else:
            out = np.zeros_like(stack)
        if self.pos_taps is not None:
            taps = self.pos_taps if stack.ndim == 2 else self.pos_taps[None, :, :]
            out += (self.A - self.B) * ndimage.convolve(stack, taps, mode="nearest")
        return out
