"""Shared brute-force reference implementations.

These oracles deliberately avoid the production code paths: dense
nested-loop convolutions with explicit coordinate clamping, direct
causal FIR sums over the raw history.  Production results are checked
against them, never the other way around.
"""

import numpy as np
import pytest


def dense_conv2d_replicate(frame, taps):
    """Loopy same-size 2-D convolution with replicate border."""
    h, w = frame.shape
    kh, kw = taps.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros_like(frame, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    yy = min(max(y - (i - ry), 0), h - 1)
                    xx = min(max(x - (j - rx), 0), w - 1)
                    acc += taps[i, j] * frame[yy, xx]
            out[y, x] = acc
    return out


def dense_temporal_fir(signals, taps):
    """Causal FIR along axis 0 with zero history before the first sample."""
    signals = np.asarray(signals, dtype=np.float64)
    out = np.zeros_like(signals)
    for t in range(signals.shape[0]):
        for k in range(len(taps)):
            if t - k >= 0:
                out[t] += taps[k] * signals[t - k]
    return out


def dense_conv3d_replicate_causal(clip, kernel3d):
    """Direct space-time convolution: replicate in space, zero history in time.

    ``kernel3d[s, i, j]`` weights the sample s frames in the past at
    spatial offset (i - ry, j - rx).  Chunked over output frames to stay
    within memory while remaining a plain windowed sum.
    """
    t_len, h, w = clip.shape
    ks, kh, kw = kernel3d.shape
    ry, rx = kh // 2, kw // 2
    padded = np.pad(clip, ((ks - 1, 0), (ry, ry), (rx, rx)), mode="edge")
    # zero out the temporal padding: cold start means no history
    padded[: ks - 1] = np.pad(
        np.zeros((ks - 1, h, w)), ((0, 0), (ry, ry), (rx, rx)), mode="edge")
    flipped = kernel3d[::-1]  # so a plain window product is a convolution
    out = np.empty_like(clip, dtype=np.float64)
    for t in range(t_len):
        window = padded[t:t + ks]
        acc = np.zeros((h, w))
        for i in range(kh):
            for j in range(kw):
                acc += np.einsum(
                    "s,syx->yx", flipped[:, kh - 1 - i, kw - 1 - j],
                    window[:, i:i + h, j:j + w])
        out[t] = acc
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)
