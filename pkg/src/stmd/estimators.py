"""scikit-learn style transformer front ends for the detectors.

The detectors are transform-shaped: a video goes in, response maps come
out, and there is nothing to learn from data.  ``fit`` validates the
parameters and builds the filter bank; ``transform`` runs the streaming
pipeline over a whole sequence.  Exposing every model parameter through
``get_params``/``set_params`` keeps the detectors compatible with
cloning, pipelines and parameter sweeps from the wider ecosystem.
"""

from math import pi

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import PipelineConfig
from .dstmd import DstmdPipeline
from .estmd import EstmdPipeline

__all__ = ["DSTMD", "ESTMD", "check_video"]


def check_video(X):
    """Validate a (frames, height, width) luminance sequence."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ValueError(
            f"expected a 3-D (frames, height, width) array, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1 or X.shape[2] < 1:
        raise ValueError(f"empty video of shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("video contains non-finite values")
    return X


class _StmdBase(BaseEstimator, TransformerMixin):
    def __init__(self, sigma1=1.0, n1=2, tau1=3.0, n2=6, tau2=9.0,
                 sigma2=1.5, sigma3=3.0, lambda1=3.0, lambda2=9.0,
                 A=1.0, B=3.0, sigma4=1.5, sigma5=3.0, e=1.0, rho=0.0,
                 n3=5, tau3=25.0, n4=3, tau4=15.0, n5=5, tau5=25.0,
                 n6=8, tau6=40.0, alpha1=3.0, sigma6=1.5, sigma7=3.0,
                 n_directions=8, step=1.0, warmup=200, mass_cutoff=1e-3):
        self.sigma1 = sigma1
        self.n1 = n1
        self.tau1 = tau1
        self.n2 = n2
        self.tau2 = tau2
        self.sigma2 = sigma2
        self.sigma3 = sigma3
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.A = A
        self.B = B
        self.sigma4 = sigma4
        self.sigma5 = sigma5
        self.e = e
        self.rho = rho
        self.n3 = n3
        self.tau3 = tau3
        self.n4 = n4
        self.tau4 = tau4
        self.n5 = n5
        self.tau5 = tau5
        self.n6 = n6
        self.tau6 = tau6
        self.alpha1 = alpha1
        self.sigma6 = sigma6
        self.sigma7 = sigma7
        self.n_directions = n_directions
        self.step = step
        self.warmup = warmup
        self.mass_cutoff = mass_cutoff

    def _build_config(self):
        directions = tuple(
            k * 2.0 * pi / self.n_directions for k in range(self.n_directions))
        return PipelineConfig(
            sigma1=self.sigma1, n1=self.n1, tau1=self.tau1, n2=self.n2,
            tau2=self.tau2, sigma2=self.sigma2, sigma3=self.sigma3,
            lambda1=self.lambda1, lambda2=self.lambda2, A=self.A, B=self.B,
            sigma4=self.sigma4, sigma5=self.sigma5, e=self.e, rho=self.rho,
            n3=self.n3, tau3=self.tau3, n4=self.n4, tau4=self.tau4,
            n5=self.n5, tau5=self.tau5, n6=self.n6, tau6=self.tau6,
            alpha1=self.alpha1, sigma6=self.sigma6, sigma7=self.sigma7,
            directions=directions, step=self.step, warmup=self.warmup,
            mass_cutoff=self.mass_cutoff)

    def fit(self, X=None, y=None):
        """Validate parameters and build the filter bank (no learning)."""
        self.config_ = self._build_config()
        return self

    def _pipeline(self, shape):
        raise NotImplementedError

    def stream(self, frames):
        """Yield one response object per frame of an iterable of frames."""
        check_is_fitted(self, "config_")
        pipeline = None
        for frame in frames:
            frame = np.asarray(frame, dtype=np.float64)
            if pipeline is None:
                pipeline = self._pipeline(frame.shape)
            yield pipeline.process_frame(frame)


class DSTMD(_StmdBase):
    """Directionally selective small-target motion detector.

    ``transform`` maps a (frames, height, width) sequence to a
    (frames, n_directions, height, width) array of non-negative response
    grids; responses within the first ``warmup`` frames are transient.
    """

    def _pipeline(self, shape):
        return DstmdPipeline(self.config_, shape)

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_video(X)
        out = np.empty((X.shape[0], self.n_directions, X.shape[1], X.shape[2]))
        for response in self.stream(X):
            out[response.frame_index] = response.e
        return out


class ESTMD(_StmdBase):
    """Non-directional single-position baseline detector.

    ``transform`` maps a (frames, height, width) sequence to a same-shape
    array of non-negative responses.
    """

    def _pipeline(self, shape):
        return EstmdPipeline(self.config_, shape)

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_video(X)
        out = np.empty_like(X)
        for response in self.stream(X):
            out[response.frame_index] = response.d
        return out
