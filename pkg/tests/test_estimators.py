"""scikit-learn transformer front ends."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stmd import DSTMD, ESTMD
from stmd.dstmd import DstmdPipeline
from stmd.config import PipelineConfig
from stmd.stimulus import (
    LinearPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    render_sequence,
)


def tiny_clip(duration=40):
    spec = StimulusSpec(
        width=60, height=30, duration=duration,
        background=SolidBackground(255.0),
        target=TargetSpec(3, 3, 0.0, LinearPath((45.0, 15.0), (-250.0, 0.0))))
    frames, _ = render_sequence(spec)
    return frames


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = DSTMD(tau4=10.0, n_directions=4)
        params = est.get_params()
        assert params["tau4"] == 10.0
        assert params["n_directions"] == 4
        rebuilt = DSTMD(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = DSTMD()
        est.set_params(sigma4=2.3, sigma5=4.6)
        assert est.sigma4 == 2.3

    def test_clone(self):
        est = DSTMD(warmup=10)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_fit_builds_config(self):
        est = DSTMD(warmup=10).fit()
        assert isinstance(est.config_, PipelineConfig)
        assert est.config_.warmup == 10

    def test_transform_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            DSTMD().transform(np.zeros((3, 8, 8)))

    def test_invalid_params_raise_at_fit(self):
        with pytest.raises(ValueError):
            DSTMD(sigma5=0.5).fit()


class TestTransform:
    def test_dstmd_output_shape_and_sign(self):
        clip = tiny_clip()
        out = DSTMD(warmup=10).fit().transform(clip)
        assert out.shape == (clip.shape[0], 8, 30, 60)
        assert out.min() >= 0.0

    def test_estmd_output_shape(self):
        clip = tiny_clip()
        out = ESTMD(warmup=10).fit().transform(clip)
        assert out.shape == clip.shape
        assert out.min() >= 0.0

    def test_matches_streaming_pipeline(self):
        clip = tiny_clip()
        est = DSTMD(warmup=10).fit()
        out = est.transform(clip)
        pipe = DstmdPipeline(est.config_, clip.shape[1:])
        for t in range(clip.shape[0]):
            r = pipe.process_frame(clip[t])
            assert np.array_equal(out[t], r.e)

    def test_transform_resets_state(self):
        clip = tiny_clip()
        est = DSTMD(warmup=10).fit()
        a = est.transform(clip)
        b = est.transform(clip)
        assert np.array_equal(a, b)

    def test_rejects_bad_input(self):
        est = DSTMD().fit()
        with pytest.raises(ValueError):
            est.transform(np.zeros((4, 4)))
        bad = np.zeros((3, 6, 6))
        bad[1, 2, 2] = np.inf
        with pytest.raises(ValueError):
            est.transform(bad)

    def test_n_directions_respected(self):
        clip = tiny_clip(duration=15)
        out = DSTMD(warmup=5, n_directions=4).fit().transform(clip)
        assert out.shape[1] == 4
