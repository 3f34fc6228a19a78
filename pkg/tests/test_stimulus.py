"""Stimulus rendering, trajectories, contrast measurement and frame I/O."""

from math import pi

import numpy as np
import pytest

from stmd.stimulus import (
    GroundTruth,
    ImageBackground,
    LinearPath,
    SinusoidPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    actual_direction,
    load_sequence,
    make_clutter_background,
    read_pgm,
    render_sequence,
    save_sequence,
    weber_contrast,
    write_pgm,
)


class TestTrajectories:
    def test_sinusoid_reference_point(self):
        # at t = 700 frames the default path returns to mid-height
        path = SinusoidPath()
        x, y = path.position(700, 1000.0)
        assert x == pytest.approx(250.0, abs=1e-9)
        assert y == pytest.approx(125.0, abs=1e-9)

    def test_linear_directions(self):
        assert actual_direction(LinearPath((0, 0), (-250.0, 0.0)), 0) == pytest.approx(pi)
        assert actual_direction(LinearPath((0, 0), (0.0, 250.0)), 0) == pytest.approx(pi / 2)

    def test_sinusoid_direction_range(self):
        path = SinusoidPath()
        degs = np.degrees([actual_direction(path, t) for t in range(1001)])
        assert degs.min() == pytest.approx(142.98, abs=0.1)
        assert degs.max() == pytest.approx(217.01, abs=0.1)

    def test_zero_velocity_undefined(self):
        with pytest.raises(ValueError):
            actual_direction(LinearPath((5, 5), (0.0, 0.0)), 0)


class TestRender:
    def test_solid_no_target(self):
        spec = StimulusSpec(width=40, height=30, duration=5,
                            background=SolidBackground(255.0), target=None)
        frames, truth = render_sequence(spec)
        assert truth is None
        assert np.all(frames == 255.0)

    def test_determinism(self):
        spec = StimulusSpec(width=60, height=40, duration=20,
                            target=TargetSpec(5, 5, 0.0, LinearPath((30, 20), (250, 0))))
        a, _ = render_sequence(spec)
        b, _ = render_sequence(spec)
        assert np.array_equal(a, b)

    def test_painted_center_close_to_analytic(self):
        for w, h in ((5, 5), (4, 6), (1, 1)):
            spec = StimulusSpec(
                width=80, height=60, duration=40,
                target=TargetSpec(w, h, 0.0, LinearPath((20.3, 30.7), (123.0, -37.0))))
            frames, truth = render_sequence(spec)
            for t in range(40):
                ys, xs = np.nonzero(frames[t] < 255.0)
                cx = (xs.min() + xs.max()) / 2.0
                cy = (ys.min() + ys.max()) / 2.0
                assert abs(cx - truth.x[t]) <= 0.5
                assert abs(cy - truth.y[t]) <= 0.5

    def test_target_leaving_frame_rejected(self):
        spec = StimulusSpec(width=50, height=40, duration=100,
                            target=TargetSpec(5, 5, 0.0, LinearPath((45, 20), (250, 0))))
        with pytest.raises(ValueError):
            render_sequence(spec)

    def test_pan_period_four_frames(self):
        # 250 px/s at 1000 fps pans 0.25 px per frame; nearest-integer
        # panning repeats the column content with period 4
        rng = np.random.default_rng(0)
        image = rng.uniform(0, 255, size=(30, 50))
        spec = StimulusSpec(width=50, height=30, duration=9,
                            background=ImageBackground(image, velocity=250.0),
                            target=None)
        frames, _ = render_sequence(spec)
        assert np.array_equal(frames[4], np.roll(frames[0], 1, axis=1))
        assert np.array_equal(frames[8], np.roll(frames[0], 2, axis=1))

    def test_subpixel_pan_blends(self):
        image = np.zeros((4, 8))
        image[:, 2] = 100.0
        spec = StimulusSpec(width=8, height=4, duration=3,
                            background=ImageBackground(image, velocity=500.0,
                                                       subpixel=True),
                            target=None)
        frames, _ = render_sequence(spec)
        # after one frame the column has moved half a pixel rightward
        assert frames[1][0, 2] == pytest.approx(50.0)
        assert frames[1][0, 3] == pytest.approx(50.0)

    def test_small_background_image_rejected(self):
        spec = StimulusSpec(width=50, height=30, duration=2,
                            background=ImageBackground(np.zeros((10, 10))),
                            target=None)
        with pytest.raises(ValueError):
            render_sequence(spec)

    def test_antialiased_target_coverage(self):
        spec = StimulusSpec(
            width=30, height=20, duration=1, antialias_target=True,
            background=SolidBackground(255.0),
            target=TargetSpec(5, 5, 0.0, LinearPath((10.5, 10.5), (0.0, 250.0))))
        frames, _ = render_sequence(spec)
        darkened = 255.0 - frames[0]
        # total darkening equals the analytic area regardless of alignment
        assert darkened.sum() == pytest.approx(255.0 * 25.0, rel=1e-12)


class TestWeberContrast:
    def test_full_contrast(self):
        frame = np.full((60, 60), 255.0)
        frame[28:33, 28:33] = 0.0
        assert weber_contrast(frame, (30, 30), 5, 5, d=10) == pytest.approx(1.0)

    def test_equal_means_zero(self):
        frame = np.full((60, 60), 80.0)
        assert weber_contrast(frame, (30, 30), 5, 5, d=10) == 0.0

    def test_half_contrast(self):
        frame = np.full((60, 60), 127.5)
        frame[28:33, 28:33] = 0.0
        assert weber_contrast(frame, (30, 30), 5, 5, d=10) == pytest.approx(0.5)

    def test_background_luminance_scaling(self):
        for b in (25.5, 127.5, 255.0):
            frame = np.full((60, 60), b)
            frame[28:33, 28:33] = 0.0
            assert weber_contrast(frame, (30, 30), 5, 5, d=10) == pytest.approx(b / 255.0)

    def test_out_of_bounds_rejected(self):
        frame = np.full((20, 20), 255.0)
        with pytest.raises(ValueError):
            weber_contrast(frame, (10, 10), 5, 5, d=10)


class TestFrameIO:
    def test_pgm_round_trip(self, tmp_path, rng):
        frame = rng.uniform(0, 255, size=(13, 17))
        path = tmp_path / "frame.pgm"
        write_pgm(path, frame)
        loaded = read_pgm(path)
        assert loaded.shape == (13, 17)
        assert np.array_equal(loaded, np.clip(np.rint(frame), 0, 255))

    def test_sequence_round_trip(self, tmp_path):
        spec = StimulusSpec(width=40, height=30, duration=6,
                            target=TargetSpec(5, 5, 0.0, LinearPath((20, 15), (250, 0))))
        frames, truth = render_sequence(spec)
        save_sequence(tmp_path, frames, truth)
        assert sorted(p.name for p in tmp_path.glob("*.pgm"))[0] == "frame_000000.pgm"
        loaded = np.stack(list(load_sequence(tmp_path)))
        assert np.array_equal(loaded, frames)  # integer luminances survive
        truth2 = GroundTruth.read_csv(tmp_path / "truth.csv")
        assert np.allclose(truth2.x, truth.x, atol=1e-6)
        assert np.allclose(truth2.direction, truth.direction, atol=1e-6)

    def test_clutter_background_deterministic(self):
        a = make_clutter_background(100, 50, np.random.default_rng(42))
        b = make_clutter_background(100, 50, np.random.default_rng(42))
        assert np.array_equal(a, b)
        assert a.min() >= 0.0 and a.max() <= 255.0
