"""Acceptance suite: the quantitative exit criteria, one test per criterion.

Each test prints one ``[criterion N] PASS/FAIL`` line (run with ``pytest -s``
to see them live).  The sweeps follow the published protocols; experiments
whose scale the criteria do not pin run at a reduced desk scale chosen so
every kernel still fits with full margins.  Expect the whole module to take
tens of minutes; see the README for a per-criterion breakdown.
"""

import numpy as np

from stmd.config import PipelineConfig
from stmd.dstmd import DstmdPipeline
from stmd.estmd import EstmdPipeline
from stmd.estimation import UndefinedDirectionError, detect, estimate_direction
from stmd.evaluation import (
    TuningProtocol,
    collect_peaks,
    direction_experiment,
    roc_from_peaks,
    tuning_curve,
)
from stmd.kernels import gamma_kernel, temporal_bandpass, w2_kernel, w3_kernel
from stmd.stimulus import (
    ImageBackground,
    LinearPath,
    SinusoidPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    make_clutter_background,
    render_sequence,
)

N_JOBS = 2

VELOCITY_GRID = [float(v) for v in range(100, 701, 50)]
SIZE_GRID = [float(v) for v in range(1, 16)]
CONTRAST_GRID = [round(0.1 * k, 1) for k in range(1, 11)]

# reduced desk scale for sweeps whose geometry the criteria leave open;
# the frame still clears every kernel's reach for the largest swept
# parameters (sigma5 = 7.4 needs a 55 px margin)
SWEEP_PROTOCOL = TuningProtocol(frame_width=360, frame_height=110,
                                duration=520, guard=40)

_cache = {}


def report(number, passed, detail):
    print(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'} - {detail}",
          flush=True)
    assert passed, f"criterion {number}: {detail}"


def cached(key, builder):
    if key not in _cache:
        _cache[key] = builder()
    return _cache[key]


def dstmd_curve(parameter, values, protocol=SWEEP_PROTOCOL, **cfg_overrides):
    cfg = PipelineConfig(**cfg_overrides) if cfg_overrides else PipelineConfig()
    return tuning_curve(parameter, values, cfg, protocol, model="dstmd",
                        n_jobs=N_JOBS)


class TestCriterion1Velocity:
    def test_velocity_tuning_peak(self):
        curve = cached("velocity_desk", lambda: dstmd_curve(
            "velocity", VELOCITY_GRID, protocol=TuningProtocol()))
        peak = curve.argmax_value()
        passed = 250.0 <= peak <= 350.0
        report(1, passed,
               f"velocity argmax {peak:g} px/s (interpolated "
               f"{curve.interpolated_argmax():.1f}), required 300 +/- 50; "
               f"curve {np.round(curve.responses, 3).tolist()}")


class TestCriterion2WidthHeight:
    def test_width_and_height_peaks(self):
        width_curve = cached("width_base",
                             lambda: dstmd_curve("width", SIZE_GRID))
        height_curve = cached("height_base",
                              lambda: dstmd_curve("height", SIZE_GRID))
        wpeak = width_curve.argmax_value()
        hpeak = height_curve.argmax_value()
        passed = abs(wpeak - 5.0) <= 1.0 and abs(hpeak - 5.0) <= 1.0
        report(2, passed,
               f"width argmax {wpeak:g} px, height argmax {hpeak:g} px, "
               f"required 5 +/- 1")


class TestCriterion3Contrast:
    def test_contrast_monotone_both_models(self):
        fails = []
        details = []
        for model in ("dstmd", "estmd"):
            cfg = PipelineConfig()
            curve = cached(f"contrast_{model}", lambda m=model: tuning_curve(
                "contrast", CONTRAST_GRID, cfg, SWEEP_PROTOCOL, model=m,
                n_jobs=N_JOBS))
            drops = np.diff(curve.responses)
            worst_drop = float(-drops.min()) if drops.size else 0.0
            max_at_one = curve.argmax_value() == CONTRAST_GRID[-1]
            if worst_drop > 0.02 or not max_at_one:
                fails.append(model)
            details.append(f"{model}: argmax {curve.argmax_value():g}, "
                           f"worst drop {worst_drop:.4f}")
        report(3, not fails, "; ".join(details) +
               " (required: non-decreasing within 2%, max at contrast 1)")


class TestCriterion4Direction:
    TABLE_ACTUAL_DEG = [143.12, 151.21, 166.88, 181.63, 197.80, 215.53]

    def test_sinusoid_direction_errors(self):
        indices, estimates, truth_angles, errors = cached(
            "direction_experiment", lambda: direction_experiment())
        finite = errors[~np.isnan(errors)]
        coverage = finite.size / errors.size
        max_err = float(finite.max())
        # frames whose actual direction matches each tabulated position
        truth_deg = np.degrees(truth_angles)
        table_errs = []
        for target in self.TABLE_ACTUAL_DEG:
            nearest = int(np.argmin(np.abs(truth_deg - target)))
            table_errs.append(float(errors[nearest]))
        passed = (coverage == 1.0 and max_err <= 5.0
                  and all(e <= 2.5 for e in table_errs))
        report(4, passed,
               f"max error {max_err:.2f} deg (limit 5), tabulated-position "
               f"errors {np.round(table_errs, 2).tolist()} (limit 2.5), "
               f"estimate coverage {coverage:.3f}")


class TestCriterion5DirectionSelectivity:
    def test_eight_channel_pattern_for_leftward_motion(self):
        cfg = PipelineConfig()
        spec = StimulusSpec(
            width=360, height=80, duration=420,
            background=SolidBackground(255.0),
            target=TargetSpec(5, 5, 0.0, LinearPath((330.0, 40.0), (-250.0, 0.0))))
        frames, truth = render_sequence(spec)
        pipe = DstmdPipeline(cfg, frames.shape[1:])
        sums = np.zeros(cfg.n_directions)
        for t in range(spec.duration):
            r = pipe.process_frame(frames[t])
            if r.warmed_up and t < spec.duration - 40:
                sums += r.e.reshape(cfg.n_directions, -1).max(axis=1)
        winner = int(np.argmax(sums))
        by_distance = [sums[4],
                       max(sums[3], sums[5]),
                       max(sums[2], sums[6]),
                       max(sums[1], sums[7]),
                       sums[0]]
        monotone = all(a > b for a, b in zip(by_distance, by_distance[1:]))
        passed = winner == 4 and monotone
        report(5, passed,
               f"channel response profile {np.round(sums / sums.max(), 3).tolist()}, "
               f"winner at index {winner} (pi), strictly decreasing with "
               f"angular distance: {monotone}")


class TestCriterion6SizeSelectivity:
    def test_tall_bar_much_weaker_than_target(self):
        cfg = PipelineConfig()
        responses = {}
        for name, (w, h) in (("target", (5, 5)), ("bar", (5, 50))):
            spec = StimulusSpec(
                width=360, height=160, duration=420,
                background=SolidBackground(255.0),
                target=TargetSpec(w, h, 0.0, LinearPath((330.0, 80.0), (-250.0, 0.0))))
            frames, truth = render_sequence(spec)
            pipe = DstmdPipeline(cfg, frames.shape[1:])
            peak = 0.0
            for t in range(spec.duration):
                r = pipe.process_frame(frames[t])
                if r.warmed_up and t < spec.duration - 40:
                    # response attributed to the object: maximum in a
                    # trajectory-centred band wide enough for the group
                    # delay, away from the bar's clipped end rows
                    m = r.max_map()
                    cy = int(truth.y[t])
                    band = m[max(cy - 5, 0):cy + 6, :]
                    peak = max(peak, float(band.max()))
            responses[name] = peak
        ratio = responses["bar"] / responses["target"]
        passed = ratio < 0.2
        report(6, passed,
               f"50 px bar center response / 5x5 target response = {ratio:.3f} "
               f"(required < 0.2)")


class TestCriterion7StaticNullity:
    def test_constant_inputs_silent(self):
        cfg = PipelineConfig(warmup=200)
        worst = 0.0
        for lum in (0.0, 127.5, 255.0):
            pipe = DstmdPipeline(cfg, (40, 60))
            frame = np.full((40, 60), lum)
            last = None
            for _ in range(cfg.warmup + 30):
                last = pipe.process_frame(frame)
            worst = max(worst, float(np.abs(last.e).max()))
        passed = worst < 1e-9
        report(7, passed, f"max |response| on constant clips {worst:.3e} "
                          f"(required < 1e-9)")


class TestCriterion8OracleEquivalence:
    def test_streaming_vs_offline_and_separable_vs_dense(self, rng):
        from conftest import dense_conv3d_replicate_causal, dense_temporal_fir
        from stmd.engine import TemporalStream, temporal_step

        # streaming vs offline on 100 random signals (10x10 grid), 200 frames
        clip = rng.uniform(-3.0, 3.0, size=(200, 10, 10))
        worst_stream = 0.0
        for kernel in (gamma_kernel(3, 15.0), temporal_bandpass(2, 3.0, 6, 9.0)):
            expected = dense_temporal_fir(clip, np.asarray(kernel.taps))
            stream = TemporalStream((10, 10), len(kernel))
            for t in range(200):
                out = temporal_step(stream, clip[t], kernel)
                worst_stream = max(worst_stream,
                                   float(np.abs(out - expected[t]).max()))

        # separable lamina inhibition vs dense space-time convolution
        cfg = PipelineConfig()
        pipe = DstmdPipeline(cfg, (20, 20))
        small = rng.uniform(-1.0, 1.0, size=(60, 20, 20))
        ws_pos = pipe.front.surround_pos.kernel.taps
        ws_neg = pipe.front.surround_neg.kernel.taps
        wt_fast = np.asarray(pipe.front.inhibit_fast.taps)
        wt_slow = np.asarray(pipe.front.inhibit_slow.taps)
        depth = max(len(wt_fast), len(wt_slow))
        w1 = (np.pad(wt_fast, (0, depth - len(wt_fast)))[:, None, None] * ws_pos
              + np.pad(wt_slow, (0, depth - len(wt_slow)))[:, None, None] * ws_neg)
        expected = dense_conv3d_replicate_causal(small, w1)
        worst_sep = 0.0
        for t in range(60):
            out = pipe.front.inhibit_step(small[t])
            worst_sep = max(worst_sep, float(np.abs(out - expected[t]).max()))

        passed = worst_stream < 1e-9 and worst_sep < 1e-9
        report(8, passed,
               f"streaming-vs-offline max |diff| {worst_stream:.3e}, "
               f"separable-vs-dense max |diff| {worst_sep:.3e} (required < 1e-9)")


class TestCriterion9ParameterMonotonicity:
    N4TAU4 = [(1, 5.0), (2, 10.0), (3, 15.0), (4, 20.0), (5, 25.0), (6, 30.0)]
    SIGMA45 = [(1.0, 2.0), (1.5, 3.0), (2.3, 4.6), (2.8, 5.6), (3.7, 7.4)]

    def test_delay_settings_shift_velocity_and_width(self):
        velocity_peaks = []
        width_peaks = []
        for n4, tau4 in self.N4TAU4:
            vcurve = cached(f"c9_vel_{n4}", lambda n=n4, t=tau4: dstmd_curve(
                "velocity", VELOCITY_GRID, n4=n, tau4=t))
            wcurve = cached(f"c9_wid_{n4}", lambda n=n4, t=tau4: dstmd_curve(
                "width", SIZE_GRID, n4=n, tau4=t))
            velocity_peaks.append(vcurve.interpolated_argmax())
            width_peaks.append(wcurve.interpolated_argmax())
        vel_down = all(a > b for a, b in zip(velocity_peaks, velocity_peaks[1:]))
        wid_up = all(a < b for a, b in zip(width_peaks, width_peaks[1:]))
        passed = vel_down and wid_up
        report(9, passed,
               f"velocity argmax by delay setting {np.round(velocity_peaks, 1).tolist()} "
               f"(strictly decreasing: {vel_down}); width argmax "
               f"{np.round(width_peaks, 2).tolist()} (strictly increasing: {wid_up})")

    def test_inhibition_width_shifts_height_only(self):
        height_peaks = []
        stable = {"contrast": [], "velocity": [], "width": []}
        grid_step = {"contrast": 0.1, "velocity": 50.0, "width": 1.0}
        grids = {"contrast": CONTRAST_GRID, "velocity": VELOCITY_GRID,
                 "width": SIZE_GRID}
        for s4, s5 in self.SIGMA45:
            tag = f"{s4:g}"
            hcurve = cached(f"c9_hei_{tag}", lambda a=s4, b=s5: dstmd_curve(
                "height", SIZE_GRID, sigma4=a, sigma5=b))
            height_peaks.append(hcurve.interpolated_argmax())
            for param in stable:
                curve = cached(f"c9_{param}_{tag}", lambda p=param, a=s4, b=s5:
                               dstmd_curve(p, grids[p], sigma4=a, sigma5=b))
                stable[param].append(curve.argmax_value())
        hei_up = all(a < b for a, b in zip(height_peaks, height_peaks[1:]))
        stable_ok = {
            param: max(values) - min(values) <= grid_step[param] + 1e-9
            for param, values in stable.items()
        }
        passed = hei_up and all(stable_ok.values())
        report(9, passed,
               f"height argmax by inhibition width {np.round(height_peaks, 2).tolist()} "
               f"(strictly increasing: {hei_up}); argmax spread within one grid "
               f"step: {stable_ok} ({ {p: v for p, v in stable.items()} })")


def run_detector_over(frames, cfg, model):
    pipe = (DstmdPipeline if model == "dstmd" else EstmdPipeline)(cfg, frames.shape[1:])
    for t in range(frames.shape[0]):
        yield t, pipe.process_frame(frames[t])


class TestCriterion10ClutterRoc:
    WIDTH, HEIGHT, DURATION = 500, 250, 1000
    TARGET_SPEED = 150.0  # keeps detections inside the 5 px matching radius
                          # despite the detector's ~23 ms group delay

    def clutter_clip(self, luminance):
        def build():
            rngc = np.random.default_rng(7)
            image = make_clutter_background(2 * self.WIDTH, self.HEIGHT, rngc)
            path = SinusoidPath(vx=self.TARGET_SPEED, x_start=480.0,
                                y_center=125.0)
            spec = StimulusSpec(
                width=self.WIDTH, height=self.HEIGHT, duration=self.DURATION,
                background=ImageBackground(image, velocity=250.0),
                target=TargetSpec(5, 5, luminance, path))
            return render_sequence(spec)
        return cached(f"clutter_clip_{luminance:g}", build)

    def dstmd_peaks(self, luminance):
        def build():
            cfg = PipelineConfig()
            frames, truth = self.clutter_clip(luminance)
            maps = (r.max_map() for t, r in run_detector_over(frames, cfg, "dstmd")
                    if t >= cfg.warmup)
            return collect_peaks(maps, first_frame=cfg.warmup), truth
        return cached(f"dstmd_peaks_{luminance:g}", build)

    def test_luminance_ordering_and_directions(self):
        cfg = PipelineConfig()

        rocs = {}
        tops = {}
        for lum in (0.0, 50.0):
            peaks, truth = self.dstmd_peaks(lum)
            rocs[lum] = roc_from_peaks(peaks, truth, n_gammas=50)
            tops[lum] = max(max((r for (_, _, r) in rows), default=0.0)
                            for _, rows in peaks)

        # staircase dominance: best detection rate within any false-alarm budget
        def dr_at(points, budget):
            return max((p.d_r for p in points if p.f_a <= budget), default=0.0)

        budgets = sorted({p.f_a for lum in rocs for p in rocs[lum]})
        dominance = all(
            dr_at(rocs[0.0], b) >= dr_at(rocs[50.0], b) - 1e-12 for b in budgets)
        best_dr0 = max(p.d_r for p in rocs[0.0])

        # direction quality on detected frames of the dark-target clip
        frames, truth = self.clutter_clip(0.0)
        gamma = 0.5 * tops[0.0]
        errors = []
        for t, r in run_detector_over(frames, cfg, "dstmd"):
            if t < cfg.warmup:
                continue
            dets = detect(r, gamma)
            matched = [d for d in dets
                       if np.hypot(d.x - truth.x[t], d.y - truth.y[t]) <= 5.0]
            if not matched:
                continue
            try:
                angle = estimate_direction(r, matched[0], radius=5.0,
                                           gamma=0.5 * matched[0].response,
                                           directions=cfg.directions)
            except UndefinedDirectionError:
                continue
            err = np.degrees(abs(np.angle(np.exp(
                1j * (angle - truth.direction[t])))))
            errors.append(err)
        mean_err = float(np.mean(errors)) if errors else float("inf")

        # the baseline detects too, with no direction to report
        est_frames, est_truth = self.clutter_clip(0.0)
        est_maps = (r.d for t, r in run_detector_over(est_frames, cfg, "estmd")
                    if t >= cfg.warmup)
        est_peaks = collect_peaks(est_maps, first_frame=cfg.warmup)
        est_points = roc_from_peaks(est_peaks, est_truth, n_gammas=10)
        est_detects = max(p.d_r for p in est_points) > 0.5

        passed = (dominance and best_dr0 > 0.8 and mean_err <= 10.0
                  and est_detects)
        report(10, passed,
               f"luminance-0 dominates luminance-50 at matched false-alarm "
               f"budgets: {dominance} (best D_R {best_dr0:.3f}); DSTMD mean "
               f"direction error on detected frames {mean_err:.2f} deg "
               f"(limit 10, {len(errors)} decoded frames); ESTMD detects: "
               f"{est_detects}")


class TestCriterion11KernelSuite:
    def test_kernel_identities(self):
        h = temporal_bandpass(2, 3.0, 6, 9.0)
        w3 = w3_kernel(1.5, 3.0)
        w2 = w2_kernel(1.5, 3.0, e=1.0, rho=0.0, A=1.0, B=3.0)
        pos = w2.taps[w2.taps > 0].sum()
        neg = -w2.taps[w2.taps < 0].sum()
        ratio = neg / pos
        dense = gamma_kernel(2, 3.0, step=0.01)
        argmax_t = float(np.argmax(dense.taps)) * 0.01
        coarse = gamma_kernel(2, 3.0)
        coarse_argmax = float(np.argmax(coarse.taps)) * coarse.step

        h_ok = abs(h.taps.sum()) < 1e-9
        w3_ok = abs(w3.taps.sum()) < 1e-9
        ratio_ok = abs(ratio - 3.0) <= 0.03
        gamma_ok = abs(argmax_t - 3.0) <= 0.01 + 1e-12
        gamma_coarse_ok = abs(coarse_argmax - 3.0) <= coarse.step
        passed = h_ok and w3_ok and ratio_ok and gamma_ok and gamma_coarse_ok
        report(11, passed,
               f"band-pass sum {h.taps.sum():.2e}, direction kernel sum "
               f"{w3.taps.sum():.2e} (both < 1e-9); inhibition mass ratio "
               f"{ratio:.4f} (3.0 +/- 1%); delay-kernel argmax at "
               f"{argmax_t:.2f} (tau 3.0 +/- one sample)")
