"""Batch command line front end.

Subcommands::

    stmd gen        render a stimulus sequence to frame files + truth CSV
    stmd run        run a detector over a frame directory -> detections CSV
    stmd tune       single-parameter tuning sweep -> tuning_<param>.csv
    stmd roc        threshold sweep against ground truth -> roc.csv
    stmd direction  per-frame direction estimation -> direction.csv

Configuration is a flat INI file with [pipeline], [stimulus] and [eval]
sections; every key has a default, unknown keys are hard errors so a
typo cannot silently misconfigure a run.  Every command writes a
manifest.json capturing the full configuration snapshot next to its
outputs.  Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .estimation import UndefinedDirectionError, detect, estimate_direction
from .evaluation import (
    TUNING_PARAMETERS,
    TuningProtocol,
    direction_experiment,
    roc_experiment,
    tuning_curve,
    write_direction_csv,
    write_roc_csv,
    write_tuning_csv,
)
from .dstmd import DstmdPipeline
from .estmd import EstmdPipeline
from .stimulus import (
    GroundTruth,
    ImageBackground,
    LinearPath,
    SinusoidPath,
    SolidBackground,
    StimulusSpec,
    TargetSpec,
    load_frame,
    make_clutter_background,
    render_sequence,
    save_sequence,
)

__all__ = ["main", "ConfigError"]


class ConfigError(Exception):
    """Invalid or unknown configuration content."""


_PIPELINE_INT_KEYS = {"n1", "n2", "n3", "n4", "n5", "n6", "warmup", "n_directions"}
_PIPELINE_FLOAT_KEYS = {
    "sigma1", "tau1", "tau2", "sigma2", "sigma3", "lambda1", "lambda2",
    "a", "b", "sigma4", "sigma5", "e", "rho", "tau3", "tau4", "tau5",
    "tau6", "alpha1", "sigma6", "sigma7", "step", "mass_cutoff",
    "spatial_truncation",
}

_STIMULUS_KEYS = {
    "width", "height", "fps", "duration", "background",
    "background_velocity", "background_subpixel", "target",
    "target_width", "target_height", "target_luminance", "trajectory",
    "start_x", "start_y", "velocity_x", "velocity_y",
    "sin_vx", "sin_amplitude", "sin_angular_freq", "sin_x_start",
    "sin_y_center", "sin_offset", "antialias_target",
}

_EVAL_KEYS = {
    "gamma_points", "match_radius", "suppress_radius", "select_radius",
    "gamma_fraction", "guard", "border_trim",
    "tuning_contrast", "tuning_velocity", "tuning_width", "tuning_height",
}

_DEFAULT_TUNING_VALUES = {
    "contrast": [round(0.1 * k, 1) for k in range(1, 11)],
    "velocity": list(range(100, 701, 50)),
    "width": list(range(1, 16)),
    "height": list(range(1, 16)),
}


def _read_config(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        loaded = parser.read(path)
        if not loaded:
            raise ConfigError(f"config file not found: {path}")
    known = {"pipeline", "stimulus", "eval"}
    unknown_sections = set(parser.sections()) - known
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    return parser


def _check_keys(section, allowed, name):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


def _build_pipeline_config(parser):
    section = parser["pipeline"] if parser.has_section("pipeline") else {}
    _check_keys(section, _PIPELINE_INT_KEYS | _PIPELINE_FLOAT_KEYS, "pipeline")
    kwargs = {}
    n_directions = None
    for key in section:
        raw = section[key]
        try:
            if key in _PIPELINE_INT_KEYS:
                value = int(raw)
            else:
                value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[pipeline] {key} = {raw!r}: {exc}") from None
        if key == "n_directions":
            n_directions = value
        elif key in ("a", "b", "e"):
            kwargs[{"a": "A", "b": "B", "e": "e"}[key]] = value
        else:
            kwargs[key] = value
    if n_directions is not None:
        if n_directions < 2:
            raise ConfigError("[pipeline] n_directions must be >= 2")
        kwargs["directions"] = tuple(
            k * 2.0 * np.pi / n_directions for k in range(n_directions))
    try:
        return PipelineConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [pipeline] configuration: {exc}") from None


def _build_stimulus_spec(parser, seed=None):
    section = parser["stimulus"] if parser.has_section("stimulus") else {}
    _check_keys(section, _STIMULUS_KEYS, "stimulus")

    def get(key, cast, default):
        if key not in section:
            return default
        raw = section[key]
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[stimulus] {key} = {raw!r}: {exc}") from None

    width = get("width", int, 500)
    height = get("height", int, 250)
    fps = get("fps", float, 1000.0)
    duration = get("duration", int, 1000)

    background_raw = section.get("background", "solid:255")
    velocity_b = get("background_velocity", float, 250.0)
    subpixel = get("background_subpixel", bool, False)
    if background_raw.startswith("solid:"):
        try:
            background = SolidBackground(float(background_raw[6:]))
        except ValueError:
            raise ConfigError(f"bad background spec {background_raw!r}") from None
    elif background_raw.startswith("image:"):
        image_path = Path(background_raw[6:])
        if not image_path.exists():
            raise ConfigError(f"background image not found: {image_path}")
        background = ImageBackground(load_frame(image_path), velocity_b, subpixel)
    elif background_raw == "clutter":
        rng = np.random.default_rng(0 if seed is None else seed)
        image = make_clutter_background(2 * width, height, rng)
        background = ImageBackground(image, velocity_b, subpixel)
    else:
        raise ConfigError(
            f"bad background spec {background_raw!r} "
            "(expected solid:LUM, image:PATH or clutter)")

    target = None
    if get("target", bool, True):
        trajectory = section.get("trajectory", "sinusoid")
        if trajectory == "linear":
            path = LinearPath(
                (get("start_x", float, 50.0), get("start_y", float, height / 2.0)),
                (get("velocity_x", float, 250.0), get("velocity_y", float, 0.0)))
        elif trajectory == "sinusoid":
            path = SinusoidPath(
                vx=get("sin_vx", float, 250.0),
                amplitude=get("sin_amplitude", float, 15.0),
                angular_freq=get("sin_angular_freq", float, 4.0 * np.pi),
                x_start=get("sin_x_start", float, float(width)),
                y_center=get("sin_y_center", float, height / 2.0),
                offset=get("sin_offset", float, 300.0))
        else:
            raise ConfigError(f"unknown trajectory {trajectory!r}")
        target = TargetSpec(
            width=get("target_width", int, 5),
            height=get("target_height", int, 5),
            luminance=get("target_luminance", float, 0.0),
            path=path)

    try:
        return StimulusSpec(width=width, height=height, fps=fps,
                            duration=duration, background=background,
                            target=target,
                            antialias_target=get("antialias_target", bool, False))
    except ValueError as exc:
        raise ConfigError(f"invalid [stimulus] configuration: {exc}") from None


def _build_eval_options(parser):
    section = parser["eval"] if parser.has_section("eval") else {}
    _check_keys(section, _EVAL_KEYS, "eval")

    def get(key, cast, default):
        if key not in section:
            return default
        try:
            return cast(section[key])
        except ValueError as exc:
            raise ConfigError(f"[eval] {key} = {section[key]!r}: {exc}") from None

    def get_list(key, default):
        if key not in section:
            return default
        try:
            return [float(v) for v in section[key].split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"[eval] {key}: {exc}") from None

    return {
        "gamma_points": get("gamma_points", int, 50),
        "match_radius": get("match_radius", float, 5.0),
        "suppress_radius": get("suppress_radius", float, 5.0),
        "select_radius": get("select_radius", float, 5.0),
        "gamma_fraction": get("gamma_fraction", float, 0.05),
        "guard": get("guard", int, 50),
        "border_trim": get("border_trim", int, 2),
        "tuning": {
            p: get_list(f"tuning_{p}", _DEFAULT_TUNING_VALUES[p])
            for p in TUNING_PARAMETERS
        },
    }


def _write_manifest(out_dir, command, args, cfg, spec=None, inputs=None,
                    outputs=None):
    manifest = {
        "tool_version": __version__,
        "command": command,
        "model": getattr(args, "model", None),
        "config": cfg.to_dict() if cfg is not None else None,
        "input": str(inputs) if inputs is not None else None,
        "outputs": [str(o) for o in (outputs or [])],
        "seed": getattr(args, "seed", None),
    }
    if spec is not None:
        manifest["stimulus"] = {
            "width": spec.width, "height": spec.height, "fps": spec.fps,
            "duration": spec.duration,
            "background": repr(spec.background if not isinstance(
                spec.background, ImageBackground) else
                f"image{spec.background.image.shape}@{spec.background.velocity}px/s"),
            "target": repr(spec.target),
        }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _load_frames_dir(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory not found: {directory}")
    paths = sorted(
        p for p in directory.iterdir()
        if p.suffix.lower() in (".pgm", ".png", ".bmp", ".jpg", ".jpeg",
                                ".tif", ".tiff"))
    if not paths:
        raise FileNotFoundError(f"no image files in {directory}")
    frames = [load_frame(p) for p in paths]
    shape = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != shape:
            raise ValueError(f"frame {p} has shape {f.shape}, expected {shape}")
    truth_path = directory / "truth.csv"
    truth = GroundTruth.read_csv(truth_path) if truth_path.exists() else None
    return np.stack(frames), truth


def _pipeline_for(model, cfg, shape):
    if model == "estmd":
        return EstmdPipeline(cfg, shape)
    return DstmdPipeline(cfg, shape)


def cmd_gen(args):
    parser = _read_config(args.config)
    cfg = _build_pipeline_config(parser)
    spec = _build_stimulus_spec(parser, seed=args.seed)
    out = Path(args.out)
    frames, truth = render_sequence(spec)
    save_sequence(out, frames, truth)
    outputs = [out / f"frame_{i:06d}.pgm" for i in range(len(frames))]
    if truth is not None:
        outputs.append(out / "truth.csv")
    _write_manifest(out, "gen", args, cfg, spec=spec, outputs=outputs)
    print(f"wrote {len(frames)} frames to {out}")
    return 0


def cmd_run(args):
    parser = _read_config(args.config)
    cfg = _build_pipeline_config(parser)
    opts = _build_eval_options(parser)
    frames, _ = _load_frames_dir(args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    gamma = args.gamma
    if gamma is None:
        # pick half the peak post-warm-up response; needs a scouting pass
        pipe = _pipeline_for(args.model, cfg, frames.shape[1:])
        top = 0.0
        for t in range(frames.shape[0]):
            response = pipe.process_frame(frames[t])
            if t >= cfg.warmup:
                m = response.e.max(axis=0) if hasattr(response, "e") else response.d
                top = max(top, float(m.max()))
        gamma = 0.5 * top

    pipe = _pipeline_for(args.model, cfg, frames.shape[1:])
    rows = []
    for t in range(frames.shape[0]):
        response = pipe.process_frame(frames[t])
        if t < cfg.warmup:
            continue
        for det in detect(response, gamma, opts["suppress_radius"], frame_index=t):
            direction_txt = ""
            if args.model == "dstmd":
                try:
                    angle = estimate_direction(
                        response, det, radius=opts["select_radius"],
                        gamma=gamma, directions=cfg.directions)
                    direction_txt = f"{np.degrees(angle):.4f}"
                except UndefinedDirectionError:
                    direction_txt = ""
            rows.append((t, det.x, det.y, det.response, direction_txt))

    det_path = out / "detections.csv"
    with open(det_path, "w") as fh:
        fh.write("frame,x,y,response,direction_deg\n")
        for t, x, y, resp, direction_txt in rows:
            fh.write(f"{t},{x},{y},{resp:.9g},{direction_txt}\n")
    _write_manifest(out, "run", args, cfg, inputs=args.frames,
                    outputs=[det_path])
    print(f"gamma={gamma:.6g}: {len(rows)} detections -> {det_path}")
    return 0


def cmd_tune(args):
    parser = _read_config(args.config)
    cfg = _build_pipeline_config(parser)
    opts = _build_eval_options(parser)
    stim = _build_stimulus_spec(parser) if parser.has_section("stimulus") else None
    protocol = TuningProtocol(
        frame_width=stim.width if stim else 500,
        frame_height=stim.height if stim else 250,
        duration=stim.duration if stim else 1000,
        fps=stim.fps if stim else 1000.0,
        guard=opts["guard"], border_trim=opts["border_trim"])
    values = opts["tuning"][args.param]
    curve = tuning_curve(args.param, values, cfg, protocol, model=args.model,
                         n_jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"tuning_{args.param}.csv"
    write_tuning_csv(csv_path, curve)
    _write_manifest(out, "tune", args, cfg, outputs=[csv_path])
    print(f"{args.param} sweep: argmax at {curve.argmax_value():g} -> {csv_path}")
    return 0


def cmd_roc(args):
    parser = _read_config(args.config)
    cfg = _build_pipeline_config(parser)
    opts = _build_eval_options(parser)
    frames, truth = _load_frames_dir(args.frames)
    points = roc_experiment(
        cfg, frames, truth, model=args.model, n_gammas=opts["gamma_points"],
        suppress_radius=opts["suppress_radius"],
        match_radius=opts["match_radius"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "roc.csv"
    write_roc_csv(csv_path, points)
    _write_manifest(out, "roc", args, cfg, inputs=args.frames,
                    outputs=[csv_path])
    print(f"{len(points)} ROC points -> {csv_path}")
    return 0


def cmd_direction(args):
    parser = _read_config(args.config)
    cfg = _build_pipeline_config(parser)
    opts = _build_eval_options(parser)
    if args.frames is not None:
        frames, truth = _load_frames_dir(args.frames)
        if truth is None:
            raise FileNotFoundError(
                f"direction experiment needs {Path(args.frames) / 'truth.csv'}")
        result = direction_experiment(
            cfg, frames=frames, truth=truth,
            gamma_fraction=opts["gamma_fraction"],
            select_radius=opts["select_radius"])
    else:
        spec = _build_stimulus_spec(parser)
        result = direction_experiment(
            cfg, spec=spec, gamma_fraction=opts["gamma_fraction"],
            select_radius=opts["select_radius"])
    indices, estimates, truth_angles, errors = result
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "direction.csv"
    write_direction_csv(csv_path, indices, estimates, truth_angles, errors)
    _write_manifest(out, "direction", args, cfg, inputs=args.frames,
                    outputs=[csv_path])
    finite = errors[~np.isnan(errors)]
    top = float(finite.max()) if finite.size else float("nan")
    print(f"direction: {len(indices)} frames, max error {top:.2f} deg -> {csv_path}")
    return 0


def _build_argparser():
    parser = argparse.ArgumentParser(
        prog="stmd",
        description="Small target motion detection: stimuli, detectors, experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI configuration file")
    common.add_argument("--out", required=True, help="output directory")

    gen = sub.add_parser("gen", parents=[common],
                         help="render a stimulus sequence")
    gen.add_argument("--seed", type=int, default=None,
                     help="seed for procedural clutter backgrounds")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", parents=[common],
                         help="run a detector over a frame directory")
    run.add_argument("frames", help="directory of grayscale frames")
    run.add_argument("--model", choices=("dstmd", "estmd"), default="dstmd")
    run.add_argument("--gamma", type=float, default=None,
                     help="detection threshold (default: half the peak response)")
    run.set_defaults(func=cmd_run)

    tune = sub.add_parser("tune", parents=[common],
                          help="single-parameter tuning sweep")
    tune.add_argument("--param", choices=TUNING_PARAMETERS, required=True)
    tune.add_argument("--model", choices=("dstmd", "estmd"), default="dstmd")
    tune.add_argument("--jobs", type=int, default=1)
    tune.set_defaults(func=cmd_tune)

    roc = sub.add_parser("roc", parents=[common],
                         help="threshold sweep against ground truth")
    roc.add_argument("frames", help="directory of frames with truth.csv")
    roc.add_argument("--model", choices=("dstmd", "estmd"), default="dstmd")
    roc.set_defaults(func=cmd_roc)

    direction = sub.add_parser("direction", parents=[common],
                               help="per-frame direction estimation")
    direction.add_argument("frames", nargs="?", default=None,
                           help="frame directory (default: render the standard clip)")
    direction.set_defaults(func=cmd_direction)
    return parser


def main(argv=None):
    parser = _build_argparser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
