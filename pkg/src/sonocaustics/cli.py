"""Command-line frontend: target preparation, hologram optimization, plant
rendering, digital-twin refinement, animation batches, calibration, metrics
and phase export."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import camera as cam
from . import formats, metrics, plant, targets
from .config import ConfigError, RunConfig, load_config
from .field import contribution_matrix
from .optimize import (
    OptimConfig,
    PhasePlan,
    discretize_phases,
    optimize,
    time_avg_amplitude,
)
from .twin import TwinConfig, run_twin

__all__ = ["main"]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out: Path, cfg: RunConfig, produced: list) -> None:
    effective = out / "effective_config.ini"
    effective.write_text(cfg.serialize())
    produced.append(effective)
    formats.write_manifest(out / "manifest.json", produced)


def _load_target(path, cfg: RunConfig):
    from .optimize import TargetImage

    values = formats.read_pgm(path)
    p = cfg.values["plane"]
    if values.shape != (p["ny"], p["nx"]):
        raise ValueError(
            f"prepared target is {values.shape}, expected {(p['ny'], p['nx'])};"
            " run 'prepare' against the same plane config"
        )
    return TargetImage(values)


def cmd_prepare(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    source = Path(args.target)
    gray = targets.load_grayscale(source, allow_convert=args.convert)
    p = cfg.values["plane"]
    prepared = targets.prepare_target(gray, p["nx"], p["ny"])
    target_path = out / "target.pgm"
    formats.write_pgm(target_path, prepared.values, bits=16)
    sidecar = out / "target.json"
    sidecar.write_text(
        json.dumps(
            {
                "source": source.name,
                "source_sha256": formats.sha256_of(source),
                "inverted": True,
                "resample": "bicubic",
                "nx": p["nx"],
                "ny": p["ny"],
            },
            indent=2,
        )
        + "\n"
    )
    _finish(out, cfg, [target_path, sidecar])
    return 0


def cmd_optimize(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    target = _load_target(args.target, cfg)
    array = cfg.array()
    plane = cfg.plane()
    frames = cfg.get("optimizer", "frames")
    trace = optimize(array, plane, target, frames, cfg.optimizer())

    plan_path = out / "plan.txt"
    formats.write_plan(plan_path, trace.plan)
    loss_path = out / "loss.csv"
    formats.write_loss_csv(loss_path, trace.losses)
    avg = time_avg_amplitude(array, trace.plan, plane)
    pressure_path = out / "pressure.pgm"
    formats.write_pgm(pressure_path, avg.values, bits=16)
    _finish(out, cfg, [plan_path, loss_path, pressure_path])
    return 0


def _render_stages(plan: PhasePlan, cfg: RunConfig, out: Path, capture_too: bool):
    array = cfg.array()
    plane = cfg.plane()
    params = cfg.plant()
    avg = time_avg_amplitude(array, plan, plane)
    height = plant.deform_surface(avg, params)
    caustic = plant.render_caustics(height, params)
    produced = []
    pressure_path = out / "pressure.pgm"
    formats.write_pgm(pressure_path, avg.values, bits=16)
    height_path = out / "height.scf"
    formats.write_scf(height_path, height.heights)
    caustic_path = out / "caustic.pgm"
    formats.write_pgm(caustic_path, caustic.values, bits=16)
    produced += [pressure_path, height_path, caustic_path]
    if capture_too:
        capture_cfg = cfg.camera()
        flat = plant.render_caustics(
            plant.deform_surface(
                type(avg)(plane, np.zeros((plane.ny, plane.nx))), params
            ),
            params,
        )
        background = cam.capture(flat.values, capture_cfg)
        raw = cam.capture(caustic.values, capture_cfg)
        rectified = cam.rectify(raw, capture_cfg.true_homography, background)
        raw_path = out / "captured.pgm"
        formats.write_pgm(raw_path, raw, bits=16)
        rect_path = out / "rectified.pgm"
        formats.write_pgm(rect_path, rectified, bits=16)
        produced += [raw_path, rect_path]
    return caustic, produced


def cmd_render(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    plan, levels = formats.read_plan(args.plan)
    if levels is not None:
        raise ValueError("render expects a continuous plan, not a discretized one")
    _, produced = _render_stages(plan, cfg, out, args.capture)
    _finish(out, cfg, produced)
    return 0


def cmd_twin(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    target = _load_target(args.target, cfg)
    plan, levels = formats.read_plan(args.plan)
    if levels is not None:
        raise ValueError("twin expects a continuous plan, not a discretized one")
    array = cfg.array()
    plane = cfg.plane()
    params = cfg.plant()
    t = cfg.values["twin"]
    twin_cfg = TwinConfig(
        initial_plan=plan,
        target=target,
        plant=params,
        camera=cfg.camera(),
        steps=t["steps"],
        learning_rate=t["learning_rate"],
        beta1=t["beta1"],
        beta2=t["beta2"],
        epsilon=t["epsilon"],
        seed=t["seed"],
        track_contrast=t["track_contrast"],
        contrast_threshold=cfg.get("metrics", "mask_threshold"),
        snapshot_every=t["snapshot_every"],
    )
    contributions = contribution_matrix(array, plane)
    trace = run_twin(twin_cfg, array, plane, contributions)

    mask = metrics.make_target_mask(target, cfg.get("metrics", "mask_threshold"))

    def contrast_of(p: PhasePlan) -> float:
        avg = time_avg_amplitude(array, p, plane, contributions)
        img = plant.render_caustics(plant.deform_surface(avg, params), params)
        return metrics.weber_contrast(img.values, mask).contrast

    before = contrast_of(plan)
    after = contrast_of(trace.plan)

    produced = []
    plan_path = out / "refined_plan.txt"
    formats.write_plan(plan_path, trace.plan)
    trace_path = out / "twin.csv"
    formats.write_twin_csv(trace_path, trace.losses, trace.contrasts)
    report_path = out / "contrast.txt"
    report_path.write_text(
        f"weber_before {before!r}\nweber_after {after!r}\n"
        f"abs_before {abs(before)!r}\nabs_after {abs(after)!r}\n"
    )
    produced += [plan_path, trace_path, report_path]
    for step, snapshot in trace.snapshots:
        snap_path = out / f"capture_{step:04d}.pgm"
        formats.write_pgm(snap_path, snapshot, bits=8)
        produced.append(snap_path)
    _finish(out, cfg, produced)
    return 0


def cmd_animate(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    array = cfg.array()
    plane = cfg.plane()
    params = cfg.plant()
    frames = cfg.get("optimizer", "frames")
    base_seed = cfg.get("optimizer", "seed")
    contributions = contribution_matrix(array, plane)
    produced = []
    index = []
    for i, target_path in enumerate(args.targets):
        try:
            gray = targets.load_grayscale(target_path, allow_convert=args.convert)
            target = targets.prepare_target(gray, plane.nx, plane.ny)
            optim = cfg.optimizer()
            optim.seed = base_seed + i
            trace = optimize(array, plane, target, frames, optim, contributions)
            plan = trace.plan
            if args.twin:
                t = cfg.values["twin"]
                twin_cfg = TwinConfig(
                    initial_plan=plan,
                    target=target,
                    plant=params,
                    camera=cfg.camera(),
                    steps=t["steps"],
                    learning_rate=t["learning_rate"],
                    seed=t["seed"] + i,
                )
                plan = run_twin(twin_cfg, array, plane, contributions).plan
            avg = time_avg_amplitude(array, plan, plane, contributions)
            caustic = plant.render_caustics(plant.deform_surface(avg, params), params)
        except Exception as exc:
            raise RuntimeError(f"animation frame {i} ({target_path}) failed: {exc}") from exc
        frame_path = out / f"frame_{i:04d}.pgm"
        formats.write_pgm(frame_path, caustic.values, bits=16)
        produced.append(frame_path)
        index.append({"frame": i, "source": Path(target_path).name, "output": frame_path.name})
    index_path = out / "index.json"
    index_path.write_text(json.dumps(index, indent=2) + "\n")
    produced.append(index_path)
    _finish(out, cfg, produced)
    return 0


def cmd_export(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    plan, levels = formats.read_plan(args.plan)
    if levels is not None:
        raise ValueError("plan is already discretized")
    n_levels = args.levels or cfg.get("optimizer", "phase_levels")
    codes = discretize_phases(plan, n_levels)
    device_path = out / "device_plan.txt"
    formats.write_plan(device_path, plan, levels=n_levels, discretized=codes)
    _finish(out, cfg, [device_path])
    return 0


def cmd_calib(args, cfg: RunConfig) -> int:
    """Estimate the rectifying homography from simulated checkerboard corners."""
    out = _outdir(args)
    capture_cfg = cfg.camera()
    p = cfg.values["plane"]
    w, h = float(p["nx"] - 1), float(p["ny"] - 1)
    frontal = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    observed = capture_cfg.true_homography.apply(frontal)
    estimated = cam.estimate_homography(frontal, observed)
    h_path = out / "homography.txt"
    formats.write_homography(h_path, estimated)
    _finish(out, cfg, [h_path])
    return 0


def cmd_metrics(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    produced = []
    if args.two_circle:
        scene = metrics.ResolutionScene(
            radius=cfg.get("metrics", "circle_radius_mm") / 1000.0,
            separations=cfg.separations_m(),
            frame_counts=cfg.frame_counts(),
        )
        rows = metrics.two_circle_harness(
            scene,
            cfg.array(),
            cfg.plane(),
            cfg.optimizer(),
            cfg.plant(),
            contrast_threshold=cfg.get("metrics", "mask_threshold"),
        )
        import csv as _csv

        table_path = out / "resolution.csv"
        with open(table_path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(
                ["separation_mm", "frames", "weber_before", "weber_after", "distinguishable"]
            )
            for row in rows:
                writer.writerow(
                    [
                        row.separation_mm,
                        row.frames,
                        repr(row.weber_before),
                        "" if row.weber_after is None else repr(row.weber_after),
                        "yes" if row.distinguishable else "no",
                    ]
                )
        produced.append(table_path)
    else:
        if not (args.caustic and args.target):
            raise ValueError("metrics needs --caustic and --target (or --two-circle)")
        target = _load_target(args.target, cfg)
        caustic = formats.read_pgm(args.caustic)
        mask = metrics.make_target_mask(target, cfg.get("metrics", "mask_threshold"))
        report = metrics.weber_contrast(caustic, mask)
        report_path = out / "weber.txt"
        report_path.write_text(
            f"target_luminance {report.target_luminance!r}\n"
            f"background_luminance {report.background_luminance!r}\n"
            f"weber_contrast {report.contrast!r}\n"
            f"abs_weber_contrast {abs(report.contrast)!r}\n"
        )
        produced.append(report_path)
    _finish(out, cfg, produced)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonocaustics",
        description="Acoustic hologram optimization with a simulated caustics plant",
    )
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--seed", type=int, help="override optimizer seed")
    parser.add_argument("--frames", type=int, help="override frame count")
    parser.add_argument("--steps", type=int, help="override optimizer/twin step count")
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="invert, resize and normalize a target image")
    p.add_argument("target")
    p.add_argument("--convert", action="store_true", help="allow non-grayscale input")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("optimize", help="run the numeric hologram optimization")
    p.add_argument("--target", required=True, help="prepared target (P5 graymap)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("render", help="render a phase plan through the plant")
    p.add_argument("--plan", required=True)
    p.add_argument("--capture", action="store_true", help="also simulate capture+rectify")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("twin", help="closed-loop refinement of a numeric plan")
    p.add_argument("--target", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("animate", help="optimize and render a target sequence")
    p.add_argument("targets", nargs="+")
    p.add_argument("--twin", action="store_true", help="refine each frame with the twin")
    p.add_argument("--convert", action="store_true")
    p.set_defaults(func=cmd_animate)

    p = sub.add_parser("export", help="discretize a plan for device upload")
    p.add_argument("--plan", required=True)
    p.add_argument("--levels", type=int)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("calib", help="estimate the rectifying homography")
    p.set_defaults(func=cmd_calib)

    p = sub.add_parser("metrics", help="Weber contrast report or resolution sweep")
    p.add_argument("--caustic")
    p.add_argument("--target")
    p.add_argument("--two-circle", action="store_true")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = []
    if args.seed is not None:
        overrides += [("optimizer", "seed", args.seed), ("twin", "seed", args.seed)]
    if args.frames is not None:
        overrides.append(("optimizer", "frames", args.frames))
    if args.steps is not None:
        overrides += [("optimizer", "steps", args.steps), ("twin", "steps", args.steps)]
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args, cfg)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime/numerical failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
