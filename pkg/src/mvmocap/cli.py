"""Command-line pipeline: synth, reconstruct, retarget, eval, render-overlay.

Frames stream through JSON-lines files end to end so long sequences never
require whole-run memory residency. Exit codes: 0 on success, 2 for input
or parse errors, 3 for frame mismatches between streams. Warnings go to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as mio
from .geometry import NonPositiveDepth, project
from .metrics import ErrorReport, NoComparableJoints, avg_2d_err, mean_abs_3d_err
from .overlay import render_overlay_svg
from .retarget import retarget_sequence
from .skeleton import default_template, default_topology
from .synth import UnknownPreset, generate_scene, render_observations
from .voxel import Cube, EstimatorConfig, estimate_skeleton


class FrameMismatch(ValueError):
    """Estimated and truth streams disagree on frame indices."""


EXIT_OK = 0
EXIT_PARSE = 2
EXIT_MISMATCH = 3


@dataclass
class RunConfig:
    """File paths plus estimator settings for one pipeline run."""

    calib: str = ""
    keypoints: str = ""
    truth: str = ""
    skeleton: str = ""
    out: str = ""
    sigma: int = 4
    delta: tuple[float, float, float] = (10.0, 10.0, 10.0)
    volume_edges: tuple[float, float, float] = (4000.0, 3000.0, 4000.0)
    volume_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    min_confidence: float = 0.1
    overlay: bool = False
    timing: bool = False

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            sigma=self.sigma,
            delta=self.delta,
            initial_volume=Cube(center=np.asarray(self.volume_center), edges=self.volume_edges),
            min_confidence=self.min_confidence,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kwargs = dict(data)
        for key in ("delta", "volume_edges", "volume_center"):
            if key in kwargs:
                kwargs[key] = tuple(float(x) for x in kwargs[key])
        return cls(**kwargs)


@dataclass
class TimingReport:
    """Per-phase wall time for one run, milliseconds."""

    frames: int = 0
    phases: dict[str, float] = field(default_factory=dict)
    total_ms: float = 0.0

    def add(self, phase: str, ms: float) -> None:
        self.phases[phase] = self.phases.get(phase, 0.0) + ms


def _parse_triple(text: str, flag: str) -> tuple[float, float, float]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise mio.InputParseError(f"{flag} expects WxHxL, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise mio.InputParseError(f"{flag} expects numeric WxHxL, got {text!r}") from exc


def _parse_volume(text: str) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    if "@" in text:
        size_part, center_part = text.split("@", 1)
        center = tuple(float(x) for x in center_part.split(","))
        if len(center) != 3:
            raise mio.InputParseError(f"--volume center expects X,Y,Z, got {center_part!r}")
    else:
        size_part, center = text, (0.0, 0.0, 0.0)
    return _parse_triple(size_part, "--volume"), center


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            cfg = RunConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise mio.InputParseError(f"{args.config}: bad config file: {exc}") from exc
    for name in ("calib", "keypoints", "truth", "skeleton", "out"):
        value = getattr(args, name.replace("-", "_"), None)
        if value:
            setattr(cfg, name, str(value))
    if getattr(args, "sigma", None) is not None:
        cfg.sigma = args.sigma
    if getattr(args, "delta", None):
        cfg.delta = _parse_triple(args.delta, "--delta")
    if getattr(args, "volume", None):
        cfg.volume_edges, cfg.volume_center = _parse_volume(args.volume)
    if getattr(args, "min_conf", None) is not None:
        cfg.min_confidence = args.min_conf
    cfg.timing = bool(getattr(args, "timing", False))
    return cfg


# -- subcommands -----------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        scene = generate_scene(
            preset=args.preset,
            frames=args.frames,
            noise_px=args.noise,
            dropout=args.dropout,
            seed=args.seed,
        )
    except UnknownPreset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    mio.save_cameras(out_dir / "calib.json", scene.cameras)
    mio.write_keypoints(out_dir / "keypoints.jsonl", render_observations(scene))
    mio.write_skeletons(out_dir / "truth.jsonl", scene.truth)
    print(f"wrote scene '{args.preset}' ({args.frames} frames) to {out_dir}")
    return EXIT_OK


def _require(cfg: RunConfig, *fields: str) -> None:
    missing = [f"--{name}" for name in fields if not getattr(cfg, name)]
    if missing:
        raise mio.InputParseError(f"missing required input(s): {', '.join(missing)}")


def cmd_reconstruct(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "calib", "keypoints", "out")
    timing = TimingReport()
    wall_start = time.perf_counter()

    t0 = time.perf_counter()
    cameras = mio.load_cameras(cfg.calib)
    config = cfg.estimator_config()
    topology = default_topology()
    timing.add("load_inputs", (time.perf_counter() - t0) * 1e3)
    if cfg.sigma > len(cameras):
        print(
            f"warning: sigma={cfg.sigma} exceeds the {len(cameras)} calibrated cameras; "
            "no joint can reach consensus",
            file=sys.stderr,
        )

    known_views = {c.id for c in cameras}
    reader = mio.read_keypoints(cfg.keypoints)
    with open(cfg.out, "w", encoding="utf-8") as out:
        while True:
            t0 = time.perf_counter()
            frame = next(reader, None)  # JSON decoding happens here
            if frame is not None:
                unknown = set(frame.views) - known_views
                if unknown:
                    raise mio.InputParseError(
                        f"{cfg.keypoints}: frame {frame.frame} references uncalibrated views {sorted(unknown)}"
                    )
            timing.add("parse_inputs", (time.perf_counter() - t0) * 1e3)
            if frame is None:
                break

            t0 = time.perf_counter()
            skel = estimate_skeleton(frame, cameras, config, topology)
            timing.add("estimate_3d_joints", (time.perf_counter() - t0) * 1e3)

            t0 = time.perf_counter()
            out.write(mio.skeleton_line(skel) + "\n")
            timing.add("write_output", (time.perf_counter() - t0) * 1e3)
            timing.frames += 1

    timing.total_ms = (time.perf_counter() - wall_start) * 1e3
    if cfg.timing:
        print(json.dumps({"frames": timing.frames, "total_ms": round(timing.total_ms, 3),
                          "phases": {k: round(v, 3) for k, v in timing.phases.items()}}), file=sys.stderr)
    return EXIT_OK


def cmd_retarget(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "skeleton", "out")
    topology = default_topology()
    template = default_template()
    skeletons = mio.read_skeletons(cfg.skeleton)
    mio.write_transforms(cfg.out, retarget_sequence(skeletons, topology, template))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "skeleton", "truth", "out")
    estimated = list(mio.read_skeletons(cfg.skeleton))
    truth = list(mio.read_skeletons(cfg.truth))
    if len(estimated) != len(truth):
        raise FrameMismatch(f"estimated stream has {len(estimated)} frames, truth has {len(truth)}")
    for est, tru in zip(estimated, truth):
        if est.frame != tru.frame:
            raise FrameMismatch(f"frame index mismatch: estimated {est.frame} vs truth {tru.frame}")

    per_frame = []
    frames_used = []
    total_joints = 0
    for est, tru in zip(estimated, truth):
        try:
            d3 = mean_abs_3d_err(est, tru)
        except NoComparableJoints:
            print(f"warning: frame {est.frame} has no comparable joints; skipped", file=sys.stderr)
            continue
        per_frame.append(d3)
        frames_used.append(est.frame)
        total_joints += sum(1 for i in est.statuses if est.joint_ok(i) and tru.joint_ok(i))

    per_view: dict[int, float] = {}
    if cfg.keypoints and cfg.calib:
        per_view = _per_view_2d(cfg, estimated)

    report = ErrorReport.build(per_frame, per_view, total_joints)
    out_base = Path(cfg.out)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    _write_report(out_base, report, frames_used)
    print(f"sequence mean 3D error: {report.sequence_mean_3d:.3f} mm over {len(per_frame)} frames")
    return EXIT_OK


def _per_view_2d(cfg: RunConfig, estimated) -> dict[int, float]:
    cameras = {c.id: c for c in mio.load_cameras(cfg.calib)}
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    skeletons = {s.frame: s for s in estimated}
    for obs_frame in mio.read_keypoints(cfg.keypoints):
        skel = skeletons.get(obs_frame.frame)
        if skel is None:
            raise FrameMismatch(f"keypoints frame {obs_frame.frame} missing from estimated stream")
        detected = {}
        reprojected = {}
        for view_id, joints in obs_frame.views.items():
            cam = cameras[view_id]
            det = {}
            rep = {}
            for idx, o in joints.items():
                if not skel.joint_ok(idx):
                    continue
                try:
                    rep[idx] = project(skel.positions[idx], cam)
                except NonPositiveDepth:
                    continue
                det[idx] = o.pixel
            detected[view_id] = det
            reprojected[view_id] = rep
        try:
            frame_err = avg_2d_err(detected, reprojected)
        except NoComparableJoints:
            continue
        for view_id, err in frame_err.items():
            sums[view_id] = sums.get(view_id, 0.0) + err
            counts[view_id] = counts.get(view_id, 0) + 1
    return {v: sums[v] / counts[v] for v in sorted(sums)}


def _write_report(out_base: Path, report: ErrorReport, frames_used: list[int]) -> None:
    fmt = lambda x: format(float(x), ".6f")
    body = "{\n"
    body += f'  "frame_count": {len(report.per_frame_3d)},\n'
    body += f'  "joint_count": {report.joint_count},\n'
    body += f'  "sequence_mean_3d_mm": {fmt(report.sequence_mean_3d)},\n'
    body += '  "per_frame_3d_mm": [' + ", ".join(fmt(v) for v in report.per_frame_3d) + "],\n"
    body += '  "per_view_2d_px": {' + ", ".join(f'"{v}": {fmt(e)}' for v, e in sorted(report.per_view_2d.items())) + "}\n"
    body += "}\n"
    out_base.with_suffix(".json").write_text(body, encoding="utf-8")
    csv_lines = ["frame,mean_abs_3d_err_mm"]
    csv_lines += [f"{f},{fmt(v)}" for f, v in zip(frames_used, report.per_frame_3d)]
    out_base.with_suffix(".csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")


def cmd_render_overlay(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "calib", "keypoints", "skeleton", "out")
    cameras = {c.id: c for c in mio.load_cameras(cfg.calib)}
    topology = default_topology()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    skeletons = {s.frame: s for s in mio.read_skeletons(cfg.skeleton)}
    count = 0
    for obs_frame in mio.read_keypoints(cfg.keypoints):
        skel = skeletons.get(obs_frame.frame)
        if skel is None:
            raise FrameMismatch(f"keypoints frame {obs_frame.frame} missing from skeleton stream")
        for view_id in sorted(obs_frame.views):
            cam = cameras[view_id]
            detected = {idx: o.pixel for idx, o in obs_frame.views[view_id].items()}
            reprojected = {}
            for idx in sorted(skel.positions):
                try:
                    reprojected[idx] = project(skel.positions[idx], cam)
                except NonPositiveDepth:
                    continue
            svg = render_overlay_svg(cam, detected, reprojected, topology)
            (out_dir / f"frame_{obs_frame.frame:04d}_view_{view_id}.svg").write_text(svg, encoding="utf-8")
            count += 1
    print(f"wrote {count} overlays to {out_dir}")
    return EXIT_OK


# -- argument wiring --------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--calib", help="calibration JSON file")
    p.add_argument("--keypoints", help="keypoints JSONL file")
    p.add_argument("--truth", help="ground-truth skeleton JSONL file")
    p.add_argument("--skeleton", help="estimated skeleton JSONL file")
    p.add_argument("--out", required=True, help="output path (file or directory)")
    p.add_argument("--sigma", type=int, help="minimum consenting views")
    p.add_argument("--delta", help="terminal cube size WxHxL in mm, e.g. 10x10x10")
    p.add_argument("--volume", help="initial volume WxHxL[@X,Y,Z] in mm")
    p.add_argument("--min-conf", type=float, help="minimum keypoint confidence")
    p.add_argument("--config", help="JSON run-config file; flags override it")
    p.add_argument("--timing", action="store_true", help="print per-phase timing to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvmocap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--preset", required=True, help="tpose-static, walk, wave, or squat")
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.0, help="pixel noise standard deviation")
    p.add_argument("--dropout", type=float, default=0.0, help="per-joint per-view miss probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="estimate per-frame 3D skeletons from keypoints")
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("retarget", help="convert skeletons to per-bone transforms")
    _add_common(p)
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("eval", help="compare estimated skeletons against truth")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render-overlay", help="write per-frame per-view SVG overlays")
    _add_common(p)
    p.set_defaults(func=cmd_render_overlay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except mio.InputParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FrameMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    raise SystemExit(main())
