"""Command-line surface: sap, vsap, forecast, resample, simulate, tal-weights.

Every run prints a fixed-width metrics table and can write a
self-describing JSON report (full resolved config plus seed), a CSV of the
same rows, and matplotlib figures rendered alongside them. Identical
config and seed produce byte-identical reports.

Exit codes: 0 success, 1 undefined headline metric, 2 input/validation
error, 3 internal numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .datamodel import (
    Dataset,
    build_triplets,
    load_dataset,
    load_detections,
    resample_dataset,
    save_dataset,
    save_detections,
)
from .errors import NumericalError, StreamBenchError, ValidationError
from .forecast import KalmanConfig, make_forecaster
from .metrics import evaluate_streaming, evaluate_vsap, simulate_clips
from .report import (
    format_table,
    plot_forecaster_comparison,
    plot_metric_bars,
    plot_velocity_curve,
    report_row,
    write_csv_report,
    write_json_report,
)
from .simulation import ConstantLatency, PerFrameLatency, StochasticLatency
from .synth import generate_dataset, noise_from_json_obj, noisy_detector, scene_from_json_obj
from .trend import TrendConfig, triplet_trend_weights


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"input file does not exist: {path}")
    return p


# where-to-write arguments, excluded from the embedded config so that a run
# writing to a different destination still produces identical report bytes
_SINK_ARGS = {"func", "output", "csv", "figures", "emission_logs"}


def _resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _SINK_ARGS}


def _latency_model(args: argparse.Namespace):
    seed = args.latency_seed if args.latency_seed is not None else args.seed
    if args.latency_file is not None:
        raw = json.loads(_require_file(args.latency_file).read_text())
        return PerFrameLatency({int(k): float(v) / 1000.0 for k, v in raw.items()})
    if args.latency_mean_ms is not None:
        return StochasticLatency(
            mean_seconds=args.latency_mean_ms / 1000.0,
            stddev_seconds=args.latency_std_ms / 1000.0,
            seed=seed,
            floor_seconds=args.latency_floor_ms / 1000.0,
        )
    return ConstantLatency(args.latency_ms / 1000.0)


def _forecaster(args: argparse.Namespace, kind: str | None = None):
    kind = kind if kind is not None else args.forecaster
    if kind in (None, "none"):
        return None
    cfg = KalmanConfig(
        process_noise_scale=args.kf_process_noise,
        measurement_noise_scale=args.kf_measurement_noise,
        iou_gate=args.kf_gate,
        max_age=args.kf_max_age,
        min_hits=args.kf_min_hits,
    )
    return make_forecaster(kind, horizon=args.horizon, kalman_config=cfg, gate=args.kf_gate)


def _load_inputs(args: argparse.Namespace) -> tuple[Dataset, dict]:
    _require_file(args.annotations)
    _require_file(args.manifest)
    _require_file(args.detections)
    dataset = load_dataset(args.annotations, args.manifest)
    detections = load_detections(args.detections, dataset)
    # results-format JSON cannot list frames the detector found nothing on
    for clip in dataset.clips:
        for frame in clip.frames:
            detections.setdefault(frame.frame_id, [])
    return dataset, detections


def _emit_outputs(args, payload: dict, rows: dict, figure_fn=None) -> None:
    print(format_table(rows))
    if args.output:
        write_json_report(args.output, payload)
    if args.csv:
        write_csv_report(args.csv, rows)
    if args.figures and figure_fn is not None:
        Path(args.figures).mkdir(parents=True, exist_ok=True)
        figure_fn(Path(args.figures))


def cmd_sap(args: argparse.Namespace) -> int:
    dataset, detections = _load_inputs(args)
    latency = _latency_model(args)
    forecaster = _forecaster(args)
    logs = simulate_clips(dataset.clips, detections, latency, forecaster, jobs=args.jobs)
    if args.emission_logs:
        log_dir = Path(args.emission_logs)
        log_dir.mkdir(parents=True, exist_ok=True)
        for log in logs:
            log.write_json(log_dir / f"clip_{log.clip_id}.json")
    report = evaluate_streaming(dataset.clips, logs)
    rows = {"overall": report_row(report)}
    payload = {
        "tool": "streambench",
        "version": __version__,
        "subcommand": "sap",
        "seed": args.seed,
        "config": _resolved_config(args),
        "results": report.to_json_obj(),
    }
    _emit_outputs(args, payload, rows, lambda d: plot_metric_bars(report, d / "sap_metrics.png"))
    return 0 if report.ap is not None else 1


def cmd_vsap(args: argparse.Namespace) -> int:
    dataset, detections = _load_inputs(args)
    latency = _latency_model(args)
    forecaster = _forecaster(args)
    velocities = _parse_int_list(args.velocities)
    vreport = evaluate_vsap(
        dataset.clips, detections, latency, velocities, forecaster, jobs=args.jobs
    )
    rows = {}
    for m in sorted(vreport.sap_by_velocity):
        r = vreport.sap_by_velocity[m]
        rows[f"{m}x"] = report_row(r) if r is not None else [None] * 6
    rows["VsAP"] = [vreport.vsap, None, None, None, None, None]
    payload = {
        "tool": "streambench",
        "version": __version__,
        "subcommand": "vsap",
        "seed": args.seed,
        "config": _resolved_config(args),
        "results": vreport.to_json_obj(),
    }
    _emit_outputs(args, payload, rows, lambda d: plot_velocity_curve(vreport, d / "vsap_curve.png"))
    return 0 if vreport.vsap is not None else 1


def cmd_forecast(args: argparse.Namespace) -> int:
    dataset, detections = _load_inputs(args)
    latency = _latency_model(args)
    if args.velocity >= 2:
        dataset = resample_dataset(dataset, args.velocity)
    names = [n.strip() for n in args.forecasters.split(",") if n.strip()]
    results = {}
    extra_ms = {}
    for name in names:
        forecaster = _forecaster(args, kind=name)
        logs = simulate_clips(dataset.clips, detections, latency, forecaster, jobs=args.jobs)
        results[name] = evaluate_streaming(dataset.clips, logs)
        extra_ms[name] = 0.0 if forecaster is None else forecaster.extra_latency_seconds * 1000.0
    rows = {name: report_row(results[name]) for name in names}
    payload = {
        "tool": "streambench",
        "version": __version__,
        "subcommand": "forecast",
        "seed": args.seed,
        "config": _resolved_config(args),
        "results": {
            name: {**results[name].to_json_obj(), "extra_latency_ms": extra_ms[name]}
            for name in names
        },
    }
    _emit_outputs(
        args, payload, rows, lambda d: plot_forecaster_comparison(results, d / "forecast_comparison.png")
    )
    for name in names:
        print(f"{name}: extra latency {extra_ms[name]:.2f} ms")
    return 0 if all(r.ap is not None for r in results.values()) else 1


def cmd_resample(args: argparse.Namespace) -> int:
    _require_file(args.annotations)
    _require_file(args.manifest)
    dataset = load_dataset(args.annotations, args.manifest)
    resampled = resample_dataset(dataset, args.stride)
    save_dataset(resampled, args.out_annotations, args.out_manifest)
    total = sum(len(c) for c in resampled.clips)
    print(f"wrote {len(resampled.clips)} clips, {total} frames at stride {args.stride}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    scene_obj = json.loads(_require_file(args.scene).read_text())
    scenes = [scene_from_json_obj(o) for o in scene_obj.get("clips", [scene_obj])]
    dataset = generate_dataset(scenes)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out_dir / "annotations.json", out_dir / "manifest.json")
    if args.noise:
        noise = noise_from_json_obj(json.loads(_require_file(args.noise).read_text()))
        detections = {}
        for clip in dataset.clips:
            detections.update(noisy_detector(clip, noise))
        save_detections(detections, out_dir / "detections.json")
    print(f"wrote synthetic dataset to {out_dir}")
    return 0


def cmd_tal_weights(args: argparse.Namespace) -> int:
    _require_file(args.annotations)
    _require_file(args.manifest)
    dataset = load_dataset(args.annotations, args.manifest)
    clip = next((c for c in dataset.clips if c.clip_id == args.clip), None)
    if clip is None:
        raise ValidationError(f"dataset has no clip id {args.clip}")
    cfg = TrendConfig(tau=args.tau, nu=args.nu)
    index_of = {f.frame_id: f.index_in_clip for f in clip.frames}
    triplets = build_triplets(clip, args.velocity).triplets
    chosen = [t for t in triplets if index_of[t.cur_frame_id] == args.frame_index]
    if not chosen:
        raise ValidationError(
            f"no velocity-{args.velocity} triplet centered on frame index {args.frame_index}"
        )
    weights = triplet_trend_weights(clip, chosen[0], cfg, advanced=args.advanced)
    future = clip.frame_by_id(chosen[0].future_frame_id)
    payload = {
        "tool": "streambench",
        "version": __version__,
        "subcommand": "tal-weights",
        "seed": args.seed,
        "config": _resolved_config(args),
        "results": {
            "tau": cfg.tau,
            "nu": cfg.nu,
            "advanced": args.advanced,
            "objects": [
                {
                    "index": i,
                    "category_id": box.category_id,
                    "m_iou": weights.m_iou[i],
                    "omega": weights.omega[i],
                    "omega_hat": weights.omega_hat[i],
                }
                for i, box in enumerate(future.boxes)
            ],
        },
    }
    print(json.dumps(payload["results"], sort_keys=True, indent=2))
    if args.output:
        write_json_report(args.output, payload)
    return 0


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ValidationError(f"expected a comma-separated integer list, got {text!r}") from None


def _add_io_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--annotations", required=True, help="COCO-style annotation JSON")
    sub.add_argument("--manifest", required=True, help="clip manifest JSON")
    sub.add_argument("--detections", required=True, help="COCO results-format detection JSON")
    sub.add_argument("--output", help="write a JSON report here")
    sub.add_argument("--csv", help="write the table as CSV here")
    sub.add_argument("--figures", help="directory to render figures into")
    sub.add_argument("--jobs", type=int, default=1, help="clips simulated concurrently")


def _add_latency_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--latency-ms", type=float, default=0.0, help="constant latency (ms)")
    sub.add_argument("--latency-file", help="JSON map frame_id -> latency ms")
    sub.add_argument("--latency-mean-ms", type=float, help="stochastic latency mean (ms)")
    sub.add_argument("--latency-std-ms", type=float, default=0.0)
    sub.add_argument("--latency-floor-ms", type=float, default=0.0)
    sub.add_argument("--latency-seed", type=int, help="defaults to --seed")


def _add_forecaster_args(sub: argparse.ArgumentParser, with_choice: bool = True) -> None:
    if with_choice:
        sub.add_argument("--forecaster", choices=["none", "cv", "kalman"], default="none")
    sub.add_argument("--horizon", type=int, default=1, help="frames to extrapolate ahead")
    sub.add_argument("--kf-gate", type=float, default=0.3)
    sub.add_argument("--kf-max-age", type=int, default=3)
    sub.add_argument("--kf-min-hits", type=int, default=1)
    sub.add_argument("--kf-process-noise", type=float, default=1.0)
    sub.add_argument("--kf-measurement-noise", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streambench",
        description="Latency-aware streaming perception benchmark toolkit",
    )
    parser.add_argument("--version", action="version", version=f"streambench {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed recorded in every report")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sap", help="streaming AP under a latency model", parents=[common])
    _add_io_args(p)
    _add_latency_args(p)
    _add_forecaster_args(p)
    p.add_argument("--emission-logs", help="directory for per-clip emission log JSON (audit)")
    p.set_defaults(func=cmd_sap)

    p = sub.add_parser("vsap", help="velocity-aware streaming AP", parents=[common])
    _add_io_args(p)
    _add_latency_args(p)
    _add_forecaster_args(p)
    p.add_argument("--velocities", default="0,1,2,3,4,5,6", help="comma-separated multipliers")
    p.set_defaults(func=cmd_vsap)

    p = sub.add_parser("forecast", help="compare forecasting manners on one stream", parents=[common])
    _add_io_args(p)
    _add_latency_args(p)
    _add_forecaster_args(p, with_choice=False)
    p.add_argument("--forecasters", default="none,cv,kalman", help="comma-separated names")
    p.add_argument("--velocity", type=int, default=1, help="stride-resample factor before simulating")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("resample", help="write a stride-resampled copy of a dataset", parents=[common])
    p.add_argument("--annotations", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--stride", type=int, required=True)
    p.add_argument("--out-annotations", required=True)
    p.add_argument("--out-manifest", required=True)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("simulate", help="generate a synthetic dataset (and detections)", parents=[common])
    p.add_argument("--scene", required=True, help="scene config JSON (single or {'clips': [...]})")
    p.add_argument("--noise", help="noise config JSON for the synthetic detector")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tal-weights", help="per-object trend weights for one triplet", parents=[common])
    p.add_argument("--annotations", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--clip", type=int, required=True)
    p.add_argument("--frame-index", type=int, required=True, help="index of the triplet's current frame")
    p.add_argument("--velocity", type=int, default=1)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--nu", type=float, default=1.6)
    p.add_argument("--advanced", action="store_true", help="reference the native-rate neighbor frame")
    p.add_argument("--output", help="write a JSON report here")
    p.set_defaults(func=cmd_tal_weights)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (StreamBenchError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
