"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside the pytest verdicts.
"""

import json
import time

import numpy as np
import pytest

from _oracles import oracle_average_precision, oracle_best_assignment, oracle_iou, random_ap_instance
from conftest import make_clip, perfect_detections
from streambench import (
    BBox,
    ConstantLatency,
    Detection,
    KalmanConfig,
    TrendConfig,
    apply_forecaster,
    associate,
    average_precision,
    build_triplets,
    evaluate_streaming,
    evaluate_vsap,
    iou,
    kf_predict,
    kf_update,
    make_forecaster,
    normalize_weights,
    offline_report,
    resample_clip,
    simulate,
    trend_factors,
    triplet_count,
)
from streambench.cli import main
from streambench.forecast import new_track, track_box
from streambench.synth import MovingObject, NoiseConfig, SceneConfig, generate_clip, noisy_detector

REALTIME = ConstantLatency(0.025)  # within one 30 FPS interval: outputs meet the next frame


def _passed(number, name):
    print(f"ACCEPTANCE {number:02d} {name}: PASS")


def moving_scene(speed, n_frames=40, width=60.0, image_width=4000.0, clip_id=0):
    objects = (
        MovingObject(bbox=BBox(100, 60, width, width), velocity=(speed, 0.0), category_id=1),
        MovingObject(bbox=BBox(100, 200, width, width), velocity=(speed, 0.0), category_id=1),
        MovingObject(bbox=BBox(100, 340, width, width), velocity=(speed, 0.0), category_id=2),
    )
    return SceneConfig(
        image_size=(image_width, 600.0), num_frames=n_frames, objects=objects, clip_id=clip_id
    )


def test_01_ap_oracle_equivalence():
    """200 seeded random instances match the brute-force PR oracle to 1e-9."""
    start = time.perf_counter()
    rng = np.random.default_rng(20240915)
    checked = 0
    for _ in range(200):
        gt_by_frame, dets_by_frame, oracle_pairs = random_ap_instance(rng)
        report = average_precision(gt_by_frame, dets_by_frame)
        ap, ap50, ap75 = oracle_average_precision(oracle_pairs)
        if ap is None:
            assert report.ap is None
            continue
        assert abs(report.ap - ap) <= 1e-9
        assert abs(report.ap50 - ap50) <= 1e-9
        assert abs(report.ap75 - ap75) <= 1e-9
        checked += 1
    elapsed = time.perf_counter() - start
    assert checked >= 150
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"
    _passed(1, "AP oracle equivalence")


def test_02_trend_weight_sum_preservation_and_branches():
    """1000 random weight/loss vectors keep the loss sum; both weight branches hold."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 15))
        omega = rng.uniform(0.2, 4.0, n)
        losses = rng.uniform(0.0, 5.0, n)
        total = float(omega @ losses)
        if total == 0.0:
            continue
        hat = normalize_weights(omega, losses)
        assert abs(float(np.dot(hat, losses)) - losses.sum()) <= 1e-9 * losses.sum()

    cfg = TrendConfig(tau=0.5, nu=1.6)
    assert (cfg.tau, cfg.nu) == (0.5, 1.6)
    for _ in range(500):
        w = float(rng.uniform(8, 60))
        shift = float(rng.uniform(0, 2.2 * w))
        m_iou, omega = trend_factors([BBox(0, 0, w, w)], [BBox(shift, 0, w, w)], cfg)
        if m_iou[0] >= cfg.tau:
            assert abs(omega[0] * m_iou[0] - 1.0) <= 1e-12
        else:
            assert abs(omega[0] * cfg.nu - 1.0) <= 1e-12
    _passed(2, "trend-weight sum preservation and branch laws")


def test_03_zero_latency_identity():
    """Perfect detector at zero latency: streaming equals offline, both exactly 1."""
    start = time.perf_counter()
    clip = generate_clip(moving_scene(6.0))
    dets = noisy_detector(clip, NoiseConfig())
    log = simulate(clip, dets, ConstantLatency(0.0))
    streaming = evaluate_streaming([clip], [log])
    offline = offline_report([clip], dets)
    assert streaming.ap == 1.0
    assert offline.ap == 1.0
    assert streaming.ap == offline.ap
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    _passed(3, "zero-latency identity")


def test_04_static_scene_immunity():
    """Static scenes score identically for every latency and forecaster, exactly."""
    clip = generate_clip(moving_scene(0.0, n_frames=30))
    dets = noisy_detector(clip, NoiseConfig())
    aps = []
    for latency_s in (0.010, 0.025, 0.050, 0.100):
        for name in ("none", "cv", "kalman"):
            log = simulate(clip, dets, ConstantLatency(latency_s))
            forecaster = make_forecaster(name)
            if name != "none":
                log = apply_forecaster(log, clip, forecaster)
            aps.append(evaluate_streaming([clip], [log]).ap)
    assert len(set(aps)) == 1, f"sAP varied on a static scene: {aps}"
    assert aps[0] == 1.0
    _passed(4, "static-scene immunity across latencies and forecasters")


def test_05_monotone_velocity_degradation():
    """sAP is non-increasing in object speed and strictly falls past 5% box width."""
    start = time.perf_counter()
    width = 60.0
    speeds = [0.0, 5.0, 10.0, 20.0, 40.0]
    saps = []
    for speed in speeds:
        clip = generate_clip(moving_scene(speed, n_frames=30))
        dets = noisy_detector(clip, NoiseConfig())
        log = simulate(clip, dets, REALTIME)
        saps.append(evaluate_streaming([clip], [log]).ap)
    for a, b in zip(saps, saps[1:]):
        assert a >= b - 1e-12
    threshold = 0.05 * width
    for speed_a, speed_b, ap_a, ap_b in zip(speeds, speeds[1:], saps, saps[1:]):
        if speed_b > threshold:
            assert ap_a > ap_b, f"expected strict drop from {speed_a} to {speed_b} px/frame"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    _passed(5, "monotone velocity degradation")


def test_06_forecaster_ordering_and_gap_growth():
    """Kalman forecasting beats raw emission, and the margin widens at 2x speed."""
    base_clip = generate_clip(moving_scene(8.0, n_frames=40))
    dets = noisy_detector(base_clip, NoiseConfig())
    gaps = {}
    for stride in (1, 2):
        clip = resample_clip(base_clip, stride)
        results = {}
        for name in ("none", "kalman"):
            log = simulate(clip, dets, REALTIME)
            if name != "none":
                log = apply_forecaster(log, clip, make_forecaster(name))
            results[name] = evaluate_streaming([clip], [log]).ap
        gaps[stride] = results["kalman"] - results["none"]
    assert gaps[1] >= 0.01, f"kalman should beat raw emission by >= 0.01 AP, gap {gaps[1]:.4f}"
    assert gaps[2] - gaps[1] >= 0.01, f"gap should widen at 2x: {gaps}"
    _passed(6, "forecasting comparison ordering and 2x gap growth")


def test_07_kalman_exactness_and_assignment_optimality():
    """Noise-free constant-velocity forecasts lock on after 2 updates; the
    assignment matches the exhaustive optimum on every instance up to 6x6."""
    cfg = KalmanConfig(process_noise_scale=0.0, measurement_noise_scale=0.0)
    for vx, vy in ((10.0, 0.0), (-6.0, 3.0), (0.0, 12.0)):
        boxes = [BBox(300 + vx * t, 300 + vy * t, 50, 50) for t in range(8)]
        track = new_track(Detection(0, boxes[0], 1, 1.0, 0))
        for t in (1, 2):
            track = kf_predict(track, 1, cfg)
            track = kf_update(track, boxes[t], cfg)
        for t in (2, 3, 4, 5, 6):
            forecast = track_box(kf_predict(track, t - 2 + 1, cfg))
            assert iou(forecast, boxes[t + 1]) >= 0.99

    rng = np.random.default_rng(4242)
    for _ in range(60):
        n_tracks = int(rng.integers(0, 7))
        n_dets = int(rng.integers(0, 7))
        tracks = [
            new_track(
                Detection(
                    0,
                    BBox(*rng.uniform(0, 70, 2), *rng.uniform(5, 30, 2)),
                    int(rng.integers(1, 3)),
                    1.0,
                    i,
                )
            )
            for i in range(n_tracks)
        ]
        dets = [
            Detection(
                0,
                BBox(*rng.uniform(0, 70, 2), *rng.uniform(5, 30, 2)),
                int(rng.integers(1, 3)),
                1.0,
                j,
            )
            for j in range(n_dets)
        ]
        matches, _, _ = associate(tracks, dets, 0.3)
        benefit = [
            [oracle_iou(track_box(t).as_xywh(), d.bbox.as_xywh()) for d in dets] for t in tracks
        ]
        feasible = [
            [benefit[i][j] >= 0.3 and tracks[i].category_id == dets[j].category_id for j in range(n_dets)]
            for i in range(n_tracks)
        ]
        best_total, best_pairs = oracle_best_assignment(benefit, feasible)
        assert sum(benefit[i][j] for i, j in matches) == pytest.approx(best_total, abs=1e-9)
        assert matches == best_pairs
    _passed(7, "Kalman exactness and assignment optimality")


def test_08_non_real_time_skipping_schedule():
    """50 ms latency on a 30 FPS stream: the exact documented emission log."""
    clip = make_clip([[(0, 0, 10, 10, 1)]] * 5)
    dets = perfect_detections(clip)
    log = simulate(clip, dets, ConstantLatency(0.050))
    expected = [
        (0, 0.0, 0.05),
        (1, 0.05, 0.10),
        (3, 0.10, 0.15),
        (4, 0.15, 0.20),
    ]
    assert len(log.entries) == len(expected)
    for entry, (source, start, finish) in zip(log.entries, expected):
        assert entry.source_frame_id == source
        assert entry.start_time == pytest.approx(start, abs=1e-12)
        assert entry.finish_time == pytest.approx(finish, abs=1e-12)
    skipped = {f.frame_id for f in clip.frames} - {e.source_frame_id for e in log.entries}
    assert skipped == {2}
    # the second frame's output is what the third query sees
    from streambench import query_prediction

    assert query_prediction(log, clip.frames[3].timestamp).source_frame_id == 1
    _passed(8, "non-real-time frame skipping schedule")


def test_09_triplet_counts_and_vsap_arithmetic():
    """Closed-form triplet counts for every length <= 100; VsAP is the exact mean."""
    for length in range(0, 101):
        for m in range(0, 7):
            expected = length if m == 0 else max(0, length - 2 * m)
            assert triplet_count(length, m) == expected
            if 1 <= length <= 50:
                assert build_triplets(make_clip([[]] * length), m).count == expected

    clip = generate_clip(moving_scene(7.0, n_frames=42))
    dets = noisy_detector(clip, NoiseConfig())
    vreport = evaluate_vsap([clip], dets, REALTIME, velocities=range(7))
    aps = [vreport.sap_by_velocity[m].ap for m in range(7)]
    assert len(set(aps)) > 1
    assert abs(vreport.vsap - float(np.mean(aps))) <= 1e-12
    _passed(9, "triplet count formula and VsAP arithmetic")


def test_10_cli_determinism(tmp_path):
    """Any subcommand run twice with one config and seed writes identical bytes."""
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(
        json.dumps(
            {
                "image_size": [4000, 600],
                "num_frames": 40,
                "objects": [
                    {"bbox": [100, 100, 60, 60], "velocity": [8, 0], "category_id": 1},
                    {"bbox": [100, 300, 50, 50], "velocity": [8, 1], "category_id": 2},
                ],
            }
        )
    )
    noise_path = tmp_path / "noise.json"
    noise_path.write_text(json.dumps({"center_jitter_std": 0.8, "score_range": [0.3, 1.0], "seed": 5}))
    data = tmp_path / "data"
    assert main(["simulate", "--scene", str(scene_path), "--noise", str(noise_path), "--out-dir", str(data)]) == 0

    io = [
        "--annotations", str(data / "annotations.json"),
        "--manifest", str(data / "manifest.json"),
        "--detections", str(data / "detections.json"),
    ]
    out = tmp_path / "report.json"
    runs = {
        "sap": ["sap", *io, "--latency-ms", "25", "--seed", "11", "--output", str(out)],
        "vsap": ["vsap", *io, "--latency-ms", "25", "--velocities", "0,1,2", "--seed", "11", "--output", str(out)],
        "forecast": ["forecast", *io, "--latency-ms", "25", "--seed", "11", "--output", str(out)],
        "sap-stochastic": [
            "sap", *io, "--latency-mean-ms", "30", "--latency-std-ms", "10", "--seed", "11",
            "--output", str(out),
        ],
        "tal-weights": [
            "tal-weights",
            "--annotations", str(data / "annotations.json"),
            "--manifest", str(data / "manifest.json"),
            "--clip", "0", "--frame-index", "10", "--seed", "11", "--output", str(out),
        ],
    }
    for name, argv in runs.items():
        assert main(list(argv)) == 0, name
        first = out.read_bytes()
        assert main(list(argv)) == 0, name
        assert out.read_bytes() == first, f"{name} report bytes changed between runs"
    _passed(10, "CLI determinism")
