"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from gripwatch.cli import main
from gripwatch.evaluate import (
    ablation_study,
    dataset_feature_matrix,
    energy_threshold_baseline,
    evaluate_model,
    split_indices,
    window_sweep,
)
from gripwatch.features import DwtConfig, extract_stream, haar_decompose
from gripwatch.models import (
    TrainConfig,
    logreg_loss_grad,
    mask_from_names,
    save_model,
    train,
)
from gripwatch.simulate import (
    EpisodeConfig,
    PhaseDurations,
    generate_dataset,
    generate_episode,
)
from gripwatch.tactile import FingertipGeometry, ForceSample, save_geometry

SQRT2 = math.sqrt(2)


def announce(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def default_dataset():
    return generate_dataset(6, 5, EpisodeConfig(seed=0))


@pytest.fixture(scope="module")
def pooled(default_dataset):
    X, y, _ = dataset_feature_matrix(default_dataset, DwtConfig(n_w=14))
    tr, te = split_indices(len(y), 0.8, seed=0)
    return X, y, tr, te


def test_criterion_1_dwt_energy_and_reconstruction():
    rng = np.random.default_rng(0)
    sizes = [2, 4, 6, 8, 10, 12, 14, 16, 18]
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000 // len(sizes) + 1):
        for n_w in sizes:
            window = rng.uniform(-50, 50, size=n_w)
            decomp = haar_decompose(window, DwtConfig(n_w=n_w))
            energy_gap = abs(
                np.sum(window**2)
                - np.sum(decomp.approximations**2)
                - np.sum(decomp.details**2)
            )
            rebuilt = np.empty(n_w)
            rebuilt[0::2] = (decomp.approximations + decomp.details) / SQRT2
            rebuilt[1::2] = (decomp.approximations - decomp.details) / SQRT2
            worst = max(worst, energy_gap, np.max(np.abs(rebuilt - window)))
    elapsed = time.perf_counter() - start
    announce(
        1,
        worst < 1e-9 and elapsed < 1.0,
        f"10k windows, worst residual {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_2_streaming_oracle_equivalence():
    rng = np.random.default_rng(1)
    values = rng.normal(5.0, 2.0, size=10_000)
    samples = [ForceSample(i / 150.0, [v, 0, 0], float(v)) for i, v in enumerate(values)]
    config = DwtConfig(n_w=14)
    worst = 0.0
    for k, phi in enumerate(extract_stream(samples, config)):
        window = values[k : k + 14]
        a = [(window[2 * j] + window[2 * j + 1]) / SQRT2 for j in range(7)]
        d = [(window[2 * j] - window[2 * j + 1]) / SQRT2 for j in range(7)]
        m = sum(a) / 14
        dbar = sum(d) / 7
        sigma = math.sqrt(sum((v - dbar) ** 2 for v in d) / 14)
        worst = max(worst, abs(phi.m - m), abs(phi.sigma - sigma))
    announce(2, worst < 1e-12, f"10k-step stream, worst m/sigma gap {worst:.2e}")


def test_criterion_3_metric_arithmetic():
    from gripwatch.evaluate import ConfusionMatrix, compute_metrics

    logreg = compute_metrics(ConfusionMatrix(tp=955, tn=951, fp=49, fn=45)).acc
    svm = compute_metrics(ConfusionMatrix(tp=965, tn=962, fp=38, fn=35)).acc
    ok = abs(logreg - 95.3) <= 0.05 and abs(svm - 96.35) <= 0.05
    announce(3, ok, f"balanced-class accuracies {logreg:.3f} / {svm:.3f}")


def test_criterion_4_gradient_check():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 5))
    y = (X @ np.array([1.0, -1, 0.5, 0, 2]) > 0).astype(int)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        theta = rng.normal(scale=2.0, size=6)
        _, grad = logreg_loss_grad(theta, X, y, 1e-4)
        numeric = np.empty_like(grad)
        for i in range(6):
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            numeric[i] = (
                logreg_loss_grad(up, X, y, 1e-4)[0]
                - logreg_loss_grad(down, X, y, 1e-4)[0]
            ) / (2 * h)
        rel = np.linalg.norm(grad - numeric) / max(
            np.linalg.norm(grad), np.linalg.norm(numeric), 1e-8
        )
        worst = max(worst, rel)
    announce(4, worst < 1e-6, f"100 random points, worst relative error {worst:.2e}")


def test_criterion_5_svm_hard_margin():
    X = np.zeros((40, 6))
    X[:20, 0] = -1.0
    X[20:, 0] = 1.0
    y = np.array([0] * 20 + [1] * 20)
    model = train(
        (X, y),
        TrainConfig(kind="svm", l2_lambda=1e-6, max_iters=2000),
        mask=mask_from_names(["fa"]),
    )
    w, b = float(model.weights[0]), model.bias
    announce(5, abs(w - 1.0) < 0.1 and abs(b) < 0.05, f"w={w:.4f}, b={b:.4f}")


def test_criterion_6_end_to_end_benchmark():
    start = time.perf_counter()
    episodes = generate_dataset(6, 5, EpisodeConfig(seed=0))
    X, y, _ = dataset_feature_matrix(episodes, DwtConfig(n_w=14))
    tr, te = split_indices(len(y), 0.8, seed=0)
    model = train((X[tr], y[tr]), TrainConfig(kind="logreg"))
    report = evaluate_model(model, X[te], y[te])
    elapsed = time.perf_counter() - start
    ok = report.acc >= 90.0 and report.fdr <= 10.0 and elapsed < 60.0
    announce(
        6, ok, f"test Acc={report.acc:.1f}%, FDR={report.fdr:.1f}%, {elapsed:.1f}s"
    )


def test_criterion_7_ablation_direction(default_dataset):
    rows = dict(
        ablation_study(
            default_dataset,
            masks=[
                ("fa", "ftip", "m", "sigma"),
                ("fa", "ftip", "m"),
                ("fa", "m", "sigma"),
            ],
            train_config=TrainConfig(),
            seed=0,
        )
    )
    full = rows[("fa", "ftip", "m", "sigma")].acc
    no_sigma = rows[("fa", "ftip", "m")].acc
    no_ftip = rows[("fa", "m", "sigma")].acc
    ok = (full - no_sigma) >= 5.0 and (full - no_ftip) < (full - no_sigma)
    announce(
        7,
        ok,
        f"Acc full={full:.1f}, -sigma={no_sigma:.1f}, -ftip={no_ftip:.1f}",
    )


def test_criterion_8_window_sweep_direction(default_dataset):
    rows = dict(window_sweep(default_dataset, [4, 14], TrainConfig(), seed=0))
    ok = rows[14].acc >= rows[4].acc
    announce(8, ok, f"Acc(n_w=14)={rows[14].acc:.1f} vs Acc(n_w=4)={rows[4].acc:.1f}")


def test_criterion_9_baseline_gap(default_dataset, pooled):
    X, y, tr, te = pooled
    model = train((X[tr], y[tr]), TrainConfig())
    full = evaluate_model(model, X[te], y[te]).acc
    baseline = energy_threshold_baseline(default_dataset, seed=0).test_report.acc
    announce(9, baseline < full, f"baseline Acc={baseline:.1f} < full Acc={full:.1f}")


def test_criterion_10_online_throughput(pooled, tmp_path):
    X, y, tr, _ = pooled
    model = train((X[tr], y[tr]), TrainConfig())
    model_path = tmp_path / "model.json"
    save_model(model, model_path)
    geom_path = tmp_path / "geometry.json"
    save_geometry(FingertipGeometry.identity(30), geom_path)

    phases = PhaseDurations(no_contact=1.5, ramp=0.3, locked=52.0, disturbance=6.0, release=0.2)
    stream_path = tmp_path / "stream.jsonl"
    n_frames = 0
    with open(stream_path, "w") as fh:
        for i in range(4):
            episode = generate_episode(
                EpisodeConfig(seed=100 + i, phase_durations=phases, fingertip_id=f"ft{i}")
            )
            n_frames += len(episode.frames)
            for frame in episode.frames:
                fh.write(
                    json.dumps(
                        {
                            "t": frame.timestamp,
                            "fingertip": frame.fingertip_id,
                            "taxels": frame.taxels.tolist(),
                        }
                    )
                    + "\n"
                )
    assert n_frames == 4 * 9000

    cmd = [
        sys.executable,
        "-m",
        "gripwatch.cli",
        "detect",
        "--model",
        str(model_path),
        "--geometry",
        str(geom_path),
        "--tau",
        "0.5",
        "--in",
        str(stream_path),
    ]
    start = time.perf_counter()
    first = subprocess.run(cmd, capture_output=True)
    elapsed = time.perf_counter() - start
    second = subprocess.run(cmd, capture_output=True)
    ok = (
        first.returncode == 0
        and elapsed < 9.0
        and first.stdout == second.stdout
        and first.stdout.count(b"\n") == n_frames - 4 * 13
    )
    announce(10, ok, f"36000 frames in {elapsed:.2f}s, deterministic output")


def test_criterion_11_command_determinism(tmp_path):
    def run_all(out):
        out.mkdir()
        assert main(["simulate", "--objects", "1", "--episodes", "2", "--seed", "3", "--out", str(out / "data")]) == 0
        assert main(["extract", "--in", str(out / "data"), "--out", str(out / "f.jsonl")]) == 0
        assert main(["train", "--features", str(out / "f.jsonl"), "--out", str(out / "m.json")]) == 0
        assert main(
            [
                "eval",
                "--model",
                str(out / "m.json"),
                "--features",
                str(out / "f.jsonl"),
                "--report",
                str(out / "r.json"),
            ]
        ) == 0

    run_all(tmp_path / "a")
    run_all(tmp_path / "b")
    mismatches = []
    for rel in ["f.jsonl", "m.json", "r.json"] + [
        p.name for p in sorted((tmp_path / "a" / "data").iterdir())
    ]:
        pa = tmp_path / "a" / rel if not rel.startswith("episode") and rel != "geometry.json" else tmp_path / "a" / "data" / rel
        pb = tmp_path / "b" / rel if not rel.startswith("episode") and rel != "geometry.json" else tmp_path / "b" / "data" / rel
        if pa.read_bytes() != pb.read_bytes():
            mismatches.append(rel)
    announce(11, not mismatches, f"byte-identical outputs (mismatches: {mismatches})")
