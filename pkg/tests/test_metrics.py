import math

import numpy as np
import pytest

from ttrseg.errors import DimensionError, UndefinedCorrelationError, UndefinedMetricError
from ttrseg.io.synth import synth_frames
from ttrseg.metrics import (
    ConfusionMatrix,
    FrameStats,
    dense_macs,
    dynamism_proxy,
    elementwise_ops,
    mac_count,
    min_max_normalize,
    miou,
    pearson,
    pixel_accuracy,
    sweep_tradeoff,
)
from ttrseg.patching import Frame, SparsityMask

from conftest import random_frame


def brute_force_scores(pred, truth, k):
    """Per-pixel counting: IoU per class and pixel accuracy with plain loops."""
    inter = [0] * k
    union = [0] * k
    correct = 0
    p, t = pred.ravel().tolist(), truth.ravel().tolist()
    for a, b in zip(p, t):
        if a == b:
            correct += 1
            inter[a] += 1
            union[a] += 1
        else:
            union[a] += 1
            union[b] += 1
    ious = [inter[c] / union[c] for c in range(k) if union[c]]
    return sum(ious) / len(ious), correct / len(p)


def test_mac_count_closed_form(spec):
    geom = (64, 96)
    allm = mac_count(spec, SparsityMask.all_active(2, 3), geom, 32)
    none = mac_count(spec, SparsityMask.all_redundant(2, 3), geom, 32)
    assert none.stage_macs == 0
    # written out for the reference backbone: stem at full res, stage 1 at /2, stage 2 at /4
    h, w = geom
    closed = (
        16 * 3 * 9 * h * w
        + (32 * 16 + 32 * 32) * 9 * (h // 2) * (w // 2)
        + (64 * 32 + 64 * 64) * 9 * (h // 4) * (w // 4)
    )
    assert allm.stage_macs == closed == dense_macs(spec, h, w)
    assert allm.head_macs == 64 * 8 * (h // 8) * (w // 8) == none.head_macs


def test_mac_count_half_active(spec):
    active = np.zeros((2, 4), bool)
    active[0] = True
    half = mac_count(spec, SparsityMask(active), (64, 128), 32)
    full = mac_count(spec, SparsityMask.all_active(2, 4), (64, 128), 32)
    assert 2 * half.stage_macs == full.stage_macs


def test_elementwise_ops_separate(spec):
    assert elementwise_ops(spec, SparsityMask.all_redundant(1, 1), 32) == 0
    assert elementwise_ops(spec, SparsityMask.all_active(1, 2), 32) == 2 * elementwise_ops(
        spec, SparsityMask.all_active(1, 1), 32
    )


def test_frame_stats_invariants():
    with pytest.raises(Exception):
        FrameStats(0, 4, 1, 2, 0, 0, 0, 0)
    with pytest.raises(Exception):
        FrameStats(1, 4, 0, 4, 10, 0, 0, 0)
    assert FrameStats(1, 4, 1, 3, 10, 0, 0, 0).reused_pct == 75.0


def test_miou_perfect(rng):
    labels = rng.integers(0, 5, (16, 16))
    cm = ConfusionMatrix.from_labels(labels, labels, 5)
    assert miou(cm) == 1.0 and pixel_accuracy(cm) == 1.0


def test_miou_hand_two_class():
    truth = np.array([[0, 0], [1, 1]])
    pred = np.zeros((2, 2), int)
    cm = ConfusionMatrix.from_labels(pred, truth, 2)
    assert cm.counts.tolist() == [[2, 2], [0, 0]]
    assert miou(cm) == 0.25
    assert pixel_accuracy(cm) == 0.5


def test_pixel_accuracy_cases():
    truth = np.array([0, 1, 2, 3])
    assert pixel_accuracy(ConfusionMatrix.from_labels((truth + 1) % 4, truth, 4)) == 0.0
    assert pixel_accuracy(ConfusionMatrix.from_labels(np.array([0, 1, 2, 0]), truth, 4)) == 0.75


def test_absent_classes_excluded():
    cm = ConfusionMatrix.from_labels(np.array([0, 0]), np.array([0, 0]), 4)
    assert miou(cm) == 1.0


def test_metric_errors():
    with pytest.raises(UndefinedMetricError):
        miou(ConfusionMatrix.empty(3))
    with pytest.raises(UndefinedMetricError):
        pixel_accuracy(ConfusionMatrix.empty(3))
    with pytest.raises(DimensionError):
        ConfusionMatrix.from_labels(np.array([0, 5]), np.array([0, 1]), 3)


@pytest.mark.parametrize("seed", range(10))
def test_miou_matches_pixel_oracle(seed):
    rng = np.random.default_rng(seed)
    pred = rng.integers(0, 8, (32, 32))
    truth = rng.integers(0, 8, (32, 32))
    cm = ConfusionMatrix.from_labels(pred, truth, 8)
    m, acc = brute_force_scores(pred, truth, 8)
    assert abs(miou(cm) - m) <= 1e-9
    assert abs(pixel_accuracy(cm) - acc) <= 1e-9


def test_relabel_invariance(rng):
    pred = rng.integers(0, 6, (20, 20))
    truth = rng.integers(0, 6, (20, 20))
    perm = rng.permutation(6)
    a = ConfusionMatrix.from_labels(pred, truth, 6)
    b = ConfusionMatrix.from_labels(perm[pred], perm[truth], 6)
    assert miou(a) == pytest.approx(miou(b), abs=1e-12)
    assert pixel_accuracy(a) == pixel_accuracy(b)


def test_dynamism_cases(rng):
    f = random_frame(rng, 32, 32)
    assert dynamism_proxy(f, f) == 0.0
    black = Frame(np.zeros((8, 8, 3), np.uint8))
    white = Frame(np.full((8, 8, 3), 255, np.uint8))
    assert dynamism_proxy(black, white) == 1.0
    with pytest.raises(DimensionError):
        dynamism_proxy(black, f)


def test_dynamism_one_inverted_block(rng):
    f0 = random_frame(rng, 64, 64)
    rgb = f0.rgb.copy()
    rgb[16:48, 0:32] = 255 - rgb[16:48, 0:32]
    f1 = Frame(rgb)
    block = 0
    for y in range(16, 48):
        for x in range(32):
            for ch in range(3):
                block += abs(int(f1.rgb[y, x, ch]) - int(f0.rgb[y, x, ch]))
    mean_block = block / (32 * 32 * 3) / 255
    expected = (32 * 32) / (64 * 64) * mean_block
    assert dynamism_proxy(f1, f0) == pytest.approx(expected, abs=1e-12)


def pearson_oracle(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x)) * math.sqrt(sum((b - my) ** 2 for b in y))
    return num / den


def test_pearson(rng):
    xs = rng.normal(size=30)
    assert pearson(xs, 2 * xs + 1) == pytest.approx(1.0, abs=1e-12)
    assert pearson(xs, -xs) == pytest.approx(-1.0, abs=1e-12)
    ys = rng.normal(size=30)
    assert abs(pearson(xs, ys) - pearson_oracle(xs.tolist(), ys.tolist())) <= 1e-9
    # invariant under affine normalization
    assert pearson(min_max_normalize(xs), ys) == pytest.approx(pearson(xs, ys), abs=1e-12)
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError):
        pearson([1], [2])


def test_sweep_bounds(spec):
    static = synth_frames("static", 3, (64, 64), seed=0)
    rows = sweep_tradeoff(static, spec, [-1.0, 1.0], 32)
    assert rows[0].reused_pct == 100.0 and rows[0].miou_vs_dense == 1.0
    assert rows[0].mean_stage_macs == 0
    assert rows[1].reused_pct == 0.0 and rows[1].miou_vs_dense == 1.0


def test_sweep_monotone_moving_square(wide_spec):
    frames = synth_frames("moving_square", 5, (128, 128), seed=2, block_size=32, square=24, speed=6)
    rows = sweep_tradeoff(frames, wide_spec, [0.5, 0.9, 0.99, 0.999, 1.0], 32)
    reuse = [r.reused_pct for r in rows]
    assert all(a >= b for a, b in zip(reuse, reuse[1:]))
    assert rows[-1].miou_vs_dense == 1.0 and rows[-1].reused_pct == 0.0


def test_sweep_needs_input(spec):
    frames = synth_frames("static", 2, (64, 64))
    with pytest.raises(UndefinedMetricError):
        sweep_tradeoff(frames, spec, [], 32)
    with pytest.raises(UndefinedMetricError):
        sweep_tradeoff(frames[:1], spec, [0.9], 32)
