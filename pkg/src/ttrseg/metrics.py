"""Accuracy metrics, compute accounting, dynamism and threshold sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionError,
    InvariantViolation,
    UndefinedCorrelationError,
    UndefinedMetricError,
)
from .patching import Frame, SparsityMask


@dataclass(frozen=True)
class FrameStats:
    frame_index: int
    blocks_total: int
    blocks_active: int
    blocks_reused: int
    stage_macs: int
    head_macs: int
    similarity_ops: int
    wall_micros: int
    dynamism: float = 0.0

    def __post_init__(self):
        if self.blocks_active + self.blocks_reused != self.blocks_total:
            raise InvariantViolation("active + reused blocks must equal the total")
        if self.blocks_active == 0 and self.stage_macs != 0:
            raise InvariantViolation("stage MACs must be zero when no block is active")

    @property
    def reused_pct(self) -> float:
        return 100.0 * self.blocks_reused / self.blocks_total


class MacCount(NamedTuple):
    stage_macs: int
    head_macs: int


def _layer_geometry(spec):
    """Yield ``(c_out, c_in, k, factor_in, pool)`` for every stem/stage convolution."""
    f = 1
    for layer in spec.layers:
        w = layer.weights
        yield w.out_channels, w.in_channels, w.kernel, f, layer.pool
        if layer.pool:
            f *= 2


def per_block_macs(spec, block_size: int) -> int:
    """MACs spent on one ACTIVE cell across all stem/stage convolutions."""
    total = 0
    for co, ci, k, f, _ in _layer_geometry(spec):
        n = block_size // f
        total += co * ci * k * k * n * n
    return total


def dense_macs(spec, height: int, width: int) -> int:
    """Stem/stage MACs of a full dense pass over an ``height x width`` frame."""
    total = 0
    for co, ci, k, f, _ in _layer_geometry(spec):
        total += co * ci * k * k * (height // f) * (width // f)
    return total


def head_macs(spec, height: int, width: int) -> int:
    f = spec.total_factor
    head = spec.head
    return head.out_channels * head.in_channels * (height // f) * (width // f)


def mac_count(spec, mask: SparsityMask, geometry: tuple[int, int], block_size: int) -> MacCount:
    h, w = geometry
    return MacCount(mask.num_active * per_block_macs(spec, block_size), head_macs(spec, h, w))


def elementwise_ops(spec, mask: SparsityMask, block_size: int) -> int:
    """ReLU and pooling element operations on ACTIVE cells, kept apart from MACs."""
    per_block = 0
    for co, _, _, f, pool in _layer_geometry(spec):
        n = block_size // f
        per_block += co * n * n
        if pool:
            per_block += co * n * n
    return mask.num_active * per_block


@dataclass
class ConfusionMatrix:
    """Pixel tallies indexed ``counts[pred, truth]``."""

    counts: np.ndarray

    @classmethod
    def empty(cls, num_classes: int) -> ConfusionMatrix:
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @classmethod
    def from_labels(cls, pred, truth, num_classes: int) -> ConfusionMatrix:
        cm = cls.empty(num_classes)
        cm.update(pred, truth)
        return cm

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def update(self, pred, truth) -> None:
        pred = np.asarray(pred).ravel().astype(np.int64)
        truth = np.asarray(truth).ravel().astype(np.int64)
        if pred.shape != truth.shape:
            raise DimensionError(f"prediction {pred.shape} and truth {truth.shape} differ")
        k = self.num_classes
        if pred.size and (min(pred.min(), truth.min()) < 0 or max(pred.max(), truth.max()) >= k):
            raise DimensionError(f"label outside [0, {k})")
        self.counts += np.bincount(pred * k + truth, minlength=k * k).reshape(k, k)


def class_iou(cm: ConfusionMatrix) -> np.ndarray:
    tp = np.diag(cm.counts).astype(np.float64)
    fp = cm.counts.sum(axis=1) - tp
    fn = cm.counts.sum(axis=0) - tp
    denom = tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, tp / np.where(denom > 0, denom, 1), np.nan)


def miou(cm: ConfusionMatrix) -> float:
    """Mean IoU over classes that appear in either prediction or truth."""
    if cm.total == 0:
        raise UndefinedMetricError("mIoU of an empty confusion matrix")
    ious = class_iou(cm)
    present = ~np.isnan(ious)
    if not present.any():
        raise UndefinedMetricError("no class is present")
    return float(ious[present].mean())


def pixel_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise UndefinedMetricError("pixel accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def dynamism_proxy(frame_t: Frame, frame_prev: Frame) -> float:
    """Mean absolute pixel difference, scaled to [0, 1].

    Stands in for optical-flow magnitude as the scene-motion signal.
    """
    if frame_t.geometry != frame_prev.geometry:
        raise DimensionError(f"frame geometry {frame_t.geometry} != {frame_prev.geometry}")
    diff = np.abs(frame_t.rgb.astype(np.int16) - frame_prev.rgb.astype(np.int16))
    return float(diff.mean(dtype=np.float64) / 255.0)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError("pearson needs two 1-D series of equal length")
    if x.size < 2:
        raise UndefinedCorrelationError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation of a constant series is undefined")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def min_max_normalize(values: Sequence[float]) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    span = v.max() - v.min()
    return np.zeros_like(v) if span == 0 else (v - v.min()) / span


@dataclass(frozen=True)
class SweepRow:
    tau: float
    miou_vs_dense: float
    pixacc_vs_dense: float
    reused_pct: float
    mean_stage_macs: float


def sweep_tradeoff(
    frames: Sequence[Frame], spec, taus: Sequence[float], block_size: int
) -> list[SweepRow]:
    """Run the sparse pass once per threshold and score it against the dense pass.

    Agreement metrics use the dense labels of every frame as reference and are
    pooled over the whole sequence. Reuse and MAC means cover frames 1.. only,
    since frame 0 is always fully computed.
    """
    from .backbone import forward_dense, process_stream

    if not taus:
        raise UndefinedMetricError("sweep needs at least one threshold")
    if len(frames) < 2:
        raise UndefinedMetricError("sweep needs at least two frames")
    reference = [forward_dense(f, spec, block_size)[0].labels for f in frames]
    rows = []
    for tau in taus:
        cm = ConfusionMatrix.empty(spec.num_classes)
        reused, macs = [], []
        for (out, stats), ref in zip(process_stream(frames, spec, tau, block_size), reference):
            cm.update(out.labels, ref)
            if stats.frame_index > 0:
                reused.append(stats.reused_pct)
                macs.append(stats.stage_macs)
        rows.append(
            SweepRow(
                tau=float(tau),
                miou_vs_dense=miou(cm),
                pixacc_vs_dense=pixel_accuracy(cm),
                reused_pct=float(np.mean(reused)),
                mean_stage_macs=float(np.mean(macs)),
            )
        )
    return rows
