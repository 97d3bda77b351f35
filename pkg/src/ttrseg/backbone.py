"""Staged segmentation CNN with a dense pass and a temporal-reuse sparse pass."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .blockskip import BlockSet, assemble, gather_active, pad_with_halo
from .cache import StageCacheSet, StreamState, new_stream, read_redundant_blocks, rotate
from .errors import ConfigError, StreamConsistencyError
from .metrics import FrameStats, dynamism_proxy, head_macs
from .patching import DEFAULT_BLOCK_SIZE, Frame, SparsityMask, generate_mask, grid_shape
from .tensor import ConvWeights, avg_pool2, conv2d, relu, upsample_nearest


@dataclass(frozen=True)
class ConvLayer:
    """A 3x3 convolution followed by ReLU and, optionally, a 2x2 average pool."""

    weights: ConvWeights
    pool: bool = False


@dataclass(frozen=True)
class Architecture:
    """Channel widths only; turned into weights by :func:`init_backbone`."""

    stem_width: int = 16
    stages: tuple[tuple[int, int], ...] = ((32, 2), (64, 2))  # (width, convs) per stage
    num_classes: int = 8
    stem_pool: bool = True

    @property
    def total_factor(self) -> int:
        return 2 ** (int(self.stem_pool) + len(self.stages))

    def layer_shapes(self) -> list[tuple[int, int, int]]:
        """``(kind, out, in)`` per layer in file order; kind 0 is 3x3, 1 is 1x1."""
        shapes = [(0, self.stem_width, 3)]
        c = self.stem_width
        for width, convs in self.stages:
            for _ in range(convs):
                shapes.append((0, width, c))
                c = width
        shapes.append((1, self.num_classes, c))
        return shapes


@dataclass(frozen=True)
class BackboneSpec:
    stem: ConvLayer
    stages: tuple[tuple[ConvLayer, ...], ...]
    head: ConvWeights

    def __post_init__(self):
        if self.stem.weights.in_channels != 3:
            raise ConfigError("the stem must take 3 input channels")
        c = None
        for i, layer in enumerate(self.layers):
            if layer.weights.kernel != 3:
                raise ConfigError(f"layer {i}: stem and stage convolutions must be 3x3")
            if c is not None and layer.weights.in_channels != c:
                raise ConfigError(
                    f"layer {i} expects {layer.weights.in_channels} channels, gets {c}"
                )
            c = layer.weights.out_channels
        if self.head.kernel != 1:
            raise ConfigError("the head must be a 1x1 convolution")
        if self.head.in_channels != c:
            raise ConfigError(f"head expects {self.head.in_channels} channels, gets {c}")

    @property
    def layers(self) -> list[ConvLayer]:
        """Stem followed by every stage convolution, in execution order."""
        out = [self.stem]
        for stage in self.stages:
            out.extend(stage)
        return out

    @property
    def num_classes(self) -> int:
        return self.head.out_channels

    @property
    def total_factor(self) -> int:
        return 2 ** sum(layer.pool for layer in self.layers)

    @property
    def checkpoint_factors(self) -> tuple[int, ...]:
        """Cumulative downsampling of each layer's output (one cache entry per layer)."""
        f, out = 1, []
        for layer in self.layers:
            if layer.pool:
                f *= 2
            out.append(f)
        return tuple(out)

    @property
    def checkpoint_channels(self) -> tuple[int, ...]:
        return tuple(layer.weights.out_channels for layer in self.layers)

    def all_weights(self) -> list[ConvWeights]:
        return [layer.weights for layer in self.layers] + [self.head]

    def with_weights(self, weights: Sequence[ConvWeights]) -> BackboneSpec:
        """Same topology with the layer weights (file order) replaced."""
        weights = list(weights)
        it = iter(weights)
        stem = ConvLayer(next(it), self.stem.pool)
        stages = tuple(tuple(ConvLayer(next(it), l.pool) for l in stage) for stage in self.stages)
        return BackboneSpec(stem, stages, next(it))


def build_backbone(arch: Architecture, weights: Sequence[ConvWeights]) -> BackboneSpec:
    weights = list(weights)
    if len(weights) != len(arch.layer_shapes()):
        raise ConfigError(f"expected {len(arch.layer_shapes())} layers, got {len(weights)}")
    stem = ConvLayer(weights[0], arch.stem_pool)
    i, stages = 1, []
    for _, convs in arch.stages:
        layers = [ConvLayer(weights[i + j], pool=(j == convs - 1)) for j in range(convs)]
        stages.append(tuple(layers))
        i += convs
    return BackboneSpec(stem, tuple(stages), weights[i])


def init_backbone(arch: Architecture, seed: int, scale: float = 0.1) -> BackboneSpec:
    """Weights and biases drawn from uniform(-scale, scale) with a seeded PCG64 stream."""
    rng = np.random.default_rng(seed)
    weights = []
    for kind, out, inp in arch.layer_shapes():
        k = 3 if kind == 0 else 1
        w = rng.uniform(-scale, scale, size=(out, inp, k, k)).astype(np.float32)
        b = rng.uniform(-scale, scale, size=out).astype(np.float32)
        weights.append(ConvWeights(w, b))
    return build_backbone(arch, weights)


@dataclass(frozen=True)
class SegmentationOutput:
    logits: np.ndarray  # (classes, H, W) float32
    labels: np.ndarray  # (H, W), argmax with ties to the lowest class

    @classmethod
    def from_features(cls, spec: BackboneSpec, features: np.ndarray) -> SegmentationOutput:
        logits = upsample_nearest(conv2d(features, spec.head, "zero"), spec.total_factor)
        labels = np.argmax(logits, axis=0)
        return cls(logits, labels.astype(np.uint8 if spec.num_classes <= 256 else np.int32))


def normalize(frame: Frame) -> np.ndarray:
    return frame.rgb.transpose(2, 0, 1).astype(np.float32) / np.float32(255.0)


def check_geometry(frame: Frame, spec: BackboneSpec, block_size: int) -> tuple[int, int]:
    f = spec.total_factor
    if block_size % f:
        raise ConfigError(
            f"block size {block_size} is not divisible by the backbone's downsampling factor {f}"
        )
    return grid_shape(frame.height, frame.width, block_size)


def _apply_layer(x: np.ndarray, layer: ConvLayer, border: str) -> np.ndarray:
    y = relu(conv2d(x, layer.weights, border))
    return avg_pool2(y) if layer.pool else y


def forward_dense(
    frame: Frame, spec: BackboneSpec, block_size: int = DEFAULT_BLOCK_SIZE
) -> tuple[SegmentationOutput, StageCacheSet]:
    check_geometry(frame, spec, block_size)
    x = normalize(frame)
    maps = []
    for layer in spec.layers:
        x = _apply_layer(x, layer, "zero")
        maps.append(x)
    caches = StageCacheSet(tuple(maps), spec.checkpoint_factors, block_size)
    return SegmentationOutput.from_features(spec, x), caches


def forward_sparse(
    image: np.ndarray,
    prev_image: np.ndarray | None,
    spec: BackboneSpec,
    mask: SparsityMask,
    prev_caches: StageCacheSet | None,
    block_size: int,
) -> tuple[np.ndarray, StageCacheSet, int]:
    """Run the stem and stages on ACTIVE cells only.

    Every 3x3 convolution gets its own halo: ACTIVE neighbours come from the map
    being built this frame, REDUNDANT neighbours from the previous frame's cached
    input to the same layer (the previous normalized image for the stem).
    Returns the final assembled map, the new caches and the MACs executed.
    """
    x = image
    maps = []
    macs = 0
    f = 1
    for level, layer in enumerate(spec.layers):
        n = block_size // f
        prev_in = prev_image if level == 0 else (prev_caches[level - 1] if prev_caches else None)
        f_out = f * 2 if layer.pool else f
        n_out = block_size // f_out
        c_out = layer.weights.out_channels
        if mask.num_active:
            act = gather_active(x, mask, n)
            halo = pad_with_halo(act, x, prev_in, mask)
            y = relu(conv2d(halo.payload, layer.weights, "none"))
            if layer.pool:
                y = avg_pool2(y)
            w = layer.weights
            macs += len(act) * w.out_channels * w.in_channels * w.kernel**2 * n * n
            new = BlockSet(act.cells, y)
        else:
            new = BlockSet([], np.empty((0, c_out, n_out, n_out), dtype=np.float32))
        reused = read_redundant_blocks(prev_caches, level, mask)
        rows, cols = mask.shape
        x = assemble(new, reused, mask, (c_out, rows * n_out, cols * n_out))
        maps.append(x)
        f = f_out
    return x, StageCacheSet(tuple(maps), spec.checkpoint_factors, block_size), macs


def forward_ttr(
    frame: Frame,
    spec: BackboneSpec,
    state: StreamState,
    tau: float,
    mask: SparsityMask | None = None,
) -> tuple[SegmentationOutput, StreamState, FrameStats]:
    """Process one frame of a stream with temporal feature reuse.

    ``mask`` overrides the similarity decision (used to replay arbitrary masks);
    the patch cache is still refreshed from ``frame``.
    """
    t0 = time.perf_counter_ns()
    b = state.block_size
    rows, cols = check_geometry(frame, spec, b)
    if state.grid is not None and state.grid != (rows, cols):
        raise StreamConsistencyError(f"frame grid {(rows, cols)} differs from stream grid {state.grid}")
    prev_patches = state.patch_cache
    computed_mask, patches = generate_mask(frame, prev_patches, tau, b)
    if mask is None:
        mask = computed_mask
    elif mask.shape != (rows, cols):
        raise StreamConsistencyError(f"mask {mask.shape} does not match grid {(rows, cols)}")
    elif prev_patches is None and mask.num_redundant:
        raise StreamConsistencyError("the first frame of a stream must be all-ACTIVE")

    prev_image = None
    if prev_patches is not None:
        prev_image = prev_patches.to_image().transpose(2, 0, 1) / np.float32(255.0)
    final, caches, macs = forward_sparse(
        normalize(frame), prev_image, spec, mask, state.feature_caches, b
    )
    output = SegmentationOutput.from_features(spec, final)
    new_state = rotate(state, patches, caches)
    sim_ops = 0 if prev_patches is None else 3 * patches.patches.size
    stats = FrameStats(
        frame_index=state.frame_index,
        blocks_total=mask.num_cells,
        blocks_active=mask.num_active,
        blocks_reused=mask.num_redundant,
        stage_macs=macs,
        head_macs=head_macs(spec, frame.height, frame.width),
        similarity_ops=sim_ops,
        wall_micros=(time.perf_counter_ns() - t0) // 1000,
    )
    return output, new_state, stats


def process_stream(
    frames: Iterable[Frame],
    spec: BackboneSpec,
    tau: float,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> Iterator[tuple[SegmentationOutput, FrameStats]]:
    """Run :func:`forward_ttr` over a sequence, attaching the dynamism proxy."""
    state = new_stream(block_size)
    prev = None
    for frame in frames:
        out, state, stats = forward_ttr(frame, spec, state, tau)
        if prev is not None:
            stats = replace(stats, dynamism=dynamism_proxy(frame, prev))
        prev = frame
        yield out, stats
