"""Per-stream state: the patch cache and the per-checkpoint feature caches."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .blockskip import BlockSet, gather_redundant
from .errors import ConfigError, InvariantViolation, StreamConsistencyError
from .patching import PatchCache, SparsityMask


@dataclass(frozen=True)
class StageCacheSet:
    """Fully assembled feature maps of one frame, one per checkpoint.

    ``factors[l]`` is the cumulative downsampling of ``maps[l]`` relative to the
    input frame, so its block side in feature pixels is ``block_size // factors[l]``.
    """

    maps: tuple[np.ndarray, ...]
    factors: tuple[int, ...]
    block_size: int

    def __post_init__(self):
        if len(self.maps) != len(self.factors):
            raise ConfigError("one downsampling factor is required per cached map")
        for f in self.factors:
            if f < 1 or self.block_size % f:
                raise ConfigError(
                    f"block size {self.block_size} is not divisible by stage factor {f}"
                )

    def __len__(self):
        return len(self.maps)

    def __getitem__(self, stage: int) -> np.ndarray:
        return self.maps[stage]

    def feat_block(self, stage: int) -> int:
        return self.block_size // self.factors[stage]

    @property
    def nbytes(self) -> int:
        return sum(m.nbytes for m in self.maps)


@dataclass(frozen=True)
class StreamState:
    block_size: int
    patch_cache: PatchCache | None = None
    feature_caches: StageCacheSet | None = None
    frame_index: int = 0
    grid: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        if (self.patch_cache is None) != (self.frame_index == 0) or (
            self.feature_caches is None
        ) != (self.frame_index == 0):
            raise InvariantViolation("caches must be absent exactly when frame_index == 0")

    @property
    def nbytes(self) -> int:
        """Bytes held by both caches (zero before the first frame)."""
        if self.patch_cache is None:
            return 0
        return self.patch_cache.nbytes + self.feature_caches.nbytes


def new_stream(block_size: int) -> StreamState:
    return StreamState(block_size=block_size)


def rotate(state: StreamState, new_patches: PatchCache, new_features: StageCacheSet) -> StreamState:
    """Install the current frame's caches, discarding the previous ones."""
    if new_patches.block_size != state.block_size or new_features.block_size != state.block_size:
        raise StreamConsistencyError("cache block size differs from the stream's block size")
    if state.grid is not None and new_patches.grid != state.grid:
        raise StreamConsistencyError(
            f"frame grid {new_patches.grid} differs from stream grid {state.grid}"
        )
    rows, cols = new_patches.grid
    for level, (fmap, f) in enumerate(zip(new_features.maps, new_features.factors)):
        want = (rows * state.block_size // f, cols * state.block_size // f)
        if fmap.shape[1:] != want:
            raise StreamConsistencyError(
                f"cached map {level} has spatial shape {fmap.shape[1:]}, expected {want}"
            )
    old = state.feature_caches
    if old is not None:
        if old.factors != new_features.factors or [m.shape for m in old.maps] != [
            m.shape for m in new_features.maps
        ]:
            raise StreamConsistencyError("feature cache layout changed mid-stream")
    return replace(
        state,
        patch_cache=new_patches,
        feature_caches=new_features,
        frame_index=state.frame_index + 1,
        grid=new_patches.grid,
    )


def read_redundant_blocks(
    caches: StageCacheSet | None, stage: int, mask: SparsityMask
) -> BlockSet:
    """Copy the cached feature block of every REDUNDANT cell at ``stage``."""
    if caches is None:
        if mask.num_redundant:
            raise InvariantViolation("REDUNDANT cells on a stream with no cached features")
        return BlockSet([], np.empty((0, 0, 0, 0), dtype=np.float32))
    if not 0 <= stage < len(caches):
        raise ConfigError(f"stage {stage} out of range for {len(caches)} cached maps")
    return gather_redundant(caches[stage], mask, caches.feat_block(stage))


def footprint_bytes(channels, factors, height: int, width: int) -> int:
    """Closed-form cache size: every cached map plus the raw-RGB patch cache."""
    total = 3 * height * width * 4
    for c, f in zip(channels, factors):
        total += c * (height // f) * (width // f) * 4
    return total
