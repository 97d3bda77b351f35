"""Block-sparse execution helpers: gather, halo padding and assembly.

A map is cut into square cells of ``n`` feature pixels that line up with the
pixel-level sparsity grid. ACTIVE cells are gathered and, before every 3x3
convolution, padded with a one-pixel halo drawn from their 8 neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvariantViolation
from .patching import SparsityMask

CURRENT, CACHE, ZERO = 0, 1, 2


@dataclass
class BlockSet:
    """Blocks for a row-major sorted list of cells, stacked as ``(N, C, n, n)``."""

    cells: list[tuple[int, int]]
    blocks: np.ndarray

    def __post_init__(self):
        if list(self.cells) != sorted(set(self.cells)):
            raise InvariantViolation("block cells must be row-major sorted without duplicates")
        if len(self.cells) != self.blocks.shape[0]:
            raise InvariantViolation(
                f"{len(self.cells)} cells but {self.blocks.shape[0]} blocks"
            )

    def __len__(self):
        return len(self.cells)

    @property
    def block_side(self) -> int:
        return self.blocks.shape[-1]


@dataclass
class HaloBatch:
    """Halo-padded blocks ``(N, C, n+2, n+2)`` with per-pixel provenance tags.

    ``provenance[k]`` is an ``(n+2, n+2)`` array of CURRENT / CACHE / ZERO.
    """

    cells: list[tuple[int, int]]
    payload: np.ndarray
    provenance: np.ndarray

    def __len__(self):
        return len(self.cells)


def _check_geometry(fmap: np.ndarray, mask: SparsityMask, n: int) -> None:
    if fmap.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) map, got {fmap.shape}")
    _, h, w = fmap.shape
    if n < 1 or h % n or w % n:
        raise DimensionError(f"{h}x{w} map is not divisible into {n}x{n} blocks")
    if (h // n, w // n) != mask.shape:
        raise DimensionError(f"map grid {(h // n, w // n)} does not match mask {mask.shape}")


def _blocks_view(fmap: np.ndarray, n: int) -> np.ndarray:
    c, h, w = fmap.shape
    return fmap.reshape(c, h // n, n, w // n, n).transpose(1, 3, 0, 2, 4)


def _select(fmap: np.ndarray, sel: np.ndarray, n: int) -> BlockSet:
    cells = [(int(r), int(c)) for r, c in np.argwhere(sel)]
    blocks = np.ascontiguousarray(_blocks_view(fmap, n)[sel])
    return BlockSet(cells, blocks.reshape(len(cells), fmap.shape[0], n, n))


def gather_active(fmap: np.ndarray, mask: SparsityMask, feat_block: int) -> BlockSet:
    _check_geometry(fmap, mask, feat_block)
    return _select(fmap, mask.active, feat_block)


def gather_redundant(fmap: np.ndarray, mask: SparsityMask, feat_block: int) -> BlockSet:
    _check_geometry(fmap, mask, feat_block)
    return _select(fmap, mask.redundant, feat_block)


def _halo_source(current_map, prev_map, mask, n):
    """Zero-bordered composite map: current features at ACTIVE cells, cached at REDUNDANT."""
    c, h, w = current_map.shape
    src = np.zeros((c, h + 2, w + 2), dtype=current_map.dtype)
    tag = np.full((h + 2, w + 2), ZERO, dtype=np.uint8)
    cell_active = np.repeat(np.repeat(mask.active, n, axis=0), n, axis=1)
    src[:, 1:-1, 1:-1] = current_map
    tag[1:-1, 1:-1] = CURRENT
    if not mask.active.all():
        if prev_map is None:
            raise InvariantViolation("REDUNDANT cells present but no previous-frame cache")
        if prev_map.shape != current_map.shape:
            raise InvariantViolation(
                f"cached map {prev_map.shape} does not match current map {current_map.shape}"
            )
        inner = src[:, 1:-1, 1:-1]
        np.copyto(inner, prev_map, where=~cell_active[None])
        tag[1:-1, 1:-1][~cell_active] = CACHE
    return src, tag


def pad_with_halo(
    blocks: BlockSet,
    current_map: np.ndarray,
    prev_stage_cache: np.ndarray | None,
    mask: SparsityMask,
) -> HaloBatch:
    """Pad each active block with a one-pixel border from its 8 neighbours.

    Neighbours that are ACTIVE contribute ``current_map`` features, REDUNDANT
    neighbours contribute ``prev_stage_cache`` features and anything outside the
    frame is zero. The block interior is the gathered block itself.
    """
    n = blocks.block_side if len(blocks) else current_map.shape[-1] // mask.shape[1]
    _check_geometry(current_map, mask, n)
    if not len(blocks):
        c = current_map.shape[0]
        return HaloBatch(
            [],
            np.empty((0, c, n + 2, n + 2), dtype=np.float32),
            np.empty((0, n + 2, n + 2), dtype=np.uint8),
        )
    for r, c in blocks.cells:
        if not mask.active[r, c]:
            raise InvariantViolation(f"cell {(r, c)} is not ACTIVE")
    rows, cols = mask.shape
    needs_cache = False
    for r, c in blocks.cells:
        nb = mask.active[max(r - 1, 0) : r + 2, max(c - 1, 0) : c + 2]
        if not nb.all():
            needs_cache = True
            break
    if needs_cache and prev_stage_cache is None:
        raise InvariantViolation("active cell has a REDUNDANT neighbour but no cache is present")

    src, tag = _halo_source(current_map, prev_stage_cache, mask, n)
    idx = np.asarray(blocks.cells)
    ys = idx[:, 0] * n
    xs = idx[:, 1] * n
    win = np.arange(n + 2)
    yy = ys[:, None, None] + win[None, :, None]
    xx = xs[:, None, None] + win[None, None, :]
    payload = src[:, yy, xx].transpose(1, 0, 2, 3)
    provenance = tag[yy, xx]
    payload[:, :, 1:-1, 1:-1] = blocks.blocks
    provenance[:, 1:-1, 1:-1] = CURRENT
    return HaloBatch(list(blocks.cells), np.ascontiguousarray(payload), provenance)


def assemble(
    new_blocks: BlockSet,
    reused_blocks: BlockSet,
    mask: SparsityMask,
    out_shape: tuple[int, int, int],
) -> np.ndarray:
    """Scatter ACTIVE (new) and REDUNDANT (reused) blocks into one dense map."""
    c, h, w = out_shape
    rows, cols = mask.shape
    if h % rows or w % cols or h // rows != w // cols:
        raise DimensionError(f"output {h}x{w} does not tile a {rows}x{cols} grid")
    n = h // rows
    seen = np.zeros(mask.shape, dtype=np.int32)
    for cell in new_blocks.cells:
        seen[cell] += 1
    for cell in reused_blocks.cells:
        seen[cell] += 1
    if (seen != 1).any():
        raise InvariantViolation("new and reused blocks must cover every cell exactly once")
    if set(new_blocks.cells) != set(mask.active_cells()):
        raise InvariantViolation("new blocks must be exactly the ACTIVE cells")

    out = np.empty(out_shape, dtype=np.float32)
    view = _blocks_view(out, n)
    for bs in (new_blocks, reused_blocks):
        if len(bs):
            if bs.blocks.shape[1:] != (c, n, n):
                raise DimensionError(f"block shape {bs.blocks.shape[1:]} != {(c, n, n)}")
            idx = np.asarray(bs.cells)
            view[idx[:, 0], idx[:, 1]] = bs.blocks
    return out
