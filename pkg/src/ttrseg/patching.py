"""Patch tokens, inter-frame cosine similarity and sparsity-mask generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StreamConsistencyError

DEFAULT_BLOCK_SIZE = 32


@dataclass(frozen=True)
class Frame:
    """One 8-bit RGB frame stored as an ``(H, W, 3)`` uint8 array."""

    rgb: np.ndarray

    def __post_init__(self):
        rgb = np.asarray(self.rgb)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ConfigError(f"frame must be (H, W, 3), got {rgb.shape}")
        if rgb.dtype != np.uint8:
            raise ConfigError(f"frame must be uint8, got {rgb.dtype}")
        object.__setattr__(self, "rgb", rgb)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def geometry(self) -> tuple[int, int]:
        return self.height, self.width


@dataclass(frozen=True)
class SparsityMask:
    """Per-cell ACTIVE (True) / REDUNDANT (False) grid for one frame."""

    active: np.ndarray  # (rows, cols) bool

    def __post_init__(self):
        object.__setattr__(self, "active", np.asarray(self.active, dtype=bool))
        if self.active.ndim != 2:
            raise ConfigError(f"mask must be 2-D, got {self.active.shape}")

    @classmethod
    def all_active(cls, rows: int, cols: int) -> SparsityMask:
        return cls(np.ones((rows, cols), dtype=bool))

    @classmethod
    def all_redundant(cls, rows: int, cols: int) -> SparsityMask:
        return cls(np.zeros((rows, cols), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.active.shape

    @property
    def redundant(self) -> np.ndarray:
        return ~self.active

    @property
    def num_active(self) -> int:
        return int(self.active.sum())

    @property
    def num_cells(self) -> int:
        return self.active.size

    @property
    def num_redundant(self) -> int:
        return self.num_cells - self.num_active

    def active_cells(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in np.argwhere(self.active)]

    def redundant_cells(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in np.argwhere(~self.active)]


@dataclass(frozen=True)
class PatchCache:
    """Flattened raw RGB patches of one frame, one row per grid cell (row-major)."""

    patches: np.ndarray  # (rows*cols, 3*b*b) float32
    grid: tuple[int, int]
    block_size: int

    def to_image(self) -> np.ndarray:
        """Reassemble the cached patches into an ``(H, W, 3)`` float32 image."""
        return assemble_patches(self.patches, self.grid, self.block_size)

    @property
    def nbytes(self) -> int:
        return self.patches.nbytes


def grid_shape(height: int, width: int, block_size: int) -> tuple[int, int]:
    if block_size < 1:
        raise ConfigError(f"block size must be positive, got {block_size}")
    if height % block_size or width % block_size:
        raise ConfigError(
            f"frame {width}x{height} is not divisible by block size {block_size}"
        )
    return height // block_size, width // block_size


def extract_patches(frame: Frame, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    """Return an ``(rows*cols, 3*b*b)`` float32 array of patch vectors.

    Cells are in row-major grid order; each vector is channel-major, then row,
    then column within the block. No normalization is applied.
    """
    rows, cols = grid_shape(frame.height, frame.width, block_size)
    b = block_size
    blocks = frame.rgb.reshape(rows, b, cols, b, 3).transpose(0, 2, 4, 1, 3)
    return blocks.reshape(rows * cols, 3 * b * b).astype(np.float32)


def assemble_patches(patches: np.ndarray, grid: tuple[int, int], block_size: int) -> np.ndarray:
    rows, cols = grid
    b = block_size
    blocks = np.asarray(patches).reshape(rows, cols, 3, b, b).transpose(0, 3, 1, 4, 2)
    return blocks.reshape(rows * b, cols * b, 3)


def _similarities(cur: np.ndarray, prev: np.ndarray) -> np.ndarray:
    a = cur.astype(np.float64)
    b = prev.astype(np.float64)
    dot = np.einsum("...i,...i->...", a, b)
    na = np.sqrt(np.einsum("...i,...i->...", a, a))
    nb = np.sqrt(np.einsum("...i,...i->...", b, b))
    denom = na * nb
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, dot / np.where(denom > 0, denom, 1.0), 0.0)
    # two all-black patches count as identical
    sim = np.where((na == 0) & (nb == 0), 1.0, sim)
    return np.clip(sim, -1.0, 1.0)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float32).ravel()
    b = np.asarray(b, dtype=np.float32).ravel()
    if a.shape != b.shape:
        raise ConfigError(f"patch vectors differ in length: {a.size} vs {b.size}")
    return float(_similarities(a, b))


def patch_similarities(patches: np.ndarray, prev: PatchCache) -> np.ndarray:
    """Per-cell similarity between current patch vectors and a cached frame."""
    if prev.patches.shape != patches.shape:
        raise StreamConsistencyError(
            f"patch grid {patches.shape} does not match cached grid {prev.patches.shape}"
        )
    return _similarities(patches, prev.patches)


def generate_mask(
    frame: Frame,
    prev_cache: PatchCache | None,
    tau: float,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> tuple[SparsityMask, PatchCache]:
    """Classify every cell of ``frame`` as ACTIVE or REDUNDANT.

    A cell is ACTIVE when its similarity to the cached patch is ``<= tau``.
    With no previous cache every cell is ACTIVE. The returned cache always
    holds the current frame's patches.
    """
    if not -1.0 <= tau <= 1.0:
        raise ConfigError(f"tau must lie in [-1, 1], got {tau}")
    rows, cols = grid_shape(frame.height, frame.width, block_size)
    patches = extract_patches(frame, block_size)
    if prev_cache is None:
        mask = SparsityMask.all_active(rows, cols)
    else:
        if prev_cache.grid != (rows, cols) or prev_cache.block_size != block_size:
            raise StreamConsistencyError(
                f"frame grid {rows}x{cols} (block {block_size}) does not match cached "
                f"grid {prev_cache.grid[0]}x{prev_cache.grid[1]} (block {prev_cache.block_size})"
            )
        sims = patch_similarities(patches, prev_cache)
        mask = SparsityMask((sims <= tau).reshape(rows, cols))
    return mask, PatchCache(patches, (rows, cols), block_size)
