"""Deterministic synthetic frame sequences used as test fixtures."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from ..patching import DEFAULT_BLOCK_SIZE, Frame, grid_shape
from .netpbm import write_frame_sequence

KINDS = ("static", "moving_square", "variable_speed", "brightness_ramp")


def _paste(canvas: np.ndarray, patch: np.ndarray, top: int, left: int) -> None:
    """Draw ``patch`` with wrap-around at the canvas edges."""
    h, w = canvas.shape[:2]
    s = patch.shape[0]
    rows = (top + np.arange(s)) % h
    cols = (left + np.arange(patch.shape[1])) % w
    canvas[np.ix_(rows, cols)] = patch


def synth_frames(
    kind: str,
    frames: int,
    geometry: tuple[int, int],
    seed: int = 0,
    block_size: int = DEFAULT_BLOCK_SIZE,
    *,
    square: int | None = None,
    speed: float | None = None,
    period: float = 20.0,
) -> list[Frame]:
    """Generate ``frames`` frames of ``geometry = (width, height)``.

    ``static`` repeats one noise frame. ``moving_square`` slides a noise-textured
    square of side ``square`` (default 1.5 blocks) right and down over static
    noise at ``speed`` px/frame (default a quarter block). ``variable_speed``
    uses a sinusoidally modulated speed between 0 and ``speed`` (default two
    blocks). ``brightness_ramp`` scales one frame by a gain going 0.5 -> 1.5.
    """
    width, height = geometry
    grid_shape(height, width, block_size)
    if frames < 1:
        raise ConfigError("need at least one frame")
    if kind not in KINDS:
        raise ConfigError(f"unknown sequence kind {kind!r}; choose from {', '.join(KINDS)}")
    rng = np.random.default_rng(seed)

    if kind == "static":
        base = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        return [Frame(base.copy()) for _ in range(frames)]

    if kind == "brightness_ramp":
        # 170 * 1.5 stays below 255, so no gain ever clips
        base = rng.integers(16, 171, size=(height, width, 3)).astype(np.float64)
        gains = [1.0] if frames == 1 else np.linspace(0.5, 1.5, frames)
        return [Frame(np.rint(base * g).astype(np.uint8)) for g in gains]

    side = square if square is not None else (3 * block_size) // 2
    if not 1 <= side <= min(width, height):
        raise ConfigError(f"square side {side} does not fit a {width}x{height} frame")
    background = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    texture = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
    top, left = height // 4, width // 4
    out = []
    pos = 0.0
    for t in range(frames):
        if kind == "moving_square":
            v = speed if speed is not None else block_size / 4
            pos = v * t
        else:
            vmax = speed if speed is not None else 2.0 * block_size
            if t:
                pos += vmax * 0.5 * (1.0 - math.cos(2.0 * math.pi * t / period))
        shift = int(round(pos))
        canvas = background.copy()
        _paste(canvas, texture, top + shift // 2, left + shift)
        out.append(Frame(canvas))
    return out


def synth_sequence(kind: str, frames: int, geometry: tuple[int, int], seed: int, path, block_size: int = DEFAULT_BLOCK_SIZE, **kwargs):
    return write_frame_sequence(synth_frames(kind, frames, geometry, seed, block_size, **kwargs), path)
