"""Dense float32 primitives shared by the dense and block-sparse paths.

Feature maps are plain ``numpy`` arrays shaped ``(C, H, W)``; a leading batch
axis ``(N, C, H, W)`` is accepted by :func:`conv2d` so per-block work can be
stacked.  Every output element is accumulated in the same fixed order
(bias, then in-channel, then kernel row, then kernel column) no matter how
large the spatial extent is, which is what makes a block-wise convolution
bit-identical to the corresponding slice of a whole-map convolution.  BLAS
matmul is deliberately avoided for that reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, DimensionError

Border = Literal["zero", "none"]


@dataclass(frozen=True)
class ConvWeights:
    weights: np.ndarray  # (out, in, k, k) float32
    bias: np.ndarray  # (out,) float32

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        b = np.ascontiguousarray(self.bias, dtype=np.float32)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ConfigError(f"weights must be (out, in, k, k), got {w.shape}")
        if w.shape[2] not in (1, 3):
            raise ConfigError(f"kernel size must be 1 or 3, got {w.shape[2]}")
        if b.shape != (w.shape[0],):
            raise ConfigError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel(self) -> int:
        return self.weights.shape[2]


def conv2d(x: np.ndarray, w: ConvWeights, border: Border = "zero") -> np.ndarray:
    """Stride-1 convolution (cross-correlation) of a ``(C,H,W)`` or ``(N,C,H,W)`` map.

    ``border="zero"`` keeps the spatial size with an implicit zero border;
    ``border="none"`` is a valid convolution and shrinks a 3x3 result by 2 per axis.
    """
    batched = x.ndim == 4
    xb = x if batched else x[None]
    if xb.ndim != 4:
        raise DimensionError(f"expected a (C,H,W) or (N,C,H,W) map, got shape {x.shape}")
    n, c, h, wd = xb.shape
    if c != w.in_channels:
        raise ConfigError(f"input has {c} channels, weights expect {w.in_channels}")
    k = w.kernel
    if border == "zero":
        p = k // 2
        if p:
            xb = np.pad(xb, ((0, 0), (0, 0), (p, p), (p, p)))
        oh, ow = h, wd
    elif border == "none":
        if h < k or wd < k:
            raise DimensionError(f"{h}x{wd} input is too small for an unpadded {k}x{k} kernel")
        oh, ow = h - k + 1, wd - k + 1
    else:
        raise ConfigError(f"unknown border mode {border!r}")
    xb = xb.astype(np.float32, copy=False)

    out = np.empty((n, w.out_channels, oh, ow), dtype=np.float32)
    out[...] = w.bias[None, :, None, None]
    tmp = np.empty_like(out)
    for i in range(c):
        for ky in range(k):
            for kx in range(k):
                np.multiply(
                    w.weights[None, :, i, ky, kx, None, None],
                    xb[:, None, i, ky : ky + oh, kx : kx + ow],
                    out=tmp,
                )
                np.add(out, tmp, out=out)
    return out if batched else out[0]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def avg_pool2(x: np.ndarray) -> np.ndarray:
    """Mean over non-overlapping 2x2 windows of the last two axes."""
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise DimensionError(f"avg_pool2 needs even height and width, got {h}x{w}")
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    return (((a + b) + c) + d) * np.float32(0.25)


def upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    if factor < 1:
        raise ConfigError(f"upsample factor must be >= 1, got {factor}")
    if factor == 1:
        return x.copy()
    return np.repeat(np.repeat(x, factor, axis=-2), factor, axis=-1)
