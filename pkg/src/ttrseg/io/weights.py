"""TTRW weight files.

Layout (little-endian): ``b"TTRW"``, ``u32`` version (1), then one record per
layer in backbone order (stem, stage convolutions, head)::

    u32 kind (0 = 3x3, 1 = 1x1) | u32 out | u32 in | f32 weights[out*in*k*k] | f32 bias[out]

No trailing bytes are allowed.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..backbone import BackboneSpec
from ..errors import (
    TrailingBytesError,
    WeightGeometryError,
    WeightMagicError,
    WeightTruncationError,
    WeightVersionError,
)
from ..tensor import ConvWeights

MAGIC = b"TTRW"
VERSION = 1
_KERNEL = {0: 3, 1: 1}
_KIND = {3: 0, 1: 1}
_RECORD = struct.Struct("<III")


def encode_weights(spec: BackboneSpec) -> bytes:
    parts = [MAGIC, struct.pack("<I", VERSION)]
    for w in spec.all_weights():
        parts.append(_RECORD.pack(_KIND[w.kernel], w.out_channels, w.in_channels))
        parts.append(w.weights.astype("<f4").tobytes())
        parts.append(w.bias.astype("<f4").tobytes())
    return b"".join(parts)


def decode_weights(data: bytes, spec: BackboneSpec) -> BackboneSpec:
    """Parse ``data`` against the topology of ``spec`` and return it re-weighted."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise WeightMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 8:
        raise WeightTruncationError("file ends inside the version field", 0)
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise WeightVersionError(f"unsupported weight file version {version}")
    pos = 8
    loaded = []
    for i, expected in enumerate(spec.all_weights()):
        if len(data) - pos < _RECORD.size:
            raise WeightTruncationError("file ends inside a record header", i)
        kind, out, inp = _RECORD.unpack_from(data, pos)
        pos += _RECORD.size
        if kind not in _KERNEL:
            raise WeightGeometryError(f"layer {i}: unknown layer kind tag {kind}")
        k = _KERNEL[kind]
        want = (expected.kernel, expected.out_channels, expected.in_channels)
        if (k, out, inp) != want:
            raise WeightGeometryError(
                f"layer {i}: file declares k={k} out={out} in={inp}, backbone needs "
                f"k={want[0]} out={want[1]} in={want[2]}"
            )
        nw, nb = out * inp * k * k, out
        if len(data) - pos < 4 * (nw + nb):
            raise WeightTruncationError("file ends inside weight data", i)
        w = np.frombuffer(data, dtype="<f4", count=nw, offset=pos).reshape(out, inp, k, k)
        pos += 4 * nw
        b = np.frombuffer(data, dtype="<f4", count=nb, offset=pos)
        pos += 4 * nb
        loaded.append(ConvWeights(w.astype(np.float32), b.astype(np.float32)))
    if pos != len(data):
        raise TrailingBytesError(f"{len(data) - pos} trailing bytes after the last layer")
    return spec.with_weights(loaded)


def save_weights(spec: BackboneSpec, path) -> None:
    Path(path).write_bytes(encode_weights(spec))


def load_weights(path, spec: BackboneSpec) -> BackboneSpec:
    return decode_weights(Path(path).read_bytes(), spec)
