"""Binary PPM (P6) frames and PGM (P5) label maps, 8 bits per sample."""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterator

import numpy as np

from ..errors import FormatError, LabelRangeError, ParseError, StreamConsistencyError, UnsupportedDepthError
from ..patching import Frame

_FRAME_NAME = re.compile(r"^(\d{6})\.ppm$")
_WS = b" \t\n\r\v\f"


def _parse_header(data: bytes, magic: bytes) -> tuple[int, int, int]:
    """Return ``(width, height, data_offset)`` for a maxval-255 netpbm header."""
    if data[:2] != magic:
        raise ParseError(f"bad magic {data[:2]!r}, expected {magic!r}", 0)
    pos = 2
    fields = []
    while len(fields) < 3:
        start = pos
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch in _WS:
                pos += 1
            else:
                break
        if pos == start and pos < len(data):
            raise ParseError("expected whitespace in header", pos)
        tok_start = pos
        while pos < len(data) and data[pos : pos + 1] not in _WS and data[pos : pos + 1] != b"#":
            pos += 1
        tok = data[tok_start:pos]
        if not tok:
            raise ParseError("truncated header", pos)
        if not tok.isdigit():
            raise ParseError(f"non-numeric header field {tok[:16]!r}", tok_start)
        fields.append((int(tok), tok_start))
    if pos >= len(data) or data[pos : pos + 1] not in _WS:
        raise ParseError("missing whitespace after maxval", pos)
    (width, _), (height, hoff), (maxval, moff) = fields
    if width < 1 or height < 1:
        raise ParseError(f"invalid dimensions {width}x{height}", hoff)
    if maxval != 255:
        raise UnsupportedDepthError(f"unsupported maxval {maxval}; only 255 is accepted", moff)
    return width, height, pos + 1


def _payload(data: bytes, offset: int, expected: int) -> bytes:
    got = len(data) - offset
    if got < expected:
        raise ParseError(f"truncated pixel data: {got} of {expected} bytes", len(data))
    if got > expected:
        raise ParseError(f"{got - expected} trailing bytes after pixel data", offset + expected)
    return data[offset:]


def decode_ppm(data: bytes) -> Frame:
    w, h, off = _parse_header(data, b"P6")
    raw = _payload(data, off, w * h * 3)
    return Frame(np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy())


def encode_ppm(frame: Frame) -> bytes:
    return b"P6\n%d %d\n255\n" % (frame.width, frame.height) + frame.rgb.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    w, h, off = _parse_header(data, b"P5")
    raw = _payload(data, off, w * h)
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w).copy()


def encode_pgm(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise LabelRangeError(f"label map must be 2-D, got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise LabelRangeError(f"class index {int(labels.max())} does not fit in one byte")
    h, w = labels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + labels.astype(np.uint8).tobytes()


def read_ppm(path) -> Frame:
    return decode_ppm(Path(path).read_bytes())


def write_ppm(frame: Frame, path) -> None:
    Path(path).write_bytes(encode_ppm(frame))


def read_label_map(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


def write_label_map(labels: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_pgm(labels))


def frame_name(index: int) -> str:
    return f"{index:06d}.ppm"


def _indexed_files(path: Path, pattern: re.Pattern) -> list[Path]:
    if not path.is_dir():
        raise FileNotFoundError(f"not a directory: {path}")
    found = sorted(
        (int(m.group(1)), path / name)
        for name in os.listdir(path)
        if (m := pattern.match(name))
    )
    if not found:
        raise FormatError(f"no numbered files in {path}")
    for expected, (index, p) in enumerate(found):
        if index != expected:
            raise FormatError(f"sequence gap: expected index {expected:06d}, found {p.name}")
    return [p for _, p in found]


def read_frame_sequence(path) -> Iterator[Frame]:
    """Yield frames from ``000000.ppm, 000001.ppm, ...`` in numeric order."""
    geometry = None
    for p in _indexed_files(Path(path), _FRAME_NAME):
        try:
            frame = read_ppm(p)
        except ParseError as exc:
            raise type(exc)(f"{p.name}: {exc.detail}", exc.offset) from exc
        if geometry is None:
            geometry = frame.geometry
        elif frame.geometry != geometry:
            raise StreamConsistencyError(
                f"{p.name}: geometry {frame.width}x{frame.height} differs from "
                f"{geometry[1]}x{geometry[0]}"
            )
        yield frame


def write_frame_sequence(frames, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_ppm(frame, path / frame_name(i))
    return path


def read_label_sequence(path) -> list[np.ndarray]:
    return [read_label_map(p) for p in _indexed_files(Path(path), re.compile(r"^(\d{6})\.pgm$"))]


def label_name(index: int) -> str:
    return f"{index:06d}.pgm"
