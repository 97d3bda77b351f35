"""CSV output for per-frame statistics and threshold sweeps."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from ..metrics import FrameStats, SweepRow

SEGMENT_HEADER = (
    "frame",
    "blocks_total",
    "blocks_active",
    "blocks_reused",
    "stage_macs",
    "head_macs",
    "similarity_ops",
    "wall_micros",
    "dynamism",
)
SWEEP_HEADER = ("tau", "miou_vs_dense", "pixacc_vs_dense", "reused_pct", "mean_stage_macs")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _segment_row(s: FrameStats):
    return (
        s.frame_index,
        s.blocks_total,
        s.blocks_active,
        s.blocks_reused,
        s.stage_macs,
        s.head_macs,
        s.similarity_ops,
        s.wall_micros,
        float(s.dynamism),
    )


def _sweep_row(r: SweepRow):
    return (r.tau, r.miou_vs_dense, r.pixacc_vs_dense, r.reused_pct, r.mean_stage_macs)


def write_stats(records: Sequence[FrameStats | SweepRow], path, mode: str | None = None) -> None:
    """Write ``records`` as CSV to a path or open text file.

    ``mode`` is ``"segment"`` or ``"sweep"``;
    it is inferred from the records when omitted (empty lists default to segment)."""
    if mode is None:
        mode = "sweep" if records and isinstance(records[0], SweepRow) else "segment"
    header, convert = {
        "segment": (SEGMENT_HEADER, _segment_row),
        "sweep": (SWEEP_HEADER, _sweep_row),
    }[mode]
    if hasattr(path, "write"):
        _write_rows(path, header, [convert(r) for r in records])
        return
    with open(path, "w", newline="") as fh:
        _write_rows(fh, header, [convert(r) for r in records])


def _write_rows(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def read_stats(path) -> list[dict[str, float | int]]:
    """Parse a stats CSV back into dicts; integral columns become ``int``."""
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (int(v) if v.lstrip("-").isdigit() else float(v)) for k, v in row.items()})
    return rows
