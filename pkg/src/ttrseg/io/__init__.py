from .config import RunConfig, load_config, parse_config_text
from .netpbm import (
    read_frame_sequence,
    read_label_map,
    read_label_sequence,
    read_ppm,
    write_frame_sequence,
    write_label_map,
    write_ppm,
)
from .stats import SEGMENT_HEADER, SWEEP_HEADER, read_stats, write_stats
from .synth import KINDS, synth_frames, synth_sequence
from .weights import load_weights, save_weights

__all__ = [
    "KINDS",
    "RunConfig",
    "SEGMENT_HEADER",
    "SWEEP_HEADER",
    "load_config",
    "load_weights",
    "parse_config_text",
    "read_frame_sequence",
    "read_label_map",
    "read_label_sequence",
    "read_ppm",
    "read_stats",
    "save_weights",
    "synth_frames",
    "synth_sequence",
    "write_frame_sequence",
    "write_label_map",
    "write_ppm",
    "write_stats",
]
