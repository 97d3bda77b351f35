"""Run configuration and its ``key = value`` file form."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..backbone import Architecture
from ..errors import ConfigError
from ..patching import DEFAULT_BLOCK_SIZE

DEFAULT_TAU = 0.99
DEFAULT_TAUS = (0.90, 0.95, 0.99, 0.995, 0.999)


@dataclass(frozen=True)
class RunConfig:
    frames: str | None = None
    weights: str | None = None
    seed: int | None = None
    tau: float = DEFAULT_TAU
    taus: tuple[float, ...] = DEFAULT_TAUS
    block_size: int = DEFAULT_BLOCK_SIZE
    classes: int = 8
    out: str | None = None
    stats: str | None = None
    agreement_floor: float = 99.5
    stem_width: int = 16
    stages: tuple[tuple[int, int], ...] = ((32, 2), (64, 2))
    kind: str = "static"
    nframes: int = 5
    geometry: tuple[int, int] = (128, 128)

    def __post_init__(self):
        if not -1.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [-1, 1], got {self.tau}")
        for t in self.taus:
            if not -1.0 <= t <= 1.0:
                raise ConfigError(f"tau must lie in [-1, 1], got {t}")
        if self.classes < 1 or self.classes > 256:
            raise ConfigError(f"classes must be in 1..256, got {self.classes}")
        factor = self.architecture.total_factor
        if self.block_size < 1 or self.block_size % factor:
            raise ConfigError(
                f"block size {self.block_size} must be a positive multiple of {factor}"
            )

    @property
    def architecture(self) -> Architecture:
        return Architecture(self.stem_width, self.stages, self.classes)

    def merged(self, overrides: dict) -> RunConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def parse_geometry(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"geometry must look like WxH, got {text!r}") from None


def parse_taus(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"taus must be comma-separated numbers, got {text!r}") from None


def parse_stages(text: str) -> tuple[tuple[int, int], ...]:
    """``"32x2,64x2"`` -> ``((32, 2), (64, 2))`` (width x conv count)."""
    try:
        out = []
        for part in text.split(","):
            width, convs = part.strip().lower().split("x")
            out.append((int(width), int(convs)))
        return tuple(out)
    except ValueError:
        raise ConfigError(f"stages must look like 32x2,64x2, got {text!r}") from None


_CONVERTERS = {
    "frames": str,
    "weights": str,
    "seed": int,
    "tau": float,
    "taus": parse_taus,
    "block_size": int,
    "classes": int,
    "out": str,
    "stats": str,
    "agreement_floor": float,
    "stem_width": int,
    "stages": parse_stages,
    "kind": str,
    "nframes": int,
    "geometry": parse_geometry,
}
assert set(_CONVERTERS) == {f.name for f in fields(RunConfig)}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return values


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name == "taus":
            v = ",".join(repr(t) for t in v)
        elif f.name == "stages":
            v = ",".join(f"{w}x{c}" for w, c in v)
        elif f.name == "geometry":
            v = f"{v[0]}x{v[1]}"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
