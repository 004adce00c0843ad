"""Run configuration: flat key-value files with command-line overrides.

Precedence is flags > file > built-in defaults. The file format is one
`key = value` pair per line; `#` starts a comment. Antennas are written as
semicolon-separated `lon,lat,radius_m` triples.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .detect import DetectionThresholds
from .ingest import DEFAULT_ANTENNAS, AntennaSpec
from .model import (
    DEFAULT_CELL_SIZE,
    DEFAULT_D_NEW,
    DEFAULT_MAX_PROTOTYPES,
    GridConfig,
    ModelSpec,
)

_BOOL_VALUES = {"true": True, "1": True, "yes": True,
                "false": False, "0": False, "no": False}


def parse_bool(text: str) -> bool:
    try:
        return _BOOL_VALUES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def parse_antennas(text: str) -> tuple[tuple[float, float, float], ...]:
    antennas = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = [float(p) for p in part.split(",")]
        if len(pieces) != 3:
            raise ValueError(f"antenna {part!r} is not lon,lat,radius_m")
        antennas.append(tuple(pieces))
    if not antennas:
        raise ValueError("no antennas given")
    return tuple(antennas)


@dataclass(frozen=True)
class RunConfig:
    origin_lon: float = 0.0
    origin_lat: float = 0.0
    cell_size: float = DEFAULT_CELL_SIZE
    max_prototypes: int = DEFAULT_MAX_PROTOTYPES
    d_new: float = DEFAULT_D_NEW
    # Unset position scales follow the cell size.
    scale_lon: float | None = None
    scale_lat: float | None = None
    scale_sog: float = 2.0
    scale_cog: float = 30.0
    th_pos: float = 0.01
    th_sog: float = 0.01
    th_cog: float = 0.01
    antennas: tuple = DEFAULT_ANTENNAS
    max_gap_s: float = 60.0
    days_per_round: int = 1
    return_global: bool = False
    transport: str = "inprocess"
    seed_from_global: bool = False
    coverage_filter: bool = True

    def scales(self) -> tuple[float, float, float, float]:
        return (
            self.scale_lon if self.scale_lon is not None else self.cell_size,
            self.scale_lat if self.scale_lat is not None else self.cell_size,
            self.scale_sog,
            self.scale_cog,
        )

    def grid(self) -> GridConfig:
        return GridConfig(self.origin_lon, self.origin_lat, self.cell_size)

    def model_spec(self, ship_type: str) -> ModelSpec:
        return ModelSpec(
            grid=self.grid(),
            ship_type=ship_type,
            max_prototypes=self.max_prototypes,
            d_new=self.d_new,
            scales=self.scales(),
        )

    def thresholds(self) -> DetectionThresholds:
        return DetectionThresholds(self.th_pos, self.th_sog, self.th_cog)

    def antenna_specs(self) -> list[AntennaSpec]:
        return [AntennaSpec(*a) for a in self.antennas]


_PARSERS = {
    "origin_lon": float,
    "origin_lat": float,
    "cell_size": float,
    "max_prototypes": int,
    "d_new": float,
    "scale_lon": float,
    "scale_lat": float,
    "scale_sog": float,
    "scale_cog": float,
    "th_pos": float,
    "th_sog": float,
    "th_cog": float,
    "antennas": parse_antennas,
    "max_gap_s": float,
    "days_per_round": int,
    "return_global": parse_bool,
    "transport": str,
    "seed_from_global": parse_bool,
    "coverage_filter": parse_bool,
}

CONFIG_KEYS = tuple(_PARSERS)


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _PARSERS[key](raw.strip())
    return values


def build_config(file_path=None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, an optional config file, and override values."""
    values: dict = {}
    if file_path:
        values.update(read_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _PARSERS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = value
    known = {f.name for f in fields(RunConfig)}
    assert known == set(CONFIG_KEYS)
    return RunConfig(**values)
