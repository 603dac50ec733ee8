"""Loading of the packaged preset plans under ``data/presets``."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from .config import ExperimentPlan, parse, read_text
from .core import InvalidInputError

PRESET_DIR = Path(__file__).parent / "data" / "presets"
PRESET_PREFIX = "preset:"


@lru_cache(maxsize=64)
def preset_text(name: str, data_dir: Path = PRESET_DIR) -> str:
    """Raw text of the preset ``name``."""
    path = data_dir / f"{name}.ini"
    if not path.is_file():
        known = ", ".join(preset_names(data_dir))
        raise InvalidInputError(f"unknown preset {name!r}; available: {known}")
    return read_text(path)


def preset_names(data_dir: Path = PRESET_DIR) -> list[str]:
    """Names of the packaged presets."""
    return sorted(p.stem for p in data_dir.glob("*.ini"))


def load_preset(name: str) -> ExperimentPlan:
    """Parse the packaged preset ``name``."""
    return parse(preset_text(name))


def plan_source(spec: str) -> str:
    """Text of a plan given as a file path or as ``preset:<name>``."""
    if spec.startswith(PRESET_PREFIX):
        return preset_text(spec.removeprefix(PRESET_PREFIX))
    path = Path(spec)
    if not path.is_file():
        raise InvalidInputError(f"plan file not found: {spec}")
    return read_text(path)
