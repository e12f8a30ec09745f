"""Locations of the data files shipped with the package."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"

SCENARIO_DIR = DATA_DIR / "scenarios"
LEXICON_DIR = DATA_DIR / "lexicon"
TEMPLATE_DIR = DATA_DIR / "templates"
FIXTURE_DIR = DATA_DIR / "fixtures"


def scenario_path(name: str) -> Path:
    """Resolve a scenario argument: an existing path, or a shipped name."""
    direct = Path(name)
    if direct.exists():
        return direct
    shipped = SCENARIO_DIR / f"{name}.json"
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"no scenario file or shipped scenario named {name!r}")


def fixture_path(name: str) -> Path:
    direct = Path(name)
    if direct.exists():
        return direct
    shipped = FIXTURE_DIR / f"{name}.json"
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"no fixture file or shipped fixture named {name!r}")


def lexicon_path(name: str = "household") -> Path:
    direct = Path(name)
    if direct.exists():
        return direct
    return LEXICON_DIR / f"{name}.json"
