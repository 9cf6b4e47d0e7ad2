"""Bundled protomatrix fixtures and literature reference values."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..protomatrix import Protomatrix, parse_protomatrix

__all__ = ["names", "path", "load", "literature"]


def names() -> list[str]:
    """Available fixture names."""
    root = resources.files(__name__)
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".pm"))


def path(name: str) -> Path:
    p = Path(str(resources.files(__name__).joinpath(f"{name}.pm")))
    if not p.exists():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return p


def load(name: str) -> Protomatrix:
    return parse_protomatrix(path(name).read_text(), name=name)


def literature() -> dict:
    return json.loads(resources.files(__name__).joinpath("literature.json").read_text())
