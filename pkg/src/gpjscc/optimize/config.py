"""JSON key-value configuration for searches and simulations."""
from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from ..errors import ParseError
from .constraints import SearchConstraints
from .de import DeParams

__all__ = ["load_search_config", "parse_search_config"]

_OPTIONS = {"backend", "stage2_pool"}


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)} - {"extra"}


def parse_search_config(data: dict) -> tuple[SearchConstraints, DeParams | None, dict]:
    """Split a flat mapping into constraints, DE parameters and options.

    DE keys are ``generations``, ``population``, ``p_c`` and ``seed``; the
    options are ``backend`` and ``stage2_pool``. Unknown keys are rejected.
    """
    if not isinstance(data, dict):
        raise ParseError("search config must be a JSON object")
    c_keys, d_keys = _names(SearchConstraints), _names(DeParams)
    unknown = set(data) - c_keys - d_keys - _OPTIONS
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    try:
        c = SearchConstraints(**{k: data[k] for k in c_keys if k in data})
        dk = {k: data[k] for k in d_keys if k in data}
        d = DeParams(**dk) if dk else None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid search config: {exc}") from exc
    opts = {k: data[k] for k in _OPTIONS if k in data}
    return c, d, opts


def load_search_config(path: str | Path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}") from exc
    return parse_search_config(data)
