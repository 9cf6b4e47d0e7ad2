"""Protomatrix search: constraints, brute force, differential evolution, FSTCT."""
from __future__ import annotations

from .brute import brute_force_bp, brute_force_bt
from .config import load_search_config, parse_search_config
from .constraints import ConstraintReport, SearchConstraints, canonical_keys, check_constraints
from .de import DeParams, DeState, SearchResult, de_search, phi_round
from .fstct import FstctResult, fstct

__all__ = [
    "ConstraintReport",
    "DeParams",
    "DeState",
    "FstctResult",
    "SearchConstraints",
    "SearchResult",
    "brute_force_bp",
    "brute_force_bt",
    "canonical_keys",
    "check_constraints",
    "de_search",
    "fstct",
    "load_search_config",
    "parse_search_config",
    "phi_round",
]
