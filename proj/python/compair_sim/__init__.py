"""Hybrid PIM LLM-inference simulator."""

import json

from ._compair import (
    assemble_roundtrip,
    builtin_models,
    default_config,
    run_exp,
)
from ._compair import run as _run


def run(**kwargs):
    """Simulate one configuration and return the report as a dict."""
    return json.loads(_run(**kwargs))


__all__ = [
    "assemble_roundtrip",
    "builtin_models",
    "default_config",
    "run",
    "run_exp",
]
