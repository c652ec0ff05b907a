"""Monte Carlo lab for random walks in random environments."""

import json

from ._core import (
    CONFIG_SCHEMA,
    LabError,
    enumerate_exact,
    find_regenerations,
    presets,
    slab_summary,
    subcommands,
    velocity,
)
from ._core import law as _law
from ._core import run as _run

__all__ = [
    "CONFIG_SCHEMA",
    "LabError",
    "enumerate_exact",
    "find_regenerations",
    "law",
    "presets",
    "run",
    "slab_summary",
    "subcommands",
    "velocity",
]


def law(name):
    return json.loads(_law(name))


def run(subcommand, config, workers=1):
    """Run a pipeline on a config dict (or JSON string); returns the report dict."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return json.loads(_run(subcommand, config, workers))
