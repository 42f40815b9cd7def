"""Calibrated constants shipped with the package.

The values live in ``data/calibration.json`` and are produced by
``python3 -m geodp.calibrate``; the test suite asserts against the committed
file rather than recomputing it.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .errors import ConfigurationError


@lru_cache(maxsize=1)
def load() -> dict:
    text = resources.files("geodp").joinpath("data/calibration.json").read_text()
    return json.loads(text)


def constant(name: str) -> float:
    consts = load().get("constants", {})
    if name not in consts:
        raise ConfigurationError(f"calibration constant {name!r} is missing; run python3 -m geodp.calibrate")
    return float(consts[name])


def constants() -> dict:
    return dict(load().get("constants", {}))
