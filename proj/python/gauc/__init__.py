"""Python interface to the gauc coreset-selection engine.

Array arguments are NumPy arrays with one row per sample. Pipeline commands
accept a dataset config path plus keyword overrides of the run
configuration fields and return the paths they wrote.
"""

import json
import os

from ._core import (
    ConfigError,
    DataError,
    FormatError,
    GaucError,
    IndexError,
    InsufficientDataError,
    IoError,
    NumericalError,
    ShapeError,
    accuracy_f1,
    chair,
    ece,
    gaussian_js,
    gaussian_kl,
    median_heuristic_sigma,
    mmd_squared,
    nll,
    rbf_kernel,
    read_embeddings,
    summarize,
    synth,
    var_para,
    var_runs,
    wilcoxon_signed_rank,
    write_embeddings,
)
from . import _core

__all__ = [
    "ConfigError", "DataError", "FormatError", "GaucError", "IndexError", "InsufficientDataError",
    "IoError", "NumericalError", "ShapeError", "ablate", "accuracy_f1", "chair", "ece", "evaluate",
    "gaussian_js", "gaussian_kl", "median_heuristic_sigma", "mmd_squared", "nll", "rbf_kernel",
    "read_embeddings", "select", "summarize", "synth", "var_para", "var_runs",
    "wilcoxon_signed_rank", "write_embeddings",
]


def _config(path, overrides):
    with open(path, encoding="utf-8") as f:
        cfg = json.load(f)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = os.fspath(value) if isinstance(value, os.PathLike) else value
    return json.dumps(cfg), os.path.dirname(os.path.abspath(path))


def select(config, **overrides):
    """Run selection once per seed; returns the selection file paths."""
    return _core.select(*_config(config, overrides))


def evaluate(config, **overrides):
    """Evaluate stored selections; returns the report path."""
    return _core.evaluate(*_config(config, overrides))


def ablate(config, **overrides):
    """Run the four-variant ablation grid; returns the report path."""
    return _core.ablate(*_config(config, overrides))
