"""Python bindings for the claimgraph pipeline."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping

from . import _core
from ._core import (
    ClaimgraphError,
    ConfigError,
    adjusted_rand_index,
    config_keys,
    cosine,
    load_vectors,
    threshold_clusters,
    welch_t,
    write_vectors,
)

__all__ = [
    "ClaimgraphError",
    "ConfigError",
    "adjusted_rand_index",
    "config_keys",
    "cosine",
    "default_config",
    "generate_synthetic",
    "load_vectors",
    "run_all",
    "run_stage",
    "threshold_clusters",
    "validate_config",
    "welch_t",
    "write_vectors",
]


def default_config() -> dict[str, Any]:
    return json.loads(_core.default_config())


def validate_config(config: Mapping[str, Any]) -> dict[str, Any]:
    """Returns the full config with defaults filled in; raises ConfigError."""
    return json.loads(_core.validate_config(json.dumps(dict(config))))


def generate_synthetic(spec: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Planted corpus as {"records", "ids", "vectors", "truth"}."""
    text, ids, vectors, truth = _core.synth_generate(json.dumps(dict(spec or {})))
    records = [json.loads(line) for line in text.splitlines() if line]
    return {"records": records, "ids": ids, "vectors": vectors, "truth": truth}


def _config_json(config: Mapping[str, Any] | None) -> str:
    return json.dumps(dict(config)) if config else ""


def run_stage(
    stage: str,
    workdir: str | os.PathLike[str],
    config: Mapping[str, Any] | None = None,
    input: str | os.PathLike[str] = "",
    vectors: str | os.PathLike[str] = "",
    force: bool = False,
) -> dict[str, Any]:
    return _core.run_stage(stage, os.fspath(workdir), _config_json(config), os.fspath(input),
                           os.fspath(vectors), force)


def run_all(
    workdir: str | os.PathLike[str],
    config: Mapping[str, Any] | None = None,
    input: str | os.PathLike[str] = "",
    vectors: str | os.PathLike[str] = "",
    force: bool = False,
) -> list[dict[str, Any]]:
    return _core.run_all(os.fspath(workdir), _config_json(config), os.fspath(input), os.fspath(vectors), force)
