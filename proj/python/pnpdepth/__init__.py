# Copyright 2026 The pnpdepth Authors.
# SPDX-License-Identifier: Apache-2.0
"""Inference-time feature refinement for sparse-to-dense depth networks."""

from ._pnpdepth import (
    ConfigError,
    ContractError,
    GraphError,
    IoError,
    Model,
    NumericError,
    build_model,
    evaluate,
    format_improvement,
    generate_scene,
    lidar_presets,
    load_checkpoint,
    make_input,
    refine,
    run_cli,
    sample_lidar,
    sample_uniform,
    save_checkpoint,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "GraphError",
    "IoError",
    "Model",
    "NumericError",
    "build_model",
    "evaluate",
    "format_improvement",
    "generate_scene",
    "lidar_presets",
    "load_checkpoint",
    "make_input",
    "refine",
    "run_cli",
    "sample_lidar",
    "sample_uniform",
    "save_checkpoint",
]
