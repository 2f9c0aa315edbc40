"""Learned signed distance functions: decoding, surfacing and metrics."""

import json

from ._core import (
    AnalyticShape,
    ConfigError,
    DataError,
    Error,
    Mesh,
    Model,
    NumericFault,
    ParseError,
    PreconditionError,
    box_mesh,
    chamfer_distance,
    emd,
    load_obj,
    mesh_accuracy,
    mesh_completion,
    run_pipeline_json,
    sample_points,
    sphere_mesh,
    surface_chamfer,
    write_obj,
)


def run_pipeline(config, out_dir=None, threads=0):
    """Run generate, train and evaluate from a config file; returns the summary dict."""
    return json.loads(run_pipeline_json(str(config), None if out_dir is None else str(out_dir), threads))


__all__ = [
    "AnalyticShape",
    "ConfigError",
    "DataError",
    "Error",
    "Mesh",
    "Model",
    "NumericFault",
    "ParseError",
    "PreconditionError",
    "box_mesh",
    "chamfer_distance",
    "emd",
    "load_obj",
    "mesh_accuracy",
    "mesh_completion",
    "run_pipeline",
    "sample_points",
    "sphere_mesh",
    "surface_chamfer",
    "write_obj",
]
