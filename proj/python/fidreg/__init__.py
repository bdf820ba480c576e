"""Fiducial-marker CT segmentation, triangle-matching registration and ICP baseline."""

from ._core import (
    DomainError,
    UsageError,
    Volume,
    absolute_orientation,
    generate_scene,
    icp_register,
    marching_cubes,
    read_volume,
    register_markers,
    run_benchmark,
    segment_markers,
    stl_bytes,
    triangle_key,
    write_volume,
)

__all__ = [
    "DomainError",
    "UsageError",
    "Volume",
    "absolute_orientation",
    "generate_scene",
    "icp_register",
    "marching_cubes",
    "read_volume",
    "register_markers",
    "run_benchmark",
    "segment_markers",
    "stl_bytes",
    "triangle_key",
    "write_volume",
]
