"""Microstructure descriptors and reconstruction-fidelity metrics for 3D voxel volumes."""

__version__ = "0.1.0"

from mstruct.voxcore import (  # noqa: E402
    Axis,
    BoundaryMode,
    Kind,
    SliceImage,
    VoxelVolume,
    load_volume,
    save_volume,
    slice_volume,
)

__all__ = [
    "Axis",
    "BoundaryMode",
    "Kind",
    "SliceImage",
    "VoxelVolume",
    "load_volume",
    "save_volume",
    "slice_volume",
    "__version__",
]
