"""Voxel volume model, the MVX1 file format, and slicing.

A volume is stored in memory as a numpy array indexed ``[x, y, z]``. On disk
and in the flat ``data`` view the voxel order is x-fastest, i.e. the flat
index of voxel (x, y, z) is ``x + nx * (y + ny * z)``.

MVX1 layout::

    b"MVX1\\n"
    {"dims":[nx,ny,nz],"kind":"phase","n_phases":2,"voxel_size":1.0}\\n
    <nx*ny*nz raw bytes>
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from mstruct.errors import (
    BadMagic,
    BadSpec,
    HeaderParse,
    IndexOutOfRange,
    IoFailure,
    LabelOutOfRange,
    NotPhase,
    PayloadSizeMismatch,
)

MAGIC = b"MVX1\n"


class Axis(enum.IntEnum):
    X = 0
    Y = 1
    Z = 2

    @classmethod
    def parse(cls, value) -> "Axis":
        if isinstance(value, Axis):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise BadSpec(f"unknown axis {value!r}") from None
        return cls(value)


class BoundaryMode(enum.Enum):
    PERIODIC = "periodic"
    TRUNCATED = "truncated"

    @classmethod
    def parse(cls, value) -> "BoundaryMode":
        if isinstance(value, BoundaryMode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise BadSpec(f"unknown boundary mode {value!r}") from None


class Kind(enum.Enum):
    PHASE = "phase"
    GRAY = "gray"


@dataclass(frozen=True, eq=False)
class VoxelVolume:
    """Immutable 3D grid of uint8 phase labels or gray values.

    ``array`` is indexed ``[x, y, z]``; it is made read-only on construction.
    """

    array: np.ndarray
    kind: Kind = Kind.PHASE
    n_phases: int | None = 2
    voxel_size: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise BadSpec(f"volume must be 3D with positive dims, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise BadSpec("voxel values must fit in 8 bits")
            arr = arr.astype(np.uint8)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not (math.isfinite(self.voxel_size) and self.voxel_size > 0):
            raise BadSpec(f"voxel_size must be positive, got {self.voxel_size}")
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        if kind is Kind.PHASE:
            if self.n_phases is None or int(self.n_phases) < 1:
                raise BadSpec("phase volumes need n_phases >= 1")
            object.__setattr__(self, "n_phases", int(self.n_phases))
            if arr.size and int(arr.max()) >= self.n_phases:
                raise LabelOutOfRange(
                    f"label {int(arr.max())} found but n_phases={self.n_phases}"
                )
        else:
            object.__setattr__(self, "n_phases", None)

    @classmethod
    def from_flat(cls, data, dims, **kwargs) -> "VoxelVolume":
        """Build from a flat x-fastest buffer."""
        nx, ny, nz = dims
        flat = np.frombuffer(bytes(data), dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data)
        if flat.size != nx * ny * nz:
            raise PayloadSizeMismatch(f"expected {nx * ny * nz} values, got {flat.size}")
        return cls(flat.reshape((nx, ny, nz), order="F"), **kwargs)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.array.shape)

    @property
    def n_voxels(self) -> int:
        return int(self.array.size)

    @property
    def data(self) -> bytes:
        """Flat payload in x-fastest order."""
        return self.array.tobytes(order="F")

    def indicator(self, phase: int) -> np.ndarray:
        return self.array == phase

    def gray(self) -> np.ndarray:
        """Gray-value view; phase labels are spread over 0..255."""
        if self.kind is Kind.GRAY:
            return self.array
        step = 255 // (self.n_phases - 1) if self.n_phases > 1 else 0
        return (self.array.astype(np.uint16) * step).astype(np.uint8)

    def header(self) -> dict:
        return {
            "dims": list(self.dims),
            "kind": self.kind.value,
            "n_phases": self.n_phases,
            "voxel_size": self.voxel_size,
        }

    def __eq__(self, other):
        if not isinstance(other, VoxelVolume):
            return NotImplemented
        return (
            self.header() == other.header()
            and np.array_equal(self.array, other.array)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"VoxelVolume(dims={self.dims}, kind={self.kind.value}, "
            f"n_phases={self.n_phases}, voxel_size={self.voxel_size})"
        )


def require_phase(vol: VoxelVolume) -> None:
    if vol.kind is not Kind.PHASE:
        raise NotPhase("operation needs a phase-labelled volume")


@dataclass(frozen=True, eq=False)
class SliceImage:
    """2D image with ``pixels`` shaped (h, w), rows first."""

    pixels: np.ndarray
    source_axis: Axis | None = None
    source_index: int | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise BadSpec("slice pixels must be 2D")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def dims(self) -> tuple[int, int]:
        h, w = self.pixels.shape
        return (w, h)

    @property
    def data(self) -> bytes:
        return self.pixels.astype(np.uint8).tobytes()

    def __eq__(self, other):
        if not isinstance(other, SliceImage):
            return NotImplemented
        return (
            self.source_axis == other.source_axis
            and self.source_index == other.source_index
            and np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None


def slice_pixels(array: np.ndarray, axis: Axis, index: int) -> np.ndarray:
    """Raw (h, w) slice of an ``[x, y, z]`` array.

    Z gives rows=y, cols=x; Y gives rows=z, cols=x; X gives rows=z, cols=y.
    """
    return np.take(array, index, axis=int(axis)).T


def slice_volume(vol: VoxelVolume, axis, index: int) -> SliceImage:
    axis = Axis.parse(axis)
    n = vol.dims[axis]
    if not 0 <= index < n:
        raise IndexOutOfRange(f"slice {index} out of range for axis {axis.name} of length {n}")
    return SliceImage(slice_pixels(vol.array, axis, index), axis, int(index))


def iter_slices(array: np.ndarray, axis: Axis):
    for k in range(array.shape[int(axis)]):
        yield slice_pixels(array, axis, k)


def _encode_header(vol: VoxelVolume) -> bytes:
    return json.dumps(vol.header(), separators=(",", ":")).encode("ascii") + b"\n"


def save_volume(vol: VoxelVolume, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(_encode_header(vol))
            fh.write(vol.data)
    except OSError as exc:
        raise IoFailure(f"cannot write {os.fspath(path)}: {exc.strerror}") from exc


def _parse_header(line: bytes) -> dict:
    try:
        hdr = json.loads(line.decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderParse(f"header is not valid JSON: {exc}") from exc
    if not isinstance(hdr, dict):
        raise HeaderParse("header must be a JSON object")
    missing = {"dims", "kind", "voxel_size"} - hdr.keys()
    if missing:
        raise HeaderParse(f"header missing fields: {sorted(missing)}")
    dims = hdr["dims"]
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in dims)
    ):
        raise HeaderParse(f"dims must be three positive integers, got {dims!r}")
    if hdr["kind"] not in ("phase", "gray"):
        raise HeaderParse(f"unknown kind {hdr['kind']!r}")
    vs = hdr["voxel_size"]
    if isinstance(vs, bool) or not isinstance(vs, (int, float)) or not math.isfinite(vs) or vs <= 0:
        raise HeaderParse(f"voxel_size must be a positive number, got {vs!r}")
    n_phases = hdr.get("n_phases")
    if hdr["kind"] == "phase":
        if isinstance(n_phases, bool) or not isinstance(n_phases, int) or not 1 <= n_phases <= 256:
            raise HeaderParse(f"n_phases must be an integer in 1..256, got {n_phases!r}")
    return hdr


def load_volume(path) -> VoxelVolume:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {os.fspath(path)}: {exc.strerror}") from exc
    if not blob.startswith(MAGIC):
        raise BadMagic(f"{os.fspath(path)}: missing MVX1 magic")
    end = blob.find(b"\n", len(MAGIC))
    if end < 0:
        raise HeaderParse(f"{os.fspath(path)}: unterminated header line")
    hdr = _parse_header(blob[len(MAGIC):end])
    payload = blob[end + 1:]
    nx, ny, nz = hdr["dims"]
    if len(payload) != nx * ny * nz:
        raise PayloadSizeMismatch(
            f"{os.fspath(path)}: payload has {len(payload)} bytes, header dims need {nx * ny * nz}"
        )
    kind = Kind(hdr["kind"])
    return VoxelVolume.from_flat(
        payload,
        (nx, ny, nz),
        kind=kind,
        n_phases=hdr.get("n_phases") if kind is Kind.PHASE else None,
        voxel_size=float(hdr["voxel_size"]),
    )
