"""Deterministic synthetic fixture volumes.

Randomness comes from numpy's ``PCG64`` bit generator (PCG XSL RR 128/64)
seeded through ``numpy.random.SeedSequence(seed)``. That pairing is part of
the public contract: a given (spec, seed) yields the same bytes on every
platform and numpy version that keeps PCG64's stream stable.

* Bernoulli draws one ``Generator.random()`` double per voxel in x-fastest
  order and marks the voxel when the draw is ``< p``.
* Channels takes the first ``k`` entries of ``Generator.permutation(cross)``,
  where columns are numbered in x-fastest order over the two remaining axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mstruct.errors import BadSpec, NotBinary
from mstruct.voxcore import Axis, Kind, VoxelVolume

RNG_NAME = "numpy.PCG64/SeedSequence"
VARIANTS = ("bernoulli", "laminate", "channels", "sphere", "halfsplit")


@dataclass(frozen=True)
class FixtureSpec:
    """One fixture description; only the fields of ``variant`` are read."""

    variant: str
    dims: tuple[int, int, int]
    p: float = 0.5
    axis: Axis = Axis.Z
    slab_thickness: int = 1
    fraction: float = 0.25
    center: tuple[float, float, float] | None = None
    radius: float = 1.0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise BadSpec(f"unknown fixture variant {self.variant!r}")
        if len(self.dims) != 3 or any(int(n) < 1 for n in self.dims):
            raise BadSpec(f"dims must be three positive integers, got {self.dims}")
        if self.variant == "bernoulli" and not 0.0 <= self.p <= 1.0:
            raise BadSpec(f"p must lie in [0, 1], got {self.p}")
        if self.variant == "laminate" and self.slab_thickness < 1:
            raise BadSpec("slab_thickness must be >= 1")
        if self.variant == "channels" and not 0.0 <= self.fraction <= 1.0:
            raise BadSpec(f"fraction must lie in [0, 1], got {self.fraction}")
        if self.variant == "sphere" and not self.radius >= 0:
            raise BadSpec("radius must be >= 0")


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2**64:
        raise BadSpec(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _coords(dims):
    return np.meshgrid(*(np.arange(n) for n in dims), indexing="ij")


def generate(spec: FixtureSpec, seed: int = 0) -> VoxelVolume:
    spec.validate()
    dims = tuple(int(n) for n in spec.dims)
    axis = Axis.parse(spec.axis)
    rng = make_rng(seed)
    nx, ny, nz = dims

    if spec.variant == "bernoulli":
        draws = rng.random(nx * ny * nz)
        arr = (draws < spec.p).reshape(dims, order="F")
    elif spec.variant == "laminate":
        k = np.arange(dims[axis])
        layer = (k // spec.slab_thickness) % 2
        shape = [1, 1, 1]
        shape[axis] = dims[axis]
        arr = np.broadcast_to(layer.reshape(shape), dims)
    elif spec.variant == "channels":
        others = [a for a in range(3) if a != axis]
        cross = dims[others[0]] * dims[others[1]]
        n_cols = math.floor(spec.fraction * cross + 0.5)
        chosen = rng.permutation(cross)[:n_cols]
        mask2d = np.zeros(cross, dtype=bool)
        mask2d[chosen] = True
        mask2d = mask2d.reshape((dims[others[0]], dims[others[1]]), order="F")
        arr = np.expand_dims(mask2d, axis=int(axis))
        arr = np.broadcast_to(arr, dims)
    elif spec.variant == "sphere":
        center = spec.center if spec.center is not None else tuple((n - 1) / 2 for n in dims)
        x, y, z = _coords(dims)
        d2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
        arr = d2 <= spec.radius ** 2
    else:  # halfsplit
        k = np.arange(dims[axis])
        shape = [1, 1, 1]
        shape[axis] = dims[axis]
        arr = np.broadcast_to((k < dims[axis] // 2).reshape(shape), dims)

    return VoxelVolume(np.ascontiguousarray(arr, dtype=np.uint8), Kind.PHASE, 2)


def complement(vol: VoxelVolume) -> VoxelVolume:
    if vol.kind is not Kind.PHASE or vol.n_phases != 2:
        raise NotBinary("complement needs a two-phase volume")
    return VoxelVolume(1 - vol.array, Kind.PHASE, 2, vol.voxel_size)
