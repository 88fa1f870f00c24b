"""Statistical microstructure descriptors.

Lag-based descriptors are evaluated exhaustively along the three lattice axes.
For a lag ``r`` along axis ``a`` every origin voxel ``x`` is paired with
``x + r * e_a``; with periodic boundaries the partner index wraps and every
voxel is an origin, with truncated boundaries only origins whose partner
stays inside the volume count. Values are integer hit counts divided by the
number of origins, and both are kept on the returned profile.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _graph_components

from mstruct.errors import BadPhase, EmptyPhase, LagTooLarge, MixedShapes, WindowTooLarge
from mstruct.voxcore import Axis, BoundaryMode, VoxelVolume, require_phase

AXIS_AVERAGE = "avg"


class Connectivity(enum.Enum):
    FACE6 = "face6"
    FULL26 = "full26"

    @property
    def structure(self) -> np.ndarray:
        rank = 1 if self is Connectivity.FACE6 else 3
        return ndimage.generate_binary_structure(3, rank)


class ClusterVariant(enum.Enum):
    LITERAL_S8 = "literal"
    SAME_CLUSTER = "same_cluster"


@dataclass(frozen=True, eq=False)
class RadialProfile:
    phase: int
    direction: Axis | str
    values: np.ndarray
    boundary: BoundaryMode
    n_samples: np.ndarray
    hits: np.ndarray | None = field(default=None)

    @property
    def r_max(self) -> int:
        return len(self.values) - 1

    @property
    def direction_name(self) -> str:
        return self.direction if isinstance(self.direction, str) else self.direction.name.lower()

    def rows(self):
        """(r, value, n_samples) tuples, one per lag."""
        return [(r, float(v), int(n)) for r, (v, n) in enumerate(zip(self.values, self.n_samples))]

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "direction": self.direction_name,
            "boundary": self.boundary.value,
            "r_max": self.r_max,
            "values": [float(v) for v in self.values],
            "n_samples": [int(n) for n in self.n_samples],
        }


@dataclass(frozen=True)
class PorosityCdf:
    phase: int
    window: int
    stride: int
    points: list[tuple[float, float]]
    n_windows: int

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "window": self.window,
            "stride": self.stride,
            "n_windows": self.n_windows,
            "points": [list(p) for p in self.points],
        }


def _check_phase(vol: VoxelVolume, phase: int) -> None:
    require_phase(vol)
    if not 0 <= phase < vol.n_phases:
        raise BadPhase(f"phase {phase} not in 0..{vol.n_phases - 1}")


def _directions(direction):
    if isinstance(direction, str) and direction.lower() in (AXIS_AVERAGE, "average"):
        return None
    return Axis.parse(direction)


def _check_lag(n: int, r_max: int, boundary: BoundaryMode) -> None:
    if r_max < 0:
        raise LagTooLarge("r_max must be >= 0")
    if boundary is BoundaryMode.TRUNCATED and r_max >= n:
        raise LagTooLarge(f"r_max={r_max} needs r_max < {n} with truncated boundaries")
    if boundary is BoundaryMode.PERIODIC and r_max > n:
        raise LagTooLarge(f"r_max={r_max} exceeds axis length {n}")


def _span(axis: int, start: int, stop: int):
    sl = [slice(None)] * 3
    sl[axis] = slice(start, stop)
    return tuple(sl)


def _pair_segments(arr: np.ndarray, axis: int, r: int, periodic: bool):
    """Views (origin, partner) that together cover every valid origin once."""
    n = arr.shape[axis]
    if not periodic:
        return [(arr[_span(axis, 0, n - r)], arr[_span(axis, r, n)])]
    r %= n
    segs = [(arr[_span(axis, 0, n - r)], arr[_span(axis, r, n)])]
    if r:
        segs.append((arr[_span(axis, n - r, n)], arr[_span(axis, 0, r)]))
    return segs


def _origin_count(shape, axis: int, r: int, periodic: bool) -> int:
    total = int(np.prod(shape))
    if periodic:
        return total
    return total // shape[axis] * (shape[axis] - r)


def _profile(vol, phase, direction, r_max, boundary, axis_counter) -> RadialProfile:
    boundary = BoundaryMode.parse(boundary)
    axis = _directions(direction)
    axes = list(Axis) if axis is None else [axis]
    for a in axes:
        _check_lag(vol.dims[a], r_max, boundary)
    periodic = boundary is BoundaryMode.PERIODIC
    profiles = []
    for a in axes:
        hits = np.asarray(axis_counter(int(a), periodic), dtype=np.int64)
        n_samples = np.array(
            [_origin_count(vol.dims, int(a), r, periodic) for r in range(r_max + 1)], dtype=np.int64
        )
        profiles.append(RadialProfile(phase, a, hits / n_samples, boundary, n_samples, hits))
    if axis is None:
        return average_profiles(profiles)
    return profiles[0]


def two_point_correlation(
    vol: VoxelVolume,
    phase: int = 1,
    direction=AXIS_AVERAGE,
    r_max: int | None = None,
    boundary=BoundaryMode.TRUNCATED,
) -> RadialProfile:
    """S2(r): probability that a voxel and its lag-r partner are both in ``phase``."""
    _check_phase(vol, phase)
    r_max = default_r_max(vol) if r_max is None else int(r_max)
    ind = vol.indicator(phase)

    def count(axis, periodic):
        return [
            sum(np.count_nonzero(a & b) for a, b in _pair_segments(ind, axis, r, periodic))
            for r in range(r_max + 1)
        ]

    return _profile(vol, phase, direction, r_max, boundary, count)


def lineal_path(
    vol: VoxelVolume,
    phase: int = 1,
    direction=AXIS_AVERAGE,
    r_max: int | None = None,
    boundary=BoundaryMode.TRUNCATED,
) -> RadialProfile:
    """L(r): probability that all r+1 voxels x, x+e, ..., x+r*e lie in ``phase``."""
    _check_phase(vol, phase)
    r_max = default_r_max(vol) if r_max is None else int(r_max)
    ind = vol.indicator(phase)

    def count(axis, periodic):
        n = ind.shape[axis]
        run = ind.copy()
        hits = [np.count_nonzero(run)]
        for r in range(1, r_max + 1):
            if periodic:
                run &= np.roll(ind, -r, axis=axis)
            else:
                run = run[_span(axis, 0, n - r)] & ind[_span(axis, r, n)]
            hits.append(np.count_nonzero(run))
        return hits

    return _profile(vol, phase, direction, r_max, boundary, count)


def two_point_cluster(
    vol: VoxelVolume,
    phase: int = 1,
    direction=AXIS_AVERAGE,
    r_max: int | None = None,
    boundary=BoundaryMode.TRUNCATED,
    variant=ClusterVariant.SAME_CLUSTER,
    connectivity=Connectivity.FACE6,
) -> RadialProfile:
    """C2(r).

    ``LITERAL_S8`` is S2(r) normalised by the squared phase fraction.
    ``SAME_CLUSTER`` counts lag-r pairs whose voxels sit in one connected
    component (components found with the same boundary mode).
    """
    _check_phase(vol, phase)
    variant = ClusterVariant(variant)
    boundary = BoundaryMode.parse(boundary)
    r_max = default_r_max(vol) if r_max is None else int(r_max)

    if variant is ClusterVariant.LITERAL_S8:
        s2 = two_point_correlation(vol, phase, direction, r_max, boundary)
        phi = np.count_nonzero(vol.indicator(phase)) / vol.n_voxels
        if phi == 0:
            raise EmptyPhase(f"phase {phase} is absent; C2 normalisation undefined")
        return RadialProfile(phase, s2.direction, s2.values / phi**2, boundary, s2.n_samples)

    labels, _ = connected_components(vol, phase, Connectivity(connectivity), boundary)

    def count(axis, periodic):
        hits = []
        for r in range(r_max + 1):
            h = 0
            for a, b in _pair_segments(labels, axis, r, periodic):
                h += np.count_nonzero((a == b) & (a > 0))
            hits.append(h)
        return hits

    return _profile(vol, phase, direction, r_max, boundary, count)


def connected_components(
    vol: VoxelVolume,
    phase: int = 1,
    connectivity=Connectivity.FACE6,
    boundary=BoundaryMode.TRUNCATED,
) -> tuple[np.ndarray, int]:
    """Label connected ``phase`` voxels.

    Returns an int32 ``[x, y, z]`` array with ids 1..count and 0 for voxels
    of other phases. Periodic boundaries glue opposite faces together.
    """
    _check_phase(vol, phase)
    connectivity = Connectivity(connectivity)
    boundary = BoundaryMode.parse(boundary)
    return label_mask(vol.indicator(phase), connectivity, boundary)


def label_mask(mask: np.ndarray, connectivity=Connectivity.FACE6, boundary=BoundaryMode.TRUNCATED):
    structure = Connectivity(connectivity).structure
    labels, count = ndimage.label(mask, structure=structure)
    labels = labels.astype(np.int32, copy=False)
    if BoundaryMode.parse(boundary) is BoundaryMode.TRUNCATED or count < 2:
        return labels, int(count)

    # glue labels that meet across the wrapped faces
    src, dst = [], []
    for off in np.argwhere(structure) - 1:
        if not off.any():
            continue
        shifted = np.roll(labels, shift=tuple(-off), axis=(0, 1, 2))
        touch = (labels > 0) & (shifted > 0) & (labels != shifted)
        src.append(labels[touch])
        dst.append(shifted[touch])
    src = np.concatenate(src)
    if src.size == 0:
        return labels, int(count)
    dst = np.concatenate(dst)
    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src - 1, dst - 1)), shape=(count, count))
    merged, root = _graph_components(graph, directed=False)
    lut = np.zeros(count + 1, dtype=np.int32)
    lut[1:] = root + 1
    return lut[labels], int(merged)


def average_profiles(profiles) -> RadialProfile:
    """Per-lag unweighted mean of profiles sharing phase, r_max and boundary."""
    profiles = list(profiles)
    if not profiles:
        raise MixedShapes("no profiles to average")
    first = profiles[0]
    for p in profiles[1:]:
        if (p.phase, p.r_max, p.boundary) != (first.phase, first.r_max, first.boundary):
            raise MixedShapes("profiles differ in phase, r_max or boundary")
    values = np.mean([p.values for p in profiles], axis=0)
    n_samples = np.sum([p.n_samples for p in profiles], axis=0)
    return RadialProfile(first.phase, AXIS_AVERAGE, values, first.boundary, n_samples)


def default_r_max(vol: VoxelVolume) -> int:
    return min(vol.dims) // 2


def default_window(vol: VoxelVolume) -> int:
    return max(1, min(vol.dims) // 4)


def local_porosity_cdf(
    vol: VoxelVolume, phase: int = 0, window: int | None = None, stride: int | None = None
) -> PorosityCdf:
    """CDF of ``phase`` fractions inside a cubic window swept over the volume.

    Window corners step by ``stride`` along each axis and the window must fit
    entirely inside the volume. Defaults: window = min_dim // 4, stride = window.
    """
    _check_phase(vol, phase)
    window = default_window(vol) if window is None else int(window)
    stride = window if stride is None else int(stride)
    if window < 1 or window > min(vol.dims):
        raise WindowTooLarge(f"window {window} does not fit in volume {vol.dims}")
    if stride < 1:
        raise WindowTooLarge("stride must be >= 1")

    ind = vol.indicator(phase).astype(np.int64)
    csum = np.zeros(tuple(n + 1 for n in ind.shape), dtype=np.int64)
    csum[1:, 1:, 1:] = ind.cumsum(0).cumsum(1).cumsum(2)
    starts = [np.arange(0, n - window + 1, stride) for n in ind.shape]
    i, j, k = np.meshgrid(*starts, indexing="ij")
    w = window
    counts = (
        csum[i + w, j + w, k + w]
        - csum[i, j + w, k + w] - csum[i + w, j, k + w] - csum[i + w, j + w, k]
        + csum[i, j, k + w] + csum[i, j + w, k] + csum[i + w, j, k]
        - csum[i, j, k]
    ).ravel()

    uniq, freq = np.unique(counts, return_counts=True)
    total = counts.size
    cum = np.cumsum(freq)
    points = [(int(c) / w**3, int(f) / total) for c, f in zip(uniq, cum)]
    return PorosityCdf(phase, window, stride, points, int(total))
