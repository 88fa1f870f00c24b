"""GLCM texture features and the directional anisotropy index."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from mstruct.errors import BadSpec, NonFinite, NotNormalized, NoValidPairs
from mstruct.voxcore import Axis, Kind, SliceImage, VoxelVolume

ANISOTROPY_LOG10_THRESHOLD = 2.0

# (row, col) step per unit distance; rows grow downwards
_ANGLE_STEPS = {0: (0, 1), 45: (1, 1), 90: (1, 0), 135: (1, -1)}


class Verdict(enum.Enum):
    ISOTROPY = "Isotropy"
    ANISOTROPY = "Anisotropy"


@dataclass(frozen=True)
class GlcmParams:
    """``levels=None`` picks 256 for phase volumes and 32 for gray ones."""

    levels: int | None = None
    distance: int = 1
    angles: tuple[int, ...] = (0, 45, 90, 135)
    symmetric: bool = True
    normalized: bool = True

    def __post_init__(self):
        if self.levels is not None and not 2 <= self.levels <= 256:
            raise BadSpec(f"levels must be in 2..256, got {self.levels}")
        if self.distance < 1:
            raise BadSpec("distance must be >= 1")
        if not self.angles:
            raise BadSpec("at least one angle is required")
        bad = [a for a in self.angles if a not in _ANGLE_STEPS]
        if bad:
            raise BadSpec(f"angles must be drawn from 0/45/90/135, got {bad}")
        object.__setattr__(self, "angles", tuple(int(a) for a in self.angles))

    def resolved(self, kind: Kind = Kind.GRAY) -> "GlcmParams":
        if self.levels is not None:
            return self
        levels = 256 if kind is Kind.PHASE else 32
        return GlcmParams(levels, self.distance, self.angles, self.symmetric, self.normalized)

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "distance": self.distance,
            "angles": list(self.angles),
            "symmetric": self.symmetric,
            "normalized": self.normalized,
        }


@dataclass(frozen=True, eq=False)
class Glcm:
    matrix: np.ndarray
    params: GlcmParams


@dataclass(frozen=True)
class FeatureStats:
    contrast: float
    homogeneity: float
    energy: float
    entropy: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.contrast, self.homogeneity, self.energy, self.entropy)

    def to_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, (float(v) for v in self.as_tuple())))


FEATURE_NAMES = ("contrast", "homogeneity", "energy", "entropy")


@dataclass(frozen=True)
class AnisotropyReport:
    per_axis: dict[Axis, FeatureStats]
    sigmas: tuple[float, float, float, float]
    ai: float
    log10_ai: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "per_axis": {a.name: s.to_dict() for a, s in self.per_axis.items()},
            "sigmas": dict(zip(FEATURE_NAMES, self.sigmas)),
            "ai": self.ai,
            "log10_ai": self.log10_ai,
            "verdict": self.verdict.value,
        }


def quantize(gray: np.ndarray, levels: int) -> np.ndarray:
    return (gray.astype(np.int64) * levels) // 256


def _offset(angle: int, distance: int) -> tuple[int, int]:
    dr, dc = _ANGLE_STEPS[angle]
    return dr * distance, dc * distance


def _pair_codes(q: np.ndarray, levels: int, dr: int, dc: int) -> np.ndarray:
    """Codes ``i * levels + j`` for every in-bounds pair along the last two axes."""
    h, w = q.shape[-2:]
    r0, r1 = max(0, -dr), h - max(0, dr)
    c0, c1 = max(0, -dc), w - max(0, dc)
    if r1 <= r0 or c1 <= c0:
        return None
    ref = q[..., r0:r1, c0:c1]
    nbr = q[..., r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return ref * levels + nbr


def _counts(stack: np.ndarray, levels: int, angle: int, distance: int, symmetric: bool) -> np.ndarray:
    """Integer co-occurrence counts, shape (n_images, levels, levels)."""
    n = stack.shape[0]
    codes = _pair_codes(stack, levels, *_offset(angle, distance))
    if codes is None:
        raise NoValidPairs(f"no pixel pairs at angle {angle} and distance {distance}")
    codes = codes.reshape(n, -1) + (np.arange(n, dtype=np.int64) * levels * levels)[:, None]
    counts = np.bincount(codes.ravel(), minlength=n * levels * levels)
    counts = counts.reshape(n, levels, levels)
    if symmetric:
        counts = counts + counts.transpose(0, 2, 1)
    return counts


def _as_gray(image) -> np.ndarray:
    px = image.pixels if isinstance(image, SliceImage) else np.asarray(image)
    return px


def glcm(image, params: GlcmParams = GlcmParams()) -> Glcm:
    """Co-occurrence matrix of one image, counts pooled over ``params.angles``."""
    params = params.resolved(Kind.GRAY)
    q = quantize(_as_gray(image), params.levels)[None]
    total = np.zeros((params.levels, params.levels), dtype=np.int64)
    for angle in params.angles:
        total += _counts(q, params.levels, angle, params.distance, params.symmetric)[0]
    if params.normalized:
        return Glcm(total / total.sum(), params)
    return Glcm(total, params)


def _features_batch(p: np.ndarray, level_values=None) -> np.ndarray:
    """Rows of (contrast, homogeneity, energy, entropy) for normalised matrices.

    ``level_values`` gives the gray level of each row/column when the matrix
    has been compacted to the occupied levels only.
    """
    levels = p.shape[-1]
    lv = np.arange(levels) if level_values is None else np.asarray(level_values)
    d2 = (lv[:, None] - lv[None, :]) ** 2
    contrast = (p * d2).sum(axis=(-2, -1))
    homogeneity = (p / (1.0 + d2)).sum(axis=(-2, -1))
    energy = (p * p).sum(axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    entropy = -plogp.sum(axis=(-2, -1))
    return np.stack([contrast, homogeneity, energy, entropy], axis=-1)


def glcm_features(g: Glcm) -> FeatureStats:
    p = np.asarray(g.matrix, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9 or (p < 0).any():
        raise NotNormalized("features need a normalised GLCM")
    return FeatureStats(*(float(v) for v in _features_batch(p)))


def _axis_stack(gray: np.ndarray, axis: Axis) -> np.ndarray:
    # same orientation as voxcore.slice_pixels, one image per layer
    return np.moveaxis(gray, int(axis), 0).transpose(0, 2, 1)


def directional_features(vol: VoxelVolume, axis, params: GlcmParams = GlcmParams()) -> FeatureStats:
    """Mean GLCM features over every slice normal to ``axis``.

    Each slice gets one normalised GLCM per angle; features are averaged over
    angles first, then over slices.
    """
    axis = Axis.parse(axis)
    params = params.resolved(vol.kind)
    stack = quantize(_axis_stack(vol.gray(), axis), params.levels)
    # unoccupied levels contribute nothing, so work on the occupied ones only
    values, compact = np.unique(stack, return_inverse=True)
    compact = compact.reshape(stack.shape)
    per_angle = []
    for angle in params.angles:
        counts = _counts(compact, values.size, angle, params.distance, params.symmetric)
        p = counts / counts.sum(axis=(1, 2), keepdims=True)
        per_angle.append(_features_batch(p, values))
    per_slice = np.mean(per_angle, axis=0)
    return FeatureStats(*(float(v) for v in per_slice.mean(axis=0)))


def sample_std(table: np.ndarray) -> np.ndarray:
    """Column-wise standard deviation with the N-1 divisor.

    Uses sum_{i<j} (x_i - x_j)^2 / (N (N-1)), which equals the usual sample
    variance but is exactly zero for identical rows and symmetric in row order.
    """
    n = table.shape[0]
    diffs = table[:, None, :] - table[None, :, :]
    iu = np.triu_indices(n, k=1)
    return np.sqrt((diffs[iu] ** 2).sum(axis=0) / (n * (n - 1)))


def anisotropy_index(x: FeatureStats, y: FeatureStats, z: FeatureStats) -> AnisotropyReport:
    """Root-sum-square of the per-feature sample standard deviations over X, Y, Z."""
    table = np.array([x.as_tuple(), y.as_tuple(), z.as_tuple()], dtype=float)
    if not np.isfinite(table).all():
        raise NonFinite("feature statistics must be finite")
    sigmas = sample_std(table)
    ai = float(math.sqrt(float((sigmas**2).sum())))
    log10_ai = math.log10(ai) if ai > 0 else -math.inf
    verdict = Verdict.ANISOTROPY if log10_ai > ANISOTROPY_LOG10_THRESHOLD else Verdict.ISOTROPY
    return AnisotropyReport(
        {Axis.X: x, Axis.Y: y, Axis.Z: z},
        tuple(float(s) for s in sigmas),
        ai,
        log10_ai,
        verdict,
    )


def classify_volume(vol: VoxelVolume, params: GlcmParams = GlcmParams()) -> AnisotropyReport:
    stats = [directional_features(vol, a, params) for a in Axis]
    return anisotropy_index(*stats)
