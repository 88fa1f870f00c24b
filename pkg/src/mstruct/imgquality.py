"""MSE, PSNR, windowed SSIM, and slice-averaged volume comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mstruct.errors import BadSpec, DimMismatch, ImageSmallerThanWindow, KindMismatch
from mstruct.voxcore import Axis, SliceImage, VoxelVolume, iter_slices


@dataclass(frozen=True)
class SsimParams:
    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise BadSpec(f"SSIM window must be odd and >= 3, got {self.window}")
        if not (0 < self.k1 < 1 and 0 < self.k2 < 1):
            raise BadSpec("k1 and k2 must lie in (0, 1)")
        if not self.dynamic_range > 0:
            raise BadSpec("dynamic_range must be positive")

    def to_dict(self) -> dict:
        return {"window": self.window, "k1": self.k1, "k2": self.k2, "dynamic_range": self.dynamic_range}


@dataclass(frozen=True)
class QualityReport:
    per_axis: dict[Axis, tuple[float, float]]
    overall: tuple[float, float]
    n_slices: dict[Axis, int]

    def rows(self):
        """(axis, n_slices, mean_ssim, mean_psnr) rows, X/Y/Z then overall."""
        out = [(a.name, self.n_slices[a], *self.per_axis[a]) for a in Axis]
        out.append(("overall", sum(self.n_slices.values()), *self.overall))
        return out

    def to_dict(self) -> dict:
        return {
            "per_axis": {
                a.name: {"n_slices": self.n_slices[a], "ssim": s, "psnr": p}
                for a, (s, p) in self.per_axis.items()
            },
            "overall": {"ssim": self.overall[0], "psnr": self.overall[1]},
        }


def _pixels(img) -> np.ndarray:
    px = img.pixels if isinstance(img, SliceImage) else np.asarray(img)
    return px.astype(np.float64)


def _pair(a, b):
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape != pb.shape:
        raise DimMismatch(f"image shapes differ: {pa.shape} vs {pb.shape}")
    return pa, pb


def mse(a, b) -> float:
    pa, pb = _pair(a, b)
    return float(np.mean((pa - pb) ** 2))


def psnr_from_mse(err: float, max_i: float = 255.0) -> float:
    if err == 0:
        return math.inf
    return 10.0 * math.log10(max_i**2 / err)


def psnr(a, b, max_i: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    if not max_i > 0:
        raise BadSpec("max_i must be positive")
    return psnr_from_mse(mse(a, b), max_i)


def _box_means(x: np.ndarray, w: int) -> np.ndarray:
    """Mean over every w*w window fully inside the image (stride 1)."""
    c = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    c[1:, 1:] = x.cumsum(0).cumsum(1)
    s = c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]
    return s / (w * w)


def ssim(a, b, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over all uniform ``window``-sized windows, population moments."""
    pa, pb = _pair(a, b)
    w = params.window
    if min(pa.shape) < w:
        raise ImageSmallerThanWindow(f"image {pa.shape[::-1]} smaller than window {w}")
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    mu_a = _box_means(pa, w)
    mu_b = _box_means(pb, w)
    var_a = _box_means(pa * pa, w) - mu_a**2
    var_b = _box_means(pb * pb, w) - mu_b**2
    cov = _box_means(pa * pb, w) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def volume_quality(reference: VoxelVolume, generated: VoxelVolume, params: SsimParams = SsimParams()) -> QualityReport:
    """Compare matching slices (same axis, same layer index) of two volumes.

    Phase volumes are mapped to gray first. Per-axis and overall values are
    plain means over slices; any infinite PSNR makes its mean infinite.
    """
    if reference.dims != generated.dims:
        raise DimMismatch(f"volume dims differ: {reference.dims} vs {generated.dims}")
    if reference.kind is not generated.kind:
        raise KindMismatch("reference and generated volumes differ in kind")
    ref, gen = reference.gray(), generated.gray()
    per_axis, n_slices = {}, {}
    all_ssim, all_psnr = [], []
    for axis in Axis:
        s_vals, p_vals = [], []
        for sa, sb in zip(iter_slices(ref, axis), iter_slices(gen, axis)):
            s_vals.append(ssim(sa, sb, params))
            p_vals.append(psnr(sa, sb, params.dynamic_range))
        per_axis[axis] = (_mean(s_vals), _mean(p_vals))
        n_slices[axis] = len(s_vals)
        all_ssim += s_vals
        all_psnr += p_vals
    return QualityReport(per_axis, (_mean(all_ssim), _mean(all_psnr)), n_slices)


def _mean(values) -> float:
    if any(math.isinf(v) and v > 0 for v in values):
        return math.inf
    return math.fsum(values) / len(values)
