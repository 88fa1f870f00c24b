"""Evaluators for the GAN loss terms: KL/JS divergences, (W)GAN objectives,
L1/L2 pixel losses, the weighted total loss and critic weight clipping.

KL and JS use base-2 logarithms so JS lies in [0, 1]; the GAN objective
uses natural logarithms. Expectations are plain batch means.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from mstruct.errors import (
    DomainViolation,
    EmptyBatch,
    NegativeClip,
    NonFinite,
    NotDistribution,
    ShapeMismatch,
    SizeMismatch,
)


class WganConvention(enum.Enum):
    STANDARD = "standard"
    LITERAL = "literal"


@dataclass(frozen=True)
class LossWeights:
    lambda_w: float
    lambda_r: float


def as_distribution(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise NotDistribution("distribution must be a non-empty 1D array")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise NotDistribution("probabilities must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise NotDistribution(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def _pair(p, q):
    p, q = as_distribution(p), as_distribution(q)
    if p.size != q.size:
        raise SizeMismatch(f"support sizes differ: {p.size} vs {q.size}")
    return p, q


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if (q[mask] == 0).any():
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def kl_divergence(p, q) -> float:
    """KL(P || Q) in bits; ``inf`` when P puts mass where Q has none."""
    return _kl(*_pair(p, q))


def js_divergence(p, q) -> float:
    p, q = _pair(p, q)
    m = 0.5 * (p + q)
    return 0.5 * _kl(p, m) + 0.5 * _kl(q, m)


def _batch(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyBatch("score batch is empty")
    if not np.isfinite(arr).all():
        raise NonFinite("scores must be finite")
    return arr


def gan_objective(real_d, fake_d) -> float:
    """mean(ln D(x)) + mean(ln(1 - D(G(z)))) over the two critic batches."""
    real, fake = _batch(real_d), _batch(fake_d)
    if ((real <= 0) | (real > 1)).any():
        raise DomainViolation("real scores must lie in (0, 1]")
    if ((fake < 0) | (fake >= 1)).any():
        raise DomainViolation("fake scores must lie in [0, 1)")
    return float(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))


def wgan_objective(real_d, fake_d, convention=WganConvention.STANDARD) -> float:
    """Critic objective. ``LITERAL`` adds the fake mean instead of subtracting it."""
    real, fake = _batch(real_d), _batch(fake_d)
    if WganConvention(convention) is WganConvention.LITERAL:
        return float(np.mean(real) + np.mean(fake))
    return float(np.mean(real) - np.mean(fake))


def _arrays(y, g):
    y, g = np.asarray(y, dtype=float), np.asarray(g, dtype=float)
    if y.shape != g.shape:
        raise ShapeMismatch(f"shapes differ: {y.shape} vs {g.shape}")
    return y, g


def l1_loss(y, g) -> float:
    y, g = _arrays(y, g)
    return float(np.sum(np.abs(y - g)))


def l2_loss(y, g) -> float:
    y, g = _arrays(y, g)
    return float(np.sum((y - g) ** 2))


def total_loss(wasserstein_value: float, regularization_value: float, weights: LossWeights) -> float:
    vals = (wasserstein_value, regularization_value, weights.lambda_w, weights.lambda_r)
    if not all(math.isfinite(v) for v in vals):
        raise NonFinite("loss terms and weights must be finite")
    return weights.lambda_w * wasserstein_value + weights.lambda_r * regularization_value


def weight_clip(values, c: float) -> np.ndarray:
    if c < 0:
        raise NegativeClip(f"clip constant must be >= 0, got {c}")
    # + 0.0 folds -0.0 into 0.0
    return np.clip(np.asarray(values, dtype=float), -c, c) + 0.0
