"""Cross-attribute integration: unified scores and online weight learning.

Per cycle, each attribute's priority vector is blended with a learned
weight.  Weights follow an exponential update driven by an estimated
inference loss: a normal distribution is fitted to the absolute residuals
between collected values and held-out predictions, and its upper quantile
is the loss.  Lower loss means the attribute's weight grows relative to
the others.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .priority import PriorityScores

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttributeWeights:
    """Normalized per-attribute weights (sum to 1, all positive)."""

    w: np.ndarray
    cycle: int = 0
    eta: float = 0.5
    delta: float = 0.95

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("w must be a nonempty vector")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "w", w / w.sum())
        if not (self.eta >= 0):
            raise ValueError("eta must be >= 0")
        if not (0.5 < self.delta < 1.0):
            raise ValueError("delta must lie in (0.5, 1)")

    @classmethod
    def uniform(cls, n_attributes: int, eta: float = 0.5, delta: float = 0.95) -> "AttributeWeights":
        return cls(w=np.full(n_attributes, 1.0 / n_attributes), eta=eta, delta=delta)


@dataclass(frozen=True)
class UnifiedScores:
    cycle: int
    ups: np.ndarray


def unified_priority(per_attribute: list[PriorityScores], weights: AttributeWeights) -> UnifiedScores:
    """Weighted sum of the per-attribute priority vectors."""
    if len(per_attribute) != weights.w.size:
        raise ValueError("one priority vector per weight is required")
    lengths = {ps.ps.size for ps in per_attribute}
    if len(lengths) != 1:
        raise ValueError("priority vectors disagree in length")
    ups = np.zeros(per_attribute[0].ps.size)
    for w, ps in zip(weights.w, per_attribute):
        ups += w * ps.ps
    cycle = per_attribute[0].cycle
    return UnifiedScores(cycle=cycle, ups=ups)


def estimate_loss(
    is_row: np.ndarray,
    cs_row: np.ndarray,
    cs_present: np.ndarray,
    delta: float,
    prev_loss: float = 0.0,
) -> float:
    """Upper-quantile estimate of the inference error for one attribute.

    Fits a normal to the absolute residuals |cs - is| at collected cells
    and returns its delta-quantile mu + sigma * z_delta, clamped at 0.
    With a single residual sigma is 0; with no collected cells the
    previous cycle's loss is carried forward.
    """
    cells = np.flatnonzero(np.asarray(cs_present, dtype=bool))
    if cells.size == 0:
        return prev_loss
    residuals = np.abs(np.asarray(cs_row, dtype=float)[cells] - np.asarray(is_row, dtype=float)[cells])
    mu = float(residuals.mean())
    sigma = float(residuals.std(ddof=1)) if residuals.size >= 2 else 0.0
    return max(0.0, mu + sigma * float(norm.ppf(delta)))


def update_weights(weights: AttributeWeights, losses: np.ndarray, eta: float | None = None) -> AttributeWeights:
    """Exponential update w' = w * exp(-eta * loss), renormalized to sum 1."""
    losses = np.asarray(losses, dtype=float)
    if losses.shape != weights.w.shape:
        raise ValueError("one loss per attribute is required")
    if not np.all(np.isfinite(losses)) or np.any(losses < 0):
        raise ValueError("losses must be finite and >= 0")
    if eta is None:
        eta = weights.eta
    scaled = weights.w * np.exp(-eta * losses)
    total = scaled.sum()
    if total <= 0.0 or not np.isfinite(total):
        logger.warning("attribute weights underflowed; resetting to uniform")
        scaled = np.full_like(weights.w, 1.0 / weights.w.size)
        total = 1.0
    return AttributeWeights(w=scaled / total, cycle=weights.cycle + 1, eta=weights.eta, delta=weights.delta)


@dataclass
class LossNormalizer:
    """Per-attribute rescaling of raw quantile losses by a running scale.

    Attributes carry different physical units, so each raw loss is divided
    by the largest loss seen so far for that attribute.  The result lives
    in [0, 1], making the learning rate unit-independent while preserving
    which attribute currently incurs relatively more error.
    """

    hi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if self.hi is None:
            self.hi = raw.copy()
        else:
            self.hi = np.maximum(self.hi, raw)
        out = np.zeros_like(raw)
        ok = self.hi > 0
        out[ok] = raw[ok] / self.hi[ok]
        return out

    def copy(self) -> "LossNormalizer":
        dup = LossNormalizer()
        if self.hi is not None:
            dup.hi = self.hi.copy()
        return dup
