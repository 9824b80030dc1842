"""Per-attribute cell priorities from inferred-value history.

Two signals per cell: temporal entropy (uncertainty of the cell's own
series, Gaussian differential entropy of the recent window) and spatial
mutual information (how much the cell's series tells about every other
cell's, Gaussian MI summed over pairs).  Their weighted blend is the
priority score used by the allocators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAUSS_ENTROPY_CONST = 0.5 * np.log(2.0 * np.pi * np.e)
RHO_SQ_CAP = 1.0 - 1e-9


def temporal_entropy(series: np.ndarray, window: int | None = None, sigma_floor: float = 1e-6) -> float:
    """Differential entropy 0.5*ln(2*pi*e*sigma^2) of the series tail.

    ``sigma`` is the sample standard deviation (ddof=1) of the last
    ``window`` values, floored at ``sigma_floor``; a length-1 series uses
    the floor outright.
    """
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("temporal_entropy needs a nonempty series")
    if window is not None:
        series = series[-window:]
    sigma = sigma_floor if series.size < 2 else max(float(series.std(ddof=1)), sigma_floor)
    return float(GAUSS_ENTROPY_CONST + np.log(sigma))


def gaussian_mi(rho: float) -> float:
    """Mutual information -0.5*ln(1-rho^2) of a bivariate normal, capped."""
    rho_sq = min(rho * rho, RHO_SQ_CAP)
    return float(-0.5 * np.log1p(-rho_sq))


def spatial_mutual_information(series_x: np.ndarray, others: list[np.ndarray]) -> float:
    """Sum of pairwise Gaussian MI between the target series and each other.

    Pairs involving a zero-variance series contribute 0.
    """
    series_x = np.asarray(series_x, dtype=float)
    total = 0.0
    for other in others:
        other = np.asarray(other, dtype=float)
        if other.shape != series_x.shape:
            raise ValueError("all series must share the same length")
        if series_x.size < 2:
            continue
        sx, so = series_x.std(), other.std()
        if sx == 0.0 or so == 0.0:
            continue
        rho = float(np.corrcoef(series_x, other)[0, 1])
        total += gaussian_mi(rho)
    return total


@dataclass(frozen=True)
class PriorityScores:
    """One attribute's per-cell scores at one cycle; ps = a_te*te + a_smi*smi."""

    attribute: int
    cycle: int
    te: np.ndarray
    smi: np.ndarray
    ps: np.ndarray
    alpha_te: float
    alpha_smi: float


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _pairwise_mi_sums(history: np.ndarray) -> np.ndarray:
    """Row sums of the pairwise Gaussian MI matrix of the history rows."""
    n_cells, length = history.shape
    if length < 2:
        return np.zeros(n_cells)
    sd = history.std(axis=1)
    live = sd > 0.0
    mi_sum = np.zeros(n_cells)
    if live.sum() >= 2:
        corr = np.corrcoef(history[live])
        rho_sq = np.clip(corr**2, None, RHO_SQ_CAP)
        mi = -0.5 * np.log1p(-rho_sq)
        np.fill_diagonal(mi, 0.0)
        mi_sum[live] = mi.sum(axis=1)
    return mi_sum


def compute_priorities(
    history: np.ndarray,
    attribute: int,
    cycle: int,
    alpha_te: float = 0.5,
    alpha_smi: float = 0.5,
    window: int | None = None,
    sigma_floor: float = 1e-6,
    normalize: bool = True,
) -> PriorityScores:
    """Blend per-cell temporal entropy and spatial MI into priority scores.

    ``history`` is the (X, n) matrix of inferred values for one attribute
    over the cycles before ``cycle``.  By default both signals are min-max
    normalized across cells before blending (their raw scales are not
    comparable); pass ``normalize=False`` for the raw blend.
    """
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[1] < 1:
        raise ValueError("history must be (X, n) with n >= 1")
    if alpha_te < 0 or alpha_smi < 0:
        raise ValueError("blend weights must be >= 0")
    tail = history if window is None else history[:, -window:]
    if tail.shape[1] < 2:
        te = np.full(history.shape[0], GAUSS_ENTROPY_CONST + np.log(sigma_floor))
    else:
        sigma = np.maximum(tail.std(axis=1, ddof=1), sigma_floor)
        te = GAUSS_ENTROPY_CONST + np.log(sigma)
    smi = _pairwise_mi_sums(history)  # the window applies to entropy only
    if normalize:
        te, smi = _minmax(te), _minmax(smi)
    ps = alpha_te * te + alpha_smi * smi
    return PriorityScores(
        attribute=attribute, cycle=cycle, te=te, smi=smi, ps=ps,
        alpha_te=alpha_te, alpha_smi=alpha_smi,
    )
