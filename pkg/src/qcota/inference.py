"""Spatial inference of uncollected cells from one cycle's collected values.

All three strategies are per-cycle and purely spatial: the estimate at a
target cell is a function of the values collected elsewhere in the same
cycle and of cell coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GridGeometry, MeasurementStore
from .svr import SvrParams, fit_svr

INFERENCE_KINDS = ("KNN", "IDW", "SVR")


@dataclass(frozen=True)
class InferenceStrategy:
    """Which estimator to use and its knobs; k/n clamp to the data on use."""

    kind: str = "KNN"
    k: int = 3
    n: int = 3
    svr: SvrParams = field(default_factory=SvrParams)

    def __post_init__(self):
        if self.kind not in INFERENCE_KINDS:
            raise ValueError(f"unknown inference kind {self.kind!r}")
        if self.k < 1 or self.n < 1:
            raise ValueError("neighbor counts must be >= 1")


def knn_estimate(
    collected: list[tuple[int, float]], geom: GridGeometry, k: int, target: int
) -> float:
    """Unweighted mean of the k nearest collected values (k clamped)."""
    if not collected:
        raise ValueError("knn_estimate needs at least one collected cell")
    cells = np.array([c for c, _ in collected])
    values = np.array([v for _, v in collected])
    d = geom.distances[geom.check_cell(target), cells]
    order = np.argsort(d, kind="stable")[: min(k, len(collected))]
    return float(values[order].mean())


def idw_estimate(
    collected: list[tuple[int, float]], geom: GridGeometry, n: int, target: int
) -> float:
    """Inverse-distance weighted mean of the n nearest collected values.

    Weights are 1/d with exponent one; a zero distance short-circuits to
    that cell's value.
    """
    if not collected:
        raise ValueError("idw_estimate needs at least one collected cell")
    cells = np.array([c for c, _ in collected])
    values = np.array([v for _, v in collected])
    d = geom.distances[geom.check_cell(target), cells]
    order = np.argsort(d, kind="stable")[: min(n, len(collected))]
    d, values = d[order], values[order]
    if d[0] == 0.0:
        return float(values[0])
    w = 1.0 / d
    return float((w * values).sum() / w.sum())


def svr_estimate(
    collected: list[tuple[int, float]],
    geom: GridGeometry,
    params: SvrParams,
    target: int,
) -> float:
    """RBF epsilon-SVR on (coordinates -> value), evaluated at the target.

    Falls back to the plain mean when fewer than 2 cells were collected.
    """
    if not collected:
        raise ValueError("svr_estimate needs at least one collected cell")
    values = np.array([v for _, v in collected])
    if len(collected) < 2:
        return float(values.mean())
    cells = [c for c, _ in collected]
    model = fit_svr(geom.coords[cells], values, params)
    return float(model.predict(geom.coords[geom.check_cell(target)][None, :])[0])


def _estimate(
    strategy: InferenceStrategy,
    collected: list[tuple[int, float]],
    geom: GridGeometry,
    target: int,
) -> float:
    if strategy.kind == "KNN":
        return knn_estimate(collected, geom, strategy.k, target)
    if strategy.kind == "IDW":
        return idw_estimate(collected, geom, strategy.n, target)
    return svr_estimate(collected, geom, strategy.svr, target)


def infer_cycle(
    strategy: InferenceStrategy,
    store: MeasurementStore,
    geom: GridGeometry,
    cycle: int,
    attribute: int,
) -> np.ndarray:
    """Fill and return the inferred row for (attribute, cycle).

    Collected cells keep their collected values; the rest come from the
    strategy.  With nothing collected the previous cycle's row is carried
    forward (the bootstrap guarantees cycle 0 always collects).
    """
    collected_cells = store.collected_cells(attribute, cycle)
    row = np.empty(store.n_cells)
    if collected_cells.size == 0:
        if cycle == 0:
            raise ValueError("cycle 0 has no collected cells and no history")
        row[:] = store.inferred[attribute, :, cycle - 1]
    else:
        collected = [(int(x), float(store.cs[attribute, x, cycle])) for x in collected_cells]
        mask = np.zeros(store.n_cells, dtype=bool)
        mask[collected_cells] = True
        row[mask] = store.cs[attribute, collected_cells, cycle]
        for x in np.flatnonzero(~mask):
            row[x] = _estimate(strategy, collected, geom, int(x))
    store.inferred[attribute, :, cycle] = row
    store.inferred_upto = max(store.inferred_upto, cycle + 1)
    return row


def holdout_row(
    strategy: InferenceStrategy,
    store: MeasurementStore,
    geom: GridGeometry,
    cycle: int,
    attribute: int,
) -> np.ndarray:
    """Leave-one-out predictions at the collected cells of (attribute, cycle).

    Each collected cell is re-estimated from the *other* collected cells;
    with a single collected cell (or none) the previous cycle's inferred
    value stands in.  Uncollected cells carry the stored inferred row.
    This row feeds the loss estimate: comparing it against the collected
    values yields a nonzero residual sample.
    """
    row = store.inferred[attribute, :, cycle].copy()
    collected_cells = store.collected_cells(attribute, cycle)
    collected = [(int(x), float(store.cs[attribute, x, cycle])) for x in collected_cells]
    for x in collected_cells:
        others = [(c, v) for c, v in collected if c != x]
        if others:
            row[x] = _estimate(strategy, others, geom, int(x))
        elif cycle > 0:
            row[x] = store.inferred[attribute, x, cycle - 1]
        # cycle 0 with a single collected cell: keep the stored value
    return row
