"""Domain model: sensing grid, measurement matrices, participants, travel cost.

Conventions used throughout the package:

* cells are integers ``0..X-1``, cycles are integers ``0..Y-1``, attributes
  are integers ``0..A-1``;
* coordinates are kilometres on a local planar projection;
* collection is noiseless: a collected value equals the ground truth at that
  (attribute, cell, cycle).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridGeometry:
    """Cell coordinates plus the precomputed pairwise Euclidean distances."""

    coords: np.ndarray  # shape (X, 2), km

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must be (X, 2), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("cell coordinates must be finite")
        object.__setattr__(self, "coords", coords)
        diff = coords[:, None, :] - coords[None, :, :]
        object.__setattr__(self, "_dist", np.sqrt((diff**2).sum(axis=2)))

    @classmethod
    def from_cells(cls, cells: list[tuple[int, float, float]]) -> "GridGeometry":
        """Build from (cell_id, x_km, y_km) rows; ids must be exactly 0..X-1."""
        ids = sorted(c[0] for c in cells)
        if ids != list(range(len(cells))):
            raise ValueError("cell ids must be exactly 0..X-1 with no duplicates")
        coords = np.zeros((len(cells), 2))
        for cid, x, y in cells:
            coords[cid] = (x, y)
        return cls(coords)

    @property
    def n_cells(self) -> int:
        return self.coords.shape[0]

    @property
    def distances(self) -> np.ndarray:
        """(X, X) matrix of pairwise distances in km."""
        return self._dist

    def check_cell(self, cell: int) -> int:
        if not (0 <= cell < self.n_cells):
            raise ValueError(f"invalid cell id {cell} (X={self.n_cells})")
        return int(cell)

    def min_nonzero_distance(self) -> float:
        d = self._dist[self._dist > 0]
        return float(d.min()) if d.size else 0.0


def distance(geom: GridGeometry, i: int, j: int) -> float:
    """Euclidean distance in km between cells ``i`` and ``j``."""
    return float(geom.distances[geom.check_cell(i), geom.check_cell(j)])


@dataclass(frozen=True)
class CostModel:
    """Travel cost proportional to distance: ``cost = cost_per_km * km``."""

    cost_per_km: float = 1.0

    def __post_init__(self):
        if not (self.cost_per_km > 0):
            raise ValueError("cost_per_km must be > 0")


def travel_cost(model: CostModel, geom: GridGeometry, from_cell: int, to_cell: int) -> float:
    """Cost of one participant moving from ``from_cell`` to ``to_cell``."""
    return model.cost_per_km * distance(geom, from_cell, to_cell)


@dataclass
class Participant:
    """A sensing participant; ``current_cell`` is where they are right now."""

    id: int
    current_cell: int


@dataclass(frozen=True)
class AllocationPlan:
    """One cycle's participant->cell assignments.

    ``assignments`` rows are (participant_id, from_cell, to_cell); the
    selected cells are distinct and each participant appears at most once.
    """

    cycle: int
    assignments: tuple[tuple[int, int, int], ...]
    selected_cells: frozenset[int] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        assignments = tuple(tuple(int(v) for v in row) for row in self.assignments)
        object.__setattr__(self, "assignments", assignments)
        pids = [p for p, _, _ in assignments]
        to_cells = [t for _, _, t in assignments]
        if len(set(pids)) != len(pids):
            raise ValueError("a participant appears more than once in the plan")
        if len(set(to_cells)) != len(to_cells):
            raise ValueError("selected cells must be distinct")
        selected = self.selected_cells
        if selected is None:
            selected = frozenset(to_cells)
        else:
            selected = frozenset(int(c) for c in selected)
            if selected != set(to_cells):
                raise ValueError("selected_cells disagree with assignment targets")
        object.__setattr__(self, "selected_cells", selected)

    def total_distance(self, geom: GridGeometry) -> float:
        return sum(distance(geom, f, t) for _, f, t in self.assignments)

    def cost_per_participant(self, model: CostModel, geom: GridGeometry) -> dict[int, float]:
        return {p: travel_cost(model, geom, f, t) for p, f, t in self.assignments}


class MeasurementStore:
    """The ground-truth / collected / inferred value matrices of one run.

    ``rs`` is ground truth, dense.  ``cs`` holds collected values and is
    meaningful only where ``cs_present`` is True.  ``inferred`` is filled
    cycle by cycle by the inference step.
    """

    def __init__(self, rs: np.ndarray):
        rs = np.asarray(rs, dtype=float)
        if rs.ndim != 3:
            raise ValueError("rs must have shape (A, X, Y)")
        if not np.all(np.isfinite(rs)):
            raise ValueError("ground truth contains non-finite values")
        self.rs = rs
        self.cs = np.zeros_like(rs)
        self.cs_present = np.zeros(rs.shape, dtype=bool)
        self.inferred = np.zeros_like(rs)
        self.inferred_upto = 0  # cycles 0..inferred_upto-1 have IS rows filled

    @property
    def n_attributes(self) -> int:
        return self.rs.shape[0]

    @property
    def n_cells(self) -> int:
        return self.rs.shape[1]

    @property
    def n_cycles(self) -> int:
        return self.rs.shape[2]

    def collected_cells(self, attribute: int, cycle: int) -> np.ndarray:
        """Sorted cell ids with a collected value at (attribute, cycle)."""
        return np.flatnonzero(self.cs_present[attribute, :, cycle])

    def copy(self) -> "MeasurementStore":
        dup = MeasurementStore(self.rs)  # rs is never mutated; share-by-copy is fine
        dup.cs = self.cs.copy()
        dup.cs_present = self.cs_present.copy()
        dup.inferred = self.inferred.copy()
        dup.inferred_upto = self.inferred_upto
        return dup


def collect(store: MeasurementStore, plan: AllocationPlan, participants: list[Participant] | None = None) -> None:
    """Record the plan's measurements and move the assigned participants.

    Every attribute is measured at each selected cell (one visit covers all
    attributes).  Re-collecting an already-collected cell is idempotent.
    """
    y = plan.cycle
    if not (0 <= y < store.n_cycles):
        raise ValueError(f"cycle {y} outside 0..{store.n_cycles - 1}")
    cells = sorted(plan.selected_cells)
    for x in cells:
        if not (0 <= x < store.n_cells):
            raise ValueError(f"invalid cell id {x} in plan")
    if cells:
        store.cs[:, cells, y] = store.rs[:, cells, y]
        store.cs_present[:, cells, y] = True
    if participants is not None:
        by_id = {p.id: p for p in participants}
        for pid, _from, to in plan.assignments:
            by_id[pid].current_cell = to
