"""Cost-aware cell ranking via value iteration, plus participant matching.

Each cell is a state; an action is moving there (or staying).  The reward
for landing on a cell combines the cell's unified priority with a term
inversely proportional to the travel distance, so the converged state
values rank cells by quality per unit of travel.  The top-ranked cells are
then matched to participants nearest-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AllocationPlan, GridGeometry, Participant


def reward(ups_dest: float, dist_km: float, gamma: float, d_floor_km: float) -> float:
    """Reward for moving onto a cell: its priority plus gamma / distance.

    The distance is floored so the stay action (distance 0) stays finite.
    """
    if dist_km < 0:
        raise ValueError("distance must be >= 0")
    return ups_dest + gamma / max(dist_km, d_floor_km)


@dataclass(frozen=True)
class Mdp:
    """The per-cycle decision process solved by value iteration.

    ``composite=True`` (the default) folds the destination's unified
    priority into the reward; ``composite=False`` keeps the bare
    gamma/distance reward for comparison runs.
    """

    ups: np.ndarray
    distances: np.ndarray
    gamma: float = 1.0
    beta: float = 0.5
    theta_conv: float = 1e-4
    d_floor_km: float | None = None  # None: half the minimum nonzero pairwise distance
    composite: bool = True

    def __post_init__(self):
        ups = np.asarray(self.ups, dtype=float)
        distances = np.asarray(self.distances, dtype=float)
        if ups.ndim != 1 or distances.shape != (ups.size, ups.size):
            raise ValueError("ups must be (X,) and distances (X, X)")
        if not np.all(np.isfinite(ups)) or not np.all(np.isfinite(distances)):
            raise ValueError("ups and distances must be finite")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if not (self.theta_conv > 0):
            raise ValueError("theta_conv must be > 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        object.__setattr__(self, "ups", ups)
        object.__setattr__(self, "distances", distances)
        floor = self.d_floor_km
        if floor is None:
            nonzero = distances[distances > 0]
            floor = 0.5 * float(nonzero.min()) if nonzero.size else 1.0
        if not (floor > 0):
            raise ValueError("d_floor_km must be > 0")
        object.__setattr__(self, "d_floor_km", float(floor))

    def reward_matrix(self) -> np.ndarray:
        """R[src, dst]; row index is where the participant starts."""
        inv = self.gamma / np.maximum(self.distances, self.d_floor_km)
        if self.composite:
            return self.ups[None, :] + inv
        return inv


@dataclass(frozen=True)
class QrsRanking:
    """Converged state values per cell, with convergence diagnostics."""

    cycle: int
    qrs: np.ndarray
    sweeps: int = 0
    sweep_deltas: tuple[float, ...] = field(default=())


MAX_SWEEPS = 10_000


def value_iteration(mdp: Mdp, cycle: int = 0) -> QrsRanking:
    """Iterate V[src] <- max_dst (beta*V[dst] + R[src,dst]) to convergence.

    Sweeps are synchronous; iteration stops when the largest per-state
    change drops below ``theta_conv``.  With gamma = 0 in composite mode
    the update has no source dependence (every state would converge to the
    same value), so the ranking degenerates to the priority scores
    themselves and they are returned directly.
    """
    if mdp.composite and mdp.gamma == 0.0:
        return QrsRanking(cycle=cycle, qrs=mdp.ups.copy())
    r = mdp.reward_matrix()
    v = mdp.ups.copy()
    deltas = []
    for sweep in range(1, MAX_SWEEPS + 1):
        v_next = (mdp.beta * v[None, :] + r).max(axis=1)
        delta = float(np.abs(v_next - v).max())
        deltas.append(delta)
        v = v_next
        if delta < mdp.theta_conv:
            return QrsRanking(cycle=cycle, qrs=v, sweeps=sweep, sweep_deltas=tuple(deltas))
    raise RuntimeError(f"value iteration did not converge within {MAX_SWEEPS} sweeps")


def rank_cells(scores: np.ndarray) -> np.ndarray:
    """Cell ids by descending score; ties broken by lower cell id."""
    scores = np.asarray(scores, dtype=float)
    return np.argsort(-scores, kind="stable")


def plan_for_cells(
    cells_in_order: np.ndarray | list[int],
    participants: list[Participant],
    geom: GridGeometry,
    cycle: int,
) -> AllocationPlan:
    """Match the first P listed cells to participants, nearest-first.

    Cells are taken in the given order; each receives the nearest
    not-yet-assigned participant (distance ties by lower participant id).
    Every allocator in the package routes through this matching so cost
    differences between schemes reflect cell choice only.
    """
    n_participants = len(participants)
    chosen = [int(c) for c in list(cells_in_order)[:n_participants]]
    if len(chosen) < n_participants:
        raise ValueError("fewer candidate cells than participants")
    if len(set(chosen)) != len(chosen):
        raise ValueError("candidate cells must be distinct")
    pool = sorted(participants, key=lambda p: p.id)
    assignments = []
    free = list(pool)
    for cell in chosen:
        best = min(free, key=lambda p: (geom.distances[p.current_cell, cell], p.id))
        free.remove(best)
        assignments.append((best.id, best.current_cell, cell))
    return AllocationPlan(cycle=cycle, assignments=tuple(assignments))


def assign_tasks(
    ranking: QrsRanking,
    participants: list[Participant],
    geom: GridGeometry,
) -> AllocationPlan:
    """Allocate the top-P cells by global ranking score to the participants."""
    if len(participants) >= geom.n_cells:
        raise ValueError("need fewer participants than cells")
    return plan_for_cells(rank_cells(ranking.qrs), participants, geom, ranking.cycle)


def assign_tasks_greedy(
    mdp: Mdp,
    ranking: QrsRanking,
    participants: list[Participant],
) -> AllocationPlan:
    """Each participant greedily takes the destination of highest action value.

    Participants are processed in id order; participant p at cell x' picks
    the unclaimed cell x'' maximizing beta*V[x''] + R[x', x''] (ties by
    lower cell id), so the quality-cost tradeoff is evaluated against each
    participant's own travel distance.  This is the allocation the main
    scheme uses: it preserves the spatial spread of the participant pool
    while still chasing high-priority cells, whereas ranking cells globally
    collapses into degenerate orderings (the value function's source
    dependence enters only through the distance term).
    """
    if len(participants) >= mdp.ups.size:
        raise ValueError("need fewer participants than cells")
    values = ranking.qrs
    taken: set[int] = set()
    assignments = []
    for participant in sorted(participants, key=lambda p: p.id):
        dist = np.maximum(mdp.distances[participant.current_cell], mdp.d_floor_km)
        action_value = mdp.beta * values + mdp.ups + mdp.gamma / dist
        if not mdp.composite:
            action_value = mdp.beta * values + mdp.gamma / dist
        for cell in np.argsort(-action_value, kind="stable"):
            if int(cell) not in taken:
                taken.add(int(cell))
                assignments.append((participant.id, participant.current_cell, int(cell)))
                break
    return AllocationPlan(cycle=ranking.cycle, assignments=tuple(assignments))
