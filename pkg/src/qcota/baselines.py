"""The four comparison allocators.

All of them reuse the same nearest-first participant matching as the main
scheme, so measured cost differences come from which cells get selected,
not from how participants are routed.
"""

from __future__ import annotations

import numpy as np

from .core import AllocationPlan, GridGeometry, Participant
from .errors import ConfigError
from .allocation import plan_for_cells, rank_cells
from .priority import PriorityScores
from .weighting import UnifiedScores

BASELINE_KINDS = ("OO-MTA", "GPS-TA", "EWA-TA", "UNS-TA")


def allocate_oomta(
    ups: UnifiedScores, participants: list[Participant], geom: GridGeometry
) -> AllocationPlan:
    """Top-P cells by unified priority score; no cost awareness."""
    return plan_for_cells(rank_cells(ups.ups), participants, geom, ups.cycle)


def allocate_gpsta(
    per_attribute: list[PriorityScores],
    participants: list[Participant],
    geom: GridGeometry,
    cycle: int,
) -> AllocationPlan:
    """Greedy per-attribute selection: floor(P/A) top cells per attribute.

    Attributes are visited in index order and skip cells already chosen for
    an earlier attribute; leftover slots (P not divisible by A) are filled
    round-robin continuing down the same per-attribute rankings.
    """
    n_participants = len(participants)
    n_attributes = len(per_attribute)
    if n_participants < n_attributes:
        raise ConfigError("GPS-TA needs at least as many participants as attributes")
    rankings = [list(rank_cells(ps.ps)) for ps in per_attribute]
    positions = [0] * n_attributes
    chosen: list[int] = []
    taken: set[int] = set()

    def take_next(attr: int) -> None:
        ranking = rankings[attr]
        while positions[attr] < len(ranking):
            cell = int(ranking[positions[attr]])
            positions[attr] += 1
            if cell not in taken:
                taken.add(cell)
                chosen.append(cell)
                return
        raise ConfigError("ran out of cells while building a GPS-TA plan")

    per_attr = n_participants // n_attributes
    for attr in range(n_attributes):
        for _ in range(per_attr):
            take_next(attr)
    attr = 0
    while len(chosen) < n_participants:
        take_next(attr % n_attributes)
        attr += 1
    return plan_for_cells(chosen, participants, geom, cycle)


def allocate_ewata(
    per_attribute: list[PriorityScores],
    participants: list[Participant],
    geom: GridGeometry,
    cycle: int,
) -> AllocationPlan:
    """Top-P cells by the plain mean of priorities across attributes."""
    mean_ps = np.mean([ps.ps for ps in per_attribute], axis=0)
    return plan_for_cells(rank_cells(mean_ps), participants, geom, cycle)


def allocate_unsta(
    rng: np.random.Generator,
    participants: list[Participant],
    geom: GridGeometry,
    cycle: int,
) -> AllocationPlan:
    """P distinct cells sampled uniformly without replacement."""
    cells = rng.choice(geom.n_cells, size=len(participants), replace=False)
    return plan_for_cells(cells, participants, geom, cycle)
