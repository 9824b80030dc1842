"""Sensing-error and travel-cost metrics plus report writers.

The headline error metric sums, over attributes, the grand-mean absolute
error normalized by that attribute's ground-truth range over the evaluated
horizon (a min-max normalization, so each attribute contributes a unitless
term in [0, 1]).  Cost is the plain mean kilometres travelled per
participant per cycle.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AllocationPlan, CostModel, GridGeometry, MeasurementStore

RANGE_FLOOR = 1e-9


def sensing_error(is_val: float, rs_val: float) -> float:
    """Absolute error between an inferred and a ground-truth value."""
    return abs(is_val - rs_val)


def attribute_ranges(rs: np.ndarray, cycles: np.ndarray) -> np.ndarray:
    """Per-attribute ground-truth range (max - min) over the given cycles."""
    sub = rs[:, :, cycles]
    spans = sub.max(axis=(1, 2)) - sub.min(axis=(1, 2))
    if np.any(spans <= RANGE_FLOOR):
        warnings.warn("degenerate ground-truth range; flooring the error normalizer")
        spans = np.maximum(spans, RANGE_FLOOR)
    return spans


def per_cycle_error(store: MeasurementStore, cycle: int, ranges: np.ndarray) -> float:
    """Range-normalized mean absolute error of one cycle, summed over attributes."""
    se = np.abs(store.inferred[:, :, cycle] - store.rs[:, :, cycle])
    return float((se.mean(axis=1) / ranges).sum())


def aggregated_sensing_error(store: MeasurementStore, cycles: np.ndarray | list[int] | None = None) -> float:
    """Sum over attributes of the normalized grand-mean absolute error.

    ``cycles`` defaults to every cycle except the bootstrap cycle 0, whose
    allocation is random for every scheme.
    """
    if cycles is None:
        cycles = np.arange(1, store.n_cycles)
    cycles = np.asarray(cycles, dtype=int)
    if cycles.size == 0:
        raise ValueError("evaluation horizon is empty")
    ranges = attribute_ranges(store.rs, cycles)
    se = np.abs(store.inferred[:, :, cycles] - store.rs[:, :, cycles])
    per_attr = se.mean(axis=(1, 2)) / ranges
    return float(per_attr.sum())


def average_cost(
    plans: list[AllocationPlan],
    model: CostModel,
    geom: GridGeometry,
    n_participants: int,
) -> float:
    """Mean over cycles of the mean per-participant travel cost."""
    if not plans:
        raise ValueError("no plans to evaluate")
    totals = []
    for plan in plans:
        cost = sum(plan.cost_per_participant(model, geom).values())
        totals.append(cost / n_participants)
    return float(np.mean(totals))


@dataclass
class RunTrace:
    """Per-cycle trail of one simulation run."""

    selected_cells: list[list[int]] = field(default_factory=list)
    costs_km: list[float] = field(default_factory=list)  # summed over participants
    weights: list[list[float]] = field(default_factory=list)
    losses: list[list[float]] = field(default_factory=list)
    cycle_errors: list[float] = field(default_factory=list)  # normalized, per cycle


@dataclass
class RunResult:
    scheme: str
    inference: str
    participants: int
    attributes: int
    seed: int
    repeat: int
    epsilon: float
    phi_km: float
    trace: RunTrace


@dataclass
class ReportRow:
    scheme: str
    inference: str
    participants: int
    attributes: int
    epsilon: float
    epsilon_sd: float
    phi_km: float
    phi_km_sd: float
    repeats: int
    seed: int


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    runs: list[RunResult] = field(default_factory=list)


REPORT_COLUMNS = (
    "scheme", "inference", "participants", "attributes",
    "epsilon", "epsilon_sd", "phi_km", "phi_km_sd", "repeats", "seed",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_csv(report: ExperimentReport, path: str | Path) -> None:
    """Write the aggregate rows; formatting is deterministic byte for byte."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, col)) for col in REPORT_COLUMNS])


def write_traces_json(report: ExperimentReport, path: str | Path) -> None:
    """Per-cycle traces for every run, as a deterministic JSON document."""
    payload = []
    for run in report.runs:
        payload.append({
            "scheme": run.scheme,
            "inference": run.inference,
            "participants": run.participants,
            "attributes": run.attributes,
            "seed": run.seed,
            "repeat": run.repeat,
            "epsilon": run.epsilon,
            "phi_km": run.phi_km,
            "selected_cells": run.trace.selected_cells,
            "costs_km": run.trace.costs_km,
            "weights": run.trace.weights,
            "losses": run.trace.losses,
            "cycle_errors": run.trace.cycle_errors,
        })
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_weights_csv(run: RunResult, path: str | Path) -> None:
    """Weight/loss trajectory of one run: cycle, attribute, weight, loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("cycle", "attribute", "weight", "loss"))
        for cycle, (ws, ls) in enumerate(zip(run.trace.weights, run.trace.losses)):
            for attr, (w, l) in enumerate(zip(ws, ls)):
                writer.writerow((cycle, attr, repr(float(w)), repr(float(l))))
