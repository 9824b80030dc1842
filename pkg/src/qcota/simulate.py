"""The per-cycle simulation loop and the experiment/sweep runners.

Cycle order (every scheme): allocate -> collect -> infer -> learn.  The
allocator picks this cycle's cells from the inferred history of earlier
cycles; collection records ground truth at the selected cells and moves
participants; inference fills the remaining cells; finally the learning
schemes update their attribute weights from held-out residuals at the
collected cells.

Cycle 0 has no history, so every scheme starts from the same seeded
uniform draw; it is excluded from the reported metrics.

Seeding: repeat ``r`` of a run with base seed ``s`` uses
``splitmix64(s + r)`` as its run seed, and the per-run RNG streams
(initial positions, bootstrap draw, per-cycle sampling) are derived from
the run seed with fixed stream indices, so repeats are independent but
fully reproducible and identical across schemes.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields

import numpy as np

from .allocation import Mdp, assign_tasks_greedy, plan_for_cells, value_iteration
from .baselines import allocate_ewata, allocate_gpsta, allocate_oomta, allocate_unsta
from .core import AllocationPlan, CostModel, MeasurementStore, Participant, collect
from .data import (
    Dataset,
    Hyperparameters,
    INFERENCES,
    RunConfig,
    SCHEMES,
    hyperparameters_from_dict,
)
from .errors import ConfigError
from .inference import InferenceStrategy, holdout_row, infer_cycle
from .metrics import (
    ExperimentReport,
    ReportRow,
    RunResult,
    RunTrace,
    attribute_ranges,
    aggregated_sensing_error,
    average_cost,
    per_cycle_error,
)
from .priority import PriorityScores, compute_priorities
from .seeding import derive_seed, rng_from
from .weighting import AttributeWeights, LossNormalizer, estimate_loss, unified_priority, update_weights

LEARNING_SCHEMES = ("QCO-TA", "OO-MTA")


def strategy_from(cfg: RunConfig) -> InferenceStrategy:
    h = cfg.hyperparameters
    return InferenceStrategy(kind=cfg.inference, k=h.k_knn, n=h.n_idw)


@dataclass
class CycleLoopState:
    """Everything one run mutates while advancing cycles.

    ``snapshot()`` deep-copies the state; re-running from a snapshot
    reproduces identical downstream results.
    """

    cycle: int
    store: MeasurementStore
    weights: AttributeWeights
    participants: list[Participant]
    bootstrap_cells: tuple[int, ...]
    alloc_rng: np.random.Generator
    error_ranges: np.ndarray = field(default=None)  # type: ignore[assignment]
    loss_normalizer: LossNormalizer = field(default_factory=LossNormalizer)
    prev_raw_losses: np.ndarray = field(default=None)  # type: ignore[assignment]
    plans: list[AllocationPlan] = field(default_factory=list)
    trace: RunTrace = field(default_factory=RunTrace)

    def snapshot(self) -> "CycleLoopState":
        return copy.deepcopy(self)


def init_state(cfg: RunConfig, dataset: Dataset, run_seed: int) -> CycleLoopState:
    """Fresh state for one run; stream indices fix the RNG layout."""
    cfg.validate_for(dataset)
    store = MeasurementStore(dataset.truth[: cfg.A_used])
    position_rng = rng_from(run_seed, 0)
    start_cells = position_rng.integers(0, dataset.n_cells, size=cfg.P)
    participants = [Participant(i, int(c)) for i, c in enumerate(start_cells)]
    bootstrap_rng = rng_from(run_seed, 1)
    bootstrap_cells = tuple(
        int(c) for c in bootstrap_rng.choice(dataset.n_cells, size=cfg.P, replace=False)
    )
    h = cfg.hyperparameters
    return CycleLoopState(
        cycle=0,
        store=store,
        weights=AttributeWeights.uniform(cfg.A_used, eta=h.eta, delta=h.delta),
        participants=participants,
        bootstrap_cells=bootstrap_cells,
        alloc_rng=rng_from(run_seed, 2),
        error_ranges=attribute_ranges(store.rs, np.arange(store.n_cycles)),
        prev_raw_losses=np.zeros(cfg.A_used),
    )


def _priorities(state: CycleLoopState, cfg: RunConfig) -> list[PriorityScores]:
    h = cfg.hyperparameters
    y = state.cycle
    return [
        compute_priorities(
            state.store.inferred[a, :, :y], attribute=a, cycle=y,
            alpha_te=h.alpha_te, alpha_smi=h.alpha_smi,
            window=h.entropy_window,
        )
        for a in range(cfg.A_used)
    ]


def allocate(
    state: CycleLoopState,
    cfg: RunConfig,
    dataset: Dataset,
    literal_bellman: bool = False,
) -> AllocationPlan:
    """Produce this cycle's plan under the configured scheme."""
    geom = dataset.geometry
    y = state.cycle
    if y == 0:
        return plan_for_cells(state.bootstrap_cells, state.participants, geom, 0)
    if cfg.scheme == "UNS-TA":
        return allocate_unsta(state.alloc_rng, state.participants, geom, y)
    per_attribute = _priorities(state, cfg)
    if cfg.scheme == "GPS-TA":
        return allocate_gpsta(per_attribute, state.participants, geom, y)
    if cfg.scheme == "EWA-TA":
        return allocate_ewata(per_attribute, state.participants, geom, y)
    ups = unified_priority(per_attribute, state.weights)
    if cfg.scheme == "OO-MTA":
        return allocate_oomta(ups, state.participants, geom)
    h = cfg.hyperparameters
    mdp = Mdp(
        ups=ups.ups, distances=geom.distances, gamma=h.gamma, beta=h.beta,
        theta_conv=h.theta_conv, d_floor_km=h.d_floor_km,
        composite=not literal_bellman,
    )
    return assign_tasks_greedy(mdp, value_iteration(mdp, cycle=y), state.participants)


def apply_plan(state: CycleLoopState, cfg: RunConfig, dataset: Dataset, plan: AllocationPlan) -> None:
    """Collect, infer, learn and append traces; advances the cycle counter."""
    geom = dataset.geometry
    strategy = strategy_from(cfg)
    h = cfg.hyperparameters
    y = state.cycle

    collect(state.store, plan, state.participants)
    for a in range(cfg.A_used):
        infer_cycle(strategy, state.store, geom, y, a)

    if cfg.scheme in LEARNING_SCHEMES:
        raw = np.array([
            estimate_loss(
                holdout_row(strategy, state.store, geom, y, a),
                state.store.cs[a, :, y],
                state.store.cs_present[a, :, y],
                delta=h.delta,
                prev_loss=float(state.prev_raw_losses[a]),
            )
            for a in range(cfg.A_used)
        ])
        state.prev_raw_losses = raw
        losses = state.loss_normalizer.normalize(raw)
        state.weights = update_weights(state.weights, losses)
    else:
        losses = np.zeros(cfg.A_used)

    state.trace.selected_cells.append(sorted(plan.selected_cells))
    state.trace.costs_km.append(float(plan.total_distance(geom)))
    state.trace.weights.append([float(w) for w in state.weights.w])
    state.trace.losses.append([float(l) for l in losses])
    state.trace.cycle_errors.append(per_cycle_error(state.store, y, state.error_ranges))
    state.plans.append(plan)
    state.cycle = y + 1


def run_cycle(
    state: CycleLoopState,
    cfg: RunConfig,
    dataset: Dataset,
    literal_bellman: bool = False,
) -> None:
    """One full cycle: allocation followed by collection/inference/learning."""
    if state.cycle >= state.store.n_cycles:
        raise ValueError("all cycles already processed")
    plan = allocate(state, cfg, dataset, literal_bellman)
    apply_plan(state, cfg, dataset, plan)


def run_single(
    cfg: RunConfig,
    dataset: Dataset,
    run_seed: int,
    repeat: int = 0,
    literal_bellman: bool = False,
) -> RunResult:
    """Simulate every cycle once and score the run (bootstrap excluded)."""
    state = init_state(cfg, dataset, run_seed)
    for _ in range(dataset.n_cycles):
        run_cycle(state, cfg, dataset, literal_bellman)
    epsilon = aggregated_sensing_error(state.store)
    phi = average_cost(state.plans[1:], CostModel(cfg.hyperparameters.cost_per_km),
                       dataset.geometry, cfg.P)
    return RunResult(
        scheme=cfg.scheme, inference=cfg.inference, participants=cfg.P,
        attributes=cfg.A_used, seed=cfg.seed, repeat=repeat,
        epsilon=epsilon, phi_km=phi, trace=state.trace,
    )


def run_experiment(
    cfg: RunConfig,
    dataset: Dataset,
    repeats: int = 1,
    literal_bellman: bool = False,
) -> ExperimentReport:
    """Run ``repeats`` seeded repeats and aggregate mean/sd of the metrics."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    cfg.validate_for(dataset)
    runs = [
        run_single(cfg, dataset, derive_seed(cfg.seed, r), repeat=r,
                   literal_bellman=literal_bellman)
        for r in range(repeats)
    ]
    eps = np.array([r.epsilon for r in runs])
    phi = np.array([r.phi_km for r in runs])
    row = ReportRow(
        scheme=cfg.scheme, inference=cfg.inference, participants=cfg.P,
        attributes=cfg.A_used,
        epsilon=float(eps.mean()),
        epsilon_sd=float(eps.std(ddof=1)) if repeats > 1 else 0.0,
        phi_km=float(phi.mean()),
        phi_km_sd=float(phi.std(ddof=1)) if repeats > 1 else 0.0,
        repeats=repeats, seed=cfg.seed,
    )
    return ExperimentReport(rows=[row], runs=runs)


@dataclass(frozen=True)
class SweepConfig:
    """The experiment grid: the cartesian product of the listed axes."""

    schemes: tuple[str, ...] = SCHEMES
    inferences: tuple[str, ...] = INFERENCES
    participants: tuple[int, ...] = (8, 10, 12, 14)
    attributes: tuple[int, ...] = (2, 3, 4)
    repeats: int = 1
    seed: int = 0
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)

    def __post_init__(self):
        for scheme in self.schemes:
            if scheme not in SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}")
        for inference in self.inferences:
            if inference not in INFERENCES:
                raise ConfigError(f"unknown inference {inference!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.schemes or not self.inferences or not self.participants or not self.attributes:
            raise ConfigError("sweep axes must be nonempty")

    def run_configs(self) -> list[RunConfig]:
        out = []
        for scheme in self.schemes:
            for inference in self.inferences:
                for n_part in self.participants:
                    for n_attr in self.attributes:
                        out.append(RunConfig(
                            scheme=scheme, inference=inference, P=int(n_part),
                            A_used=int(n_attr), hyperparameters=self.hyperparameters,
                            seed=self.seed,
                        ))
        return out


def sweep_config_from_dict(payload: dict, where: str = "sweep config") -> SweepConfig:
    payload = dict(payload)
    hyper_payload = payload.pop("hyperparameters", {})
    if not isinstance(hyper_payload, dict):
        raise ConfigError(f"{where}: hyperparameters must be an object")
    allowed = {f.name for f in fields(SweepConfig)} - {"hyperparameters"}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    for key in ("schemes", "inferences", "participants", "attributes"):
        if key in payload:
            payload[key] = tuple(payload[key])
    hyper = hyperparameters_from_dict(hyper_payload, f"{where}.hyperparameters")
    try:
        return SweepConfig(hyperparameters=hyper, **payload)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def run_sweep(
    sweep: SweepConfig,
    dataset: Dataset,
    literal_bellman: bool = False,
) -> ExperimentReport:
    """Run the grid and concatenate the per-configuration report rows."""
    report = ExperimentReport()
    for cfg in sweep.run_configs():
        part = run_experiment(cfg, dataset, repeats=sweep.repeats,
                              literal_bellman=literal_bellman)
        report.rows.extend(part.rows)
        report.runs.extend(part.runs)
    return report
