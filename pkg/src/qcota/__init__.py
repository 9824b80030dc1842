"""Quality-cost-aware online task allocation for multi-attribute sensing.

A library plus CLI that replays sensing cycles over real or synthetic
spatio-temporal datasets, allocating a small pool of participants to grid
cells each cycle so that inference error and travel cost are jointly kept
low, and compares the cost-aware scheme against four baseline allocators.
"""

from .allocation import (
    Mdp,
    QrsRanking,
    assign_tasks,
    assign_tasks_greedy,
    plan_for_cells,
    reward,
    value_iteration,
)
from .baselines import allocate_ewata, allocate_gpsta, allocate_oomta, allocate_unsta
from .core import (
    AllocationPlan,
    CostModel,
    GridGeometry,
    MeasurementStore,
    Participant,
    collect,
    distance,
    travel_cost,
)
from .data import (
    Dataset,
    Hyperparameters,
    RunConfig,
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    load_run_config,
    load_synthetic_config,
    write_dataset,
)
from .errors import ConfigError, DataError
from .inference import InferenceStrategy, idw_estimate, infer_cycle, knn_estimate, svr_estimate
from .metrics import (
    ExperimentReport,
    aggregated_sensing_error,
    average_cost,
    sensing_error,
    write_report_csv,
    write_traces_json,
)
from .priority import PriorityScores, compute_priorities, spatial_mutual_information, temporal_entropy
from .simulate import (
    CycleLoopState,
    SweepConfig,
    init_state,
    run_cycle,
    run_experiment,
    run_single,
    run_sweep,
)
from .svr import SvrParams, fit_svr
from .weighting import AttributeWeights, UnifiedScores, estimate_loss, unified_priority, update_weights

__version__ = "0.1.0"
