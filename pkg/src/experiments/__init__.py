"""比較実験・アブレーション・不確実性評価"""

from .executor import SweepExecutor, SweepJob
from .results import aggregate, read_csv, write_csv, write_json
from .sweeps import (
    SweepResult,
    component_sweep,
    convergence_report,
    grid_search,
    lambda_sweep,
    robustness,
)
from .tasks import (
    TASKS,
    PreparedTask,
    TaskComparison,
    TaskSpec,
    compare_priors,
    perfect_prior_diagnostic,
    prepare,
    run_cell,
    run_task,
    task_matrix,
)
from .uncertainty import UncertaintyReport, uncertainty_comparison, uncertainty_report

__all__ = [
    "TASKS",
    "PreparedTask",
    "SweepExecutor",
    "SweepJob",
    "SweepResult",
    "TaskComparison",
    "TaskSpec",
    "UncertaintyReport",
    "aggregate",
    "compare_priors",
    "component_sweep",
    "convergence_report",
    "grid_search",
    "lambda_sweep",
    "perfect_prior_diagnostic",
    "prepare",
    "read_csv",
    "robustness",
    "run_cell",
    "run_task",
    "task_matrix",
    "uncertainty_comparison",
    "uncertainty_report",
    "write_csv",
    "write_json",
]
