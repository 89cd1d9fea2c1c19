"""Privacy-aware coordination of multi-camera coverage."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (BudgetExceededError, DomainError, InvariantViolation, NoFeasiblePlanError,
                     ScenarioError)
from .geometry import CameraSpec, GridMap, coverage_ratio, coverage_vector, fov_area
from .plangen import HARD, UNCONSTRAINED, Plan, PlanSet, generate_plan_sets, generate_plans
from .scenario import FIXTURES, Scenario, load_scenario, make_scenario
from .coordination import RunResult, build_tree, rmse_cost, run
from .evaluation import MetricsReport, Selection, evaluate
from .baselines import exhaustive_select, ggv_select, greedy_raster_select, hillclimb_select
