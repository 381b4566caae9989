"""Cost-aware sample allocation and generalization bounds for learning from
several experiments under a shared budget."""

from .allocation import (
    AllocationPlan,
    BudgetProblem,
    ExperimentSpec,
    allocate,
    allocate_oracle,
    proportionality_split,
)
from .bounds import (
    BoundReport,
    Kernel,
    LinearL2,
    LinearLinfL1,
    TwoLayerNN,
    asymptotic_41,
    bound_thm2,
    bound_thm3,
    bound_thm45,
    class_constants,
    table1_bound,
)
from .errors import ConfigError, ConvergenceError

__version__ = "0.1.0"
