"""Safeguarded implicit augmented Lagrangian method for ``min f(x) + g(c(x))``.

``g`` may be nonsmooth and nonconvex; its proximal mapping is handled as a
set-valued oracle.
"""

from .alm import (
    IterationRecord,
    OuterConfig,
    RateEstimate,
    SolveReport,
    Status,
    estimate_rates,
    q_factors,
    safeguard,
    solve,
    tolerance_next,
    update_penalty,
)
from .core import (
    Problem,
    eval_aug_lagrangian,
    eval_lagrangian,
    eval_lagrangian_grad,
    eval_lagrangian_hess,
    eval_phi,
    multiplier_from_prox,
    residual_theta,
)
from .diagnostics import (
    check_growth,
    check_m_stationarity,
    check_sparse_error_bound_condition,
    fd_check,
    mpcc_index_sets,
    sparse_index_sets,
)
from .errors import (
    CompalError,
    DimensionError,
    DomainError,
    InsufficientHistory,
    MaxInnerIterations,
    ProxUnboundedError,
    UnboundedBelow,
    UnsupportedError,
)
from .extreal import INF
from .inner import (
    Certificate,
    InnerConfig,
    grid_inner_solver,
    solve_subproblem,
    solve_subproblem_global_grid,
    subproblem_descent_step,
)
from .instances import get_problem, inline_problem, resolve_instance
from .regularizers import (
    L0,
    IndicatorBox,
    IndicatorComplementarity,
    IndicatorPoint,
    NegSquare,
    ProxSet,
    Regularizer,
    regularizer_from_config,
    select_prox_point,
)

__version__ = "0.1.0"
