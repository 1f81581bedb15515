"""Linear complex bodies with fading memory.

Hereditary response of Prony-series kernels on the state ``(W, nu, N)``,
the history pseudometric, work and relaxed work, free energies, surface
counterparts and manufactured-solution balance checks.
"""

from types import ModuleType as _ModuleType

from .balance import bulk_balance_residual, surface_gradient, manufactured_bulk, manufactured_surface, surface_balance_residual
from .constitutive import StressState, respond, respond_after, respond_profile, respond_surface
from .energy import (
    FreeEnergyFunctional,
    chain_rule,
    check_dissipation_inequality,
    check_dissipation_surface,
    clausius_duhem_restrictions,
    evaluate,
    evaluate_surface,
    graffi_delta,
    graffi_gradient,
    graffi_value,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    ConsistencyError,
    ContinuityError,
    DomainError,
    MemoriumError,
    NumericalError,
    PreconditionError,
    ShapeError,
    UnboundedBelow,
)
from .history import (
    History,
    Process,
    concat,
    constant_history,
    lemma_process,
    prolong,
    prolong_relative,
    restrict,
    shift,
    varied_history,
)
from .kernels import (
    MaterialModel,
    PronyKernel,
    SurfaceModel,
    check_dissipative,
    eval_G,
    eval_Gdot,
    model_from_dict,
    tail_integral_abs,
)
from .metric import MetricConfig, approximant, check_contraction, check_fading, distance, distance_surface, equivalent
from .relaxed import RelaxationProblem, check_relaxed_bounds, max_recoverable, min_work, relaxed_work
from .statespace import BlockLayout, FlatLayout, StateVector, pack, sym_part, unpack
from .surface import SurfaceFrame, average, jump, jump_average_algebra
from .work import check_state_function, process_variation, retardation_gap, work, work_over, work_surface, work_surface_reduced

__version__ = "0.1.0"

__all__ = sorted(k for k, v in globals().items() if not k.startswith("_") and not isinstance(v, _ModuleType))
