"""Sample-efficient Bayesian optimisation of bounded control functions.

The decision variable is a function of time represented on a Bernstein
polynomial basis; optimisation happens in coefficient space under
declarative shape priors, with the polynomial order raised dynamically as
evidence accumulates that the current order under-specifies the optimum.
"""

from .acquisition import AcquisitionConfig, beta, maximize_constrained, suggest_batch, ucb
from .bernstein import (
    BernsteinPoly,
    CurveSample,
    RescaleRecord,
    ShapeKind,
    ShapePrior,
    basis_eval,
    constraint_set,
    derivative_bound,
    elevate,
    is_feasible,
    poly_derivative,
    poly_eval,
    sample_curve,
    sample_feasible,
)
from .campaign import Campaign, CampaignState, run_synthetic
from .errors import (
    ConfigError,
    DomainError,
    NumericalError,
    ProtocolError,
    StateError,
)
from .gp import (
    DesignPoint,
    GpSurrogate,
    KernelParams,
    Observation,
    fit,
    kernel_eval,
    select_hyperparameters,
)
from .objectives import SyntheticTarget, default_target, synthetic_utility
from .optimizer import (
    IterationRecord,
    OptimizerConfig,
    elevate_history,
    incumbent,
    underspecification_check,
)

__version__ = "0.1.0"
