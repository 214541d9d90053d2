"""Hastings-McLeod Painleve II, its psi-functions and the critical kernel,
with finite-n orthogonal-polynomial checks for multi-critical ensembles."""

__version__ = "0.1.0"

from .pii import (  # noqa: E402
    PiiParameters,
    PiiSolution,
    SolverError,
    evaluate_q,
    q_minus_series,
    q_plus_series,
    residual_at,
    solve_hastings_mcleod,
)
from .psi import ComplexContour, PhiControls, PhiEvaluation, PhiToleranceError, phi_batch, phi_pair  # noqa: E402
from .kernel import KernelRealnessError, critical_kernel, kernel_diagonal, kernel_real_form  # noqa: E402
from .equilibrium import (  # noqa: E402
    CRITICAL_QUARTIC,
    EquilibriumData,
    Potential,
    SupportInterval,
    classify_origin,
    density_coeffs,
    equilibrium_data,
    psi_t_eval,
    s_parameters,
    scaling_constants,
    solve_endpoints,
)
from .orthopoly import (  # noqa: E402
    RecurrenceTable,
    WeightSpec,
    discretize_weight,
    finite_kernel,
    orthonormal_eval,
    recurrence_table,
    rescaled_kernel,
    stieltjes_recurrence,
)
