"""Pseudo-spectral SAV solvers for L2 and H-1 gradient flows.

Variable-step IMEX BDF2 time integration with a relaxed scalar auxiliary
variable, split linear solves in Fourier space, discrete modified-energy
monitoring, and an adaptive step controller; plus drivers for
convergence and coarsening experiments.
"""

from .errors import (
    ConfigError,
    EnergyShiftTooSmall,
    GridMismatchError,
    NewtonSingularError,
    NonFiniteFieldError,
    RatioCapConflictWarning,
    SavflowError,
    SingularScalarDenominator,
    StepRatioError,
    StepRatioWarning,
)
from .spectral import (
    Field,
    Grid,
    SpectralField,
    apply_laplacian,
    forward,
    h1_seminorm,
    hminus1_norm,
    inner,
    inverse,
    inverse_laplacian,
    l2_norm,
    linf_norm,
    make_grid,
    mean,
    norms,
    solve_symbol,
)
from .model import (
    Potential,
    SchemeParams,
    double_well,
    e1,
    energy,
    g_prime,
    g_value,
    make_potential,
    modified_energy,
    quad_g,
    v_kinds,
    v_of_xi,
    v_prime_of_xi,
)
from .integrator import (
    Bdf2Coeffs,
    StepRecord,
    StepState,
    bdf2_coeffs,
    discrete_energy_H,
    extrapolate,
    first_order_step,
    g_stability,
    gamma_star_star,
    history_weight,
    initial_state,
    newton_xi,
    solve_phi1_phi2,
    step_residual,
    vbdf2_rhs,
    vbdf2_step,
)
from .stepping import (
    DEFAULT_RATIO_CAP,
    Schedule,
    adaptive_next_dt,
    adaptive_schedule,
    cap_first_step,
    energy_rate_estimate,
    explicit_schedule,
    perturbed_schedule,
    uniform_schedule,
)
from .harness import (
    CoarseningReport,
    ConvergenceRow,
    ConvergenceStudy,
    RunConfig,
    RunResult,
    Snapshot,
    coarsening_experiment,
    convergence_study,
    initial_field,
    reference_solution,
    run_simulation,
)
from .config import from_dict, load_config, to_dict, write_resolved_config
from .output import (
    CSV_HEADER,
    read_snapshot,
    write_convergence_csv,
    write_records_csv,
    write_snapshot,
    write_snapshot_pgm,
)

__version__ = "0.1.0"

__all__ = [
    "Bdf2Coeffs", "CSV_HEADER", "CoarseningReport", "ConfigError",
    "ConvergenceRow", "ConvergenceStudy", "DEFAULT_RATIO_CAP",
    "EnergyShiftTooSmall", "Field", "Grid", "GridMismatchError",
    "NewtonSingularError", "NonFiniteFieldError", "Potential",
    "RatioCapConflictWarning", "RunConfig", "RunResult", "SavflowError",
    "Schedule", "SchemeParams", "SingularScalarDenominator", "Snapshot",
    "SpectralField", "StepRatioError", "StepRatioWarning", "StepRecord",
    "StepState", "adaptive_next_dt", "adaptive_schedule", "apply_laplacian",
    "bdf2_coeffs", "cap_first_step", "coarsening_experiment",
    "convergence_study", "discrete_energy_H", "double_well", "e1", "energy",
    "energy_rate_estimate", "explicit_schedule", "extrapolate",
    "first_order_step", "forward", "from_dict", "g_prime", "g_stability",
    "g_value", "gamma_star_star", "h1_seminorm", "history_weight",
    "hminus1_norm", "initial_field", "initial_state", "inner", "inverse",
    "inverse_laplacian", "l2_norm", "linf_norm", "load_config", "make_grid",
    "make_potential", "mean", "modified_energy", "newton_xi", "norms",
    "perturbed_schedule", "quad_g", "read_snapshot", "reference_solution",
    "run_simulation", "solve_phi1_phi2", "solve_symbol", "step_residual",
    "to_dict", "uniform_schedule", "v_kinds", "v_of_xi", "v_prime_of_xi",
    "vbdf2_rhs", "vbdf2_step", "write_convergence_csv", "write_records_csv",
    "write_resolved_config", "write_snapshot", "write_snapshot_pgm",
]
