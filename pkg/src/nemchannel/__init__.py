"""Steady states and switching dynamics of nematic liquid crystal flow in a
channel: director angle theta(z, t) driven by a pressure gradient against
finite (weak) wall anchoring.

The public surface groups into:

* coefficients - Leslie viscosities, the material functions m, g, Q, F,
  validation, nondimensionalization;
* analytic - the exact zero-flow equilibrium families (tilted/linear
  profiles), their existence thresholds in the inverse anchoring strength,
  and stability parity rules;
* bvp - Newton solution and pseudo-arclength-free continuation of the steady
  boundary-value problem in the pressure G and anchoring parameter B, fold
  detection;
* stability - spectra of the linearization about steady states;
* asymptotics - small-G regular expansions and large-G boundary/interior
  layer composites;
* dynamics - semi-implicit time stepping, driving schedules, basin sweeps
  and critical-parameter bisection;
* branchdb / manifest / figures / pipeline / cli - persistence, run
  manifests, figure-data reproduction and the command line front end.
"""

from .coefficients import (
    DEFAULT_COEFFICIENTS,
    DimensionalScales,
    LeslieCoefficients,
    ValidationReport,
    f_of,
    flow_alignment_angle,
    g_of,
    g_prime_of,
    load_coefficients,
    m_of,
    m_prime_of,
    nondimensionalize,
    q_of,
    q_prime_of,
    validate,
)
from .grid import DEFAULT_DZ, DEFAULT_NPOINTS, GridProfile, uniform_grid
from .analytic import (
    AnalyticEquilibrium,
    all_equilibria,
    critical_inverse_anchoring,
    director_field,
    fold_pair,
    solve_type1_slopes,
    solve_type2_slopes,
    solve_type34_intercepts,
    tan_eq_x_roots,
    type1_equilibria,
    type2_equilibria,
    type34_equilibria,
    winding_number,
)
from .bvp import (
    Branch,
    BranchPoint,
    ConvergenceError,
    FoldCurve,
    continue_in_B,
    continue_in_G,
    detect_fold,
    reconstruct_velocity,
    solve_equilibrium,
    static_residual,
    trace_fold_in_G,
)
from .stability import (
    StabilityReport,
    classify_parity,
    linearized_spectrum,
    theta0_eigenvalues,
)
from .asymptotics import (
    LayerError,
    LayerSolution,
    SmallGCorrection,
    center_transition_width,
    composite_large_g,
    extract_outer_indices,
    layer_width,
    outer_value,
    small_g_correction,
    solve_layer,
)
from .dynamics import (
    SWEEP_DT,
    Schedule,
    TimeStepperConfig,
    TrajectoryResult,
    equilibrium_db,
    evolve,
    find_critical_C,
    find_critical_t1,
    make_initial,
    match_steady_state,
    sweep_outcomes,
)
from .branchdb import BranchDatabase, PointRecord
from .manifest import RunManifest, config_hash, write_csv
from .figures import FIGURE_IDS, reproduce_figure
from .pipeline import UsageError, run_config, run_stage

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_COEFFICIENTS", "DimensionalScales", "LeslieCoefficients",
    "ValidationReport", "f_of", "flow_alignment_angle", "g_of", "g_prime_of",
    "load_coefficients", "m_of", "m_prime_of", "nondimensionalize", "q_of",
    "q_prime_of", "validate",
    "DEFAULT_DZ", "DEFAULT_NPOINTS", "GridProfile", "uniform_grid",
    "AnalyticEquilibrium", "all_equilibria", "critical_inverse_anchoring",
    "director_field", "fold_pair", "solve_type1_slopes", "solve_type2_slopes",
    "solve_type34_intercepts", "tan_eq_x_roots", "type1_equilibria",
    "type2_equilibria", "type34_equilibria", "winding_number",
    "Branch", "BranchPoint", "ConvergenceError", "FoldCurve",
    "continue_in_B", "continue_in_G", "detect_fold", "reconstruct_velocity",
    "solve_equilibrium", "static_residual", "trace_fold_in_G",
    "StabilityReport", "classify_parity", "linearized_spectrum",
    "theta0_eigenvalues",
    "LayerError", "LayerSolution", "SmallGCorrection",
    "center_transition_width", "composite_large_g", "extract_outer_indices",
    "layer_width", "outer_value", "small_g_correction", "solve_layer",
    "SWEEP_DT", "Schedule", "TimeStepperConfig", "TrajectoryResult",
    "equilibrium_db", "evolve", "find_critical_C", "find_critical_t1",
    "make_initial", "match_steady_state", "sweep_outcomes",
    "BranchDatabase", "PointRecord",
    "RunManifest", "config_hash", "write_csv",
    "FIGURE_IDS", "reproduce_figure",
    "UsageError", "run_config", "run_stage",
    "__version__",
]
