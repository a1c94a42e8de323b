"""Gaussian-gated localized mixture-of-experts regression.

The package fits mixture-of-experts conditional densities by EM in the
inverse direction, maps the estimate to the forward direction in closed
form, selects the number of components by penalized likelihood with
slope-heuristic calibration, and evaluates estimators with Monte Carlo
tensorized divergences.
"""

from . import bounds, divergence, em, io, model, selection, simulate
from .bounds import (
    TheoryConfig,
    complexity_bound,
    dim_gating_space,
    kappa0,
    penalty_lower_bound,
    simplex_covering_bound,
)
from .divergence import (
    CondDensity,
    DivergenceEstimate,
    c_rho,
    kl_gaussian_closed_form,
    tensorized_hellinger_mc,
    tensorized_jkl_mc,
    tensorized_kl_mc,
)
from .em import EmConfig, FitRangeResult, FitResult, e_step, fit, fit_range, m_step
from .io import DatasetSpec, load_csv, load_report, save_dataset_csv, save_report
from .model import (
    Dataset,
    ForwardParams,
    GaussianParams,
    InverseParams,
    expand_polynomial,
    forward_conditional_logpdf,
    forward_to_inverse,
    gaussian_logpdf,
    gating_probs,
    inverse_conditional_logpdf,
    inverse_to_forward,
    log_likelihood,
    polynomial_features,
    swap_roles,
)
from .selection import (
    CriterionEntry,
    CriterionTable,
    SelectionResult,
    criterion_table_from_fits,
    jump_criterion,
    model_dimension,
    select_aic_bic,
    select_fixed_kappa,
    slope_criterion,
)
from .simulate import (
    DecayResult,
    Scenario,
    TrialReport,
    custom_scenario,
    error_decay_study,
    loglog_regression,
    ms_scenario,
    run_selection_trials,
    sample_glome,
    sample_scenario,
    ws_scenario,
)

__version__ = "0.1.0"
