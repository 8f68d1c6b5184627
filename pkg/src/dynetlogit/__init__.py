"""Dynamic network logistic regression for panels with joint edge/vertex dynamics."""

from .design import DesignError, DesignMatrix, RowTag, build_design, dump_design, split_design
from .gli import (
    GLI_NAMES,
    GliVector,
    degree_centralization,
    density,
    gli_vector,
    krackhardt_connectedness,
    mean_degree,
    triad_census,
)
from .panel import (
    NetworkPanel,
    PanelFormatError,
    PanelValidationError,
    RiskSet,
    Snapshot,
    VertexRef,
    load_panel,
    panel_from_edge_presence,
    save_panel,
    subpanel,
)
from .simulate import (
    AdequacyReport,
    GliSampleSet,
    ProjectionResult,
    SimConfig,
    classify_threshold,
    generate_panel,
    one_step_intervals,
    one_step_sample,
    project,
)
from .solver import (
    FitResult,
    PriorSpec,
    evaluate_coefficients,
    fit_mle,
    fit_posterior_mode,
    information_criteria,
    predict_probabilities,
)
from .terms import (
    GapError,
    ModelSpec,
    SpecError,
    TermSpec,
    edge_stat,
    load_model_spec,
    pair_cycle_count,
    save_model_spec,
    seasonal_terms,
    triangle_count,
    usable_transitions,
    validate_model,
    vertex_stat,
)

__version__ = "0.1.0"
