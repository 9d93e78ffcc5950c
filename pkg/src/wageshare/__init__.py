"""Labor share, wages and the wage-maximizing labor share under constant returns."""

from .analysis import (
    ElasticityRecord,
    GrowthDecomposition,
    decompose_growth,
    decompose_pool,
    elasticity_table,
    emit_figure_data,
    log_time_derivative,
    wage_share_elasticity,
)
from .dataio import (
    PanelObservation,
    build_panel,
    convert_currency,
    fetch_fred,
    ingest_fred,
    ingest_klems,
    read_panel,
    write_panel,
)
from .econometrics import FitResult, build_design, fit_group, implied_sigma, ols_fit
from .prodfn import (
    CesParams,
    LambdaStarResult,
    ProductionFamily,
    ces_family,
    ces_intensive,
    ces_output,
    dlogw_dlambda,
    lambda_from_alpha,
    solve_lambda_star,
    taylor_log_output,
    wage,
)

__version__ = "0.1.0"
