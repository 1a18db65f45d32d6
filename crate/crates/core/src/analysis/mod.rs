//! Error predictors, asymptotic constants, quadrature and Monte Carlo
//! error estimation.

mod constants;
mod montecarlo;
mod quadrature;
mod report;

pub use constants::{
    asymptotic_constants, conditional_error_predictor, cost, integral_of_norm, riemann_gap_check,
    AsymptoticConstants, RiemannGap,
};
pub use montecarlo::{
    convergence_study, cost_error_trend, improvement_cell, improvement_experiment, log2_slope,
    method_mesh, monte_carlo_error, reference_coords, simpson_l2_error, ErrorReport,
    ExperimentConfig, ImprovementRow, Method, MonteCarloConfig, TrendDiagnostic, TREND_TOLERANCE,
};
pub use quadrature::{composite_simpson, integrate};
pub use report::{write_improvement, write_reports, OutputFormat};
