//! Multivariate fractional Brownian motion (mfBm): covariance kernels,
//! exact simulation, moment-based estimation with asymptotic inference,
//! a time-reversibility test, optimal forecasting, and baseline
//! comparators, generic over the floating-point scalar.
//!
//! The model: a d-component Gaussian process with component Hurst
//! exponents `H_i ∈ (0,1)`, scales `σ_i²`, cross-correlations `ρ_ij`,
//! and antisymmetric time-reversal asymmetries `η_ij`. All methods are
//! exact in the covariance structure (no spectral approximations).
//!
//! Core entry points:
//! - [`ModelParams`]: parameter container with validity checks.
//! - [`PathSampler`]: exact Gaussian simulation on a regular grid.
//! - [`estimate_all`]: closed-form estimators with standard errors.
//! - [`test_time_reversibility`]: asymptotic test of `η = 0`.
//! - [`ForecastEngine`]: conditional-mean prediction and its MSFE.
//!
//! `f64` is the default scalar everywhere (`ModelParams` ≡
//! `ModelParams<f64>`); every algorithm is also instantiable at `f32`
//! via the [`real::Real`] trait.

pub mod ac;
pub mod estimate;
pub mod experiments;
pub mod forecast;
pub mod har;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod real;
pub mod simulate;

pub use ac::{
    ac_fit, apply_dilated_filter, empirical_filtered_cov, theoretical_filtered_cov, AcEstimate,
    Filter,
};
pub use estimate::{
    avar_eta, avar_hurst, avar_rho, avar_sigma2, estimate_all, estimate_eta, estimate_hurst,
    estimate_rho, estimate_sigma2, normal_ci, test_time_reversibility, ComponentEstimate,
    EstimateReport, PairEstimate, ReversibilityTest,
};
pub use experiments::{
    run_estimator_comparison, run_estimator_mc, run_forecast_mc, run_rolling_empirical,
    run_size_power, synthetic_rv_panel, ComparisonSpec, EstimatorMcSpec, Experiment,
    ExperimentReport, ForecastCase, ForecastMcSpec, ReportRow, ReportTable, RollingSpec,
    SizePowerSpec,
};
pub use forecast::{
    forecast_one_obs, forecast_one_obs_bivariate, msfe_exchangeable, msfe_exchangeable_limit,
    msfe_univariate_one_obs, ForecastEngine, ForecastResult, ForecastWeights, OneObsBivariate,
};
pub use har::{har_design, har_fit_forecast, vhar_fit_forecast, HarForecast};
pub use io::{
    load_panel, load_panel_path, model_from_config, model_to_config, read_path_csv, render_report,
    write_path_csv, write_report_csv, ConfigDoc, PanelData, TRADING_DELTA,
};
pub use kernel::{
    cross_cov, gamma_lag, increment_cov, increment_cov_matrix, rho_max, validate_existence,
    w_kernel, ExistenceCheck, ModelParams,
};
pub use linalg::{Cholesky, Mat};
pub use real::Real;
pub use simulate::{replication_seed, PathSampler, SamplePath};

/// Error type for the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameters violate structural constraints (ranges, shapes,
    /// symmetry), independent of whether the process would exist.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Structurally valid parameters that do not correspond to an
    /// existing process (covariance not positive semidefinite, or the
    /// bivariate correlation bound is exceeded).
    #[error("inadmissible model: {0}")]
    Inadmissible(String),

    /// A quantity the caller asked for is not identified at these
    /// parameters (e.g. η when `H_1 + H_2 = 1`).
    #[error("not identified: {0}")]
    Unidentified(String),

    /// The data is too short or otherwise unusable for the request.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numerical routine failed (factorization, eigensolver,
    /// optimizer) beyond its recovery options.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed input data (CSV structure, non-finite values, config
    /// syntax).
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: numerical
    /// failures are 3, everything else is 2 (0 is success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
