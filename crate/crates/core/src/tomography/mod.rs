//! Count model, state reconstruction and error bars.

pub mod counts;
pub mod estimator;
pub mod gates;
pub mod linear;
pub mod monte_carlo;

pub use counts::{
    expected_rate, published_counts, setting_operator, simulate_all_counts, simulate_counts,
    CountTable, MeasurementSetting, QubitSetting, SettingModel, PUBLISHED_TOTAL, SETTINGS,
};
pub use estimator::{
    ml_fit, ml_reconstruct, Likelihood, LikelihoodProblem, Observation, ReconstructionOptions,
    ReconstructionResult, ScalingMode,
};
pub use gates::{gate_fidelity_report, simulate_gate_campaign, CountMode, GateRecord, GateReport};
pub use linear::{linear_inversion, LinearEstimate};
pub use monte_carlo::{monte_carlo_fidelity, MonteCarloOptions, MonteCarloReport};
