//! Analytical and simulation models for mission-critical / eMBB coexistence
//! in a shared 5G uplink: puncturing, NOMA and rate-splitting access, their
//! AoI and rate metrics, split optimization and adaptive scheme selection.

pub mod analytics;
pub mod config;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod report;
pub mod selector;
pub mod sim;

pub use analytics::{scheme_metrics, AnalyticBundle, RsmaLink, RsmaStages};
pub use error::{Error, Result};
pub use model::{
    derive_rates, rho_split, thermal_noise, DerivedRates, LinkBudget, OperatingPoint, Power, RsmaSplit, Scheme,
    SchemeMetrics, SystemConfig,
};
pub use optimizer::{build_lookup, optimize, LookupTable, Method, OptimizerSettings, SplitSolution};
pub use sim::{simulate, SimOptions, SimReport, StageFading};
pub use selector::{
    adaptive_rate_curve, extract_thresholds, sweep, threshold_vs_activation, SplitSource, SweepPoint, ThresholdReport,
    Tolerances,
};
pub use config::ConfigDocument;
