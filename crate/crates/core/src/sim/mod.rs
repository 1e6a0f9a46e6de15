//! Monte Carlo coverage and rejection-rate studies for binary endpoints.

pub mod exact;
pub mod rng;
pub mod scenario;
pub mod study;

pub use exact::exact_rates;
pub use scenario::{default_methods, scenario_grid, Effect, Metric, Scenario};
pub use study::{coverage_study, generate_dataset, test_study, Dataset, MethodRate, SimReport, StudyKind};
