//! Balance identities for the two-point statistics.

pub mod bounds;
pub mod budget;
pub mod monin;
pub mod pressure;
pub mod profiles;
pub mod stationary;

pub use bounds::{necessary_condition_report, prop_triv_bounds, NecessaryConditionReport, PropTrivCheck};
pub use budget::{fixed_point_tables, khm_budget, CovarianceTable, KHMBudget, PlateauDiagnostics, PlateauWindow};
pub use monin::{verify_monin_identity, MoninLattice, MoninReport};
pub use pressure::{verify_pressure_cancellation, PressureCheck};
pub use profiles::{Profile, TestTensorPair};
pub use stationary::{khm_terms, KhmResidual, KhmStationaryEstimator, KhmTerms};
