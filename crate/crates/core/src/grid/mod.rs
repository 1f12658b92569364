//! Bus admittance model, power flow, synthetic demand and the PMU
//! measurement operator.
//!
//! The admittance matrix `Y` is complex symmetric (`Y = Y^T`, not Hermitian).
//! Bus `i` carries `y_ii^sh + sum_j y_ij` on the diagonal and `-y_ij` off it.

mod admittance;
mod io;
mod measurement;
mod powerflow;
mod series;

pub use admittance::{build_admittance, build_admittance_with_shunts, AdmittanceModel, Branch};
pub use io::{
    read_phasor_csv, write_phasor_csv, BranchRecord, GridFile, PhasorRecord, ShuntRecord,
};
pub use measurement::{build_measurement_operator, observe, observe_with, MeasurementOperator};
pub use powerflow::{apparent_power, solve_voltages, solve_voltages_with, PowerFlowOptions};
pub use series::{simulate_phasors, synth_load_series, PhasorSeries, ProfileParams, Quantity};
