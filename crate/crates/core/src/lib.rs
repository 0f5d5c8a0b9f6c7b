//! Analytical model of the carbon-emission reduction obtained by moving
//! compute work from data centres on high-carbon grids to twins on
//! low-carbon grids.
//!
//! The model splits sites into a high and a low emission class, charges
//! every node its embodied carbon plus load-dependent operational emissions,
//! and compares a baseline with a load-shifting variant that is active for a
//! fraction of the year.

pub mod growth;
pub mod model;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use growth::{capacity_projection, years_compensated, CapacityProjection};
pub use model::{
    baseline_emissions, blended_emissions, effective_alpha, gls_emissions, ideal_reduction,
    operational_factor, shift_overhead, shifted_loads, EmissionsReport, ModelError, ModelWarning,
    NodePowerModel, ShiftPolicy, SiteClass,
};
pub use oracle::{
    compare_with_means, evaluate_trace, Coupling, Distribution, TraceComparison, TraceSpec,
};
pub use report::{evaluation_csv, Precision, ReportTable};
pub use scenario::{load_scenario, OpSource, RegionProfile, ScenarioConfig, ScenarioError};
pub use sweep::{kink_location, run_sweep, SweepSpec, SweepTable, SweptParameter, Variant};
