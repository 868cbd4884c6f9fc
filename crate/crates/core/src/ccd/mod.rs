//! The outer design loop: wind load cases, AEP, capital cost, LCOE and the
//! plant-design sweep.

mod cost;
mod sweep;
mod wind;

pub use cost::{
    aep, weibull_pdf, CapitalCost, CostModel, Weibull, CALIBRATED_OPEX, CAPITAL_AT_LOWER,
    CAPITAL_AT_UPPER, HOURS_PER_YEAR, RATED_POWER,
};
pub use sweep::{
    cost_sensitivity, run_sweep, solve_case, Axis, CaseStatus, CellResult, Census, FamilyGrid,
    Optimum, SolveOutcome, SolveRecord, SweepConfig, SweepOptions, SweepResult, SweepStats,
    SweepSummary,
};
pub use wind::{generate_wind_cases, WindCase, WindConfig, DEFAULT_MEANS, MEAN_RANGE};
