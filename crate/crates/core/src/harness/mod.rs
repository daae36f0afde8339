//! Rate studies: declare an experiment, run solver and profile, measure the
//! weighted-norm error on a geometric time ladder, fit its log-log slope and
//! write CSV/JSON reports.

mod config;
mod fit;
mod presets;
mod report;
mod run;
pub mod suites;

pub use config::{Datum, ExperimentConfig, ForcingSpec, Ladder, ProblemKind, ProfileKind};
pub use fit::{fit_rate, judge, Criterion, RateFit, Verdict};
pub use presets::{preset, preset_names};
pub use report::{
    emit_batch, emit_report, read_batch, report_csv, BatchIndex, IndexEntry, RateReport, RateRow, CSV_HEADER,
    INDEX_FILE,
};
pub use run::{run_experiment, Harness, RunData};

/// `slope(a) - slope(b)`, when both reports have a fitted slope.
pub fn slope_gap(a: &RateReport, b: &RateReport) -> Option<f64> {
    Some(a.slope()? - b.slope()?)
}
