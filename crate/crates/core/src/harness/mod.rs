//! Learning-curve experiments, classification metrics, reports, and the command-line
//! surface.

pub mod cli;
mod curve;
mod metrics;
mod report;

pub use curve::{
    cell_seed, load_curve_data, resample, run_learning_curve, run_learning_curve_on, subset_seed, CellDetail,
    CurveConfig, CurveRecord, CurveResult, DataSource,
};
pub use metrics::{compute_accuracy, compute_auc};
pub use report::{emit_report, read_curve_csv, summarize, CellSummary, ReportFiles, Stats, CURVE_CSV_HEADER};
