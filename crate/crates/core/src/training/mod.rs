//! Optimization loops: contrastive pre-training, downstream classification under
//! the three encoder regimes, a single-window supervised baseline, and
//! finite-difference gradient checking.

mod adam;
mod baseline;
mod downstream;
mod gradcheck;
mod history;
mod hyper;
mod pretrain;

pub use adam::Adam;
pub use baseline::{window_supervised_baseline, WindowBaselineConfig, WindowBaselineOutcome};
pub use downstream::{
    downstream_loss_and_grads, evaluate_downstream, prepare_series, train_downstream, DownstreamConfig,
    DownstreamOutcome, EvalMetrics, MetricKind, PreparedSeries,
};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use history::{EpochRecord, TrainHistory};
pub use hyper::{Hyperparams, TrainMode};
pub use pretrain::{
    evaluate_contrastive, normalized_segments, pretrain, ContrastiveEval, PretrainConfig, PretrainOutcome,
};
