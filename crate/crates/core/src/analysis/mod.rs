//! Dialogue-quality and outcome analyses over self-play results.

pub mod change;
pub mod logistic;
pub mod regress;
pub mod repetition;
pub mod report;

pub use change::{change_table, ChangeBlock, ChangeCounts, ChangeTable};
pub use logistic::{logistic_fit, with_intercept, LogitConfig, RegressionFit};
pub use regress::{complexity_regressions, decided_stats, DecidedStats, RegressionEntry, RegressionSet};
pub use repetition::{count_repeats, mentions_object, repetition_stats, RepetitionStats, Scope};
pub use report::{analyze_runs, group_runs, report_emit, AnalysisReport};
