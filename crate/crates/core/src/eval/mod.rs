//! Offline evaluation: chronological splits, classification metrics and
//! the baseline-versus-influence benchmark.

mod benchmark;
mod metrics;
mod split;

pub use benchmark::{run_benchmark, BenchmarkReport, Corpus, CorpusSummary};
pub use metrics::{auc, auc_counts, classification_metrics, AucCounts, ConfusionCounts, MetricsReport};
pub use split::{chronological_split, SplitSpec};
