//! Benchmark driver around `pool-core`: CSV dataset ingestion, synthetic
//! dataset generation, method-by-method evaluation, and report emission.

pub mod benchmark;
pub mod dataset;
pub mod report;
pub mod synth;

pub use benchmark::{run_benchmark, BenchmarkError, BenchmarkOptions, Method};
pub use dataset::{load_dataset, DatasetError, LoadOptions};
pub use report::{emit_report, EvaluationReport, PairwiseTest, ReportError, ReportFormat};
pub use synth::{synthetic_games, write_dataset, SynthParams};
