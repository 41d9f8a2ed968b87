//! Paired dataset generation and batch evaluation.

mod config;
mod dataset;
mod evaluate;

pub use config::{GeometryOverrides, PipelineConfig};
pub use dataset::{
    generate_pair, read_manifest, run_dataset, simulate_pair, verify_manifest, DatasetManifest,
    FileRecord, GeneratedPair, ItemRecord, ItemSeeds, MANIFEST_FILE,
};
pub use evaluate::{evaluate_dataset, EvalReport, EvalRow, Which};

/// Worker count: `SINOFORGE_WORKERS` wins, then `requested`, then all cores.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    std::env::var("SINOFORGE_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(requested.filter(|&n| n > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
