use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grid::{sha256_hex, write_image, write_mask, ImageGrid, ProjectionGeometry, Sinogram};
use crate::motion::{
    consistency_score, inject_single_step_rotation, sample_motion_event, ConsistencyScore, MotionEvent,
    MotionSamplerConfig,
};
use crate::phantom::{make_mask_from_phantom, make_phantom, PhantomKind};
use crate::projector::{add_noise, radon_forward, NoiseSpec};
use crate::recon::{ReconDims, Sirt, SirtConfig};
use crate::rng::{derive_seed, item_seed};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Seeds for one item, all derived from the item seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSeeds {
    pub item: u64,
    pub phantom: u64,
    pub noise: u64,
    pub motion: u64,
}

impl ItemSeeds {
    pub fn derive(item: u64) -> Self {
        Self {
            item,
            phantom: derive_seed(item, "phantom"),
            noise: derive_seed(item, "noise"),
            motion: derive_seed(item, "motion"),
        }
    }

    pub fn for_index(master_seed: u64, index: usize) -> Self {
        Self::derive(item_seed(master_seed, index as u64))
    }
}

/// Everything produced for one item.
#[derive(Clone, Debug)]
pub struct GeneratedPair {
    pub ground_truth: ImageGrid<f64>,
    pub corrupted: ImageGrid<f64>,
    pub blur_matched: Option<ImageGrid<f64>>,
    pub converged: Option<ImageGrid<f64>>,
    pub event: MotionEvent,
    pub geometry: ProjectionGeometry,
    /// Noisy sinograms fed to the reconstructions.
    pub clean_sinogram: Sinogram<f64>,
    pub corrupted_sinogram: Sinogram<f64>,
}

/// Sample an event from `seeds.motion` and simulate the pair.
pub fn generate_pair(cfg: &PipelineConfig, seeds: &ItemSeeds) -> Result<GeneratedPair> {
    let (gt, geom) = ground_truth(cfg, seeds)?;
    let sampler = MotionSamplerConfig {
        seed: seeds.motion,
        ..cfg.motion.clone()
    };
    let event = sample_motion_event(&sampler, &geom)?;
    simulate(cfg, seeds, gt, geom, event)
}

/// Simulate the pair for a given motion event.
pub fn simulate_pair(cfg: &PipelineConfig, seeds: &ItemSeeds, event: MotionEvent) -> Result<GeneratedPair> {
    let (gt, geom) = ground_truth(cfg, seeds)?;
    simulate(cfg, seeds, gt, geom, event)
}

fn ground_truth(cfg: &PipelineConfig, seeds: &ItemSeeds) -> Result<(ImageGrid<f64>, ProjectionGeometry)> {
    cfg.validate()?;
    let mut spec = cfg.phantom.clone();
    spec.seed = seeds.phantom;
    let gt = make_phantom::<f64>(&spec)?;
    let geom = cfg.geometry.apply(&gt)?;
    Ok((gt, geom))
}

fn simulate(
    cfg: &PipelineConfig,
    seeds: &ItemSeeds,
    gt: ImageGrid<f64>,
    geom: ProjectionGeometry,
    event: MotionEvent,
) -> Result<GeneratedPair> {
    let clean = radon_forward(&gt, &geom)?;
    let moved = inject_single_step_rotation(&clean, &gt, &geom, &event)?;
    let noise = NoiseSpec {
        sigma: cfg.noise.sigma,
        seed: seeds.noise,
    };
    let clean = add_noise(&clean, &noise)?;
    let moved = add_noise(&moved, &noise)?;

    let sirt = Sirt::<f64>::new(&geom, ReconDims::of(&gt))?;
    let corrupted = sirt.run(&moved, &cfg.sirt_reduced)?;
    let blur_matched = if cfg.emit_blur_matched {
        Some(sirt.run(&clean, &cfg.sirt_reduced)?)
    } else {
        None
    };
    let converged = match (&cfg.sirt_converged, &blur_matched) {
        // A longer run with the same settings passes through the reduced result.
        (Some(c), Some(b)) if continues(&cfg.sirt_reduced, c) => {
            Some(sirt.resume(b, cfg.sirt_reduced.n_iterations, &clean, c)?)
        }
        (Some(c), _) => Some(sirt.run(&clean, c)?),
        (None, _) => None,
    };
    Ok(GeneratedPair {
        ground_truth: gt,
        corrupted,
        blur_matched,
        converged,
        event,
        geometry: geom,
        clean_sinogram: clean,
        corrupted_sinogram: moved,
    })
}

fn continues(short: &SirtConfig, long: &SirtConfig) -> bool {
    long.n_iterations >= short.n_iterations
        && long.relaxation == short.relaxation
        && long.nonneg == short.nonneg
        && long.init == short.init
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// RAWF base path relative to the dataset root, without extension.
    pub path: String,
    pub checksum_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub index: usize,
    pub seeds: ItemSeeds,
    pub motion: MotionEvent,
    pub rotation_deg: f64,
    pub consistency_clean: ConsistencyScore,
    pub consistency_corrupted: ConsistencyScore,
    /// Keyed by role: ground_truth, corrupted, blur_matched, converged,
    /// cortical_mask, trabecular_mask.
    pub files: BTreeMap<String, FileRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub toolkit: String,
    pub version: String,
    pub config: PipelineConfig,
    pub geometry: ProjectionGeometry,
    pub items: Vec<ItemRecord>,
}

impl DatasetManifest {
    pub fn item(&self, id: &str) -> Option<&ItemRecord> {
        self.items.iter().find(|r| r.id == id)
    }
}

fn item_id(index: usize) -> String {
    format!("item_{index:04}")
}

fn write_item(cfg: &PipelineConfig, root: &Path, index: usize) -> Result<(ItemRecord, ProjectionGeometry)> {
    let id = item_id(index);
    let seeds = ItemSeeds::for_index(cfg.master_seed, index);
    let pair = generate_pair(cfg, &seeds)?;
    let mut files = BTreeMap::new();
    let mut put = |role: &str, checksum: String| {
        files.insert(
            role.to_string(),
            FileRecord {
                path: format!("{id}/{role}"),
                checksum_sha256: checksum,
            },
        );
    };
    let dir = root.join(&id);
    put("ground_truth", write_image(&pair.ground_truth, dir.join("ground_truth"))?);
    put("corrupted", write_image(&pair.corrupted, dir.join("corrupted"))?);
    if let Some(b) = &pair.blur_matched {
        put("blur_matched", write_image(b, dir.join("blur_matched"))?);
    }
    if let Some(c) = &pair.converged {
        put("converged", write_image(c, dir.join("converged"))?);
    }
    if matches!(cfg.phantom.kind, PhantomKind::Distal | PhantomKind::Diaphyseal) {
        let mut spec = cfg.phantom.clone();
        spec.seed = seeds.phantom;
        let (cort, trab) = make_mask_from_phantom(&spec)?;
        put("cortical_mask", write_mask(&cort, dir.join("cortical_mask"))?);
        put("trabecular_mask", write_mask(&trab, dir.join("trabecular_mask"))?);
    }
    let record = ItemRecord {
        id,
        index,
        seeds,
        motion: pair.event,
        rotation_deg: pair.event.rotation_rad.to_degrees(),
        consistency_clean: consistency_score(&pair.clean_sinogram)?,
        consistency_corrupted: consistency_score(&pair.corrupted_sinogram)?,
        files,
    };
    Ok((record, pair.geometry))
}

/// Generate `cfg.n_pairs` items under `out_dir` on `workers` threads.
/// Output bytes do not depend on the worker count. The manifest is written
/// last, after every item succeeded.
pub fn run_dataset(cfg: &PipelineConfig, out_dir: impl AsRef<Path>, workers: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    let root = out_dir.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<(ItemRecord, ProjectionGeometry)>> = pool.install(|| {
        (0..cfg.n_pairs)
            .into_par_iter()
            .map(|i| write_item(cfg, root, i).map_err(|e| e.in_item(item_id(i))))
            .collect()
    });
    let mut items = Vec::with_capacity(results.len());
    let mut geometry = None;
    for r in results {
        let (rec, g) = r?;
        geometry.get_or_insert(g);
        items.push(rec);
    }
    let manifest = DatasetManifest {
        toolkit: "sinoforge".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        geometry: geometry.expect("at least one item"),
        items,
    };
    let path = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Accepts the manifest file or the dataset directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<(DatasetManifest, PathBuf)> {
    let path = path.as_ref();
    let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: file.clone(),
        msg: e.to_string(),
    })?;
    let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, root))
}

/// Recompute every payload checksum. Returns one message per mismatch or
/// missing file.
pub fn verify_manifest(manifest: &DatasetManifest, root: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    for item in &manifest.items {
        for (role, f) in &item.files {
            let raw = root.join(format!("{}.raw", f.path));
            match fs::read(&raw) {
                Ok(bytes) if sha256_hex(&bytes) == f.checksum_sha256 => {}
                Ok(_) => problems.push(format!("{} {role}: checksum mismatch ({})", item.id, raw.display())),
                Err(e) => problems.push(format!("{} {role}: {} ({e})", item.id, raw.display())),
            }
        }
    }
    problems
}
