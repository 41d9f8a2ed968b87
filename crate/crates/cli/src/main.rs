use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sinoforge::grid::{
    export_png, read_image, read_mask, read_sinogram, write_image, write_mask, write_sinogram, ProjectionGeometry,
    Window,
};
use sinoforge::metrics::{evaluate, sobel_edges, sobel_magnitude};
use sinoforge::morpho::{morpho_report, seg_report, threshold_segment, Calibration};
use sinoforge::motion::{
    consistency_score, inject_single_step_rotation, sample_motion_event, MotionEvent, MotionSamplerConfig,
};
use sinoforge::phantom::{make_mask_from_phantom, make_phantom, PhantomKind, PhantomSpec};
use sinoforge::pipeline::{
    evaluate_dataset, read_manifest, resolve_workers, run_dataset, verify_manifest, PipelineConfig, Which,
};
use sinoforge::projector::{add_noise, default_geometry, radon_forward, rotate_image, NoiseSpec};
use sinoforge::recon::{fbp_reconstruct, sirt_reconstruct, RampFilter, ReconDims, SirtConfig};
use sinoforge::{Image, Sino};

#[derive(Parser)]
#[command(name = "sinoforge", version, about = "Synthetic motion-corrupted CT slices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a phantom image (and optionally its masks and a PNG preview).
    Phantom(PhantomArgs),
    /// Forward-project an image to a sinogram.
    Project(ProjectArgs),
    /// Rotate an image about its centre.
    Rotate(RotateArgs),
    /// Splice a single-step rotation into a sinogram.
    Corrupt(CorruptArgs),
    /// 0 / pi consistency of a sinogram as JSON {ssd, ncc}.
    ScoreMotion(ScoreArgs),
    /// Reconstruct an image from a sinogram.
    Reconstruct(ReconstructArgs),
    /// PSNR, SSIM and VIF of one pair (JSON) or of a whole dataset (CSV).
    Metrics(MetricsArgs),
    /// Sobel edge map (squared magnitude unless --sqrt).
    Edges(EdgesArgs),
    /// Threshold segmentation into cortical and trabecular masks.
    Segment(SegmentArgs),
    /// Ct.Th, Tb.N and compartment BMD as JSON.
    Morpho(MorphoArgs),
    /// Dice, Jaccard and Hausdorff distance between two masks as JSON.
    Segmetrics(SegmetricsArgs),
    /// Write a 16-bit PNG of an image.
    Png(PngArgs),
    /// Generate a paired dataset.
    GenDataset(GenArgs),
    /// Score a dataset against its ground truth (CSV).
    Evaluate(EvaluateArgs),
    /// Recompute every checksum listed in a dataset manifest.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: PhantomKind,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    spacing: Option<f64>,
    /// Disk radius as a fraction of the half-width.
    #[arg(long, default_value_t = 0.4)]
    radius_frac: f64,
    /// Plate period in pixels.
    #[arg(long, default_value_t = 10)]
    period: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write `<out>_cortical` and `<out>_trabecular` masks.
    #[arg(long)]
    masks: bool,
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    detectors: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RotateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    angle_deg: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    /// Clean sinogram.
    #[arg(long = "in")]
    input: PathBuf,
    /// Image the sinogram was projected from.
    #[arg(long)]
    image: PathBuf,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "sample", required_unless_present = "sample")]
    angle_deg: Option<f64>,
    /// Draw the rotation and start view from the default sampler.
    #[arg(long)]
    sample: bool,
    #[arg(long, default_value_t = 0, requires = "sample")]
    seed: u64,
    #[arg(long)]
    span: Option<usize>,
    #[arg(long, conflicts_with = "sample")]
    start: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Sirt,
    Fbp,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Sirt)]
    algo: Algo,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long, default_value_t = 1.0)]
    relax: f64,
    #[arg(long, default_value = "ramlak", value_parser = parse_filter)]
    filter: RampFilter,
    /// Output width and height; defaults to the largest square the detector covers.
    #[arg(long)]
    size: Option<usize>,
    /// Output pixel pitch; defaults to the detector pitch.
    #[arg(long)]
    spacing: Option<f64>,
    /// Allow negative values in SIRT.
    #[arg(long)]
    allow_negative: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long = "ref", conflicts_with = "manifest", requires = "test")]
    reference: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Data range; defaults to the reference's max - min.
    #[arg(long)]
    range: Option<f64>,
    #[command(flatten)]
    batch: BatchArgs,
}

#[derive(Args)]
struct BatchArgs {
    /// Manifest file or dataset directory.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = WhichArg::Corrupted)]
    which: WhichArg,
    /// Directory of external images, named `<item id>.raw/.json`.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Corrupted,
    #[value(name = "blur_matched", alias = "blur-matched")]
    BlurMatched,
    Converged,
    External,
}

#[derive(Args)]
struct EdgesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    sqrt: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    threshold: f64,
    /// Components smaller than this are discarded.
    #[arg(long, default_value_t = 1)]
    min_component: usize,
    #[arg(long)]
    out_cortical: PathBuf,
    #[arg(long)]
    out_trabecular: PathBuf,
}

#[derive(Args)]
struct MorphoArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    cortical: PathBuf,
    #[arg(long)]
    trabecular: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    intercept: f64,
    /// Trabecular solid threshold; Otsu within the trabecular mask by default.
    #[arg(long, allow_hyphen_values = true)]
    tb_threshold: Option<f64>,
}

#[derive(Args)]
struct SegmetricsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct PngArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// TOML or JSON pipeline configuration.
    #[arg(long, required_unless_present = "profile")]
    config: Option<PathBuf>,
    /// Built-in profile instead of a config file.
    #[arg(long, value_enum, conflicts_with = "config")]
    profile: Option<Profile>,
    #[arg(long)]
    n_pairs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; SINOFORGE_WORKERS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Paper,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    batch: BatchArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn parse_kind(s: &str) -> Result<PhantomKind, String> {
    s.parse().map_err(|e: sinoforge::Error| e.to_string())
}

fn parse_filter(s: &str) -> Result<RampFilter, String> {
    s.parse().map_err(|e: sinoforge::Error| e.to_string())
}

fn print_json(v: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn phantom(a: PhantomArgs) -> anyhow::Result<()> {
    let mut spec = match a.kind {
        PhantomKind::Distal => PhantomSpec::distal(a.size, a.seed),
        PhantomKind::Diaphyseal => PhantomSpec::diaphyseal(a.size, a.seed),
        PhantomKind::Disk => PhantomSpec::disk(a.size, a.radius_frac, 1.0),
        PhantomKind::Plates => PhantomSpec::plates(a.size, a.period),
    };
    if let Some(s) = a.spacing {
        spec.spacing_mm = s;
    }
    let img: Image = make_phantom(&spec)?;
    write_image(&img, &a.out)?;
    if a.masks {
        let (cort, trab) = make_mask_from_phantom(&spec)?;
        write_mask(&cort, with_suffix(&a.out, "_cortical"))?;
        write_mask(&trab, with_suffix(&a.out, "_trabecular"))?;
    }
    if let Some(png) = a.png {
        let (lo, hi) = img.min_max();
        let hi = if hi > lo { hi } else { lo + 1.0 };
        export_png(&img, png, Window::new(lo, hi)?)?;
    }
    Ok(())
}

fn project(a: ProjectArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.input)?;
    let mut geom = default_geometry(&img, a.angles);
    if let Some(n) = a.detectors {
        geom.n_detectors = n;
    }
    let mut sino = radon_forward(&img, &geom)?;
    if a.noise_sigma > 0.0 {
        sino = add_noise(
            &sino,
            &NoiseSpec {
                sigma: a.noise_sigma,
                seed: a.noise_seed,
            },
        )?;
    }
    write_sinogram(&sino, &a.out)?;
    Ok(())
}

fn rotate(a: RotateArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.input)?;
    write_image(&rotate_image(&img, a.angle_deg.to_radians())?, &a.out)?;
    Ok(())
}

fn corrupt(a: CorruptArgs) -> anyhow::Result<()> {
    let sino: Sino = read_sinogram(&a.input)?;
    let img: Image = read_image(&a.image)?;
    let geom = ProjectionGeometry::from_sinogram(&sino)?;
    let n = geom.n_angles;
    let event = if a.sample {
        let mut cfg = MotionSamplerConfig {
            seed: a.seed,
            ..Default::default()
        };
        // Keep the default span-to-scan ratio unless a span is given.
        cfg.span_views = a.span.unwrap_or((cfg.span_views * n).div_ceil(1800).min(n));
        sample_motion_event(&cfg, &geom)?
    } else {
        let span = a.span.unwrap_or(0);
        MotionEvent {
            rotation_rad: a.angle_deg.unwrap_or(0.0).to_radians(),
            start_view: a.start.unwrap_or(n.saturating_sub(span) / 2),
            span_views: span,
        }
    };
    let out = inject_single_step_rotation(&sino, &img, &geom, &event)?;
    write_sinogram(&out, &a.out)?;
    print_json(&json!({
        "rotation_rad": event.rotation_rad,
        "rotation_deg": event.rotation_rad.to_degrees(),
        "start_view": event.start_view,
        "span_views": event.span_views,
    }))
}

fn score_motion(a: ScoreArgs) -> anyhow::Result<()> {
    let sino: Sino = read_sinogram(&a.input)?;
    print_json(&consistency_score(&sino)?)
}

fn reconstruct(a: ReconstructArgs) -> anyhow::Result<()> {
    let sino: Sino = read_sinogram(&a.input)?;
    let geom = ProjectionGeometry::from_sinogram(&sino)?;
    let spacing = a.spacing.unwrap_or(geom.detector_spacing_mm);
    let size = match a.size {
        Some(s) => s,
        None => (geom.detector_extent_mm() / spacing / std::f64::consts::SQRT_2).floor() as usize,
    };
    let dims = ReconDims::square(size, spacing);
    let img: Image = match a.algo {
        Algo::Sirt => {
            let cfg = SirtConfig {
                relaxation: a.relax,
                nonneg: !a.allow_negative,
                ..SirtConfig::with_iterations(a.iters)
            };
            sirt_reconstruct(&sino, &geom, dims, &cfg)?
        }
        Algo::Fbp => fbp_reconstruct(&sino, &geom, dims, a.filter)?,
    };
    write_image(&img, &a.out)?;
    Ok(())
}

fn which(b: &BatchArgs) -> anyhow::Result<Which> {
    Ok(match b.which {
        WhichArg::Corrupted => Which::Corrupted,
        WhichArg::BlurMatched => Which::BlurMatched,
        WhichArg::Converged => Which::Converged,
        WhichArg::External => match &b.dir {
            Some(d) => Which::External(d.clone()),
            None => bail!(sinoforge::Error::Argument("--which external needs --dir".into())),
        },
    })
}

fn batch(b: BatchArgs) -> anyhow::Result<()> {
    let Some(manifest) = &b.manifest else {
        bail!(sinoforge::Error::Argument("--manifest is required".into()));
    };
    let report = evaluate_dataset(manifest, &which(&b)?)?;
    let csv = report.to_csv();
    match &b.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn metrics(a: MetricsArgs) -> anyhow::Result<()> {
    match (a.reference, a.test) {
        (Some(r), Some(t)) => {
            let reference: Image = read_image(r)?;
            let test: Image = read_image(t)?;
            print_json(&evaluate(&reference, &test, a.range)?)
        }
        _ => batch(a.batch),
    }
}

fn edges(a: EdgesArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.input)?;
    let out = if a.sqrt { sobel_magnitude(&img)? } else { sobel_edges(&img)? };
    write_image(&out, &a.out)?;
    Ok(())
}

fn segment(a: SegmentArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.input)?;
    let (cort, trab) = threshold_segment(&img, a.threshold, a.min_component)?;
    write_mask(&cort, &a.out_cortical)?;
    write_mask(&trab, &a.out_trabecular)?;
    print_json(&json!({
        "threshold": a.threshold,
        "cortical_px": cort.count(),
        "trabecular_px": trab.count(),
    }))
}

fn morpho(a: MorphoArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.image)?;
    let cort = read_mask(&a.cortical)?;
    let trab = read_mask(&a.trabecular)?;
    let cal = Calibration {
        slope: a.slope,
        intercept: a.intercept,
    };
    print_json(&morpho_report(&img, &cort, &trab, &cal, a.tb_threshold)?)
}

fn segmetrics(a: SegmetricsArgs) -> anyhow::Result<()> {
    print_json(&seg_report(&read_mask(&a.a)?, &read_mask(&a.b)?)?)
}

fn png(a: PngArgs) -> anyhow::Result<()> {
    let img: Image = read_image(&a.input)?;
    let (lo, hi) = img.min_max();
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let window = Window::new(a.min.unwrap_or(lo), a.max.unwrap_or(hi))?;
    export_png(&img, &a.out, window)?;
    Ok(())
}

fn gen_dataset(a: GenArgs) -> anyhow::Result<()> {
    let mut cfg = match (&a.config, a.profile) {
        (Some(p), _) => PipelineConfig::load(p)?,
        (None, Some(Profile::Paper)) => PipelineConfig::paper(),
        (None, _) => PipelineConfig::desk(),
    };
    if let Some(n) = a.n_pairs {
        cfg.n_pairs = n;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    let workers = resolve_workers(a.workers);
    let manifest = run_dataset(&cfg, &a.out, workers)?;
    eprintln!(
        "wrote {} items to {} with {workers} worker(s)",
        manifest.items.len(),
        a.out.display()
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> anyhow::Result<()> {
    let (manifest, root) = read_manifest(&a.manifest)?;
    let problems = verify_manifest(&manifest, &root);
    if !problems.is_empty() {
        bail!(sinoforge::Error::Validation(format!(
            "{} file(s) failed verification:\n  {}",
            problems.len(),
            problems.join("\n  ")
        )));
    }
    let files: usize = manifest.items.iter().map(|i| i.files.len()).sum();
    println!("{} items, {files} files verified", manifest.items.len());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<sinoforge::Error>() {
            return err.exit_code() as u8;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phantom(a) => phantom(a),
        Command::Project(a) => project(a),
        Command::Rotate(a) => rotate(a),
        Command::Corrupt(a) => corrupt(a),
        Command::ScoreMotion(a) => score_motion(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Metrics(a) => metrics(a),
        Command::Edges(a) => edges(a),
        Command::Segment(a) => segment(a),
        Command::Morpho(a) => morpho(a),
        Command::Segmetrics(a) => segmetrics(a),
        Command::Png(a) => png(a),
        Command::GenDataset(a) => gen_dataset(a),
        Command::Evaluate(a) => batch(a.batch),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already carry their causes in the message.
            if e.downcast_ref::<sinoforge::Error>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
