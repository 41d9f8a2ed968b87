mod common;

use sinoforge::metrics::{psnr, ssim, SsimParams};
use sinoforge::morpho::{cortical_thickness, threshold_segment};
use sinoforge::motion::{inject_single_step_rotation, sample_motion_event, MotionSamplerConfig};
use sinoforge::phantom::{make_mask_from_phantom, make_phantom, PhantomSpec};
use sinoforge::pipeline::{generate_pair, ItemSeeds, PipelineConfig};
use sinoforge::projector::{default_geometry, radon_forward};
use sinoforge::recon::{ReconDims, Sirt, SirtConfig};
use sinoforge::Image;

#[test]
fn disk_converges_with_iterations() {
    let disk: Image = make_phantom(&PhantomSpec::disk(128, 0.4, 1.0)).unwrap();
    let geom = default_geometry(&disk, Some(180));
    let s = radon_forward(&disk, &geom).unwrap();
    let sirt = Sirt::new(&geom, ReconDims::of(&disk)).unwrap();
    let early = sirt.run(&s, &SirtConfig::with_iterations(20)).unwrap();
    let late = sirt.resume(&early, 20, &s, &SirtConfig::with_iterations(400)).unwrap();
    let (p20, p400) = (psnr(&disk, &early, 1.0).unwrap(), psnr(&disk, &late, 1.0).unwrap());
    assert!(p400 >= 30.0, "400 iterations: {p400:.2} dB");
    assert!(p20 < p400, "{p20:.2} dB vs {p400:.2} dB");
}

#[test]
fn sirt_independent_of_thread_count() {
    let img: Image = make_phantom(&PhantomSpec::distal(96, 4)).unwrap();
    let geom = default_geometry(&img, Some(120));
    let s = radon_forward(&img, &geom).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sirt = Sirt::new(&geom, ReconDims::of(&img)).unwrap();
            sirt.run(&s, &SirtConfig::with_iterations(8)).unwrap()
        })
    };
    let one = run(1);
    assert_eq!(one.values(), run(4).values());
}

#[test]
fn motion_lowers_ssim_against_blur_matched() {
    let mut cfg = PipelineConfig::desk();
    cfg.phantom = PhantomSpec::distal(64, 0);
    cfg.geometry.n_angles = Some(180);
    cfg.motion.span_views = 20;
    cfg.sirt_reduced = SirtConfig::with_iterations(15);
    cfg.sirt_converged = None;
    let (mut corrupted, mut matched) = (0.0, 0.0);
    for i in 0..20 {
        let pair = generate_pair(&cfg, &ItemSeeds::for_index(7, i)).unwrap();
        let p = SsimParams::with_range(1.0);
        corrupted += ssim(&pair.ground_truth, &pair.corrupted, &p).unwrap();
        matched += ssim(&pair.ground_truth, pair.blur_matched.as_ref().unwrap(), &p).unwrap();
    }
    assert!(corrupted < matched, "corrupted {corrupted:.3} vs blur-matched {matched:.3}");
}

#[test]
fn motion_worsens_cortical_thickness() {
    let mut held = 0;
    let mut lines = Vec::new();
    for seed in 0..20u64 {
        let spec = PhantomSpec::distal(128, seed);
        let truth: Image = make_phantom(&spec).unwrap();
        let (cortex, _) = make_mask_from_phantom(&spec).unwrap();
        let ct_true = cortical_thickness(&cortex, spec.spacing_mm).unwrap();
        let geom = default_geometry(&truth, Some(180));
        let clean = radon_forward(&truth, &geom).unwrap();
        let sampler = MotionSamplerConfig { span_views: 20, seed: 100 + seed, ..Default::default() };
        let ev = sample_motion_event(&sampler, &geom).unwrap();
        let moved = inject_single_step_rotation(&clean, &truth, &geom, &ev).unwrap();
        let sirt = Sirt::new(&geom, ReconDims::of(&truth)).unwrap();
        let corrupted = sirt.run(&moved, &SirtConfig::with_iterations(50)).unwrap();
        let converged = sirt.run(&clean, &SirtConfig::with_iterations(400)).unwrap();
        let ct = |img: &Image| {
            let (c, _) = threshold_segment(img, 0.85, 20).unwrap();
            cortical_thickness(&c, spec.spacing_mm).unwrap()
        };
        let (e_bad, e_good) = ((ct(&corrupted) - ct_true).abs(), (ct(&converged) - ct_true).abs());
        if e_bad >= e_good {
            held += 1;
        }
        lines.push(format!("seed {seed}: {e_bad:.4} vs {e_good:.4}"));
    }
    assert!(held >= 16, "held on {held}/20\n{}", lines.join("\n"));
}
