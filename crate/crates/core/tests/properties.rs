mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinoforge::grid::ImageGrid;
use sinoforge::metrics::{psnr, ssim, vif, SsimParams, VifParams};
use sinoforge::morpho::{dice, hausdorff, jaccard};
use sinoforge::motion::{inject_single_step_rotation, MotionEvent};
use sinoforge::phantom::{make_phantom, PhantomSpec};
use sinoforge::projector::{backproject, radon_forward};
use sinoforge::recon::{ReconDims, Sirt, SirtConfig};
use sinoforge::{BinaryMask, Image, ProjectionGeometry};

fn random_image(rng: &mut ChaCha8Rng, n: usize) -> Image {
    ImageGrid::from_fn(n, n, 1.0, |_, _| rng.gen::<f64>()).unwrap()
}

fn smooth_pair(seed: u64, n: usize) -> (Image, Image) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fx, fy, ph) = (rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.3), rng.gen::<f64>());
    let a = ImageGrid::from_fn(n, n, 1.0, |x, y| ((x as f64 * fx + ph).sin() * (y as f64 * fy).cos() + 1.0) * 0.5).unwrap();
    let b = a.with_values(a.values().iter().map(|v| v + 0.1 * rng.gen::<f64>()).collect()).unwrap();
    (a, b)
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(n, n, 1.0, |_, _| rng.gen_bool(p))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projector_adjoint(seed in any::<u64>(), n in 8usize..24, views in 3usize..20, spacing in 0.5f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_image(&mut rng, n);
        let f = ImageGrid::new(n, n, spacing, f.into_values()).unwrap();
        let det = (n as f64 * std::f64::consts::SQRT_2).ceil() as usize + 2;
        let geom = ProjectionGeometry::half_turn(views, det, spacing).unwrap();
        let rf = radon_forward(&f, &geom).unwrap();
        let s = rf.with_values((0..rf.values().len()).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
        let rts = backproject(&s, &geom, n, n, spacing).unwrap();
        let lhs = dot(rf.values(), s.values());
        let rhs = dot(f.values(), rts.values());
        prop_assert!((lhs - rhs).abs() <= 1e-6 * (lhs.abs() + rhs.abs()));
    }

    #[test]
    fn projector_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_image(&mut rng, 16), random_image(&mut rng, 16));
        let geom = ProjectionGeometry::half_turn(12, 25, 1.0).unwrap();
        let combo = f.with_values(f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let lhs = radon_forward(&combo, &geom).unwrap();
        let (rf, rg) = (radon_forward(&f, &geom).unwrap(), radon_forward(&g, &geom).unwrap());
        for ((l, x), y) in lhs.values().iter().zip(rf.values()).zip(rg.values()) {
            prop_assert!((l - (a * x + b * y)).abs() <= 1e-9 * (1.0 + l.abs()));
        }
        let s = rf.with_values(rf.values().iter().map(|v| a * v).collect()).unwrap();
        let bs = backproject(&s, &geom, 16, 16, 1.0).unwrap();
        let bf = backproject(&rf, &geom, 16, 16, 1.0).unwrap();
        for (x, y) in bs.values().iter().zip(bf.values()) {
            prop_assert!((x - a * y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn injection_is_local(seed in any::<u64>(), start in 0usize..30, span in 0usize..12, deg in -9.0f64..9.0) {
        let img: Image = make_phantom(&PhantomSpec::distal(32, seed)).unwrap();
        let geom = ProjectionGeometry::half_turn(40, 46, 1.0).unwrap();
        let clean = radon_forward(&img, &geom).unwrap();
        let ev = MotionEvent { rotation_rad: deg.to_radians(), start_view: start, span_views: span.min(40 - start) };
        let moved = inject_single_step_rotation(&clean, &img, &geom, &ev).unwrap();
        let again = inject_single_step_rotation(&clean, &img, &geom, &ev).unwrap();
        prop_assert_eq!(moved.values(), again.values());
        for v in (0..40).filter(|v| !ev.views().contains(v)) {
            prop_assert_eq!(clean.view(v), moved.view(v));
        }
    }

    #[test]
    fn phantom_pure_and_nonnegative(seed in any::<u64>(), diaphyseal in any::<bool>()) {
        let spec = if diaphyseal { PhantomSpec::diaphyseal(48, seed) } else { PhantomSpec::distal(48, seed) };
        let a: Image = make_phantom(&spec).unwrap();
        let b: Image = make_phantom(&spec).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sirt_residual_non_increasing(seed in any::<u64>(), relax in 0.2f64..1.0) {
        let img: Image = make_phantom(&PhantomSpec::distal(24, seed)).unwrap();
        let geom = ProjectionGeometry::half_turn(30, 35, 1.0).unwrap();
        let s = radon_forward(&img, &geom).unwrap();
        let sirt = Sirt::<f64>::new(&geom, ReconDims::square(24, 1.0)).unwrap();
        let cfg = SirtConfig { relaxation: relax, nonneg: false, ..SirtConfig::with_iterations(12) };
        let mut f = vec![0.0; 24 * 24];
        let mut last = f64::INFINITY;
        for k in 0..12 {
            sirt.step(&mut f, &s, &cfg, k).unwrap();
            let rf = radon_forward(&img.with_values(f.clone()).unwrap(), &geom).unwrap();
            let r = rf.values().iter().zip(s.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(r <= last * (1.0 + 1e-12), "iteration {k}: {r} > {last}");
            last = r;
        }
    }

    #[test]
    fn sirt_matches_dense_matrix(seed in any::<u64>(), iters in 1usize..=5, relax in 0.3f64..1.0, nonneg in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = ProjectionGeometry::half_turn(10, 13, 1.0).unwrap();
        let truth = random_image(&mut rng, 8);
        let s = radon_forward(&truth, &geom).unwrap();
        let a = common::dense_matrix(&geom, 8, 8, 1.0);
        let expect = common::dense_sirt(&a, s.values(), &common::circle_support(8, 8), iters, relax, nonneg);
        let cfg = SirtConfig { relaxation: relax, nonneg, ..SirtConfig::with_iterations(iters) };
        let got = Sirt::<f64>::new(&geom, ReconDims::square(8, 1.0)).unwrap().run(&s, &cfg).unwrap();
        prop_assert!(common::rel_l2(got.values(), &expect) <= 1e-5);
    }

    #[test]
    fn ssim_bounded_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_image(&mut rng, 24), random_image(&mut rng, 24));
        let p = SsimParams::with_range(1.0);
        let ab = ssim(&a, &b, &p).unwrap();
        let ba = ssim(&b, &a, &p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((ssim(&a, &a, &p).unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!(ab < 1.0 - 1e-9);
    }

    #[test]
    fn metrics_rescaling_invariant(seed in any::<u64>(), scale in 0.1f64..50.0, offset in -10.0f64..10.0) {
        let (a, b) = smooth_pair(seed, 48);
        let map = |img: &Image| img.with_values(img.values().iter().map(|v| scale * v + offset).collect()).unwrap();
        let (sa, sb) = (map(&a), map(&b));
        let p0 = psnr(&a, &b, 1.0).unwrap();
        let p1 = psnr(&sa, &sb, scale).unwrap();
        prop_assert!((p0 - p1).abs() <= 1e-9 * p0.abs());
        let stretch = |img: &Image| img.with_values(img.values().iter().map(|v| scale * v).collect()).unwrap();
        let s0 = ssim(&a, &b, &SsimParams::with_range(1.0)).unwrap();
        let s1 = ssim(&stretch(&a), &stretch(&b), &SsimParams::with_range(scale)).unwrap();
        prop_assert!((s0 - s1).abs() <= 1e-6);
        let v0 = vif(&a, &b, &VifParams::with_range(1.0)).unwrap();
        let v1 = vif(&sa, &sb, &VifParams::with_range(scale)).unwrap();
        prop_assert!((v0 - v1).abs() <= 1e-6);
    }

    #[test]
    fn overlap_measures(seed in any::<u64>(), p in 0.05f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_mask(&mut rng, 20, p), random_mask(&mut rng, 20, p));
        let d = dice(&a, &b).unwrap();
        let j = jaccard(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&j));
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        prop_assert_eq!(j, jaccard(&b, &a).unwrap());
        prop_assert!((j - d / (2.0 - d)).abs() <= 1e-12);
        prop_assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    }
}
