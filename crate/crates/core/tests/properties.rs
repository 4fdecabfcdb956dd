use proptest::prelude::*;

use ulmsens_core::density::{kde_rows, quantile};
use ulmsens_core::inject::{degrade_frame, error_count};
use ulmsens_core::metrics::psnr_from_mse;
use ulmsens_core::render::rasterize_into;
use ulmsens_core::rng::Xoshiro256StarStar;
use ulmsens_core::{
    apply_error_profile, inject_false_negatives, inject_false_positives, normalize_pair, psnr_masked, rasterize,
    ssim_map, ssim_masked, threshold_mask, Dataset, DensityMap, ErrorProfile, Fov, GridGeometry, ImagingConfig,
    LocalizationFrame, Point, RegionMask, SrMap, SsimParams,
};

fn fov() -> Fov {
    Fov {
        x_min: -1.0,
        x_max: 2.0,
        z_min: 0.5,
        z_max: 2.5,
    }
}

fn config() -> ImagingConfig {
    ImagingConfig::new(1540.0, 1540.0, fov(), 10).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0..=2.0f64, 0.5..=2.5f64).prop_map(|(x, z)| Point::new(x, z))
}

fn frame() -> impl Strategy<Value = LocalizationFrame> {
    (0u64..1000, prop::collection::vec(point(), 0..60)).prop_map(|(i, pts)| LocalizationFrame::new(i, pts))
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(point(), 0..25), 0..8).prop_map(|frames| {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, pts)| LocalizationFrame::new(i as u64 * 2, pts))
            .collect();
        Dataset::new(config(), frames).unwrap()
    })
}

fn image(width: usize, height: usize) -> impl Strategy<Value = SrMap> {
    prop::collection::vec(0.0..=1.0f64, width * height).prop_map(move |v| {
        SrMap::from_values(
            GridGeometry {
                width,
                height,
                pixel_size: 1.0,
                x_min: 0.0,
                z_min: 0.0,
            },
            v,
        )
    })
}

fn is_subsequence(sub: &[Point], full: &[Point]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|p| it.any(|q| q == p))
}

proptest! {
    #[test]
    fn fn_output_is_ordered_subset_with_exact_count(f in frame(), rate in 0.0..=1.0f64, seed: u64) {
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        let out = inject_false_negatives(&f, rate, &mut rng);
        prop_assert_eq!(out.len(), f.len() - error_count(rate, f.len()));
        prop_assert!(is_subsequence(&out.points, &f.points));
        prop_assert_eq!(out.frame_index, f.frame_index);
    }

    #[test]
    fn fp_output_keeps_originals_first(f in frame(), rate in 0.0..=1.0f64, seed: u64) {
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        let out = inject_false_positives(&f, rate, &fov(), &mut rng);
        prop_assert_eq!(out.len(), f.len() + error_count(rate, f.len()));
        prop_assert_eq!(&out.points[..f.len()], &f.points[..]);
        for p in &out.points[f.len()..] {
            prop_assert!(fov().contains(p.x, p.z));
        }
    }

    #[test]
    fn degrade_counts_anchor_on_original_size(f in frame(), fp in 0.0..=1.0f64, fnr in 0.0..=1.0f64, seed: u64) {
        let profile = ErrorProfile::new(fp, fnr, seed).unwrap();
        let out = degrade_frame(&f, &profile, &fov());
        let n = f.len();
        let survivors = n - error_count(fnr, n);
        prop_assert_eq!(out.len(), survivors + error_count(fp, n));
        prop_assert!(is_subsequence(&out.points[..survivors], &f.points));
        prop_assert_eq!(&degrade_frame(&f, &profile, &fov()), &out);
    }

    #[test]
    fn zero_profile_is_identity(d in dataset(), seed: u64) {
        let profile = ErrorProfile::new(0.0, 0.0, seed).unwrap();
        prop_assert_eq!(apply_error_profile(&d, &profile), d);
    }

    #[test]
    fn frames_degrade_independently(d in dataset(), seed: u64) {
        // dropping other frames does not change a frame's draws
        let profile = ErrorProfile::new(0.3, 0.2, seed).unwrap();
        let whole = apply_error_profile(&d, &profile);
        for (k, f) in d.frames().iter().enumerate() {
            let alone = Dataset::new(config(), vec![f.clone()]).unwrap();
            let single = apply_error_profile(&alone, &profile);
            prop_assert_eq!(&single.frames()[0], &whole.frames()[k]);
        }
    }

    #[test]
    fn rasterize_conserves_mass(d in dataset()) {
        let map = rasterize(&d);
        prop_assert_eq!(map.sum(), d.total_points() as f64);
        prop_assert!(map.values.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn rasterize_ignores_order(d in dataset(), seed: u64) {
        let mut points: Vec<Point> = d.points().copied().collect();
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        for i in (1..points.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            points.swap(i, j);
        }
        let mut shuffled = SrMap::zeros(GridGeometry::from_config(&config()));
        rasterize_into(&mut shuffled, &points);
        prop_assert_eq!(shuffled, rasterize(&d));
    }

    #[test]
    fn normalization_preserves_ratios(a in image(6, 5), b in image(6, 5), scale in 0.1..10.0f64) {
        let raw_a = SrMap::from_values(a.geometry, a.values.iter().map(|v| v * scale).collect());
        let raw_b = SrMap::from_values(b.geometry, b.values.iter().map(|v| v * scale).collect());
        let (na, nb) = normalize_pair(&raw_a, &raw_b).unwrap();
        let peak = raw_a.max();
        prop_assume!(peak > 0.0);
        prop_assert!((na.max() - 1.0).abs() <= 1e-15);
        for (x, y) in raw_b.values.iter().zip(&nb.values) {
            prop_assert!((y - (x / peak).min(1.0)).abs() <= 1e-15);
        }
        let (again_a, again_b) = normalize_pair(&na, &nb).unwrap();
        prop_assert_eq!(again_a, na);
        prop_assert_eq!(again_b, nb);
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(a in image(13, 9), b in image(13, 9)) {
        let params = SsimParams::default();
        let ab = ssim_map(&a, &b, &params).unwrap();
        let ba = ssim_map(&b, &a, &params).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - y).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(x));
        }
        let all = RegionMask::all(13, 9);
        let m1 = ssim_masked(&a, &b, &params, &all).unwrap();
        let m2 = ssim_masked(&b, &a, &params, &all).unwrap();
        prop_assert!((m1 - m2).abs() <= 1e-12);
    }

    #[test]
    fn psnr_drops_when_error_grows(a in image(7, 7), e in image(7, 7), s in 1.001..50.0f64) {
        let all = RegionMask::all(7, 7);
        prop_assume!(e.values.iter().any(|v| *v > 1e-3));
        let plus = |k: f64| SrMap::from_values(a.geometry, a.values.iter().zip(&e.values).map(|(x, d)| x + 0.01 * k * d).collect());
        let small = psnr_masked(&a, &plus(1.0), &all, 1.0, 100.0).unwrap();
        let large = psnr_masked(&a, &plus(s), &all, 1.0, 100.0).unwrap();
        prop_assert!(large < small || small == 100.0);
    }

    #[test]
    fn psnr_mse_identity(mse in 1e-9..10.0f64, peak in 0.1..10.0f64) {
        let expected = 10.0 * libm::log10(peak * peak) - 10.0 * libm::log10(mse);
        prop_assert_eq!(psnr_from_mse(mse, peak, f64::INFINITY), expected);
        prop_assert!(psnr_from_mse(mse, peak, 100.0) <= 100.0);
    }

    #[test]
    fn mask_monotone_in_quantile(values in prop::collection::vec(0.0..5.0f64, 20), q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let density = DensityMap {
            geometry: GridGeometry { width: 5, height: 4, pixel_size: 1.0, x_min: 0.0, z_min: 0.0 },
            values: values.clone(),
            bandwidth: 1.0,
        };
        let loose = threshold_mask(&density, lo).unwrap();
        let tight = threshold_mask(&density, hi).unwrap();
        for (l, t) in loose.dense.iter().zip(&tight.dense) {
            prop_assert!(!t || *l);
        }
        let sparse = loose.complement();
        for (d, s) in loose.dense.iter().zip(&sparse.dense) {
            prop_assert!(d ^ s);
        }
        prop_assert!(quantile(&values, lo) <= quantile(&values, hi));
    }

    #[test]
    fn kde_nonnegative_and_sub_normalized(pts in prop::collection::vec(point(), 1..30), h in 0.2..0.6f64) {
        let g = GridGeometry::from_config(&config());
        let mut values = vec![0.0; g.len()];
        kde_rows(&pts, &g, h, 0, &mut values);
        prop_assert!(values.iter().all(|v| *v >= 0.0));
        let mass: f64 = values.iter().sum::<f64>() * g.pixel_size * g.pixel_size;
        prop_assert!(mass <= 1.0 + 1e-6);
    }
}
