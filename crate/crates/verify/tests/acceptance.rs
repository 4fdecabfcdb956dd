//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::ffi::OsString;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ulmsens::cli::{generate_dataset, main_with_args, region_mask};
use ulmsens::{parallel, RunConfig};
use ulmsens_core::density::kernel_peak;
use ulmsens_core::inject::degrade_frame;
use ulmsens_core::rng::Xoshiro256StarStar;
use ulmsens_core::sweep::{AggregateRow, ResultRow};
use ulmsens_core::{
    aggregate, kde_density, psnr_masked, rasterize, ssim_map, AggregateTable, Dataset, ErrorProfile, Fov, GridGeometry,
    ImagingConfig, LocalizationFrame, Point, Region, RegionMask, SrMap, SsimParams, SweepResult,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Fixture {
    table: AggregateTable,
    result: SweepResult,
    cap: f64,
    seconds: f64,
}

fn fixture() -> Fixture {
    let config = RunConfig::default();
    let pool = parallel::build_pool(4).expect("pool");
    let start = Instant::now();
    let result = pool
        .install(|| -> ulmsens::CliResult<SweepResult> {
            let dataset = generate_dataset(&config)?;
            let (_, mask) = region_mask(&config, &dataset)?;
            let reference = rasterize(&dataset);
            Ok(parallel::run_sweep(
                &dataset,
                &config.sweep_spec()?,
                &mask,
                &reference,
                config.sweep_settings(),
            )?)
        })
        .expect("default sweep");
    let seconds = start.elapsed().as_secs_f64();
    Fixture {
        table: aggregate(&result),
        result,
        cap: config.sweep.psnr_cap_db,
        seconds,
    }
}

fn cell(table: &AggregateTable, fp: f64, fn_: f64, region: Region) -> &AggregateRow {
    table
        .rows
        .iter()
        .find(|r| r.fp_rate == fp && r.fn_rate == fn_ && r.region == region)
        .unwrap_or_else(|| panic!("no aggregate row at fp={fp} fn={fn_} {}", region.as_str()))
}

fn fn_fp_asymmetry(f: &Fixture) -> Outcome {
    let origin = cell(&f.table, 0.0, 0.0, Region::All).ssim_mean;
    let drop_fp = origin - cell(&f.table, 0.2, 0.0, Region::All).ssim_mean;
    let drop_fn = origin - cell(&f.table, 0.0, 0.2, Region::All).ssim_mean;
    let ratio = drop_fn / drop_fp;
    let fast = f.seconds < 300.0;
    outcome(
        ratio >= 2.0 && fast,
        format!(
            "SSIM drop fn=0.2 {drop_fn:.4e} / fp=0.2 {drop_fp:.4e} = {ratio:.3} (need >= 2); \
             default sweep {:.1} s on 4 threads (need < 300 s)",
            f.seconds
        ),
    )
}

fn dense_resilience(f: &Fixture) -> Outcome {
    let mut violations = 0;
    let mut first = None;
    for d in f.table.region_rows(Region::Dense) {
        let s = cell(&f.table, d.fp_rate, d.fn_rate, Region::Sparse);
        if d.ssim_mean < s.ssim_mean {
            violations += 1;
            first.get_or_insert((d.fp_rate, d.fn_rate, d.ssim_mean, s.ssim_mean));
        }
    }
    let worst = f
        .table
        .region_rows(Region::All)
        .min_by(|a, b| a.ssim_mean.total_cmp(&b.ssim_mean))
        .expect("rows");
    let dense = cell(&f.table, worst.fp_rate, worst.fn_rate, Region::Dense).ssim_mean;
    let sparse = cell(&f.table, worst.fp_rate, worst.fn_rate, Region::Sparse).ssim_mean;
    let ratio = dense / sparse;
    let cells = f.table.region_rows(Region::Dense).count();
    let mut detail = format!(
        "dense < sparse at {violations}/{cells} cells; worst cell fp={} fn={}: dense {dense:.6} / sparse {sparse:.6} = {ratio:.4} (need >= 1.5)",
        worst.fp_rate, worst.fn_rate
    );
    if let Some((fp, fn_, d, s)) = first {
        detail.push_str(&format!("; first violation fp={fp} fn={fn_}: {d:.6} < {s:.6}"));
    }
    outcome(violations == 0 && ratio >= 1.5, detail)
}

fn psnr_similarity(f: &Fixture) -> Outcome {
    let origin = cell(&f.table, 0.0, 0.0, Region::All).psnr_mean;
    let drop_fp = origin - cell(&f.table, 0.2, 0.0, Region::All).psnr_mean;
    let drop_fn = origin - cell(&f.table, 0.0, 0.2, Region::All).psnr_mean;
    let gap = (drop_fp - drop_fn).abs();
    let limit = 0.5 * drop_fp.max(drop_fn);
    outcome(
        gap <= limit,
        format!("PSNR drop fp=0.2 {drop_fp:.3} dB, fn=0.2 {drop_fn:.3} dB, gap {gap:.3} (need <= {limit:.3})"),
    )
}

fn unit_geometry(width: usize, height: usize) -> GridGeometry {
    GridGeometry {
        width,
        height,
        pixel_size: 1.0,
        x_min: 0.0,
        z_min: 0.0,
    }
}

fn random_map(width: usize, height: usize, seed: u64) -> SrMap {
    let mut rng = Xoshiro256StarStar::from_seed(seed);
    SrMap::from_values(
        unit_geometry(width, height),
        (0..width * height).map(|_| rng.next_f64()).collect(),
    )
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Per-window SSIM with 2-D weights and explicit centered moments.
fn ssim_direct(a: &SrMap, b: &SrMap, params: &SsimParams) -> Vec<f64> {
    let (w, h) = (a.width(), a.height());
    let r = params.window_radius as isize;
    let s2 = params.gaussian_sigma * params.gaussian_sigma;
    let offsets: Vec<(isize, isize)> = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect();
    let raw: Vec<f64> = offsets
        .iter()
        .map(|&(dx, dy)| (-((dx * dx + dy * dy) as f64) / (2.0 * s2)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let samples: Vec<(f64, f64, f64)> = offsets
                .iter()
                .zip(&weights)
                .map(|(&(dx, dy), &wt)| {
                    let x = mirror(col as isize + dx, w);
                    let y = mirror(row as isize + dy, h);
                    (wt, a.get(x, y), b.get(x, y))
                })
                .collect();
            let mx: f64 = samples.iter().map(|(wt, x, _)| wt * x).sum();
            let my: f64 = samples.iter().map(|(wt, _, y)| wt * y).sum();
            let vx: f64 = samples.iter().map(|(wt, x, _)| wt * (x - mx).powi(2)).sum();
            let vy: f64 = samples.iter().map(|(wt, _, y)| wt * (y - my).powi(2)).sum();
            let cxy: f64 = samples.iter().map(|(wt, x, y)| wt * (x - mx) * (y - my)).sum();
            out.push(((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)));
        }
    }
    out
}

fn metric_oracles() -> Outcome {
    let params = SsimParams::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for (size, seed) in [(16, 1601), (32, 3201)] {
        let a = random_map(size, size, seed);
        let noise = random_map(size, size, seed + 1);
        let b = SrMap::from_values(
            a.geometry,
            a.values
                .iter()
                .zip(&noise.values)
                .map(|(x, n)| 0.7 * x + 0.3 * n)
                .collect(),
        );
        let lib = ssim_map(&a, &b, &params).expect("ssim");
        let dev = lib
            .iter()
            .zip(ssim_direct(&a, &b, &params))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        pass &= dev <= 1e-9;
        parts.push(format!("SSIM {size}x{size} max dev {dev:.2e} (<= 1e-9)"));
    }
    let g = unit_geometry(16, 16);
    let a = SrMap::from_values(g, vec![0.5; 256]);
    let b = SrMap::from_values(g, vec![0.25; 256]);
    let constant = ssim_map(&a, &b, &params).expect("ssim");
    let dev = constant.iter().map(|v| (v - 0.800064).abs()).fold(0.0, f64::max);
    pass &= dev <= 1e-6;
    parts.push(format!("constant SSIM dev {dev:.2e} (<= 1e-6)"));
    let c = SrMap::from_values(g, vec![0.4; 256]);
    let psnr = psnr_masked(&a, &c, &RegionMask::all(16, 16), 1.0, 100.0).expect("psnr");
    let dev = (psnr - 20.0).abs();
    pass &= dev <= 1e-9;
    parts.push(format!("PSNR uniform 0.1 = {psnr:.12} dB (dev <= 1e-9)"));
    outcome(pass, parts.join("; "))
}

fn brute_kde(points: &[Point], at: Point, h: f64) -> f64 {
    let norm = 2.0 * std::f64::consts::PI * h * h;
    let sum: f64 = points
        .iter()
        .map(|p| (-((at.x - p.x).powi(2) + (at.z - p.z).powi(2)) / (2.0 * h * h)).exp() / norm)
        .sum();
    sum / points.len() as f64
}

fn kde_oracle() -> Outcome {
    let fov = Fov {
        x_min: 0.0,
        x_max: 6.4,
        z_min: 0.0,
        z_max: 6.4,
    };
    let config = ImagingConfig::new(1540.0, 1540.0, fov, 10).expect("config");
    let h = 0.5;
    let mut rng = Xoshiro256StarStar::from_seed(2024);
    let points: Vec<Point> = (0..100)
        .map(|_| {
            let r = 2.0 * h * rng.next_f64().sqrt();
            let a = 2.0 * std::f64::consts::PI * rng.next_f64();
            Point::new(3.2 + r * a.cos(), 3.2 + r * a.sin())
        })
        .collect();
    let dataset = Dataset::new(config, vec![LocalizationFrame::new(0, points.clone())]).expect("dataset");
    let density = kde_density(&dataset, h).expect("kde");
    let g = density.geometry;
    let mut worst_rel: f64 = 0.0;
    for k in 0..10 {
        let (col, row) = (22 + (k * 7) % 20, 22 + (k * 3) % 20);
        let oracle = brute_kde(&points, g.pixel_center(col, row), h);
        worst_rel = worst_rel.max(((density.values[row * g.width + col] - oracle) / oracle).abs());
    }

    let spread: Vec<Point> = (0..100)
        .map(|_| Point::new(6.4 * rng.next_f64(), 6.4 * rng.next_f64()))
        .collect();
    let h = 0.3;
    let dataset = Dataset::new(config, vec![LocalizationFrame::new(0, spread.clone())]).expect("dataset");
    let density = kde_density(&dataset, h).expect("kde");
    let mut worst_abs: f64 = 0.0;
    for row in 0..g.height {
        for col in 0..g.width {
            let oracle = brute_kde(&spread, g.pixel_center(col, row), h);
            worst_abs = worst_abs.max((density.values[row * g.width + col] - oracle).abs());
        }
    }
    let trunc = worst_abs / kernel_peak(h);
    outcome(
        worst_rel <= 1e-9 && trunc <= 1e-7,
        format!(
            "10 probes max rel dev {worst_rel:.2e} (<= 1e-9); truncation max {trunc:.2e} of peak over {} pixels (<= 1e-7)",
            g.len()
        ),
    )
}

fn is_ordered_subset(sub: &[Point], full: &[Point]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|p| it.any(|q| q == p))
}

fn injection_exactness() -> Outcome {
    let fov = Fov {
        x_min: -1.0,
        x_max: 2.0,
        z_min: 3.0,
        z_max: 4.5,
    };
    let mut rng = Xoshiro256StarStar::from_seed(6);
    let mut failures = Vec::new();
    for case in 0..1000u64 {
        let n = rng.below(400) as usize;
        // a fifth of the rates sit on multiples of 0.025 to exercise ties
        let rate = |rng: &mut Xoshiro256StarStar| {
            if rng.below(5) == 0 {
                rng.below(41) as f64 * 0.025
            } else {
                rng.next_f64()
            }
        };
        let (fp, fn_) = (rate(&mut rng), rate(&mut rng));
        let points: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.uniform_in(-1.0, 2.0), rng.uniform_in(3.0, 4.5)))
            .collect();
        let frame = LocalizationFrame::new(case, points);
        let k_fp = (fp * n as f64).round() as usize;
        let k_fn = (fn_ * n as f64).round() as usize;

        let profile = |fp: f64, fn_: f64| ErrorProfile::new(fp, fn_, case ^ 0xACCE).expect("profile");
        let only_fn = degrade_frame(&frame, &profile(0.0, fn_), &fov);
        let only_fp = degrade_frame(&frame, &profile(fp, 0.0), &fov);
        let both = degrade_frame(&frame, &profile(fp, fn_), &fov);
        let identity = degrade_frame(&frame, &profile(0.0, 0.0), &fov);

        let checks = [
            ("fn count", only_fn.len() == n - k_fn),
            ("fn subset", is_ordered_subset(&only_fn.points, &frame.points)),
            ("fp count", only_fp.len() == n + k_fp),
            ("fp keeps originals", only_fp.points[..n] == frame.points[..]),
            (
                "fp inside fov",
                only_fp.points[n..].iter().all(|p| fov.contains(p.x, p.z)),
            ),
            ("combined count", both.len() == n - k_fn + k_fp),
            (
                "combined survivors",
                is_ordered_subset(&both.points[..n - k_fn], &frame.points),
            ),
            ("identity", identity == frame),
        ];
        for (name, ok) in checks {
            if !ok {
                failures.push(format!("case {case} (n={n}, fp={fp}, fn={fn_}): {name}"));
            }
        }
    }
    let detail = match failures.first() {
        None => "1000 random (n, rate) cases: counts, subsets, FOV bounds and identities exact".to_string(),
        Some(first) => format!("{} failed checks, first: {first}", failures.len()),
    };
    outcome(failures.is_empty(), detail)
}

fn zero_error_cell(f: &Fixture) -> Outcome {
    let rows: Vec<&ResultRow> = f
        .result
        .rows
        .iter()
        .filter(|r| r.fp_rate == 0.0 && r.fn_rate == 0.0)
        .collect();
    let regions_seen = Region::ALL.iter().all(|g| rows.iter().any(|r| r.region == *g));
    let ssim_dev = rows.iter().map(|r| (r.ssim - 1.0).abs()).fold(0.0, f64::max);
    let psnr_ok = rows.iter().all(|r| r.psnr == f.cap);
    outcome(
        !rows.is_empty() && regions_seen && ssim_dev <= 1e-12 && psnr_ok,
        format!(
            "{} rows at (0, 0): max |SSIM - 1| {ssim_dev:.1e} (<= 1e-12), PSNR at cap {} dB: {psnr_ok}",
            rows.len(),
            f.cap
        ),
    )
}

fn sweep_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("read output dir")
        .map(|e| e.expect("entry"))
        .filter_map(|e| {
            let name = e.file_name().into_string().expect("utf-8 name");
            (name.ends_with(".csv") || name.ends_with(".pgm")).then(|| (name, fs::read(e.path()).expect("read")))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut outputs = Vec::new();
    let mut timings = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("threads{threads}"));
        let start = Instant::now();
        let args = [
            OsString::from("ulmsens"),
            "--threads".into(),
            threads.into(),
            "sweep".into(),
            "--out".into(),
            out.clone().into(),
        ];
        let code = main_with_args(args);
        timings.push(format!("{threads} thread(s) {:.1} s", start.elapsed().as_secs_f64()));
        if code != 0 {
            return outcome(false, format!("sweep at --threads {threads} exited with {code}"));
        }
        outputs.push(sweep_files(&out));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same_set = a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0);
    outcome(
        same_set && differing.is_empty() && names.len() == 11,
        format!(
            "{} CSV/PGM files compared byte for byte, differing: {:?} ({})",
            names.len(),
            differing,
            timings.join(", ")
        ),
    )
}

fn conservation() -> Outcome {
    let mut rng = Xoshiro256StarStar::from_seed(9);
    let mut failures = 0;
    let mut total = 0usize;
    for case in 0..100 {
        let width = 0.5 + 4.0 * rng.next_f64();
        let height = 0.5 + 4.0 * rng.next_f64();
        let x_min = -2.0 + 4.0 * rng.next_f64();
        let z_min = 4.0 * rng.next_f64();
        let fov = Fov {
            x_min,
            x_max: x_min + width,
            z_min,
            z_max: z_min + height,
        };
        let config = ImagingConfig::new(1540.0, 1540.0, fov, 1 + rng.below(12) as u32).expect("config");
        let frames: Vec<LocalizationFrame> = (0..rng.below(40))
            .map(|f| {
                let pts = (0..rng.below(200))
                    .map(|_| {
                        // boundary coordinates are legal and must still land in a pixel
                        match rng.below(20) {
                            0 => Point::new(fov.x_max, fov.z_max),
                            1 => Point::new(fov.x_min, fov.z_min),
                            _ => Point::new(
                                rng.uniform_in(fov.x_min, fov.x_max),
                                rng.uniform_in(fov.z_min, fov.z_max),
                            ),
                        }
                    })
                    .collect();
                LocalizationFrame::new(f, pts)
            })
            .collect();
        let dataset = Dataset::new(config, frames).expect("dataset");
        let map = rasterize(&dataset);
        total += dataset.total_points();
        if map.sum() != dataset.total_points() as f64 {
            failures += 1;
            eprintln!("case {case}: map total {} != {}", map.sum(), dataset.total_points());
        }
    }
    outcome(
        failures == 0,
        format!("100 random datasets, {total} localizations, {failures} totals differ"),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let fixture = fixture();
    let criteria: Vec<(&str, Check)> = vec![
        ("FN-vs-FP SSIM asymmetry", Box::new(|| fn_fp_asymmetry(&fixture))),
        ("dense-region resilience", Box::new(|| dense_resilience(&fixture))),
        ("PSNR similarity across axes", Box::new(|| psnr_similarity(&fixture))),
        ("metric oracles", Box::new(metric_oracles)),
        ("KDE oracle", Box::new(kde_oracle)),
        ("injection exactness", Box::new(injection_exactness)),
        ("zero-error cell exactness", Box::new(|| zero_error_cell(&fixture))),
        ("determinism across thread counts", Box::new(determinism)),
        ("rasterization conservation", Box::new(conservation)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
