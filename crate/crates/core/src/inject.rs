//! Controlled detection errors: dropping true localizations (false
//! negatives) and adding spurious ones (false positives).
//!
//! Both counts are fractions of the frame's original ground-truth count,
//! rounded half away from zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Fov, LocalizationFrame, Point};
use crate::error::{Error, Result};
use crate::rng::{derive_stream_seed, Xoshiro256StarStar};

/// Sub-stream multiplier for per-frame injection seeds.
pub const INJECT_STREAM_MULTIPLIER: u64 = 0xD1B5_4A32_D192_ED03;

/// FP/FN rates plus the seed their draws derive from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorProfile {
    fp_rate: f64,
    fn_rate: f64,
    seed: u64,
}

impl ErrorProfile {
    pub fn new(fp_rate: f64, fn_rate: f64, seed: u64) -> Result<Self> {
        check_rate("fp_rate", fp_rate)?;
        check_rate("fn_rate", fn_rate)?;
        Ok(Self { fp_rate, fn_rate, seed })
    }

    pub fn fp_rate(&self) -> f64 {
        self.fp_rate
    }

    pub fn fn_rate(&self) -> f64 {
        self.fn_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

pub(crate) fn check_rate(name: &str, rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {rate}"
        )))
    }
}

/// `round_half_away_from_zero(rate * n)`.
#[inline]
pub fn error_count(rate: f64, n: usize) -> usize {
    let k = libm::round(rate * n as f64) as usize;
    k.min(n)
}

/// Removes `error_count(fn_rate, n)` points chosen uniformly without
/// replacement; survivors keep their order.
pub fn inject_false_negatives(
    frame: &LocalizationFrame,
    fn_rate: f64,
    rng: &mut Xoshiro256StarStar,
) -> LocalizationFrame {
    let n = frame.len();
    let k = error_count(fn_rate, n);
    LocalizationFrame::new(frame.frame_index, drop_random(&frame.points, k, rng))
}

fn drop_random(points: &[Point], k: usize, rng: &mut Xoshiro256StarStar) -> Vec<Point> {
    let n = points.len();
    if k == 0 {
        return points.to_vec();
    }
    // partial Fisher-Yates over indices; the first k slots are the removed set
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        indices.swap(i, j);
    }
    let mut removed = vec![false; n];
    for &idx in &indices[..k] {
        removed[idx] = true;
    }
    points
        .iter()
        .zip(&removed)
        .filter(|(_, &gone)| !gone)
        .map(|(p, _)| *p)
        .collect()
}

/// Appends `error_count(fp_rate, n)` points uniform over the FOV, `n` being
/// this frame's point count.
pub fn inject_false_positives(
    frame: &LocalizationFrame,
    fp_rate: f64,
    fov: &Fov,
    rng: &mut Xoshiro256StarStar,
) -> LocalizationFrame {
    let k = error_count(fp_rate, frame.len());
    let mut points = frame.points.clone();
    append_uniform(&mut points, k, fov, rng);
    LocalizationFrame::new(frame.frame_index, points)
}

fn append_uniform(points: &mut Vec<Point>, k: usize, fov: &Fov, rng: &mut Xoshiro256StarStar) {
    points.reserve(k);
    for _ in 0..k {
        let x = rng.uniform_in(fov.x_min, fov.x_max);
        let z = rng.uniform_in(fov.z_min, fov.z_max);
        points.push(Point::new(x, z));
    }
}

/// Degrades one frame: FN removal, then FP insertion, both sized from the
/// original count. Reads no other frame.
pub fn degrade_frame(frame: &LocalizationFrame, profile: &ErrorProfile, fov: &Fov) -> LocalizationFrame {
    let n = frame.len();
    let mut rng = Xoshiro256StarStar::from_seed(derive_stream_seed(
        profile.seed,
        INJECT_STREAM_MULTIPLIER,
        frame.frame_index,
    ));
    let mut points = drop_random(&frame.points, error_count(profile.fn_rate, n), &mut rng);
    append_uniform(&mut points, error_count(profile.fp_rate, n), fov, &mut rng);
    LocalizationFrame::new(frame.frame_index, points)
}

pub fn apply_error_profile(dataset: &Dataset, profile: &ErrorProfile) -> Dataset {
    let fov = dataset.config().fov();
    let frames = dataset
        .frames()
        .iter()
        .map(|f| degrade_frame(f, profile, &fov))
        .collect();
    Dataset::from_parts_unchecked(*dataset.config(), frames)
}
