//! Synthetic vasculature and localization frames.
//!
//! A vessel tree is a set of quadratic Bézier segments. Trunks cross the
//! field of view; each segment of level `l < depth` spawns two children at
//! level `l + 1`, carrying a geometrically smaller emission rate. Frames are
//! sampled by drawing a Poisson number of microbubbles per segment and frame,
//! placed at a uniform curve parameter plus isotropic Gaussian jitter.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::{Dataset, Fov, ImagingConfig, LocalizationFrame, Point};
use crate::error::{Error, Result};
use crate::rng::{derive_stream_seed, splitmix64, Xoshiro256StarStar};

/// Sub-stream multiplier for per-frame sampling seeds.
pub const FRAME_STREAM_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

const JITTER_RETRIES: usize = 16;

/// Knobs of the generator besides the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_trunk: u32,
    pub branching_depth: u32,
    /// Expected microbubbles per frame on each trunk segment.
    pub trunk_rate: f64,
    /// Rate multiplier per branching level; capped so leaves stay at most a
    /// fifth of the trunk rate.
    pub rate_decay: f64,
    /// Child length as a fraction of the parent length.
    pub branch_length_ratio: f64,
    /// Localization jitter standard deviation, in wavelengths.
    pub jitter_wavelengths: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_trunk: 3,
            branching_depth: 3,
            trunk_rate: 20.0,
            rate_decay: 0.6,
            branch_length_ratio: 0.12,
            jitter_wavelengths: 0.05,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trunk == 0 {
            return Err(Error::InvalidParameter("n_trunk must be >= 1".into()));
        }
        if self.branching_depth > 12 {
            return Err(Error::InvalidParameter(format!(
                "branching_depth {} would produce too many segments (max 12)",
                self.branching_depth
            )));
        }
        if !(self.trunk_rate >= 0.0) || !self.trunk_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "trunk_rate must be a finite non-negative number, got {}",
                self.trunk_rate
            )));
        }
        if !(self.rate_decay > 0.0 && self.rate_decay <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rate_decay must lie in (0, 1], got {}",
                self.rate_decay
            )));
        }
        if !(self.branch_length_ratio > 0.0 && self.branch_length_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "branch_length_ratio must lie in (0, 1], got {}",
                self.branch_length_ratio
            )));
        }
        if !(self.jitter_wavelengths >= 0.0) || !self.jitter_wavelengths.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "jitter_wavelengths must be finite and non-negative, got {}",
                self.jitter_wavelengths
            )));
        }
        Ok(())
    }

    /// Per-level multiplier actually applied: `min(rate_decay, 0.2^(1/depth))`.
    pub fn effective_decay(&self) -> f64 {
        if self.branching_depth == 0 {
            return self.rate_decay;
        }
        let cap = libm::pow(0.2, 1.0 / self.branching_depth as f64);
        // nudge below the cap so rounding never leaves leaves above trunk/5
        self.rate_decay.min(cap * (1.0 - 1e-12))
    }
}

/// Quadratic Bézier vessel segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub control: Point,
    pub end: Point,
    /// Expected microbubbles per frame.
    pub emission_rate: f64,
    /// Branching level; trunks are 0.
    pub level: u32,
}

impl Segment {
    #[inline]
    pub fn eval(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let a = u * u;
        let b = 2.0 * u * t;
        let c = t * t;
        Point::new(
            a * self.start.x + b * self.control.x + c * self.end.x,
            a * self.start.z + b * self.control.z + c * self.end.z,
        )
    }

    /// Unnormalized derivative at `t`.
    pub fn tangent(&self, t: f64) -> (f64, f64) {
        let u = 1.0 - t;
        (
            2.0 * u * (self.control.x - self.start.x) + 2.0 * t * (self.end.x - self.control.x),
            2.0 * u * (self.control.z - self.start.z) + 2.0 * t * (self.end.z - self.control.z),
        )
    }

    pub fn chord_length(&self) -> f64 {
        libm::hypot(self.end.x - self.start.x, self.end.z - self.start.z)
    }
}

/// Generated vasculature, with the geometry it was generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselTree {
    pub config: ImagingConfig,
    pub segments: Vec<Segment>,
    /// Jitter standard deviation in meters.
    pub jitter_sigma: f64,
}

impl VesselTree {
    pub fn leaf_level(&self) -> u32 {
        self.segments.iter().map(|s| s.level).max().unwrap_or(0)
    }
}

/// Vessel tree with default knobs for everything but the trunk count and depth.
pub fn generate_vessels(config: &ImagingConfig, seed: u64, n_trunk: u32, branching_depth: u32) -> Result<VesselTree> {
    let params = SynthParams {
        n_trunk,
        branching_depth,
        ..SynthParams::default()
    };
    generate_vessels_with(config, seed, &params)
}

pub fn generate_vessels_with(config: &ImagingConfig, seed: u64, params: &SynthParams) -> Result<VesselTree> {
    params.validate()?;
    let fov = config.fov();
    let mut rng = Xoshiro256StarStar::from_seed(splitmix64(seed));
    let decay = params.effective_decay();
    let mut segments = Vec::new();

    for k in 0..params.n_trunk {
        // trunks enter through the top edge inside their own lateral lane and
        // leave through the bottom with a lateral drift
        let lane = fov.width() / params.n_trunk as f64;
        let lane_lo = fov.x_min + lane * k as f64;
        let x0 = rng.uniform_in(lane_lo + 0.2 * lane, lane_lo + 0.8 * lane);
        let x2 = (x0 + rng.uniform_in(-0.5, 0.5) * lane).clamp(fov.x_min, fov.x_max);
        let start = Point::new(x0, fov.z_min);
        let end = Point::new(x2, fov.z_max);
        let bow = rng.uniform_in(-0.35, 0.35) * fov.width();
        let (cx, cz) = fov.clamp(0.5 * (x0 + x2) + bow, 0.5 * (fov.z_min + fov.z_max));
        segments.push(Segment {
            start,
            control: Point::new(cx, cz),
            end,
            emission_rate: params.trunk_rate,
            level: 0,
        });
    }

    let mut level_start = 0;
    for level in 1..=params.branching_depth {
        let level_end = segments.len();
        let rate = params.trunk_rate * libm::pow(decay, level as f64);
        for parent_idx in level_start..level_end {
            let parent = segments[parent_idx];
            for side in [-1.0, 1.0] {
                segments.push(branch(&mut rng, &fov, &parent, side, rate, level, params));
            }
        }
        level_start = level_end;
    }

    Ok(VesselTree {
        config: *config,
        segments,
        jitter_sigma: params.jitter_wavelengths * config.wavelength(),
    })
}

fn branch(
    rng: &mut Xoshiro256StarStar,
    fov: &Fov,
    parent: &Segment,
    side: f64,
    rate: f64,
    level: u32,
    params: &SynthParams,
) -> Segment {
    let t = rng.uniform_in(0.15, 0.85);
    let origin = parent.eval(t);
    let (tx, tz) = parent.tangent(t);
    let heading = libm::atan2(tz, tx) + side * rng.uniform_in(PI / 6.0, PI / 2.5);
    let length = parent.chord_length() * params.branch_length_ratio * rng.uniform_in(0.8, 1.2);
    let (ex, ez) = fov.clamp(
        origin.x + length * libm::cos(heading),
        origin.z + length * libm::sin(heading),
    );
    let end = Point::new(ex, ez);
    let chord = libm::hypot(ex - origin.x, ez - origin.z);
    // perpendicular offset of the control point bends the branch
    let bend = rng.uniform_in(-0.3, 0.3) * chord;
    let (nx, nz) = (-libm::sin(heading), libm::cos(heading));
    let (cx, cz) = fov.clamp(0.5 * (origin.x + ex) + bend * nx, 0.5 * (origin.z + ez) + bend * nz);
    Segment {
        start: origin,
        control: Point::new(cx, cz),
        end,
        emission_rate: rate,
        level,
    }
}

/// Samples one frame; `frame_index` selects the sub-stream.
pub fn sample_frame(tree: &VesselTree, frame_index: u64, seed: u64) -> LocalizationFrame {
    let fov = tree.config.fov();
    let sigma = tree.jitter_sigma;
    let mut rng = Xoshiro256StarStar::from_seed(derive_stream_seed(seed, FRAME_STREAM_MULTIPLIER, frame_index));
    let mut points = Vec::new();
    for segment in &tree.segments {
        let count = rng.poisson(segment.emission_rate);
        for _ in 0..count {
            let center = segment.eval(rng.next_f64());
            points.push(jittered(&mut rng, &fov, center, sigma));
        }
    }
    LocalizationFrame::new(frame_index, points)
}

fn jittered(rng: &mut Xoshiro256StarStar, fov: &Fov, center: Point, sigma: f64) -> Point {
    let mut candidate = center;
    for _ in 0..JITTER_RETRIES {
        let x = center.x + sigma * rng.standard_normal();
        let z = center.z + sigma * rng.standard_normal();
        candidate = Point::new(x, z);
        if fov.contains(x, z) {
            return candidate;
        }
    }
    let (x, z) = fov.clamp(candidate.x, candidate.z);
    Point::new(x, z)
}

/// Samples frames `0..n_frames` sequentially.
pub fn sample_frames(tree: &VesselTree, n_frames: u64, seed: u64) -> Result<Dataset> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be >= 1".into()));
    }
    let frames = (0..n_frames).map(|i| sample_frame(tree, i, seed)).collect();
    Ok(Dataset::from_parts_unchecked(tree.config, frames))
}

/// Assembles independently sampled frames (e.g. from a worker pool) into a
/// dataset. Frames must carry indices `0..n` in order.
pub fn assemble_frames(tree: &VesselTree, frames: Vec<LocalizationFrame>) -> Result<Dataset> {
    Dataset::new(tree.config, frames)
}
