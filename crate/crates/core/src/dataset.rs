//! Localization datasets and the imaging geometry that fixes the pixel lattice.
//!
//! Coordinates are meters throughout. Wavelength units only show up in
//! derived quantities (pixel size, KDE bandwidth, jitter).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Soft-tissue speed of sound in m/s.
pub const DEFAULT_SOUND_SPEED: f64 = 1540.0;
/// Super-resolution pixels per acoustic wavelength.
pub const DEFAULT_PIXELS_PER_WAVELENGTH: u32 = 10;

/// Lower-frequency simulation center frequency (Hz).
pub const SIMULATION_1_FREQUENCY: f64 = 2.841e6;
/// Higher-frequency simulation center frequency (Hz).
pub const SIMULATION_2_FREQUENCY: f64 = 7.24e6;

/// Axis-aligned field of view in meters; `x` is lateral, `z` is depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fov {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Fov {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.z_max - self.z_min
    }

    /// Closed-interval containment.
    #[inline]
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }

    #[inline]
    pub fn clamp(&self, x: f64, z: f64) -> (f64, f64) {
        (x.clamp(self.x_min, self.x_max), z.clamp(self.z_min, self.z_max))
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.z_min, self.z_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(format!("non-finite field of view {self:?}")));
        }
        if !(self.x_min < self.x_max) || !(self.z_min < self.z_max) {
            return Err(Error::InvalidConfig(format!(
                "field of view must satisfy x_min < x_max and z_min < z_max, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Imaging geometry: acoustic wavelength, field of view and SR pixel lattice.
///
/// Only constructible through [`ImagingConfig::new`], so every instance in
/// circulation satisfies the positivity and ordering invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingConfig {
    center_frequency: f64,
    sound_speed: f64,
    fov: Fov,
    pixels_per_wavelength: u32,
}

impl ImagingConfig {
    pub fn new(center_frequency: f64, sound_speed: f64, fov: Fov, pixels_per_wavelength: u32) -> Result<Self> {
        if !(center_frequency > 0.0) || !center_frequency.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "center frequency must be positive, got {center_frequency}"
            )));
        }
        if !(sound_speed > 0.0) || !sound_speed.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sound speed must be positive, got {sound_speed}"
            )));
        }
        if pixels_per_wavelength == 0 {
            return Err(Error::InvalidConfig("sr_pixels_per_wavelength must be >= 1".into()));
        }
        fov.validate()?;
        let config = Self {
            center_frequency,
            sound_speed,
            fov,
            pixels_per_wavelength,
        };
        let (w, h) = config.grid_dims();
        // guards against a lattice too large to index
        if w.checked_mul(h).is_none_or(|n| n > (1usize << 31)) {
            return Err(Error::InvalidConfig(format!("pixel grid {w}x{h} is too large")));
        }
        Ok(config)
    }

    /// Lower-frequency preset: 2.841 MHz over a 27.75 mm square (512x512 pixels).
    pub fn simulation1() -> Self {
        Self::new(
            SIMULATION_1_FREQUENCY,
            DEFAULT_SOUND_SPEED,
            Fov {
                x_min: -13.875e-3,
                x_max: 13.875e-3,
                z_min: 2.0e-3,
                z_max: 29.75e-3,
            },
            DEFAULT_PIXELS_PER_WAVELENGTH,
        )
        .expect("preset is valid")
    }

    /// Higher-frequency preset: 7.24 MHz over a 10.88 mm square (512x512 pixels).
    pub fn simulation2() -> Self {
        Self::new(
            SIMULATION_2_FREQUENCY,
            DEFAULT_SOUND_SPEED,
            Fov {
                x_min: -5.44e-3,
                x_max: 5.44e-3,
                z_min: 2.0e-3,
                z_max: 12.88e-3,
            },
            DEFAULT_PIXELS_PER_WAVELENGTH,
        )
        .expect("preset is valid")
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn fov(&self) -> Fov {
        self.fov
    }

    pub fn pixels_per_wavelength(&self) -> u32 {
        self.pixels_per_wavelength
    }

    /// Acoustic wavelength `c / f` in meters.
    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.center_frequency
    }

    /// SR pixel edge length: wavelength divided by pixels-per-wavelength.
    pub fn pixel_size(&self) -> f64 {
        self.wavelength() / self.pixels_per_wavelength as f64
    }

    /// `(width, height)` = `ceil(extent / pixel_size)` per axis, at least 1.
    pub fn grid_dims(&self) -> (usize, usize) {
        let p = self.pixel_size();
        let w = libm::ceil(self.fov.width() / p).max(1.0) as usize;
        let h = libm::ceil(self.fov.height() / p).max(1.0) as usize;
        (w, h)
    }
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self::simulation2()
    }
}

/// A 2-D localization `(x, z)` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
}

/// All localizations detected in one acquisition frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationFrame {
    pub frame_index: u64,
    pub points: Vec<Point>,
}

impl LocalizationFrame {
    pub fn new(frame_index: u64, points: Vec<Point>) -> Self {
        Self { frame_index, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Ordered localization frames under one imaging geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    config: ImagingConfig,
    frames: Vec<LocalizationFrame>,
}

impl Dataset {
    /// Validates ordering, uniqueness of frame indices and FOV containment.
    pub fn new(config: ImagingConfig, frames: Vec<LocalizationFrame>) -> Result<Self> {
        let fov = config.fov();
        let mut previous: Option<u64> = None;
        for frame in &frames {
            if let Some(prev) = previous {
                if frame.frame_index == prev {
                    return Err(Error::DuplicateFrame(frame.frame_index));
                }
                if frame.frame_index < prev {
                    return Err(Error::UnsortedFrames(frame.frame_index));
                }
            }
            previous = Some(frame.frame_index);
            if let Some(p) = frame.points.iter().find(|p| !fov.contains(p.x, p.z)) {
                return Err(Error::PointOutsideFov {
                    frame: frame.frame_index,
                    x: p.x,
                    z: p.z,
                });
            }
        }
        Ok(Self { config, frames })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(config: ImagingConfig, frames: Vec<LocalizationFrame>) -> Self {
        Self { config, frames }
    }

    pub fn config(&self) -> &ImagingConfig {
        &self.config
    }

    pub fn frames(&self) -> &[LocalizationFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LocalizationFrame> {
        self.frames
    }

    pub fn total_points(&self) -> usize {
        self.frames.iter().map(LocalizationFrame::len).sum()
    }

    /// Every localization of every frame, in frame then file order.
    pub fn points(&self) -> impl Iterator<Item = &Point> + '_ {
        self.frames.iter().flat_map(|f| f.points.iter())
    }
}
