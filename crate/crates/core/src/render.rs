//! Super-resolution accumulation maps.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, ImagingConfig, Point};
use crate::error::{Error, Result};

/// Pixel lattice shared by SR maps, density maps and masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
    pub x_min: f64,
    pub z_min: f64,
}

impl GridGeometry {
    pub fn from_config(config: &ImagingConfig) -> Self {
        let (width, height) = config.grid_dims();
        let fov = config.fov();
        Self {
            width,
            height,
            pixel_size: config.pixel_size(),
            x_min: fov.x_min,
            z_min: fov.z_min,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index of the pixel holding `p`; points on the far FOV edge
    /// clamp into the last row/column.
    #[inline]
    pub fn pixel_of(&self, p: &Point) -> usize {
        let col = pixel_coord((p.x - self.x_min) / self.pixel_size, self.width);
        let row = pixel_coord((p.z - self.z_min) / self.pixel_size, self.height);
        row * self.width + col
    }

    /// Center of pixel `(col, row)` in meters.
    #[inline]
    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.x_min + (col as f64 + 0.5) * self.pixel_size,
            self.z_min + (row as f64 + 0.5) * self.pixel_size,
        )
    }

    /// Compares only the lattice dimensions.
    pub fn check_same(&self, other: &GridGeometry) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::GeometryMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }
}

#[inline]
fn pixel_coord(offset: f64, len: usize) -> usize {
    let c = libm::floor(offset);
    if c <= 0.0 {
        0
    } else {
        (c as usize).min(len - 1)
    }
}

/// Row-major grid of non-negative values: raw counts straight out of
/// [`rasterize`], or values in `[0, 1]` after [`normalize_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct SrMap {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl SrMap {
    pub fn zeros(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            values: vec![0.0; geometry.len()],
        }
    }

    /// Panics when `values.len()` disagrees with the geometry.
    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), geometry.len(), "value count does not match geometry");
        Self { geometry, values }
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.geometry.width + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Adds `other` pixel-wise, e.g. to merge per-worker partial counts.
    pub fn accumulate(&mut self, other: &SrMap) -> Result<()> {
        self.geometry.check_same(&other.geometry)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

/// Count accumulation: each localization increments exactly one pixel.
pub fn rasterize(dataset: &Dataset) -> SrMap {
    let geometry = GridGeometry::from_config(dataset.config());
    let mut map = SrMap::zeros(geometry);
    rasterize_into(&mut map, dataset.points());
    map
}

/// Accumulates `points` onto an existing count map.
pub fn rasterize_into<'a>(map: &mut SrMap, points: impl IntoIterator<Item = &'a Point>) {
    let geometry = map.geometry;
    for p in points {
        map.values[geometry.pixel_of(p)] += 1.0;
    }
}

/// Scales both maps by the reference maximum and clips the test map to
/// `[0, 1]`. An all-zero reference yields two all-zero maps.
pub fn normalize_pair(reference: &SrMap, test: &SrMap) -> Result<(SrMap, SrMap)> {
    reference.geometry.check_same(&test.geometry)?;
    let peak = reference.max();
    if !(peak > 0.0) {
        return Ok((SrMap::zeros(reference.geometry), SrMap::zeros(test.geometry)));
    }
    let reference_values = reference.values.iter().map(|v| v / peak).collect();
    let test_values = test.values.iter().map(|v| (v / peak).clamp(0.0, 1.0)).collect();
    Ok((
        SrMap::from_values(reference.geometry, reference_values),
        SrMap::from_values(test.geometry, test_values),
    ))
}

/// Lower bound of the dB mapping used by [`log_compress`].
pub const LOG_FLOOR_DB: f64 = -40.0;

/// Maps normalized values to `(20 log10 v - floor) / -floor`, clamped to `[0, 1]`.
///
/// Zero maps to 0 and 1 maps to 1.
pub fn log_compress(map: &SrMap) -> SrMap {
    let values = map
        .values
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                return 0.0;
            }
            let db = (20.0 * libm::log10(v)).max(LOG_FLOOR_DB);
            ((db - LOG_FLOOR_DB) / -LOG_FLOOR_DB).clamp(0.0, 1.0)
        })
        .collect();
    SrMap::from_values(map.geometry, values)
}
