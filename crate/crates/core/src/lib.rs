//! Sensitivity of ultrasound localization microscopy (ULM) maps to
//! microbubble detection errors.
//!
//! The pipeline: ground-truth localization frames ([`dataset`], optionally
//! generated by [`synthgen`]) are degraded with controlled false positives
//! and false negatives ([`inject`]), rasterized into super-resolution maps
//! ([`render`]) and compared with the ground-truth map by SSIM and PSNR
//! ([`metrics`]), globally and inside dense/sparse regions segmented from a
//! kernel density estimate ([`density`]). [`sweep`] runs the FP x FN grid
//! and [`report`] turns results into gray images.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the CLI and the
//! thread pool live in the `ulmsens` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod density;
pub mod error;
pub mod inject;
pub mod metrics;
pub mod render;
pub mod report;
pub mod rng;
pub mod sweep;
pub mod synthgen;

pub use dataset::{Dataset, Fov, ImagingConfig, LocalizationFrame, Point};
pub use density::{kde_density, mask_coverage, threshold_mask, DensityMap, RegionMask};
pub use error::{Error, Result};
pub use inject::{apply_error_profile, inject_false_negatives, inject_false_positives, ErrorProfile};
pub use metrics::{psnr_masked, ssim_map, ssim_masked, MetricRecord, Region, SsimParams};
pub use render::{normalize_pair, rasterize, GridGeometry, SrMap};
pub use report::{render_heatmap, GrayImage, Heatmap, Metric, Scale};
pub use sweep::{aggregate, run_sweep, AggregateTable, SweepResult, SweepSettings, SweepSpec};
pub use synthgen::{generate_vessels, generate_vessels_with, sample_frames, SynthParams, VesselTree};
