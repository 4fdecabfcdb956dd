//! Thread-pool versions of the expensive pipeline stages.
//!
//! Every function here returns exactly what its sequential counterpart in
//! the core crate returns, whatever the pool size.

use rayon::prelude::*;
use ulmsens_core::density::kde_rows;
use ulmsens_core::inject::degrade_frame;
use ulmsens_core::render::GridGeometry;
use ulmsens_core::sweep::{assemble, SweepContext};
use ulmsens_core::synthgen::{assemble_frames, sample_frame};
use ulmsens_core::{
    Dataset, DensityMap, Error, ErrorProfile, Point, RegionMask, Result, SrMap, SweepResult, SweepSettings, SweepSpec,
    VesselTree,
};

use crate::error::{CliError, CliResult};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "ULMSENS_THREADS";

/// Worker count: the flag, else the environment, else the machine.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(CliError::Invalid("--threads must be >= 1".into()))
        } else {
            Ok(n)
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Invalid(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn build_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))
}

pub fn sample_frames(tree: &VesselTree, n_frames: u64, seed: u64) -> Result<Dataset> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be >= 1".into()));
    }
    let frames = (0..n_frames)
        .into_par_iter()
        .map(|i| sample_frame(tree, i, seed))
        .collect();
    assemble_frames(tree, frames)
}

pub fn apply_error_profile(dataset: &Dataset, profile: &ErrorProfile) -> Result<Dataset> {
    let fov = dataset.config().fov();
    let frames = dataset
        .frames()
        .par_iter()
        .map(|f| degrade_frame(f, profile, &fov))
        .collect();
    Dataset::new(*dataset.config(), frames)
}

/// Row-blocked KDE; each block sums points in dataset order.
pub fn kde_density(dataset: &Dataset, bandwidth: f64) -> Result<DensityMap> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if dataset.total_points() == 0 {
        return Err(Error::EmptyDataset);
    }
    let geometry = GridGeometry::from_config(dataset.config());
    let points: Vec<Point> = dataset.points().copied().collect();
    let mut values = vec![0.0; geometry.len()];
    // a few blocks per worker balances load without repeating per-point setup too often
    let blocks = 4 * rayon::current_num_threads();
    let rows_per_block = geometry.height.div_ceil(blocks).max(1);
    values
        .par_chunks_mut(rows_per_block * geometry.width)
        .enumerate()
        .for_each(|(k, chunk)| kde_rows(&points, &geometry, bandwidth, k * rows_per_block, chunk));
    Ok(DensityMap {
        geometry,
        values,
        bandwidth,
    })
}

pub fn run_sweep(
    dataset: &Dataset,
    spec: &SweepSpec,
    mask: &RegionMask,
    reference: &SrMap,
    settings: SweepSettings,
) -> Result<SweepResult> {
    let ctx = SweepContext::new(dataset, spec, mask, reference, settings)?;
    let cells: Vec<(usize, usize, u32)> = spec.cells().collect();
    let scored: Vec<_> = cells
        .par_iter()
        .map(|&(i, j, r)| ctx.run_cell(i, j, r))
        .collect::<Result<_>>()?;
    Ok(assemble(spec, settings, scored.into_iter().flatten().collect()))
}
