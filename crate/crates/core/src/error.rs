use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid imaging configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frame {frame}: point ({x}, {z}) lies outside the field of view")]
    PointOutsideFov { frame: u64, x: f64, z: f64 },
    #[error("duplicate frame index {0}")]
    DuplicateFrame(u64),
    #[error("frames are not sorted by index (frame {0} follows a larger index)")]
    UnsortedFrames(u64),
    #[error("grid geometry mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    GeometryMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
    #[error("cannot estimate density of zero points")]
    EmptyDataset,
    #[error("mask selects zero pixels")]
    EmptyMask,
    #[error("missing heatmap cell (fp = {fp_rate}, fn = {fn_rate})")]
    MissingCell { fp_rate: f64, fn_rate: f64 },
    #[error("sweep cell (fp #{fp_index}, fn #{fn_index}, rep {rep}): {source}")]
    Cell {
        fp_index: usize,
        fn_index: usize,
        rep: u32,
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
