//! Metrics, forward simulation, built-in datasets and the benchmark runner.

mod benchmark;
mod metrics;
mod pipeline;
mod synthetic;

pub use benchmark::{
    mean_psnr_by_cell, run_benchmark, BenchmarkRow, BenchmarkSpec, InputSource, CSV_HEADER, TABLE_CSR,
};
pub use metrics::{csr, per_frame_psnr, psnr, psnr_slices, Psnr, EXACT_TOLERANCE};
pub use pipeline::{
    adjoint_baseline, simulate_snapshot, Descriptor, OperatorFamily, OperatorSpec, DEFAULT_MASK_DENSITY,
};
pub use synthetic::{gaussian_blob_cube, moving_rectangle_video};
