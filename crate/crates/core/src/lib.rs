//! Total-variation compressive sensing reconstruction.
//!
//! Recovers a signal `x` from linear measurements `y = Φx` by alternating a
//! data-consistency step with an anisotropic TV denoiser:
//!
//! * [`solvers::gap_tv`]: generalized alternating projection with TV,
//! * [`solvers::acc_gap_tv`]: the same with an adaptively adjusted target,
//! * [`solvers::admm_tv`]: the ADMM counterpart with proximity weight `η`.
//!
//! Sensing operators ([`operators::SensingOperator`]) are matrix-free and
//! have a diagonal `ΦΦᵀ`: a seeded permuted Hadamard transform for images,
//! and shifting binary masks for video (CACTI) and spectral (CASSI) cubes.
//! The [`harness`] module reproduces PSNR-vs-compression-ratio experiments.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod operators;
pub mod rng;
pub mod solvers;
pub mod tensor;
pub mod tvdenoise;

pub use error::{Error, Result};
pub use operators::{DifferenceOperator, MaskStack, SensingOperator, ShiftPattern};
pub use solvers::{
    acc_gap_tv, admm_tv, admm_x_update, euclidean_projection, gap_tv, reconstruct, AccelVariant,
    Algorithm, ReconstructionResult, SolverConfig,
};
pub use tensor::{GridShape, Measurement, SignalTensor};
pub use tvdenoise::{clip, tv_denoise};
