//! Structured linear operators: the sensing maps `Φ` and the difference map `D`.

mod difference;
mod fwht;
mod mask;
mod sensing;

pub use difference::{diff_adjoint, diff_forward, tv_norm, DifferenceOperator};
pub use fwht::{fwht, fwht_in_place};
pub use mask::{MaskStack, ShiftPattern};
pub use sensing::{
    adjoint, forward, make_coded_aperture, make_permuted_hadamard, rows_for_csr, OperatorKind,
    SensingOperator,
};
