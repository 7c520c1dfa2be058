//! Unitary delay-Doppler operator algebra.
//!
//! With K = F_N⊗I_M, F = F_MN and D = diag(z^q), z = exp(j2π/MN):
//!
//! * Q(a) = K·Dᵃ·F^H·K
//! * T(l,k) = Q(k)·Q*(l) = K·Dᵏ·F^H·D⁻ˡ·F·K^H
//! * H_DD = Σ g_i T(l_i, k_i)
//!
//! Every Q and T is unitary. The fast path applies them with FFTs;
//! [`oracle`] builds the same matrices explicitly.

mod dense;
mod operator;
pub mod oracle;
mod paths;
mod transform;

pub use dense::{
    check_dense_order, dense_channel_matrix, dense_channel_matrix_with, frobenius_sq, max_abs_diff, operator_matrix, Domain,
    DENSE_ORDER_LIMIT,
};
pub use operator::{build_channel_operator, matvec, DdOperator, LinearOperator, OperatorKind, QMode};
pub use paths::{nearest_bin, PathParams, PathSet};
pub(crate) use transform::fill_ramp;
pub use transform::{DdTransform, Direction};
