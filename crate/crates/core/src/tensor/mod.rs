//! Minimal dense linear algebra and tanh MLPs with manual backprop.

pub mod matrix;
pub mod mlp;

pub use matrix::{
    inverse_from_cholesky, log_det_from_cholesky, solve_cholesky, solve_lower,
    solve_lower_transpose, Matrix,
};
pub use mlp::{mlp_backward, mlp_forward, Activation, FlatParams, MlpSpec};
