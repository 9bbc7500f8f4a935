//! Basis, coordinates and the diagonal operator algebra.

pub mod basis;
pub mod operator;
pub mod profile;
pub mod quadrature;

pub use basis::{basis_fn_value, lambda_n, BasisConfig, BasisFamily, SpectralVector};
pub use operator::{make_operator, op_apply, op_compose, op_invert, DiagonalOperator, OperatorKind};
pub use profile::{
    parse_profile_text, project_analytic, project_profile, reconstruct, uniform_grid, AnalyticProfile,
};
