//! Numerical toolkit for multidimensional Hausdorff operators
//! `(H f)(x) = int Phi(u) f(x A(u)) du` on `L^1` and the real Hardy space `H^1`.

pub mod error;
pub mod experiment;
pub mod family;
pub mod grid;
pub mod hardy;
pub mod kernel;
pub mod linalg;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use family::MatrixFamily;
pub use grid::{FunctionSpec, GridFunction};
pub use kernel::{KernelFamily, KernelSpec};
pub use linalg::SquareMatrix;
pub use norms::{compare_conditions, norm_l2, norm_l_a, norm_lstar, Condition, ConditionComparison, NormReport};
pub use operator::{apply_hausdorff, verify_l1_bound, HausdorffOutput};
pub use quadrature::{QuadratureSpec, Region, Rule};
pub use report::{Diagnostic, VerificationReport};
