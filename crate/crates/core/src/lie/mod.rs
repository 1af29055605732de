//! Closed-form operators for the matrix Lie groups used by the estimator:
//! SO(3) rotations, SE(3) rigid transforms, the extended pose group SE₂(3)
//! bundling rotation, position and linear velocity, and the translation
//! group T(6) carrying IMU biases.
//!
//! Conventions shared by every group here:
//! - tangent vectors order the linear part first, then the angular part
//!   (SE(3): `(v, ω)`, SE₂(3): `(v, ω, a)`),
//! - `left_jacobian(x)` is the left Jacobian of the exponential map; the
//!   right Jacobian is obtained as `left_jacobian(-x)`,
//! - all types are immutable values and all operations are pure functions.

mod se23;
mod se3;
mod so3;
pub mod t6;

pub use se23::{ExtendedPose, Matrix5, Matrix9, Vector9};
pub use se3::{q_matrix, Pose};
pub use so3::{skew, unskew, Rotation};
pub use t6::BiasVector;

use std::fmt;

/// Tolerance below π at which the SO(3) logarithm refuses to pick a branch.
pub const ANGLE_NEAR_PI_TOL: f64 = 1e-6;

/// Angle threshold below which trigonometric coefficient ratios switch to
/// their Taylor expansions.
pub(crate) const SMALL_ANGLE: f64 = 1e-6;

/// Tolerance for Lie-algebra sparsity-pattern checks in `vee` operators.
pub(crate) const ALGEBRA_PATTERN_TOL: f64 = 1e-12;

/// Errors from Lie-group operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LieError {
    /// `log` was called on a rotation whose angle is within
    /// [`ANGLE_NEAR_PI_TOL`] of π, where the principal branch is ambiguous.
    AngleNearPi { angle: f64 },
    /// A matrix handed to `vee` violates the group's algebra sparsity
    /// pattern by more than the stated tolerance.
    NotInAlgebra { residual: f64 },
    /// A matrix handed to a rotation constructor is not orthonormal with
    /// determinant +1 within tolerance.
    NotOrthonormal { residual: f64 },
}

impl fmt::Display for LieError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LieError::AngleNearPi { angle } => write!(
                f,
                "rotation angle {angle} is within {ANGLE_NEAR_PI_TOL} of pi; logarithm branch is ambiguous"
            ),
            LieError::NotInAlgebra { residual } => write!(
                f,
                "matrix violates the Lie-algebra sparsity pattern (residual {residual:e})"
            ),
            LieError::NotOrthonormal { residual } => {
                write!(f, "matrix is not a rotation (orthonormality residual {residual:e})")
            }
        }
    }
}

impl std::error::Error for LieError {}
