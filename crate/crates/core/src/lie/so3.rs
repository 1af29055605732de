//! The rotation group SO(3): 3×3 orthonormal matrices with determinant +1.
//!
//! The exponential map is the Rodrigues formula and the left Jacobian has
//! the standard closed form; both share one set of Taylor-switched
//! trigonometric coefficient functions so that their small-angle behaviour
//! is consistent.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;
use std::ops::Mul;

use super::{LieError, ALGEBRA_PATTERN_TOL, ANGLE_NEAR_PI_TOL, SMALL_ANGLE};

/// Skew-symmetric matrix `S(v)` such that `S(v) w = v × w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]; fails if the matrix is not skew-symmetric within
/// `1e-12`.
pub fn unskew(m: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let sym = m + m.transpose();
    let residual = sym.abs().max();
    let diag = m.diagonal().abs().max();
    let residual = residual.max(diag);
    if residual > ALGEBRA_PATTERN_TOL {
        return Err(LieError::NotInAlgebra { residual });
    }
    Ok(Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

// Trigonometric coefficient ratios used by exp/log/Jacobian/Q formulas.
// Each switches to a 4th-order Taylor expansion below `SMALL_ANGLE` to
// avoid 0/0.

/// sin(θ)/θ
pub(crate) fn sin_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// (1 − cos θ)/θ², computed as 2·sin²(θ/2)/θ² to avoid cancellation.
pub(crate) fn cos_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        let half_sin = (0.5 * theta).sin();
        2.0 * half_sin * half_sin / (theta * theta)
    }
}

/// (θ − sin θ)/θ³
pub(crate) fn cubic_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// Coefficient of S(φ)² in the inverse left Jacobian:
/// 1/θ² − (1 + cos θ)/(2 θ sin θ).
pub(crate) fn jac_inv_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// (θ² + 2 cos θ − 2)/(2 θ⁴), used by the Q coupling block.
pub(crate) fn q_quartic_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0
    } else {
        let t2 = theta * theta;
        (t2 + 2.0 * theta.cos() - 2.0) / (2.0 * t2 * t2)
    }
}

/// (2θ − 3 sin θ + θ cos θ)/(2 θ⁵), used by the Q coupling block.
pub(crate) fn q_quintic_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0
    } else {
        let t2 = theta * theta;
        (2.0 * theta - 3.0 * theta.sin() + theta * theta.cos()) / (2.0 * t2 * t2 * theta)
    }
}

/// An element of SO(3), stored as a dense 3×3 rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    /// Tangent-space dimension.
    pub const DOF: usize = 3;

    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking orthonormality and `det = +1` within
    /// `1e-9`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, LieError> {
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = (m.determinant() - 1.0).abs();
        let residual = ortho.max(det);
        if residual > 1e-9 {
            return Err(LieError::NotOrthonormal { residual });
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix the caller already knows to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Hat operator: coordinates to Lie-algebra matrix.
    pub fn hat(phi: &Vector3<f64>) -> Matrix3<f64> {
        skew(phi)
    }

    /// Vee operator: Lie-algebra matrix back to coordinates.
    pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
        unskew(m)
    }

    /// Exponential map (Rodrigues formula).
    pub fn exp(phi: &Vector3<f64>) -> Self {
        let theta = phi.norm();
        let s = skew(phi);
        Rotation(Matrix3::identity() + sin_ratio(theta) * s + cos_ratio(theta) * (s * s))
    }

    /// Logarithm map on the principal branch.
    ///
    /// Fails with [`LieError::AngleNearPi`] once the rotation angle reaches
    /// π − 1e-6, where the branch is ambiguous.
    pub fn log(&self) -> Result<Vector3<f64>, LieError> {
        let m = &self.0;
        let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let half_skew = 0.5
            * Vector3::new(
                m[(2, 1)] - m[(1, 2)],
                m[(0, 2)] - m[(2, 0)],
                m[(1, 0)] - m[(0, 1)],
            );
        let sin_theta = half_skew.norm();
        let theta = sin_theta.atan2(cos_theta);
        if theta >= PI - ANGLE_NEAR_PI_TOL {
            return Err(LieError::AngleNearPi { angle: theta });
        }
        // half_skew = sin(θ)·axis, so dividing by sin(θ)/θ recovers θ·axis.
        Ok(half_skew / sin_ratio(theta))
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Adjoint matrix; for SO(3) this is the rotation matrix itself.
    pub fn adjoint(&self) -> Matrix3<f64> {
        self.0
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let cos_theta = ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        cos_theta.acos()
    }

    /// Left Jacobian of the exponential map,
    /// `J(φ) = I + (1−cosθ)/θ² S(φ) + (θ−sinθ)/θ³ S(φ)²`.
    pub fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
        let theta = phi.norm();
        let s = skew(phi);
        Matrix3::identity() + cos_ratio(theta) * s + cubic_ratio(theta) * (s * s)
    }

    /// Closed-form inverse of [`Rotation::left_jacobian`].
    pub fn left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
        let theta = phi.norm();
        let s = skew(phi);
        Matrix3::identity() - 0.5 * s + jac_inv_ratio(theta) * (s * s)
    }

    /// Rotation from roll/pitch/yaw (ZYX convention, radians):
    /// `R = Rz(yaw)·Ry(pitch)·Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rotation::exp(&Vector3::new(0.0, 0.0, yaw))
            .compose(&Rotation::exp(&Vector3::new(0.0, pitch, 0.0)))
            .compose(&Rotation::exp(&Vector3::new(roll, 0.0, 0.0)))
    }

    /// Roll/pitch/yaw extraction (ZYX convention).
    pub fn rpy(&self) -> (f64, f64, f64) {
        let m = &self.0;
        let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        (roll, pitch, yaw)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}
