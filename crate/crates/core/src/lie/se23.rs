//! The extended pose group SE₂(3): rotation, position and linear velocity
//! in one 5×5 matrix element.
//!
//! Tangent vectors are ordered `(v, ω, a)` where `v` maps to the position
//! column, `ω` to the rotation block and `a` to the velocity column.

use nalgebra::{SMatrix, SVector, Vector3};
use std::ops::Mul;

use super::se3::q_matrix;
use super::so3::{skew, unskew};
use super::{LieError, Pose, Rotation, ALGEBRA_PATTERN_TOL};

pub type Vector9 = SVector<f64, 9>;
pub type Matrix9 = SMatrix<f64, 9, 9>;
pub type Matrix5 = SMatrix<f64, 5, 5>;

/// An element of SE₂(3): base position, orientation and linear velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedPose {
    pub translation: Vector3<f64>,
    pub rotation: Rotation,
    pub velocity: Vector3<f64>,
}

impl ExtendedPose {
    /// Tangent-space dimension.
    pub const DOF: usize = 9;

    pub fn identity() -> Self {
        ExtendedPose {
            translation: Vector3::zeros(),
            rotation: Rotation::identity(),
            velocity: Vector3::zeros(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Rotation, velocity: Vector3<f64>) -> Self {
        ExtendedPose {
            translation,
            rotation,
            velocity,
        }
    }

    /// The SE(3) part, dropping the velocity column.
    pub fn pose(&self) -> Pose {
        Pose::new(self.translation, self.rotation)
    }

    /// 5×5 matrix form with a lower-right 2×2 identity block.
    pub fn matrix(&self) -> Matrix5 {
        let mut m = Matrix5::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&self.velocity);
        m
    }

    /// Hat operator on `(v, ω, a)` coordinates.
    pub fn hat(xi: &Vector9) -> Matrix5 {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&skew(&xi.fixed_rows::<3>(3).into_owned()));
        m.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&xi.fixed_rows::<3>(0).into_owned());
        m.fixed_view_mut::<3, 1>(0, 4)
            .copy_from(&xi.fixed_rows::<3>(6).into_owned());
        m
    }

    /// Vee operator with sparsity-pattern validation.
    pub fn vee(m: &Matrix5) -> Result<Vector9, LieError> {
        let bottom = m.fixed_view::<2, 5>(3, 0).abs().max();
        if bottom > ALGEBRA_PATTERN_TOL {
            return Err(LieError::NotInAlgebra { residual: bottom });
        }
        let omega = unskew(&m.fixed_view::<3, 3>(0, 0).into_owned())?;
        let mut xi = Vector9::zeros();
        xi.fixed_rows_mut::<3>(0)
            .copy_from(&m.fixed_view::<3, 1>(0, 3).into_owned());
        xi.fixed_rows_mut::<3>(3).copy_from(&omega);
        xi.fixed_rows_mut::<3>(6)
            .copy_from(&m.fixed_view::<3, 1>(0, 4).into_owned());
        Ok(xi)
    }

    /// Exponential map `(J(ω) v, exp(ω), J(ω) a)`.
    pub fn exp(xi: &Vector9) -> Self {
        let v = xi.fixed_rows::<3>(0).into_owned();
        let omega = xi.fixed_rows::<3>(3).into_owned();
        let a = xi.fixed_rows::<3>(6).into_owned();
        let j = Rotation::left_jacobian(&omega);
        ExtendedPose {
            translation: j * v,
            rotation: Rotation::exp(&omega),
            velocity: j * a,
        }
    }

    /// Logarithm map.
    pub fn log(&self) -> Result<Vector9, LieError> {
        let omega = self.rotation.log()?;
        let j_inv = Rotation::left_jacobian_inv(&omega);
        let mut xi = Vector9::zeros();
        xi.fixed_rows_mut::<3>(0)
            .copy_from(&(j_inv * self.translation));
        xi.fixed_rows_mut::<3>(3).copy_from(&omega);
        xi.fixed_rows_mut::<3>(6)
            .copy_from(&(j_inv * self.velocity));
        Ok(xi)
    }

    /// Group composition `(R₁p₂ + p₁, R₁R₂, R₁v₂ + v₁)`.
    pub fn compose(&self, other: &ExtendedPose) -> ExtendedPose {
        ExtendedPose {
            translation: self.rotation.rotate(&other.translation) + self.translation,
            rotation: self.rotation.compose(&other.rotation),
            velocity: self.rotation.rotate(&other.velocity) + self.velocity,
        }
    }

    /// Group inverse `(−Rᵀp, Rᵀ, −Rᵀv)`.
    pub fn inverse(&self) -> ExtendedPose {
        let rot_inv = self.rotation.inverse();
        ExtendedPose {
            translation: -rot_inv.rotate(&self.translation),
            rotation: rot_inv,
            velocity: -rot_inv.rotate(&self.velocity),
        }
    }

    /// Adjoint matrix
    /// `[[R, S(p)R, 0], [0, R, 0], [0, S(v)R, R]]` in `(v, ω, a)` ordering.
    pub fn adjoint(&self) -> Matrix9 {
        let r = self.rotation.matrix();
        let mut ad = Matrix9::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        ad.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(skew(&self.translation) * r));
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
        ad.fixed_view_mut::<3, 3>(6, 3)
            .copy_from(&(skew(&self.velocity) * r));
        ad.fixed_view_mut::<3, 3>(6, 6).copy_from(r);
        ad
    }

    /// Left Jacobian
    /// `[[J(ω), Q(v, ω), 0], [0, J(ω), 0], [0, Q(a, ω), J(ω)]]`.
    pub fn left_jacobian(xi: &Vector9) -> Matrix9 {
        let v = xi.fixed_rows::<3>(0).into_owned();
        let omega = xi.fixed_rows::<3>(3).into_owned();
        let a = xi.fixed_rows::<3>(6).into_owned();
        let j = Rotation::left_jacobian(&omega);
        let mut m = Matrix9::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
        m.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&q_matrix(&v, &omega));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
        m.fixed_view_mut::<3, 3>(6, 3)
            .copy_from(&q_matrix(&a, &omega));
        m.fixed_view_mut::<3, 3>(6, 6).copy_from(&j);
        m
    }
}

impl Mul for ExtendedPose {
    type Output = ExtendedPose;
    fn mul(self, rhs: ExtendedPose) -> ExtendedPose {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;

    fn sample() -> ExtendedPose {
        ExtendedPose::new(
            Vector3::new(1.0, -2.0, 0.5),
            Rotation::exp(&Vector3::new(0.3, 0.1, -0.2)),
            Vector3::new(0.4, 0.2, -0.6),
        )
    }

    #[test]
    fn hat_block_structure() {
        let xi = Vector9::from_column_slice(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let m = ExtendedPose::hat(&xi);
        let omega = Vector3::new(0.4, 0.5, 0.6);
        assert_eq!(m.fixed_view::<3, 3>(0, 0).into_owned(), skew(&omega));
        assert_eq!(
            m.fixed_view::<3, 1>(0, 3).into_owned(),
            Vector3::new(0.1, 0.2, 0.3)
        );
        assert_eq!(
            m.fixed_view::<3, 1>(0, 4).into_owned(),
            Vector3::new(0.7, 0.8, 0.9)
        );
        assert_eq!(m.fixed_view::<2, 5>(3, 0).abs().max(), 0.0);
    }

    #[test]
    fn matrix_form_has_identity_corner() {
        let m = sample().matrix();
        assert_eq!(m[(3, 3)], 1.0);
        assert_eq!(m[(4, 4)], 1.0);
        assert_eq!(m[(3, 4)], 0.0);
        assert_eq!(m[(4, 3)], 0.0);
    }

    #[test]
    fn log_of_identity_is_zero() {
        assert_eq!(ExtendedPose::identity().log().unwrap(), Vector9::zeros());
    }

    #[test]
    fn inverse_matches_tuple_formula() {
        let x = sample();
        let inv = x.inverse();
        let rt = x.rotation.matrix().transpose();
        assert_abs_diff_eq!(inv.translation, -(rt * x.translation), epsilon = 1e-15);
        assert_abs_diff_eq!(inv.velocity, -(rt * x.velocity), epsilon = 1e-15);
        assert_abs_diff_eq!(*inv.rotation.matrix(), rt, epsilon = 1e-15);
    }

    #[test]
    fn compose_inverse_is_identity() {
        let x = sample();
        let id = x.compose(&x.inverse());
        assert_abs_diff_eq!(id.translation, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(id.velocity, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(*id.rotation.matrix(), Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn adjoint_of_identity() {
        assert_eq!(ExtendedPose::identity().adjoint(), Matrix9::identity());
    }

    #[test]
    fn vee_inverts_hat() {
        let xi = Vector9::from_column_slice(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(ExtendedPose::vee(&ExtendedPose::hat(&xi)).unwrap(), xi);
    }

    #[test]
    fn log_exp_roundtrip() {
        let xi = Vector9::from_column_slice(&[0.3, -0.1, 0.2, 0.1, 0.2, -0.3, -0.4, 0.5, 0.6]);
        let back = ExtendedPose::exp(&xi).log().unwrap();
        assert_abs_diff_eq!(back, xi, epsilon = 1e-9);
    }
}
