//! The rigid-transform group SE(3), stored as a rotation plus translation.
//!
//! Tangent vectors are ordered `(v, ω)`: linear part first, angular part
//! second, matching the ε block layout of the composite estimator state.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use std::ops::Mul;

use super::so3::{cubic_ratio, q_quartic_ratio, q_quintic_ratio, skew, unskew};
use super::{LieError, Rotation, ALGEBRA_PATTERN_TOL};

/// Translation–rotation coupling block `Q(ρ, φ)` appearing in the left
/// Jacobians of SE(3) and SE₂(3).
///
/// Linear in `ρ`; reduces to `½ S(ρ)` when `φ = 0`.
pub fn q_matrix(rho: &Vector3<f64>, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let sr = skew(rho);
    let sp = skew(phi);
    let sp_sr = sp * sr;
    let sr_sp = sr * sp;
    let sp2 = sp * sp;

    0.5 * sr
        + cubic_ratio(theta) * (sp_sr + sr_sp + sp * sr_sp)
        + q_quartic_ratio(theta) * (sp2 * sr + sr * sp2 - 3.0 * (sp * sr_sp))
        + q_quintic_ratio(theta) * (sp_sr * sp2 + sp2 * sr_sp)
}

/// An element of SE(3): position and orientation of one frame in another.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Rotation,
}

impl Pose {
    /// Tangent-space dimension.
    pub const DOF: usize = 6;

    pub fn identity() -> Self {
        Pose {
            translation: Vector3::zeros(),
            rotation: Rotation::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Rotation) -> Self {
        Pose {
            translation,
            rotation,
        }
    }

    /// Homogeneous 4×4 matrix form with bottom row `(0, 0, 0, 1)`.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Hat operator on `(v, ω)` coordinates.
    pub fn hat(xi: &Vector6<f64>) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&skew(&xi.fixed_rows::<3>(3).into_owned()));
        m.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&xi.fixed_rows::<3>(0).into_owned());
        m
    }

    /// Vee operator; fails if the bottom row is not zero or the rotation
    /// block is not skew within `1e-12`.
    pub fn vee(m: &Matrix4<f64>) -> Result<Vector6<f64>, LieError> {
        let bottom = m.fixed_view::<1, 4>(3, 0).abs().max();
        if bottom > ALGEBRA_PATTERN_TOL {
            return Err(LieError::NotInAlgebra { residual: bottom });
        }
        let omega = unskew(&m.fixed_view::<3, 3>(0, 0).into_owned())?;
        let v = m.fixed_view::<3, 1>(0, 3).into_owned();
        let mut xi = Vector6::zeros();
        xi.fixed_rows_mut::<3>(0).copy_from(&v);
        xi.fixed_rows_mut::<3>(3).copy_from(&omega);
        Ok(xi)
    }

    /// Exponential map: `(J(ω) v, exp(ω))`.
    pub fn exp(xi: &Vector6<f64>) -> Self {
        let v = xi.fixed_rows::<3>(0).into_owned();
        let omega = xi.fixed_rows::<3>(3).into_owned();
        Pose {
            translation: Rotation::left_jacobian(&omega) * v,
            rotation: Rotation::exp(&omega),
        }
    }

    /// Logarithm map, recovering the translation through `J(ω)⁻¹`.
    pub fn log(&self) -> Result<Vector6<f64>, LieError> {
        let omega = self.rotation.log()?;
        let v = Rotation::left_jacobian_inv(&omega) * self.translation;
        let mut xi = Vector6::zeros();
        xi.fixed_rows_mut::<3>(0).copy_from(&v);
        xi.fixed_rows_mut::<3>(3).copy_from(&omega);
        Ok(xi)
    }

    /// Group composition `(R₁p₂ + p₁, R₁R₂)`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.rotation.rotate(&other.translation) + self.translation,
            rotation: self.rotation.compose(&other.rotation),
        }
    }

    /// Group inverse `(−Rᵀp, Rᵀ)`.
    pub fn inverse(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose {
            translation: -rot_inv.rotate(&self.translation),
            rotation: rot_inv,
        }
    }

    /// Applies the transform to a point.
    pub fn act(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(point) + self.translation
    }

    /// Adjoint matrix `[[R, S(p)R], [0, R]]` in `(v, ω)` ordering.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        ad.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(skew(&self.translation) * r));
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
        ad
    }

    /// Left Jacobian `[[J(ω), Q(v, ω)], [0, J(ω)]]`.
    pub fn left_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
        let v = xi.fixed_rows::<3>(0).into_owned();
        let omega = xi.fixed_rows::<3>(3).into_owned();
        let j = Rotation::left_jacobian(&omega);
        let q = q_matrix(&v, &omega);
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&q);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
        m
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}
