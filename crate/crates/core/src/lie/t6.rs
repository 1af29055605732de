//! The translation group T(6), carrying the 6-dimensional IMU bias vector
//! `(b_a, b_g)`. The group is abelian: composition is vector addition and
//! exp/log are the identity on coordinates.

use nalgebra::{SMatrix, Vector6};

use super::{LieError, ALGEBRA_PATTERN_TOL};

pub type Matrix7 = SMatrix<f64, 7, 7>;

/// Accelerometer and gyroscope biases stacked as `(b_a, b_g)`, expressed in
/// the IMU frame. Doubles as both the group element and its tangent vector.
pub type BiasVector = Vector6<f64>;

/// Tangent-space dimension of T(6).
pub const DOF: usize = 6;

/// 7×7 matrix form `[[I₆, b], [0, 1]]`.
pub fn matrix(b: &BiasVector) -> Matrix7 {
    let mut m = Matrix7::identity();
    m.fixed_view_mut::<6, 1>(0, 6).copy_from(b);
    m
}

/// Hat operator `[[0₆, b], [0, 0]]`.
pub fn hat(b: &BiasVector) -> Matrix7 {
    let mut m = Matrix7::zeros();
    m.fixed_view_mut::<6, 1>(0, 6).copy_from(b);
    m
}

/// Vee operator; everything off the last column must vanish.
pub fn vee(m: &Matrix7) -> Result<BiasVector, LieError> {
    let mut residual: f64 = 0.0;
    for r in 0..7 {
        for c in 0..6 {
            residual = residual.max(m[(r, c)].abs());
        }
    }
    residual = residual.max(m[(6, 6)].abs());
    if residual > ALGEBRA_PATTERN_TOL {
        return Err(LieError::NotInAlgebra { residual });
    }
    Ok(m.fixed_view::<6, 1>(0, 6).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vee_inverts_hat() {
        let b = BiasVector::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
        assert_eq!(vee(&hat(&b)).unwrap(), b);
    }

    #[test]
    fn matrix_form_embeds_bias() {
        let b = BiasVector::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
        let m = matrix(&b);
        assert_eq!(m[(0, 6)], 0.1);
        assert_eq!(m[(5, 6)], 0.6);
        assert_eq!(m[(6, 6)], 1.0);
    }

    #[test]
    fn vee_rejects_pattern_violation() {
        let mut m = hat(&BiasVector::zeros());
        m[(2, 3)] = 1e-9;
        assert!(matches!(vee(&m), Err(LieError::NotInAlgebra { .. })));
    }
}
