//! Forward-kinematic relative-pose measurements.
//!
//! A contact foot observes `h(X) = (Rᵀ(d_f − p), Rᵀ Z_f)`, the pose of the
//! foot frame in the base frame. The left-trivialized measurement noise
//! comes from the encoder noise mapped through the leg's body Jacobian.
//! During double support the two single-foot systems are stacked: the
//! observation lives on SE(3)², which as a direct product has block-wise
//! logarithms, so rows 0-5 belong to the left foot and rows 6-11 to the
//! right.
//!
//! Measurements from a foot that is not flagged in contact are dropped
//! before the update; the swing foot is handled purely by process-noise
//! inflation.

use nalgebra::{DMatrix, DVector, Matrix6, SMatrix};
use std::fmt;

use crate::filter::{FilterError, MeasurementModel};
use crate::lie::{skew, Pose};
use crate::process::ContactFlags;
use crate::state::{blocks, EstimatorState, Foot};

/// Ridge added to every FK noise covariance; keeps the innovation
/// covariance positive definite when the manipulator Jacobian is
/// instantaneously rank-deficient.
pub const FK_NOISE_RIDGE: f64 = 1e-10;

pub type MeasurementJacobian = SMatrix<f64, 6, 27>;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementError {
    /// A measurement was supplied for a foot that is not in contact.
    FootNotInContact(Foot),
}

impl fmt::Display for MeasurementError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementError::FootNotInContact(foot) => {
                write!(f, "measurement supplied for non-contact foot {foot:?}")
            }
        }
    }
}

impl std::error::Error for MeasurementError {}

/// One forward-kinematic relative-pose observation with its
/// left-trivialized noise covariance, ordered `(linear, angular)`.
#[derive(Clone, Debug)]
pub struct RelativePoseMeasurement {
    pub foot: Foot,
    pub pose: Pose,
    pub noise: Matrix6<f64>,
}

/// Predicted relative pose of the given foot in the base frame,
/// `h(X) = (Rᵀ(d_f − p), Rᵀ Z_f)`.
pub fn predict_measurement(x: &EstimatorState, foot: Foot) -> Pose {
    let base = x.base.pose();
    base.inverse().compose(x.foot(foot))
}

/// Measurement Jacobian of the log-residual with respect to a state
/// perturbation, columns in the fixed ε ordering:
///
/// ```text
/// [ −ZᵀR  −ZᵀS(p−d)R  0  I  0  0 ]
/// [   0      −ZᵀR     0  0  I  0 ]
/// ```
///
/// with the identity blocks in this foot's own position/rotation columns
/// and zeros everywhere else (in particular the bias columns).
pub fn measurement_jacobian(x: &EstimatorState, foot: Foot) -> MeasurementJacobian {
    let r = x.base.rotation.matrix();
    let foot_pose = x.foot(foot);
    let zt = foot_pose.rotation.matrix().transpose();
    let zt_r = zt * r;
    let lever = x.base.translation - foot_pose.translation;

    let mut h = MeasurementJacobian::zeros();
    h.fixed_view_mut::<3, 3>(0, blocks::POS).copy_from(&(-zt_r));
    h.fixed_view_mut::<3, 3>(0, blocks::ATT)
        .copy_from(&(-(zt * skew(&lever) * r)));
    h.fixed_view_mut::<3, 3>(3, blocks::ATT).copy_from(&(-zt_r));

    let col = foot.tangent_index();
    h.fixed_view_mut::<3, 3>(0, col)
        .copy_from(&nalgebra::Matrix3::identity());
    h.fixed_view_mut::<3, 3>(3, col + 3)
        .copy_from(&nalgebra::Matrix3::identity());
    h
}

/// Maps per-joint encoder noise through the manipulator Jacobian:
/// `N = J diag(σ²) Jᵀ + ridge·I₆`.
pub fn fk_noise_covariance(jacobian: &DMatrix<f64>, encoder_std: &[f64]) -> Matrix6<f64> {
    debug_assert_eq!(jacobian.nrows(), 6);
    debug_assert_eq!(jacobian.ncols(), encoder_std.len());
    let mut n = Matrix6::identity() * FK_NOISE_RIDGE;
    for (j, sigma) in encoder_std.iter().enumerate() {
        let col = jacobian.column(j);
        let var = sigma * sigma;
        for r in 0..6 {
            for c in 0..6 {
                n[(r, c)] += var * col[r] * col[c];
            }
        }
    }
    n
}

/// Single-support measurement model for one contact foot.
#[derive(Clone, Debug)]
pub struct SingleSupportModel {
    pub foot: Foot,
    pub noise: Matrix6<f64>,
}

impl MeasurementModel<EstimatorState> for SingleSupportModel {
    type Observation = Pose;

    fn innovation(&self, x: &EstimatorState, z: &Pose) -> Result<DVector<f64>, FilterError> {
        let residual = predict_measurement(x, self.foot).inverse().compose(z);
        let xi = residual.log()?;
        Ok(DVector::from_column_slice(xi.as_slice()))
    }

    fn jacobian(&self, x: &EstimatorState) -> DMatrix<f64> {
        let h = measurement_jacobian(x, self.foot);
        DMatrix::from_column_slice(6, 27, h.as_slice())
    }

    fn noise(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(6, 6, self.noise.as_slice())
    }
}

/// Double-support model: both single-foot systems stacked, observation on
/// SE(3)² with block-wise logarithm. Left foot first.
#[derive(Clone, Debug)]
pub struct DoubleSupportModel {
    pub left_noise: Matrix6<f64>,
    pub right_noise: Matrix6<f64>,
}

impl MeasurementModel<EstimatorState> for DoubleSupportModel {
    type Observation = (Pose, Pose);

    fn innovation(
        &self,
        x: &EstimatorState,
        z: &(Pose, Pose),
    ) -> Result<DVector<f64>, FilterError> {
        let left = predict_measurement(x, Foot::Left).inverse().compose(&z.0);
        let right = predict_measurement(x, Foot::Right).inverse().compose(&z.1);
        let xi_l = left.log()?;
        let xi_r = right.log()?;
        let mut out = DVector::zeros(12);
        out.rows_mut(0, 6).copy_from_slice(xi_l.as_slice());
        out.rows_mut(6, 6).copy_from_slice(xi_r.as_slice());
        Ok(out)
    }

    fn jacobian(&self, x: &EstimatorState) -> DMatrix<f64> {
        let hl = measurement_jacobian(x, Foot::Left);
        let hr = measurement_jacobian(x, Foot::Right);
        let mut h = DMatrix::zeros(12, 27);
        for r in 0..6 {
            for c in 0..27 {
                h[(r, c)] = hl[(r, c)];
                h[(r + 6, c)] = hr[(r, c)];
            }
        }
        h
    }

    fn noise(&self) -> DMatrix<f64> {
        let mut n = DMatrix::zeros(12, 12);
        for r in 0..6 {
            for c in 0..6 {
                n[(r, c)] = self.left_noise[(r, c)];
                n[(r + 6, c + 6)] = self.right_noise[(r, c)];
            }
        }
        n
    }
}

/// Builds the stacked double-support system from two single-foot
/// measurements. Both feet must be flagged in contact.
pub fn stack_double_support(
    left: &RelativePoseMeasurement,
    right: &RelativePoseMeasurement,
    contacts: &ContactFlags,
) -> Result<(DoubleSupportModel, (Pose, Pose)), MeasurementError> {
    if !contacts.left {
        return Err(MeasurementError::FootNotInContact(Foot::Left));
    }
    if !contacts.right {
        return Err(MeasurementError::FootNotInContact(Foot::Right));
    }
    debug_assert_eq!(left.foot, Foot::Left);
    debug_assert_eq!(right.foot, Foot::Right);
    Ok((
        DoubleSupportModel {
            left_noise: left.noise,
            right_noise: right.noise,
        },
        (left.pose, right.pose),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{ExtendedPose, Rotation};
    use crate::rng::CounterRng;
    use crate::state::StateTangent;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};

    fn random_state(rng: &mut CounterRng) -> EstimatorState {
        let mut eps = StateTangent::zeros();
        for i in 0..27 {
            eps[i] = rng.uniform_in(-0.4, 0.4);
        }
        EstimatorState::exp(&eps)
    }

    #[test]
    fn identity_state_predicts_identity_pose() {
        let h = predict_measurement(&EstimatorState::identity(), Foot::Left);
        assert_eq!(h, Pose::identity());
    }

    #[test]
    fn coincident_frames_predict_identity_pose() {
        let rot = Rotation::exp(&Vector3::new(0.2, -0.1, 0.3));
        let p = Vector3::new(0.5, -0.2, 0.9);
        let mut x = EstimatorState::identity();
        x.base = ExtendedPose::new(p, rot, Vector3::zeros());
        x.right_foot = Pose::new(p, rot);
        let h = predict_measurement(&x, Foot::Right);
        assert_abs_diff_eq!(h.translation, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(*h.rotation.matrix(), Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn prediction_is_the_group_relative_pose() {
        let mut rng = CounterRng::new(17);
        for _ in 0..20 {
            let x = random_state(&mut rng);
            for foot in [Foot::Left, Foot::Right] {
                let h = predict_measurement(&x, foot);
                let oracle = x.base.pose().inverse().compose(x.foot(foot));
                assert_abs_diff_eq!(h.translation, oracle.translation, epsilon = 1e-12);
                assert_abs_diff_eq!(
                    *h.rotation.matrix(),
                    *oracle.rotation.matrix(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn jacobian_at_identity_state() {
        let h = measurement_jacobian(&EstimatorState::identity(), Foot::Left);
        let eye = Matrix3::identity();
        assert_abs_diff_eq!(
            h.fixed_view::<3, 3>(0, blocks::POS).into_owned(),
            -eye,
            epsilon = 1e-15
        );
        assert_eq!(h.fixed_view::<3, 3>(0, blocks::ATT).abs().max(), 0.0);
        assert_abs_diff_eq!(
            h.fixed_view::<3, 3>(0, blocks::LEFT_POS).into_owned(),
            eye,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            h.fixed_view::<3, 3>(3, blocks::ATT).into_owned(),
            -eye,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            h.fixed_view::<3, 3>(3, blocks::LEFT_ROT).into_owned(),
            eye,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bias_columns_are_always_zero() {
        let mut rng = CounterRng::new(23);
        for _ in 0..20 {
            let x = random_state(&mut rng);
            for foot in [Foot::Left, Foot::Right] {
                let h = measurement_jacobian(&x, foot);
                assert_eq!(h.fixed_view::<6, 6>(0, blocks::BIAS_ACC).abs().max(), 0.0);
            }
        }
    }

    #[test]
    fn right_foot_columns_land_in_right_blocks() {
        let mut rng = CounterRng::new(29);
        let x = random_state(&mut rng);
        let h = measurement_jacobian(&x, Foot::Right);
        assert_eq!(h.fixed_view::<6, 6>(0, blocks::LEFT_POS).abs().max(), 0.0);
        assert_abs_diff_eq!(
            h.fixed_view::<3, 3>(0, blocks::RIGHT_POS).into_owned(),
            Matrix3::identity(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fk_noise_with_zero_encoder_std_is_the_ridge() {
        let jac = DMatrix::identity(6, 6);
        let n = fk_noise_covariance(&jac, &[0.0; 6]);
        assert_abs_diff_eq!(n, Matrix6::identity() * FK_NOISE_RIDGE, epsilon = 1e-20);
    }

    #[test]
    fn fk_noise_diagonal_case() {
        let jac = DMatrix::identity(6, 6);
        let sigma = 0.1_f64.to_radians();
        let n = fk_noise_covariance(&jac, &[sigma; 6]);
        let expected = Matrix6::identity() * (sigma * sigma + FK_NOISE_RIDGE);
        assert_abs_diff_eq!(n, expected, epsilon = 1e-20);
    }

    #[test]
    fn fk_noise_rank_deficient_jacobian_stays_positive_definite() {
        // 3 joints cannot span all 6 twist directions.
        let mut jac = DMatrix::zeros(6, 3);
        jac[(0, 0)] = 0.3;
        jac[(1, 1)] = -0.2;
        jac[(5, 2)] = 1.0;
        let n = fk_noise_covariance(&jac, &[0.01; 3]);
        let eig = nalgebra::SymmetricEigen::new(n).eigenvalues;
        assert!(eig.iter().all(|&v| v > 0.0), "eigenvalues {eig:?}");
    }

    #[test]
    fn double_support_rows_are_left_then_right() {
        let mut rng = CounterRng::new(31);
        let x = random_state(&mut rng);
        let model = DoubleSupportModel {
            left_noise: Matrix6::identity() * 1e-6,
            right_noise: Matrix6::identity() * 2e-6,
        };
        use crate::filter::MeasurementModel as _;
        let h = model.jacobian(&x);
        let hl = measurement_jacobian(&x, Foot::Left);
        let hr = measurement_jacobian(&x, Foot::Right);
        for c in 0..27 {
            for r in 0..6 {
                assert_eq!(h[(r, c)], hl[(r, c)]);
                assert_eq!(h[(r + 6, c)], hr[(r, c)]);
            }
        }
        let n = model.noise();
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(n[(r, c + 6)], 0.0);
                assert_eq!(n[(r + 6, c)], 0.0);
            }
        }
        assert_eq!(n[(0, 0)], 1e-6);
        assert_eq!(n[(6, 6)], 2e-6);
    }

    #[test]
    fn stacking_requires_both_contacts() {
        let meas = |foot| RelativePoseMeasurement {
            foot,
            pose: Pose::identity(),
            noise: Matrix6::identity() * 1e-6,
        };
        let contacts = ContactFlags {
            left: true,
            right: false,
        };
        assert_eq!(
            stack_double_support(&meas(Foot::Left), &meas(Foot::Right), &contacts).unwrap_err(),
            MeasurementError::FootNotInContact(Foot::Right)
        );
        assert!(
            stack_double_support(&meas(Foot::Left), &meas(Foot::Right), &ContactFlags::both())
                .is_ok()
        );
    }
}
