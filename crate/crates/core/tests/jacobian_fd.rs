//! Finite-difference verification of the analytic filter Jacobians, and
//! the batch-versus-sequential equivalence of the double-support update.

mod common;

use common::{
    measurement_jacobian_fd_error, process_jacobian_fd_error, random_estimator_state, random_imu,
};
use kio_core::filter::{update, Belief, StateGroup};
use kio_core::lie::Pose;
use kio_core::measurement::{DoubleSupportModel, SingleSupportModel};
use kio_core::process::{InertialContactModel, ProcessNoiseParams};
use kio_core::rng::CounterRng;
use kio_core::state::{EstimatorState, Foot, StateTangent};
use nalgebra::{DMatrix, Matrix6};

#[test]
fn process_jacobian_matches_finite_differences() {
    let model = InertialContactModel::new(ProcessNoiseParams::default());
    let mut rng = CounterRng::new(201);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let x = random_estimator_state(&mut rng, 0.6);
        let u = random_imu(&mut rng, 0.01);
        worst = worst.max(process_jacobian_fd_error(&model, &x, &u, 1e-6));
    }
    assert!(worst < 1e-6, "process jacobian FD error {worst:e}");
}

#[test]
fn measurement_jacobian_matches_finite_differences() {
    let mut rng = CounterRng::new(202);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let x = random_estimator_state(&mut rng, 0.6);
        for foot in [Foot::Left, Foot::Right] {
            worst = worst.max(measurement_jacobian_fd_error(&x, foot, 1e-6));
        }
    }
    assert!(worst < 1e-6, "measurement jacobian FD error {worst:e}");
}

/// With block-diagonal noise, updating on the stacked double-support
/// system must match two sequential single-foot updates. The equivalence
/// is exact for linear filters; on the group it holds to the order of the
/// correction size, so the innovations are kept small.
#[test]
fn double_support_batch_equals_sequential_updates() {
    let mut rng = CounterRng::new(203);
    for _ in 0..20 {
        let x = random_estimator_state(&mut rng, 0.4);
        let cov = {
            let g = DMatrix::from_fn(27, 27, |_, _| rng.uniform_in(-1.0, 1.0));
            let spd = &g * g.transpose() * 1e-5 + DMatrix::identity(27, 27) * 1e-5;
            spd
        };
        let belief = Belief::new(x, cov);

        // Observations consistent with a state a hair away from the mean,
        // so corrections stay in the linear regime.
        let mut eps = StateTangent::zeros();
        for i in 0..27 {
            eps[i] = rng.uniform_in(-1e-6, 1e-6);
        }
        let true_state = x.compose(&EstimatorState::exp(&eps));
        let z_left = kio_core::measurement::predict_measurement(&true_state, Foot::Left);
        let z_right = kio_core::measurement::predict_measurement(&true_state, Foot::Right);

        let n_left = Matrix6::identity() * 1e-8;
        let n_right = Matrix6::identity() * 2e-8;

        let batch_model = DoubleSupportModel {
            left_noise: n_left,
            right_noise: n_right,
        };
        let (batch, _) = update(&belief, &batch_model, &(z_left, z_right), None).unwrap();

        let left_model = SingleSupportModel {
            foot: Foot::Left,
            noise: n_left,
        };
        let (after_left, _) = update(&belief, &left_model, &z_left, None).unwrap();
        let right_model = SingleSupportModel {
            foot: Foot::Right,
            noise: n_right,
        };
        let (sequential, _) = update(&after_left, &right_model, &z_right, None).unwrap();

        let mean_gap = batch
            .mean
            .inverse()
            .compose(&sequential.mean)
            .log()
            .unwrap()
            .amax();
        assert!(mean_gap < 1e-9, "mean gap {mean_gap:e}");
        let cov_gap = (&batch.cov - &sequential.cov).abs().max();
        assert!(cov_gap < 1e-9, "cov gap {cov_gap:e}");
    }
}

/// The measurement prediction is exactly the group-relative pose.
#[test]
fn prediction_equals_relative_group_operation() {
    let mut rng = CounterRng::new(204);
    for _ in 0..50 {
        let x = random_estimator_state(&mut rng, 0.8);
        for foot in [Foot::Left, Foot::Right] {
            let h = kio_core::measurement::predict_measurement(&x, foot);
            let oracle: Pose = x.base.pose().inverse().compose(x.foot(foot));
            assert!((h.translation - oracle.translation).amax() < 1e-12);
            assert!((h.rotation.matrix() - oracle.rotation.matrix()).amax() < 1e-12);
        }
    }
}

/// The ε block layout is shared: perturbing one block moves exactly the
/// matching rows/columns of the process and measurement Jacobians.
#[test]
fn jacobian_columns_follow_the_shared_block_layout() {
    use kio_core::state::blocks;
    let model = InertialContactModel::new(ProcessNoiseParams::default());
    let mut rng = CounterRng::new(205);
    let x = random_estimator_state(&mut rng, 0.5);
    let u = random_imu(&mut rng, 0.01);

    let f = model.jacobian_matrix(&x, &u);
    // Foot and bias perturbations never move the motion's foot rows.
    for row in blocks::LEFT_POS..blocks::DOF {
        for col in 0..blocks::DOF {
            assert_eq!(f[(row, col)], 0.0);
        }
    }
    // Only the gyro bias influences the attitude row.
    for col in 0..blocks::DOF {
        let in_gyro_bias = (blocks::BIAS_GYRO..blocks::BIAS_GYRO + 3).contains(&col);
        let magnitude: f64 = (0..3).map(|r| f[(blocks::ATT + r, col)].abs()).sum();
        if in_gyro_bias {
            assert!(magnitude > 0.0);
        } else {
            assert_eq!(magnitude, 0.0);
        }
    }

    let h = kio_core::measurement::measurement_jacobian(&x, Foot::Left);
    // The left-foot measurement never reads the right foot or the bias.
    for col in blocks::RIGHT_POS..blocks::DOF {
        for row in 0..6 {
            assert_eq!(h[(row, col)], 0.0);
        }
    }
    // The velocity block is unobserved by the relative pose.
    for col in blocks::VEL..blocks::VEL + 3 {
        for row in 0..6 {
            assert_eq!(h[(row, col)], 0.0);
        }
    }

    let _ = x.dof();
}
