//! Left-trivialized process model of the estimator: strap-down IMU
//! dynamics for the base, a constant-pose model for feet in contact, and
//! random-walk biases.
//!
//! With `α = (ᾶ − b_a) + Rᵀg` and `ω = ω̃ − b_g`, the tangent velocity is
//!
//! ```text
//! Ω(X, u) = (Rᵀv ΔT + ½ α ΔT², ω ΔT, α ΔT, 0₁₈)
//! ```
//!
//! Feet velocities are zero in the model; their white noise is inflated by
//! a large factor while the foot is out of contact, so the swing foot's
//! predicted pose grows uncertain until the next touchdown measurement
//! resets it.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};

use crate::filter::{state_matrix_to_dynamic, state_tangent_to_dynamic, ProcessModel};
use crate::lie::{skew, Pose, Rotation};
use crate::state::{blocks, EstimatorState, StateMatrix, StateTangent};

/// Standard gravity (m/s²); the inertial frame has z up, so the gravity
/// vector is `(0, 0, -GRAVITY)`.
pub const GRAVITY: f64 = 9.80665;

pub fn gravity_vector() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -GRAVITY)
}

/// One IMU sample: specific force and angular rate in the sensor frame,
/// plus the sampling period it covers under a zero-order hold.
#[derive(Clone, Copy, Debug)]
pub struct ImuInput {
    /// Specific force ᾶ (m/s², includes the reaction to gravity).
    pub accel: Vector3<f64>,
    /// Angular rate ω̃ (rad/s).
    pub gyro: Vector3<f64>,
    /// Sampling period ΔT (s), must be positive.
    pub dt: f64,
}

/// Per-foot contact flags; all four combinations are legal inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactFlags {
    pub left: bool,
    pub right: bool,
}

impl ContactFlags {
    pub fn both() -> Self {
        ContactFlags {
            left: true,
            right: true,
        }
    }
}

/// White-noise standard deviations of the process model, plus the
/// swing-foot variance inflation factor.
#[derive(Clone, Copy, Debug)]
pub struct ProcessNoiseParams {
    /// Accelerometer noise (m/s²).
    pub accel: f64,
    /// Gyroscope noise (rad/s).
    pub gyro: f64,
    /// Accelerometer bias random walk (m/s²).
    pub accel_bias: f64,
    /// Gyroscope bias random walk (rad/s).
    pub gyro_bias: f64,
    /// Contact-foot linear velocity noise (m/s).
    pub contact_foot_linear: f64,
    /// Contact-foot angular velocity noise (rad/s).
    pub contact_foot_angular: f64,
    /// Multiplier (≥ 1) applied to the foot velocity variances while the
    /// foot is not in contact.
    pub swing_inflation: f64,
}

impl Default for ProcessNoiseParams {
    fn default() -> Self {
        ProcessNoiseParams {
            accel: 0.09,
            gyro: 0.01,
            accel_bias: 0.01,
            gyro_bias: 0.001,
            contact_foot_linear: 0.009,
            contact_foot_angular: 0.004,
            swing_inflation: 1e4,
        }
    }
}

/// Process model binding noise parameters, the gravity vector and the
/// fixed base-to-IMU transform (identity by default: the IMU frame is
/// assumed to coincide with the base frame).
#[derive(Clone, Debug)]
pub struct InertialContactModel {
    pub params: ProcessNoiseParams,
    pub gravity: Vector3<f64>,
    /// Pose of the IMU frame in the base frame. Only the rotation is used
    /// to map sensor readings into the base frame.
    pub base_from_imu: Pose,
}

impl InertialContactModel {
    pub fn new(params: ProcessNoiseParams) -> Self {
        InertialContactModel {
            params,
            gravity: gravity_vector(),
            base_from_imu: Pose::identity(),
        }
    }

    fn imu_in_base(&self, u: &ImuInput) -> (Vector3<f64>, Vector3<f64>) {
        let r = &self.base_from_imu.rotation;
        (r.rotate(&u.accel), r.rotate(&u.gyro))
    }

    /// Unbiased base acceleration `α` and angular rate `ω` in the base
    /// frame.
    fn unbiased(&self, x: &EstimatorState, u: &ImuInput) -> (Vector3<f64>, Vector3<f64>) {
        let (accel, gyro) = self.imu_in_base(u);
        let alpha = (accel - x.accel_bias()) + x.base.rotation.inverse().rotate(&self.gravity);
        let omega = gyro - x.gyro_bias();
        (alpha, omega)
    }

    /// Left-trivialized velocity Ω(X, u).
    pub fn motion_tangent(&self, x: &EstimatorState, u: &ImuInput) -> StateTangent {
        let (alpha, omega) = self.unbiased(x, u);
        let dt = u.dt;
        let rt_v = x.base.rotation.inverse().rotate(&x.base.velocity);

        let mut tangent = StateTangent::zeros();
        tangent
            .fixed_rows_mut::<3>(blocks::POS)
            .copy_from(&(rt_v * dt + 0.5 * alpha * dt * dt));
        tangent
            .fixed_rows_mut::<3>(blocks::ATT)
            .copy_from(&(omega * dt));
        tangent
            .fixed_rows_mut::<3>(blocks::VEL)
            .copy_from(&(alpha * dt));
        tangent
    }

    /// Jacobian 𝓕 of the left-trivialized motion with respect to a tangent
    /// perturbation of the state, in the fixed ε column ordering.
    pub fn jacobian_matrix(&self, x: &EstimatorState, u: &ImuInput) -> StateMatrix {
        let dt = u.dt;
        let r_inv = x.base.rotation.inverse();
        let g_body = r_inv.rotate(&self.gravity);
        let xi = r_inv.rotate(&x.base.velocity) * dt + 0.5 * g_body * dt * dt;
        let g_tilde = g_body * dt;

        let mut f = StateMatrix::zeros();
        f.fixed_view_mut::<3, 3>(blocks::POS, blocks::ATT)
            .copy_from(&skew(&xi));
        f.fixed_view_mut::<3, 3>(blocks::POS, blocks::VEL)
            .copy_from(&(Matrix3::identity() * dt));
        f.fixed_view_mut::<3, 3>(blocks::POS, blocks::BIAS_ACC)
            .copy_from(&(Matrix3::identity() * (-0.5 * dt * dt)));
        f.fixed_view_mut::<3, 3>(blocks::ATT, blocks::BIAS_GYRO)
            .copy_from(&(Matrix3::identity() * -dt));
        f.fixed_view_mut::<3, 3>(blocks::VEL, blocks::ATT)
            .copy_from(&skew(&g_tilde));
        f.fixed_view_mut::<3, 3>(blocks::VEL, blocks::BIAS_ACC)
            .copy_from(&(Matrix3::identity() * -dt));
        f
    }

    /// Process noise covariance `Q = D diag(σ²) Dᵀ`, where `D` maps the 24
    /// white-noise channels onto the 27-dimensional tangent. The shared
    /// accelerometer channel correlates the position rows (−½ w_a ΔT²) with
    /// the velocity rows (−w_a ΔT); swing-foot variances are inflated.
    pub fn noise_matrix(&self, contacts: &ContactFlags, dt: f64) -> StateMatrix {
        let p = &self.params;
        let mut d = SMatrix::<f64, 27, 24>::zeros();
        let eye = Matrix3::identity();
        d.fixed_view_mut::<3, 3>(blocks::POS, 0)
            .copy_from(&(eye * (-0.5 * dt * dt)));
        d.fixed_view_mut::<3, 3>(blocks::ATT, 3)
            .copy_from(&(eye * -dt));
        d.fixed_view_mut::<3, 3>(blocks::VEL, 0)
            .copy_from(&(eye * -dt));
        d.fixed_view_mut::<3, 3>(blocks::LEFT_POS, 6)
            .copy_from(&(eye * dt));
        d.fixed_view_mut::<3, 3>(blocks::LEFT_ROT, 9)
            .copy_from(&(eye * dt));
        d.fixed_view_mut::<3, 3>(blocks::RIGHT_POS, 12)
            .copy_from(&(eye * dt));
        d.fixed_view_mut::<3, 3>(blocks::RIGHT_ROT, 15)
            .copy_from(&(eye * dt));
        d.fixed_view_mut::<3, 3>(blocks::BIAS_ACC, 18)
            .copy_from(&(eye * dt));
        d.fixed_view_mut::<3, 3>(blocks::BIAS_GYRO, 21)
            .copy_from(&(eye * dt));

        let left_scale = if contacts.left {
            1.0
        } else {
            p.swing_inflation
        };
        let right_scale = if contacts.right {
            1.0
        } else {
            p.swing_inflation
        };

        let mut variances = SMatrix::<f64, 24, 24>::zeros();
        let channel = [
            p.accel * p.accel,
            p.accel * p.accel,
            p.accel * p.accel,
            p.gyro * p.gyro,
            p.gyro * p.gyro,
            p.gyro * p.gyro,
            p.contact_foot_linear * p.contact_foot_linear * left_scale,
            p.contact_foot_linear * p.contact_foot_linear * left_scale,
            p.contact_foot_linear * p.contact_foot_linear * left_scale,
            p.contact_foot_angular * p.contact_foot_angular * left_scale,
            p.contact_foot_angular * p.contact_foot_angular * left_scale,
            p.contact_foot_angular * p.contact_foot_angular * left_scale,
            p.contact_foot_linear * p.contact_foot_linear * right_scale,
            p.contact_foot_linear * p.contact_foot_linear * right_scale,
            p.contact_foot_linear * p.contact_foot_linear * right_scale,
            p.contact_foot_angular * p.contact_foot_angular * right_scale,
            p.contact_foot_angular * p.contact_foot_angular * right_scale,
            p.contact_foot_angular * p.contact_foot_angular * right_scale,
            p.accel_bias * p.accel_bias,
            p.accel_bias * p.accel_bias,
            p.accel_bias * p.accel_bias,
            p.gyro_bias * p.gyro_bias,
            p.gyro_bias * p.gyro_bias,
            p.gyro_bias * p.gyro_bias,
        ];
        for (i, v) in channel.iter().enumerate() {
            variances[(i, i)] = *v;
        }

        d * variances * d.transpose()
    }

    /// Direct evaluation of the discrete dynamics rows (zero noise): the
    /// reference the exponential-map propagation is measured against. The
    /// two differ at O(ΔT²) through the rotation coupling in the
    /// exponential.
    pub fn propagate_direct(&self, x: &EstimatorState, u: &ImuInput) -> EstimatorState {
        let (alpha, omega) = self.unbiased(x, u);
        let dt = u.dt;
        let r = x.base.rotation;
        let mut out = *x;
        out.base.translation =
            x.base.translation + x.base.velocity * dt + 0.5 * r.rotate(&alpha) * dt * dt;
        out.base.rotation = r.compose(&Rotation::exp(&(omega * dt)));
        out.base.velocity = x.base.velocity + r.rotate(&alpha) * dt;
        out
    }
}

/// Filter-facing input: one IMU sample plus the contact flags valid over
/// the sampling interval.
#[derive(Clone, Copy, Debug)]
pub struct ProcessInput {
    pub imu: ImuInput,
    pub contacts: ContactFlags,
}

impl ProcessModel<EstimatorState> for InertialContactModel {
    type Input = ProcessInput;

    fn motion(&self, x: &EstimatorState, u: &ProcessInput) -> DVector<f64> {
        state_tangent_to_dynamic(&self.motion_tangent(x, &u.imu))
    }

    fn jacobian(&self, x: &EstimatorState, u: &ProcessInput) -> DMatrix<f64> {
        state_matrix_to_dynamic(&self.jacobian_matrix(x, &u.imu))
    }

    fn noise(&self, _x: &EstimatorState, u: &ProcessInput) -> DMatrix<f64> {
        state_matrix_to_dynamic(&self.noise_matrix(&u.contacts, u.imu.dt))
    }
}
