//! Shared oracle machinery for the integration suites: truncated matrix
//! series, per-group random sampling, and the error measurements that the
//! granular oracle tests and the acceptance suite both run.
//!
//! Everything here is independent of the closed-form implementations it
//! checks: exponentials come from matrix power series on the embedded
//! algebra matrices, Jacobians from the adjoint series, derivatives from
//! central finite differences.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SMatrix, Vector3, Vector6};

use kio_core::lie::{skew, t6, ExtendedPose, Pose, Rotation, Vector9};
use kio_core::rng::CounterRng;

/// Truncated matrix exponential `Σ_{k≤terms} M^k / k!`.
pub fn expm(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=terms {
        term = &term * m / k as f64;
        result += &term;
    }
    result
}

/// Truncated left-Jacobian series `Σ_{k≤terms} ad^k / (k+1)!`.
pub fn jacobian_series(ad: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = ad.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=terms {
        term = &term * ad / (k + 1) as f64;
        result += &term;
    }
    result
}

pub fn to_dynamic<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// The four base groups the estimator is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    So3,
    Se3,
    Se23,
    T6,
}

pub const ALL_GROUPS: [GroupKind; 4] = [
    GroupKind::So3,
    GroupKind::Se3,
    GroupKind::Se23,
    GroupKind::T6,
];

impl GroupKind {
    pub fn dof(self) -> usize {
        match self {
            GroupKind::So3 => 3,
            GroupKind::Se3 => 6,
            GroupKind::Se23 => 9,
            GroupKind::T6 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::So3 => "SO(3)",
            GroupKind::Se3 => "SE(3)",
            GroupKind::Se23 => "SE2(3)",
            GroupKind::T6 => "T(6)",
        }
    }

    /// A tangent sample with infinity-norm bound `scale`.
    pub fn sample_tangent(self, rng: &mut CounterRng, scale: f64) -> DVector<f64> {
        DVector::from_fn(self.dof(), |_, _| rng.uniform_in(-scale, scale))
    }

    /// Indices of the rotation block inside the tangent vector.
    fn rotation_block(self) -> Option<usize> {
        match self {
            GroupKind::So3 => Some(0),
            GroupKind::Se3 => Some(3),
            GroupKind::Se23 => Some(3),
            GroupKind::T6 => None,
        }
    }

    /// Norm of the rotation part of a tangent vector.
    pub fn rotation_norm(self, x: &DVector<f64>) -> f64 {
        match self.rotation_block() {
            Some(start) => x.rows(start, 3).norm(),
            None => 0.0,
        }
    }

    /// Hat operator into the group's ambient matrix embedding.
    pub fn hat(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(&skew(&v3(x, 0))),
            GroupKind::Se3 => to_dynamic(&Pose::hat(&v6(x))),
            GroupKind::Se23 => to_dynamic(&ExtendedPose::hat(&v9(x))),
            GroupKind::T6 => to_dynamic(&t6::hat(&v6(x))),
        }
    }

    /// Group exponential, returned as the ambient matrix.
    pub fn exp_matrix(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(Rotation::exp(&v3(x, 0)).matrix()),
            GroupKind::Se3 => to_dynamic(&Pose::exp(&v6(x)).matrix()),
            GroupKind::Se23 => to_dynamic(&ExtendedPose::exp(&v9(x)).matrix()),
            GroupKind::T6 => to_dynamic(&t6::matrix(&v6(x))),
        }
    }

    /// exp then log on the group element.
    pub fn roundtrip(self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            GroupKind::So3 => {
                let back = Rotation::exp(&v3(x, 0)).log().expect("off the pi branch");
                DVector::from_column_slice(back.as_slice())
            }
            GroupKind::Se3 => {
                let back = Pose::exp(&v6(x)).log().expect("off the pi branch");
                DVector::from_column_slice(back.as_slice())
            }
            GroupKind::Se23 => {
                let back = ExtendedPose::exp(&v9(x)).log().expect("off the pi branch");
                DVector::from_column_slice(back.as_slice())
            }
            GroupKind::T6 => x.clone(),
        }
    }

    /// Adjoint matrix at `exp(x)`.
    pub fn adjoint_at_exp(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(&Rotation::exp(&v3(x, 0)).adjoint()),
            GroupKind::Se3 => to_dynamic(&Pose::exp(&v6(x)).adjoint()),
            GroupKind::Se23 => to_dynamic(&ExtendedPose::exp(&v9(x)).adjoint()),
            GroupKind::T6 => DMatrix::identity(6, 6),
        }
    }

    /// Implementation left Jacobian at `x`.
    pub fn left_jacobian(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(&Rotation::left_jacobian(&v3(x, 0))),
            GroupKind::Se3 => to_dynamic(&Pose::left_jacobian(&v6(x))),
            GroupKind::Se23 => to_dynamic(&ExtendedPose::left_jacobian(&v9(x))),
            GroupKind::T6 => DMatrix::identity(6, 6),
        }
    }

    /// Small adjoint (adjoint representation of the algebra element).
    pub fn small_adjoint(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(&skew(&v3(x, 0))),
            GroupKind::Se3 => {
                let v = v3(x, 0);
                let omega = v3(x, 3);
                let mut ad = DMatrix::zeros(6, 6);
                set_block(&mut ad, 0, 0, &skew(&omega));
                set_block(&mut ad, 0, 3, &skew(&v));
                set_block(&mut ad, 3, 3, &skew(&omega));
                ad
            }
            GroupKind::Se23 => {
                let v = v3(x, 0);
                let omega = v3(x, 3);
                let a = v3(x, 6);
                let mut ad = DMatrix::zeros(9, 9);
                set_block(&mut ad, 0, 0, &skew(&omega));
                set_block(&mut ad, 0, 3, &skew(&v));
                set_block(&mut ad, 3, 3, &skew(&omega));
                set_block(&mut ad, 6, 3, &skew(&a));
                set_block(&mut ad, 6, 6, &skew(&omega));
                ad
            }
            GroupKind::T6 => DMatrix::zeros(6, 6),
        }
    }

    /// Vee from the ambient algebra matrix.
    pub fn vee(self, m: &DMatrix<f64>) -> DVector<f64> {
        match self {
            GroupKind::So3 => {
                let fixed: nalgebra::Matrix3<f64> =
                    nalgebra::Matrix3::from_iterator(m.iter().copied());
                DVector::from_column_slice(
                    kio_core::lie::unskew(&fixed)
                        .expect("skew pattern")
                        .as_slice(),
                )
            }
            GroupKind::Se3 => {
                let fixed: nalgebra::Matrix4<f64> =
                    nalgebra::Matrix4::from_iterator(m.iter().copied());
                DVector::from_column_slice(Pose::vee(&fixed).expect("se3 pattern").as_slice())
            }
            GroupKind::Se23 => {
                let fixed: SMatrix<f64, 5, 5> = SMatrix::from_iterator(m.iter().copied());
                DVector::from_column_slice(
                    ExtendedPose::vee(&fixed)
                        .expect("se2(3) pattern")
                        .as_slice(),
                )
            }
            GroupKind::T6 => {
                let fixed: SMatrix<f64, 7, 7> = SMatrix::from_iterator(m.iter().copied());
                DVector::from_column_slice(t6::vee(&fixed).expect("t6 pattern").as_slice())
            }
        }
    }

    /// Inverse of the ambient matrix of `exp(x)` (exact group inverse).
    pub fn inverse_matrix_at_exp(self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            GroupKind::So3 => to_dynamic(Rotation::exp(&v3(x, 0)).inverse().matrix()),
            GroupKind::Se3 => to_dynamic(&Pose::exp(&v6(x)).inverse().matrix()),
            GroupKind::Se23 => to_dynamic(&ExtendedPose::exp(&v9(x)).inverse().matrix()),
            GroupKind::T6 => to_dynamic(&t6::matrix(&(-v6(x)))),
        }
    }
}

fn v3(x: &DVector<f64>, start: usize) -> Vector3<f64> {
    Vector3::new(x[start], x[start + 1], x[start + 2])
}

fn v6(x: &DVector<f64>) -> Vector6<f64> {
    Vector6::from_column_slice(&x.as_slice()[0..6])
}

fn v9(x: &DVector<f64>) -> Vector9 {
    Vector9::from_column_slice(&x.as_slice()[0..9])
}

fn set_block(m: &mut DMatrix<f64>, r: usize, c: usize, block: &nalgebra::Matrix3<f64>) {
    for i in 0..3 {
        for j in 0..3 {
            m[(r + i, c + j)] = block[(i, j)];
        }
    }
}

// Oracle error measurements shared by the granular suites and the
// acceptance criteria. Each returns the worst error over `samples` draws.

/// exp vs truncated matrix power series of the hat matrix.
pub fn exp_series_error(kind: GroupKind, rng: &mut CounterRng, samples: usize, scale: f64) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let mut x = kind.sample_tangent(rng, scale);
        // Keep the full tangent norm within the requested bound.
        if x.norm() > scale {
            x *= scale / x.norm();
        }
        let series = expm(&kind.hat(&x), 20);
        worst = worst.max(max_abs_diff(&kind.exp_matrix(&x), &series));
    }
    worst
}

/// `log(exp(x)) − x` with the rotation part kept off the π branch.
pub fn roundtrip_error(kind: GroupKind, rng: &mut CounterRng, samples: usize) -> f64 {
    let mut worst = 0.0_f64;
    let mut drawn = 0;
    while drawn < samples {
        let x = kind.sample_tangent(rng, 1.6);
        if kind.rotation_norm(&x) >= std::f64::consts::PI - 0.1 {
            continue;
        }
        drawn += 1;
        let back = kind.roundtrip(&x);
        worst = worst.max((back - x).amax());
    }
    worst
}

/// Defining identity of the adjoint: `Ad(X) a = vee(X hat(a) X⁻¹)`.
pub fn adjoint_identity_error(kind: GroupKind, rng: &mut CounterRng, samples: usize) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = kind.sample_tangent(rng, 1.2);
        let a = kind.sample_tangent(rng, 1.0);
        let big_x = kind.exp_matrix(&x);
        let big_x_inv = kind.inverse_matrix_at_exp(&x);
        let transported = kind.vee(&(&big_x * kind.hat(&a) * &big_x_inv));
        let direct = kind.adjoint_at_exp(&x) * &a;
        worst = worst.max((transported - direct).amax());
    }
    worst
}

/// Closed-form left Jacobian vs the 30-term adjoint series.
pub fn left_jacobian_series_error(kind: GroupKind, rng: &mut CounterRng, samples: usize) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let mut x = kind.sample_tangent(rng, 1.0);
        if x.norm() > 1.0 {
            x *= 1.0 / x.norm();
        }
        let series = jacobian_series(&kind.small_adjoint(&x), 30);
        worst = worst.max(max_abs_diff(&kind.left_jacobian(&x), &series));
    }
    worst
}

// Finite-difference oracles for the filter Jacobians.

use kio_core::measurement::{measurement_jacobian, predict_measurement};
use kio_core::process::{ImuInput, InertialContactModel};
use kio_core::state::{EstimatorState, Foot, StateTangent};

pub fn random_estimator_state(rng: &mut CounterRng, scale: f64) -> EstimatorState {
    EstimatorState::exp(&StateTangent::from_fn(|_, _| rng.uniform_in(-scale, scale)))
}

pub fn random_imu(rng: &mut CounterRng, dt: f64) -> ImuInput {
    ImuInput {
        accel: Vector3::from_fn(|_, _| rng.uniform_in(-12.0, 12.0)),
        gyro: Vector3::from_fn(|_, _| rng.uniform_in(-1.5, 1.5)),
        dt,
    }
}

/// Worst entry error of the analytic process Jacobian against central
/// finite differences of `Ω(X ∘ exp(ε), u)` at `ε = 0`.
pub fn process_jacobian_fd_error(
    model: &InertialContactModel,
    x: &EstimatorState,
    u: &ImuInput,
    step: f64,
) -> f64 {
    let analytic = model.jacobian_matrix(x, u);
    let mut worst = 0.0_f64;
    for col in 0..EstimatorState::DOF {
        let mut eps = StateTangent::zeros();
        eps[col] = step;
        let plus = model.motion_tangent(&x.compose(&EstimatorState::exp(&eps)), u);
        eps[col] = -step;
        let minus = model.motion_tangent(&x.compose(&EstimatorState::exp(&eps)), u);
        let fd = (plus - minus) / (2.0 * step);
        for row in 0..EstimatorState::DOF {
            worst = worst.max((analytic[(row, col)] - fd[row]).abs());
        }
    }
    worst
}

/// Zero process noise for exactly-consistent propagation experiments.
pub fn zero_noise() -> kio_core::process::ProcessNoiseParams {
    kio_core::process::ProcessNoiseParams {
        accel: 0.0,
        gyro: 0.0,
        accel_bias: 0.0,
        gyro_bias: 0.0,
        contact_foot_linear: 0.0,
        contact_foot_angular: 0.0,
        swing_inflation: 1e4,
    }
}

/// Default walk without sensor biases, at the given rate.
pub fn unbiased_spec(rate: f64) -> kio_core::sim::GaitSpec {
    kio_core::sim::GaitSpec {
        sample_rate: rate,
        accel_bias: Vector3::zeros(),
        gyro_bias: Vector3::zeros(),
        ..kio_core::sim::GaitSpec::default()
    }
}

/// RMS one-step propagation errors of the noiseless walk at a sample
/// rate: `(tangent, velocity, rotation, position)` RMS over all steps,
/// each step started from the true state.
pub fn one_step_rms(rate: f64) -> (f64, f64, f64, f64) {
    use kio_core::kinematics::BipedModel;
    use kio_core::sim::{generate_gait, synthesize_imu};

    let model = BipedModel::reference();
    let spec = unbiased_spec(rate);
    let gt = generate_gait(&spec, &model).unwrap();
    let imu = synthesize_imu(&gt, &zero_noise(), spec.seed);
    let process = InertialContactModel::new(zero_noise());

    let mut tan_sq = 0.0;
    let mut pos_sq = 0.0;
    let mut vel_sq = 0.0;
    let mut rot_sq = 0.0;
    let n = gt.len() - 1;
    for k in 0..n {
        let mut x = EstimatorState::identity();
        x.base = gt.base[k];
        x.left_foot = gt.left_foot[k];
        x.right_foot = gt.right_foot[k];

        let next = x.compose(&EstimatorState::exp(&process.motion_tangent(&x, &imu[k])));
        let tangent_err = gt.base[k + 1]
            .inverse()
            .compose(&next.base)
            .log()
            .unwrap()
            .norm();
        let pos_err = (next.base.translation - gt.base[k + 1].translation).norm();
        let vel_err = (next.base.velocity - gt.base[k + 1].velocity).norm();
        let rot_err = gt.base[k + 1]
            .rotation
            .inverse()
            .compose(&next.base.rotation)
            .angle();
        tan_sq += tangent_err * tangent_err;
        pos_sq += pos_err * pos_err;
        vel_sq += vel_err * vel_err;
        rot_sq += rot_err * rot_err;
    }
    let rms = |sq: f64| (sq / n as f64).sqrt();
    (rms(tan_sq), rms(vel_sq), rms(rot_sq), rms(pos_sq))
}

// Linear-filter oracle: a plain textbook Kalman filter plus matching
// models for the Euclidean instantiation of the group filter.

use kio_core::filter::{EuclideanState, FilterError, MeasurementModel, ProcessModel};

/// Linear system as a left-trivialized model on T(n):
/// `Ω(x, u) = (A − I) x + B u`.
pub struct LinearProcess {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl ProcessModel<EuclideanState> for LinearProcess {
    type Input = DVector<f64>;
    fn motion(&self, x: &EuclideanState, u: &DVector<f64>) -> DVector<f64> {
        (&self.a - DMatrix::identity(self.a.nrows(), self.a.ncols())) * &x.0 + &self.b * u
    }
    fn jacobian(&self, _x: &EuclideanState, _u: &DVector<f64>) -> DMatrix<f64> {
        &self.a - DMatrix::identity(self.a.nrows(), self.a.ncols())
    }
    fn noise(&self, _x: &EuclideanState, _u: &DVector<f64>) -> DMatrix<f64> {
        self.q.clone()
    }
}

pub struct LinearMeasurement {
    pub h: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

impl MeasurementModel<EuclideanState> for LinearMeasurement {
    type Observation = DVector<f64>;
    fn innovation(
        &self,
        x: &EuclideanState,
        z: &DVector<f64>,
    ) -> Result<DVector<f64>, FilterError> {
        Ok(z - &self.h * &x.0)
    }
    fn jacobian(&self, _x: &EuclideanState) -> DMatrix<f64> {
        self.h.clone()
    }
    fn noise(&self) -> DMatrix<f64> {
        self.n.clone()
    }
}

/// Textbook linear Kalman filter; deliberately a separate implementation
/// (plain LU inverse, direct `A x + B u` arithmetic).
pub struct TextbookKf {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl TextbookKf {
    pub fn predict(
        &mut self,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        q: &DMatrix<f64>,
        u: &DVector<f64>,
    ) {
        self.x = a * &self.x + b * u;
        self.p = a * &self.p * a.transpose() + q;
    }

    pub fn update(&mut self, h: &DMatrix<f64>, n: &DMatrix<f64>, z: &DVector<f64>) {
        let s = h * &self.p * h.transpose() + n;
        let k = &self.p * h.transpose() * s.try_inverse().expect("invertible innovation");
        self.x = &self.x + &k * (z - h * &self.x);
        let dim = self.p.nrows();
        self.p = (DMatrix::identity(dim, dim) - &k * h) * &self.p;
    }
}

pub fn random_spd(rng: &mut CounterRng, dim: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.uniform_in(-1.0, 1.0));
    &g * g.transpose() * scale + DMatrix::identity(dim, dim) * scale * 0.1
}

/// Runs the group filter on T(n) against the textbook filter for `steps`
/// steps and returns the worst mean/covariance gaps seen at any step.
pub fn euclidean_reduction_max_gap(steps: usize, seed: u64) -> (f64, f64) {
    use kio_core::filter::{propagate, update, Belief};

    let mut rng = CounterRng::new(seed);
    let n = 6;
    let q_dim = 3;
    let a =
        DMatrix::identity(n, n) * 0.9 + DMatrix::from_fn(n, n, |_, _| rng.uniform_in(-0.05, 0.05));
    let b = DMatrix::from_fn(n, 2, |_, _| rng.uniform_in(-1.0, 1.0));
    let q = random_spd(&mut rng, n, 1e-3);
    let h = DMatrix::from_fn(q_dim, n, |_, _| rng.uniform_in(-1.0, 1.0));
    let n_cov = random_spd(&mut rng, q_dim, 1e-2);

    let process = LinearProcess {
        a: a.clone(),
        b: b.clone(),
        q: q.clone(),
    };
    let measurement = LinearMeasurement {
        h: h.clone(),
        n: n_cov.clone(),
    };

    let x0 = DVector::from_fn(n, |i, _| i as f64 * 0.1);
    let p0 = random_spd(&mut rng, n, 0.1);
    let mut belief = Belief::new(EuclideanState(x0.clone()), p0.clone());
    let mut textbook = TextbookKf { x: x0, p: p0 };

    let mut worst_mean = 0.0_f64;
    let mut worst_cov = 0.0_f64;
    for _ in 0..steps {
        let u = DVector::from_fn(2, |_, _| rng.uniform_in(-1.0, 1.0));
        let z = DVector::from_fn(q_dim, |_, _| rng.uniform_in(-1.0, 1.0));

        belief = propagate(&belief, &process, &u).unwrap();
        textbook.predict(&a, &b, &q, &u);
        worst_mean = worst_mean.max((&belief.mean.0 - &textbook.x).amax());
        worst_cov = worst_cov.max((&belief.cov - &textbook.p).abs().max());

        let (updated, _) = update(&belief, &measurement, &z, None).unwrap();
        belief = updated;
        textbook.update(&h, &n_cov, &z);
        worst_mean = worst_mean.max((&belief.mean.0 - &textbook.x).amax());
        worst_cov = worst_cov.max((&belief.cov - &textbook.p).abs().max());
    }
    (worst_mean, worst_cov)
}

/// Worst entry error of the analytic measurement Jacobian against central
/// finite differences of `log(h(X)⁻¹ h(X ∘ exp(ε)))` at `ε = 0`.
pub fn measurement_jacobian_fd_error(x: &EstimatorState, foot: Foot, step: f64) -> f64 {
    let analytic = measurement_jacobian(x, foot);
    let predicted = predict_measurement(x, foot);
    let mut worst = 0.0_f64;
    for col in 0..EstimatorState::DOF {
        let mut eps = StateTangent::zeros();
        eps[col] = step;
        let plus = predicted
            .inverse()
            .compose(&predict_measurement(
                &x.compose(&EstimatorState::exp(&eps)),
                foot,
            ))
            .log()
            .expect("residual off the pi branch");
        eps[col] = -step;
        let minus = predicted
            .inverse()
            .compose(&predict_measurement(
                &x.compose(&EstimatorState::exp(&eps)),
                foot,
            ))
            .log()
            .expect("residual off the pi branch");
        let fd = (plus - minus) / (2.0 * step);
        for row in 0..6 {
            worst = worst.max((analytic[(row, col)] - fd[row]).abs());
        }
    }
    worst
}
