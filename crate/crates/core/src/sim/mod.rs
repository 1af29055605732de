//! Synthetic bipedal-gait data: ground-truth trajectories with a contact
//! schedule, IMU samples that are exactly consistent with the analytic
//! base motion, and encoder readings produced by inverse kinematics.
//!
//! The base trajectory is a C² piecewise-quintic spline through
//! footstep-centered waypoints with zero velocity and zero acceleration
//! at every waypoint, so the robot is exactly at rest outside swing
//! phases and the sampled accelerations are exact derivatives. Keeping
//! the angular rate exactly zero at both ends matters: the discrete
//! propagation error telescopes to `½ΔT·(ω(t) − ω(0))`, so a gait that
//! starts with nonzero rate would plant a constant tilt bias in every
//! downstream integration test. Feet are exactly constant while in
//! contact, and all randomness flows from one seed through counter-based
//! streams, making whole runs byte-reproducible.

use nalgebra::Vector3;
use std::fmt;

use crate::kinematics::{BipedModel, KinematicsError};
use crate::lie::{ExtendedPose, Pose, Rotation};
use crate::process::{ContactFlags, ImuInput, ProcessNoiseParams};
use crate::rng::CounterRng;

/// Standstill padding before the first and after the last step (s).
const SETTLE_DURATION: f64 = 1.0;
/// Swing apex height (m).
const SWING_LIFT: f64 = 0.03;
/// Base roll per meter of lateral sway (rad/m); gives the synthetic IMU a
/// gentle orientation excitation tied to the C² sway spline.
const ROLL_GAIN: f64 = 1.2;
/// Required clearance between leg extension and chain reach (m).
const REACH_MARGIN: f64 = 5e-3;

/// Substream tags for the one master seed.
const IMU_STREAM: u64 = 0x1;
const ENCODER_STREAM: u64 = 0x2;

#[derive(Clone, Debug)]
pub enum SimError {
    /// Spec fields violate their bounds.
    BadSpec(String),
    /// The planned gait would over-extend a leg at `time`.
    InfeasibleGait {
        time: f64,
        distance: f64,
        reach: f64,
    },
    /// Inverse kinematics failed while synthesizing encoders.
    Kinematics(KinematicsError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::BadSpec(msg) => write!(f, "invalid gait spec: {msg}"),
            SimError::InfeasibleGait {
                time,
                distance,
                reach,
            } => write!(
                f,
                "gait infeasible at t={time}: leg extension {distance} exceeds reach {reach} (step length too large for the model)"
            ),
            SimError::Kinematics(e) => write!(f, "encoder synthesis: {e}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<KinematicsError> for SimError {
    fn from(e: KinematicsError) -> Self {
        SimError::Kinematics(e)
    }
}

/// Parameters of the synthetic walk.
#[derive(Clone, Debug)]
pub struct GaitSpec {
    /// Base displacement per completed step (m).
    pub step_length: f64,
    /// Duration of one step cycle: swing plus double support (s).
    pub step_duration: f64,
    /// Fraction of the step cycle spent in double support, in `[0, 1]`.
    pub double_support_fraction: f64,
    /// Height of the base frame above the ground (m).
    pub base_height: f64,
    /// Lateral sway amplitude toward the support foot (m).
    pub sway_amplitude: f64,
    /// Total duration of the run (s).
    pub duration: f64,
    /// Sample rate (Hz).
    pub sample_rate: f64,
    /// Master seed for every random draw of the run.
    pub seed: u64,
    /// Constant true accelerometer bias (m/s²).
    pub accel_bias: Vector3<f64>,
    /// Constant true gyroscope bias (rad/s).
    pub gyro_bias: Vector3<f64>,
}

impl Default for GaitSpec {
    fn default() -> Self {
        GaitSpec {
            step_length: 0.08,
            step_duration: 0.8,
            double_support_fraction: 0.3,
            base_height: 0.44,
            sway_amplitude: 0.015,
            duration: 10.0,
            sample_rate: 100.0,
            seed: 42,
            accel_bias: Vector3::new(0.01, -0.005, 0.008),
            gyro_bias: Vector3::new(0.002, -0.001, 0.0015),
        }
    }
}

impl GaitSpec {
    fn validate(&self) -> Result<(), SimError> {
        if !(self.step_duration > 0.0) {
            return Err(SimError::BadSpec("step duration must be positive".into()));
        }
        if !(self.duration > 0.0) {
            return Err(SimError::BadSpec("duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.double_support_fraction) {
            return Err(SimError::BadSpec(
                "double support fraction must lie in [0, 1]".into(),
            ));
        }
        if !(self.sample_rate > 0.0) {
            return Err(SimError::BadSpec("sample rate must be positive".into()));
        }
        if self.step_length < 0.0 || self.sway_amplitude < 0.0 || self.base_height <= 0.0 {
            return Err(SimError::BadSpec(
                "step length and sway must be non-negative, base height positive".into(),
            ));
        }
        Ok(())
    }
}

/// Sampled ground truth of one synthetic run.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub times: Vec<f64>,
    /// Base pose and world-frame linear velocity.
    pub base: Vec<ExtendedPose>,
    /// World-frame base acceleration (spline second derivative).
    pub base_accel: Vec<Vector3<f64>>,
    /// Body-frame base angular velocity.
    pub base_angvel: Vec<Vector3<f64>>,
    pub left_foot: Vec<Pose>,
    pub right_foot: Vec<Pose>,
    pub contacts: Vec<ContactFlags>,
    pub accel_bias: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
    /// Number of full steps the plan executes (excludes the closing
    /// half-step that brings the trailing foot level).
    pub full_steps: usize,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        self.times[1] - self.times[0]
    }
}

/// One noisy encoder reading: all joint angles, left leg then right leg.
#[derive(Clone, Debug)]
pub struct JointReading {
    pub angles: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
enum PhaseKind {
    Stand,
    Swing(SwingFoot),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum SwingFoot {
    Left,
    Right,
}

#[derive(Clone, Debug)]
struct Phase {
    t0: f64,
    t1: f64,
    kind: PhaseKind,
    /// Stance pose of each foot during this phase; the swing foot's entry
    /// holds its lift-off pose.
    left: Pose,
    right: Pose,
    swing_to: Pose,
    /// Support-center x at the phase boundaries; the base blends between
    /// them during swings and holds them during stands.
    base_x_from: f64,
    base_x_to: f64,
}

struct GaitPlan {
    phases: Vec<Phase>,
    full_steps: usize,
}

fn flat_foot(x: f64, y: f64) -> Pose {
    Pose::new(Vector3::new(x, y, 0.0), Rotation::identity())
}

/// Quintic blend Φ with Φ(0)=0, Φ(1)=1 and zero first and second
/// derivatives at both ends; returns `(Φ, Φ', Φ'')` in the unit domain.
fn quintic_blend(u: f64) -> (f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        u3 * (10.0 - 15.0 * u + 6.0 * u2),
        30.0 * u2 - 60.0 * u3 + 30.0 * u2 * u2,
        60.0 * u - 180.0 * u2 + 120.0 * u3,
    )
}

/// Compact C² bump `(4u(1−u))³`: zero value, slope and curvature at both
/// ends, peaking at 1 mid-phase; returns `(B, B', B'')`.
fn sway_bump(u: f64) -> (f64, f64, f64) {
    let w = u * (1.0 - u);
    let value = 64.0 * w * w * w;
    let slope = 192.0 * w * w * (1.0 - 2.0 * u);
    let curvature = 384.0 * w * ((1.0 - 2.0 * u) * (1.0 - 2.0 * u) - w);
    (value, slope, curvature)
}

/// Lays out the contact schedule, footstep placements and base waypoints.
fn plan_phases(spec: &GaitSpec, hip_y: f64) -> GaitPlan {
    let usable = spec.duration - 2.0 * SETTLE_DURATION;
    let ds = spec.double_support_fraction * spec.step_duration;
    let ss = spec.step_duration - ds;
    let cycles = if spec.step_length > 0.0 && usable > 0.0 && ss > 0.0 {
        (usable / spec.step_duration).floor() as usize
    } else {
        0
    };
    // The last cycle is the closing half-step.
    let full_steps = cycles.saturating_sub(1);

    let mut left = flat_foot(0.0, hip_y);
    let mut right = flat_foot(0.0, -hip_y);
    let mut phases = Vec::new();

    if full_steps == 0 {
        phases.push(Phase {
            t0: 0.0,
            t1: spec.duration,
            kind: PhaseKind::Stand,
            left,
            right,
            swing_to: left,
            base_x_from: 0.0,
            base_x_to: 0.0,
        });
        return GaitPlan {
            phases,
            full_steps: 0,
        };
    }

    let mut base_x = 0.0;
    let mut t = SETTLE_DURATION;
    phases.push(Phase {
        t0: 0.0,
        t1: t,
        kind: PhaseKind::Stand,
        left,
        right,
        swing_to: left,
        base_x_from: base_x,
        base_x_to: base_x,
    });

    for step in 0..=full_steps {
        let swing = if step % 2 == 0 {
            SwingFoot::Left
        } else {
            SwingFoot::Right
        };
        // Full steps land at (step+1)·s; the closing step brings the
        // trailing foot level with the leading one.
        let target_x = if step < full_steps {
            (step + 1) as f64 * spec.step_length
        } else {
            full_steps as f64 * spec.step_length
        };
        let target = match swing {
            SwingFoot::Left => flat_foot(target_x, hip_y),
            SwingFoot::Right => flat_foot(target_x, -hip_y),
        };
        let landed_center = 0.5
            * (target_x
                + match swing {
                    SwingFoot::Left => right.translation.x,
                    SwingFoot::Right => left.translation.x,
                });

        phases.push(Phase {
            t0: t,
            t1: t + ss,
            kind: PhaseKind::Swing(swing),
            left,
            right,
            swing_to: target,
            base_x_from: base_x,
            base_x_to: landed_center,
        });
        t += ss;
        base_x = landed_center;
        match swing {
            SwingFoot::Left => left = target,
            SwingFoot::Right => right = target,
        }
        if ds > 0.0 {
            phases.push(Phase {
                t0: t,
                t1: t + ds,
                kind: PhaseKind::Stand,
                left,
                right,
                swing_to: target,
                base_x_from: base_x,
                base_x_to: base_x,
            });
            t += ds;
        }
    }

    phases.push(Phase {
        t0: t,
        t1: spec.duration,
        kind: PhaseKind::Stand,
        left,
        right,
        swing_to: left,
        base_x_from: base_x,
        base_x_to: base_x,
    });

    GaitPlan { phases, full_steps }
}

fn swing_pose(from: &Pose, to: &Pose, u: f64) -> Pose {
    let (blend, _, _) = quintic_blend(u);
    let lift = SWING_LIFT * (std::f64::consts::PI * u).sin().powi(2);
    let mut p = from.translation + (to.translation - from.translation) * blend;
    p.z += lift;
    Pose::new(p, from.rotation)
}

/// Base channel sample: value, first and second time derivative.
#[derive(Clone, Copy, Debug, Default)]
struct Channel {
    value: f64,
    vel: f64,
    acc: f64,
}

struct GaitSample {
    x: Channel,
    y: Channel,
    left: Pose,
    right: Pose,
    contacts: ContactFlags,
}

fn sample_plan(phases: &[Phase], sway_amplitude: f64, t: f64) -> GaitSample {
    // Phases are contiguous; find the one whose [t0, t1) contains t.
    let idx = phases.partition_point(|p| p.t1 <= t).min(phases.len() - 1);
    let phase = &phases[idx];

    match phase.kind {
        PhaseKind::Stand => GaitSample {
            x: Channel {
                value: phase.base_x_to,
                ..Channel::default()
            },
            y: Channel::default(),
            left: phase.left,
            right: phase.right,
            contacts: ContactFlags {
                left: true,
                right: true,
            },
        },
        PhaseKind::Swing(foot) => {
            let duration = phase.t1 - phase.t0;
            let u = ((t - phase.t0) / duration).clamp(0.0, 1.0);

            let (blend, blend_d, blend_dd) = quintic_blend(u);
            let dx = phase.base_x_to - phase.base_x_from;
            let x = Channel {
                value: phase.base_x_from + dx * blend,
                vel: dx * blend_d / duration,
                acc: dx * blend_dd / (duration * duration),
            };

            // Sway toward the support side, vanishing with its first two
            // derivatives at both phase ends.
            let peak = match foot {
                SwingFoot::Left => -sway_amplitude,
                SwingFoot::Right => sway_amplitude,
            };
            let (bump, bump_d, bump_dd) = sway_bump(u);
            let y = Channel {
                value: peak * bump,
                vel: peak * bump_d / duration,
                acc: peak * bump_dd / (duration * duration),
            };

            let (left, right, contacts) = match foot {
                SwingFoot::Left => (
                    swing_pose(&phase.left, &phase.swing_to, u),
                    phase.right,
                    ContactFlags {
                        left: false,
                        right: true,
                    },
                ),
                SwingFoot::Right => (
                    phase.left,
                    swing_pose(&phase.right, &phase.swing_to, u),
                    ContactFlags {
                        left: true,
                        right: false,
                    },
                ),
            };
            GaitSample {
                x,
                y,
                left,
                right,
                contacts,
            }
        }
    }
}

/// Generates the sampled ground truth for a gait spec on a given model.
pub fn generate_gait(spec: &GaitSpec, model: &BipedModel) -> Result<GroundTruth, SimError> {
    spec.validate()?;
    let hip_y = model.left.root_offset().y;
    let plan = plan_phases(spec, hip_y);

    let samples = (spec.duration * spec.sample_rate).round() as usize + 1;
    let mut gt = GroundTruth {
        times: Vec::with_capacity(samples),
        base: Vec::with_capacity(samples),
        base_accel: Vec::with_capacity(samples),
        base_angvel: Vec::with_capacity(samples),
        left_foot: Vec::with_capacity(samples),
        right_foot: Vec::with_capacity(samples),
        contacts: Vec::with_capacity(samples),
        accel_bias: spec.accel_bias,
        gyro_bias: spec.gyro_bias,
        full_steps: plan.full_steps,
    };

    let reach_left = model.left.reach() - REACH_MARGIN;
    let reach_right = model.right.reach() - REACH_MARGIN;

    for k in 0..samples {
        let t = k as f64 / spec.sample_rate;
        let sample = sample_plan(&plan.phases, spec.sway_amplitude, t);
        let GaitSample {
            x,
            y,
            left,
            right,
            contacts,
        } = sample;

        let theta = Vector3::new(ROLL_GAIN * y.value, 0.0, 0.0);
        let theta_dot = Vector3::new(ROLL_GAIN * y.vel, 0.0, 0.0);
        let rotation = Rotation::exp(&theta);
        // Body angular velocity of R(t) = exp(θ(t)) is the right Jacobian
        // applied to θ̇.
        let angvel = Rotation::left_jacobian(&(-theta)) * theta_dot;

        let position = Vector3::new(x.value, y.value, spec.base_height);
        let velocity = Vector3::new(x.vel, y.vel, 0.0);
        let accel = Vector3::new(x.acc, y.acc, 0.0);

        for (chain_reach, foot, hip) in [
            (reach_left, &left, model.left.root_offset()),
            (reach_right, &right, model.right.root_offset()),
        ] {
            let hip_world = rotation.rotate(&hip) + position;
            let distance = (foot.translation - hip_world).norm();
            if distance > chain_reach {
                return Err(SimError::InfeasibleGait {
                    time: t,
                    distance,
                    reach: chain_reach,
                });
            }
        }

        gt.times.push(t);
        gt.base
            .push(ExtendedPose::new(position, rotation, velocity));
        gt.base_accel.push(accel);
        gt.base_angvel.push(angvel);
        gt.left_foot.push(left);
        gt.right_foot.push(right);
        gt.contacts.push(contacts);
    }

    Ok(gt)
}

/// Synthesizes IMU samples consistent with the ground truth:
/// `ᾶ = Rᵀ(ö − g) + b_a + noise`, `ω̃ = ω + b_g + noise`.
pub fn synthesize_imu(gt: &GroundTruth, noise: &ProcessNoiseParams, seed: u64) -> Vec<ImuInput> {
    let mut rng = CounterRng::new(seed).substream(IMU_STREAM);
    let gravity = crate::process::gravity_vector();
    let n = gt.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let dt = if k + 1 < n {
            gt.times[k + 1] - gt.times[k]
        } else if n >= 2 {
            gt.times[n - 1] - gt.times[n - 2]
        } else {
            0.0
        };
        let r_inv = gt.base[k].rotation.inverse();
        let accel = r_inv.rotate(&(gt.base_accel[k] - gravity))
            + gt.accel_bias
            + Vector3::from_fn(|_, _| rng.normal_scaled(noise.accel));
        let gyro = gt.base_angvel[k]
            + gt.gyro_bias
            + Vector3::from_fn(|_, _| rng.normal_scaled(noise.gyro));
        out.push(ImuInput { accel, gyro, dt });
    }
    out
}

/// Synthesizes encoder readings: exact joint angles from damped
/// least-squares inverse kinematics on each leg, plus seeded Gaussian
/// noise per joint.
///
/// `encoder_std` holds one standard deviation per joint (left leg then
/// right leg, radians).
pub fn synthesize_encoders(
    gt: &GroundTruth,
    model: &BipedModel,
    encoder_std: &[f64],
    seed: u64,
) -> Result<Vec<JointReading>, SimError> {
    assert_eq!(encoder_std.len(), model.dof(), "one std dev per joint");
    let mut rng = CounterRng::new(seed).substream(ENCODER_STREAM);
    let nominal = model.nominal_configuration();
    let (nominal_left, nominal_right) = nominal.split_at(model.left.dof());
    let mut warm_left = nominal_left.to_vec();
    let mut warm_right = nominal_right.to_vec();

    let mut out = Vec::with_capacity(gt.len());
    for k in 0..gt.len() {
        let base = gt.base[k].pose().inverse();
        let target_left = base.compose(&gt.left_foot[k]);
        let target_right = base.compose(&gt.right_foot[k]);

        warm_left = model.left.inverse(&target_left, &warm_left)?;
        warm_right = model.right.inverse(&target_right, &warm_right)?;

        let mut angles = Vec::with_capacity(model.dof());
        angles.extend_from_slice(&warm_left);
        angles.extend_from_slice(&warm_right);
        for (angle, std) in angles.iter_mut().zip(encoder_std) {
            *angle += rng.normal_scaled(*std);
        }
        out.push(JointReading { angles });
    }
    Ok(out)
}

/// A complete synthetic run: ground truth plus sensor streams.
#[derive(Clone, Debug)]
pub struct SyntheticRun {
    pub ground_truth: GroundTruth,
    pub imu: Vec<ImuInput>,
    pub joints: Vec<JointReading>,
}

/// Generates ground truth and both sensor streams from one spec; all
/// randomness derives from `spec.seed`.
pub fn synthesize(
    spec: &GaitSpec,
    model: &BipedModel,
    noise: &ProcessNoiseParams,
    encoder_std: &[f64],
) -> Result<SyntheticRun, SimError> {
    let ground_truth = generate_gait(spec, model)?;
    let imu = synthesize_imu(&ground_truth, noise, spec.seed);
    let joints = synthesize_encoders(&ground_truth, model, encoder_std, spec.seed)?;
    Ok(SyntheticRun {
        ground_truth,
        imu,
        joints,
    })
}
