//! Trajectory-error metrics in the left-invariant sense, plus helpers for
//! the randomized-initialization convergence study.
//!
//! The absolute trajectory error aligns the estimate to the ground truth
//! at the first associated pose only (the initial pose of an odometry run
//! is unobservable, so a least-squares alignment would hide real drift)
//! and then measures the per-pair left-invariant error `E = est⁻¹ ∘ gt`.
//! The relative pose error compares relative motions over a fixed time
//! window and is invariant to any constant left transform of either
//! trajectory.

use nalgebra::Vector3;
use std::fmt;

use crate::lie::{LieError, Pose};

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    /// No timestamp pairs could be associated between the trajectories.
    EmptyAssociation,
    /// The trajectory span is shorter than the requested window.
    SpanTooShort { span: f64, window: f64 },
    /// A rotation error hit the π branch of the logarithm.
    Lie(LieError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyAssociation => write!(f, "no timestamp-associated pose pairs"),
            EvalError::SpanTooShort { span, window } => {
                write!(
                    f,
                    "trajectory span {span}s is shorter than the {window}s window"
                )
            }
            EvalError::Lie(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<LieError> for EvalError {
    fn from(e: LieError) -> Self {
        EvalError::Lie(e)
    }
}

/// Time-indexed base poses with optional world-frame velocities.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub poses: Vec<Pose>,
    pub velocities: Option<Vec<Vector3<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[self.times.len() - 1] - self.times[0]
        }
    }

    fn median_period(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        let mut dts: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dts[dts.len() / 2]
    }

    /// Index of the sample nearest to `t`, if within `tol`.
    fn nearest(&self, t: f64, tol: f64) -> Option<usize> {
        if self.times.is_empty() {
            return None;
        }
        let idx = self
            .times
            .partition_point(|&x| x < t)
            .min(self.times.len() - 1);
        let mut best = idx;
        if idx > 0 && (self.times[idx - 1] - t).abs() < (self.times[idx] - t).abs() {
            best = idx - 1;
        }
        ((self.times[best] - t).abs() <= tol).then_some(best)
    }
}

/// Nearest-neighbor timestamp association within half the ground truth's
/// median sample period.
pub fn associate(est: &Trajectory, gt: &Trajectory) -> Vec<(usize, usize)> {
    let tol = 0.5 * gt.median_period().max(est.median_period());
    let mut pairs = Vec::new();
    for (i, &t) in est.times.iter().enumerate() {
        if let Some(j) = gt.nearest(t, tol) {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Per-pair error sample of the aligned trajectories.
#[derive(Clone, Debug)]
pub struct ErrorSample {
    pub time: f64,
    /// Norm of the left-invariant position error (m).
    pub pos_err: f64,
    /// Rotation-log norm of the error (deg).
    pub rot_err_deg: f64,
    /// Body-frame velocity error norm (m/s), when both have velocities.
    pub vel_err: Option<f64>,
    /// World-frame per-axis position error `p_gt − p_est` (m).
    pub pos_axis_err: Vector3<f64>,
    /// Roll/pitch/yaw estimate-minus-truth differences (deg).
    pub rpy_err_deg: Vector3<f64>,
}

/// Absolute-trajectory-error report.
#[derive(Clone, Debug)]
pub struct AteReport {
    pub rot_deg: f64,
    pub pos_m: f64,
    pub vel_mps: Option<f64>,
    pub series: Vec<ErrorSample>,
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    if x < -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    }
    x
}

/// Aligns the estimate to ground truth at the first associated pose, then
/// computes left-invariant ATE statistics over all pairs.
pub fn align_and_ate(est: &Trajectory, gt: &Trajectory) -> Result<AteReport, EvalError> {
    let pairs = associate(est, gt);
    if pairs.is_empty() {
        return Err(EvalError::EmptyAssociation);
    }

    let (i0, j0) = pairs[0];
    let alignment = gt.poses[j0].compose(&est.poses[i0].inverse());

    let mut rot_sq = 0.0;
    let mut pos_sq = 0.0;
    let mut vel_sq = 0.0;
    let mut have_vel = est.velocities.is_some() && gt.velocities.is_some();
    let mut series = Vec::with_capacity(pairs.len());

    for &(i, j) in &pairs {
        let est_pose = alignment.compose(&est.poses[i]);
        let error = est_pose.inverse().compose(&gt.poses[j]);
        let rot_err = error.rotation.log()?.norm();
        let pos_err = error.translation.norm();
        rot_sq += rot_err * rot_err;
        pos_sq += pos_err * pos_err;

        let vel_err = if have_vel {
            let ve = est.velocities.as_ref().unwrap()[i];
            let vg = gt.velocities.as_ref().unwrap()[j];
            let ve_aligned = alignment.rotation.rotate(&ve);
            let diff = est_pose.rotation.inverse().rotate(&(vg - ve_aligned));
            let n = diff.norm();
            vel_sq += n * n;
            Some(n)
        } else {
            have_vel = false;
            None
        };

        let (re, pe, ye) = est_pose.rotation.rpy();
        let (rg, pg, yg) = gt.poses[j].rotation.rpy();
        series.push(ErrorSample {
            time: est.times[i],
            pos_err,
            rot_err_deg: rot_err.to_degrees(),
            vel_err,
            pos_axis_err: gt.poses[j].translation - est_pose.translation,
            rpy_err_deg: Vector3::new(
                wrap_angle(re - rg).to_degrees(),
                wrap_angle(pe - pg).to_degrees(),
                wrap_angle(ye - yg).to_degrees(),
            ),
        });
    }

    let n = pairs.len() as f64;
    Ok(AteReport {
        rot_deg: (rot_sq / n).sqrt().to_degrees(),
        pos_m: (pos_sq / n).sqrt(),
        vel_mps: have_vel.then(|| (vel_sq / n).sqrt()),
        series,
    })
}

/// Relative pose error over a time window: for each sample `i` with a
/// partner `Δ` seconds later, the error of the relative motions
/// `(est_i⁻¹ est_j)⁻¹ (gt_i⁻¹ gt_j)`. Returns `(rot RMS deg, pos RMS m)`.
pub fn rpe(est: &Trajectory, gt: &Trajectory, window: f64) -> Result<(f64, f64), EvalError> {
    if est.span() <= window {
        return Err(EvalError::SpanTooShort {
            span: est.span(),
            window,
        });
    }
    let pairs = associate(est, gt);
    if pairs.is_empty() {
        return Err(EvalError::EmptyAssociation);
    }
    let tol = 0.5 * gt.median_period().max(est.median_period());

    let mut rot_sq = 0.0;
    let mut pos_sq = 0.0;
    let mut count = 0.0;
    for &(i, j) in &pairs {
        let t_later = est.times[i] + window;
        let (Some(i2), Some(j2)) = (est.nearest(t_later, tol), gt.nearest(t_later, tol)) else {
            continue;
        };
        if i2 == i {
            continue;
        }
        let rel_est = est.poses[i].inverse().compose(&est.poses[i2]);
        let rel_gt = gt.poses[j].inverse().compose(&gt.poses[j2]);
        let error = rel_est.inverse().compose(&rel_gt);
        let rot_err = error.rotation.log()?.norm();
        rot_sq += rot_err * rot_err;
        pos_sq += error.translation.norm_squared();
        count += 1.0;
    }
    if count == 0.0 {
        return Err(EvalError::EmptyAssociation);
    }
    Ok((
        (rot_sq / count).sqrt().to_degrees(),
        (pos_sq / count).sqrt(),
    ))
}

/// Slope (per second) of a least-squares line through `(t, y)`; the cheap
/// trend test used by the observability checks.
pub fn regression_slope(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len() as f64;
    if times.len() < 2 {
        return 0.0;
    }
    let tm = times.iter().sum::<f64>() / n;
    let ym = values.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in times.iter().zip(values) {
        num += (t - tm) * (y - ym);
        den += (t - tm) * (t - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// First time after which roll/pitch stays below `rp_thresh_deg` and the
/// velocity error below `vel_thresh` for the rest of the series.
/// `series` rows are `(t, roll_err_deg, pitch_err_deg, vel_err)`.
pub fn converged_after(
    series: &[(f64, f64, f64, f64)],
    rp_thresh_deg: f64,
    vel_thresh: f64,
) -> Option<f64> {
    let ok = |row: &(f64, f64, f64, f64)| {
        row.1.abs() < rp_thresh_deg && row.2.abs() < rp_thresh_deg && row.3 < vel_thresh
    };
    let mut first = None;
    for row in series {
        if ok(row) {
            if first.is_none() {
                first = Some(row.0);
            }
        } else {
            first = None;
        }
    }
    first
}
