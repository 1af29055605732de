//! Serial-chain forward kinematics and the body-frame relative Jacobian
//! for the leg chains.
//!
//! A chain is an ordered list of revolute joints, each with a fixed
//! parent-to-joint pose offset and a unit rotation axis, terminated by a
//! fixed pose to the foot frame:
//!
//! ```text
//! FK(s) = offset₁·R(a₁s₁) · offset₂·R(a₂s₂) · … · foot_offset
//! ```
//!
//! The Jacobian maps joint rates to the foot's body-frame twist relative
//! to the base; it is also what maps encoder noise into measurement noise.
//!
//! Chain description files are plain text, one joint per line:
//!
//! ```text
//! chain left
//! joint hip_yaw offset 0 0.08 0 0 0 0 axis 0 0 1
//! ...
//! foot offset 0 0 -0.1 0 0 0
//! chain right
//! ...
//! ```
//!
//! with offset rotations given as exponential coordinates in radians.

use nalgebra::{DMatrix, Vector3, Vector6};
use std::fmt;
use std::path::Path;

use crate::fmt::fmt_g12;
use crate::lie::{Pose, Rotation};

/// Damping used by the least-squares inverse kinematics step.
const IK_DAMPING_SQ: f64 = 1e-10;
/// Pose residual (tangent norm) at which inverse kinematics is converged.
const IK_TOLERANCE: f64 = 1e-10;
/// Iteration cap; running into it signals a workspace violation.
const IK_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub enum KinematicsError {
    /// Joint vector length does not match the chain's degrees of freedom.
    DofMismatch {
        expected: usize,
        got: usize,
    },
    /// A joint axis is not unit norm within `1e-9`.
    NonUnitAxis {
        joint: String,
        norm: f64,
    },
    /// A chain must have at least one joint.
    EmptyChain,
    /// Inverse kinematics did not reach the pose-residual tolerance within
    /// the iteration cap.
    IkNonConvergence {
        residual: f64,
    },
    /// Malformed chain description file.
    Parse {
        line: usize,
        message: String,
    },
    Io(String),
}

impl fmt::Display for KinematicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KinematicsError::DofMismatch { expected, got } => {
                write!(f, "joint vector has length {got}, chain expects {expected}")
            }
            KinematicsError::NonUnitAxis { joint, norm } => {
                write!(f, "axis of joint '{joint}' has norm {norm}, expected 1")
            }
            KinematicsError::EmptyChain => write!(f, "chain has no joints"),
            KinematicsError::IkNonConvergence { residual } => write!(
                f,
                "inverse kinematics did not converge (residual {residual:e}); target may be outside the workspace"
            ),
            KinematicsError::Parse { line, message } => {
                write!(f, "chain file line {line}: {message}")
            }
            KinematicsError::Io(e) => write!(f, "chain file i/o: {e}"),
        }
    }
}

impl std::error::Error for KinematicsError {}

/// One revolute joint: fixed offset from the parent frame, then a rotation
/// about `axis` by the joint angle.
#[derive(Clone, Debug)]
pub struct Joint {
    pub name: String,
    pub offset: Pose,
    pub axis: Vector3<f64>,
}

/// A serial chain from the base frame to a foot frame.
#[derive(Clone, Debug)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    foot_offset: Pose,
}

impl KinematicChain {
    pub fn new(joints: Vec<Joint>, foot_offset: Pose) -> Result<Self, KinematicsError> {
        if joints.is_empty() {
            return Err(KinematicsError::EmptyChain);
        }
        for joint in &joints {
            let norm = joint.axis.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(KinematicsError::NonUnitAxis {
                    joint: joint.name.clone(),
                    norm,
                });
            }
        }
        Ok(KinematicChain {
            joints,
            foot_offset,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn foot_offset(&self) -> &Pose {
        &self.foot_offset
    }

    /// Maximum base-to-foot distance the chain can span (sum of offset
    /// translation norms past the first joint origin).
    pub fn reach(&self) -> f64 {
        self.joints
            .iter()
            .skip(1)
            .map(|j| j.offset.translation.norm())
            .sum::<f64>()
            + self.foot_offset.translation.norm()
    }

    /// Position of the first joint origin in the base frame.
    pub fn root_offset(&self) -> Vector3<f64> {
        self.joints[0].offset.translation
    }

    fn check_dof(&self, s: &[f64]) -> Result<(), KinematicsError> {
        if s.len() != self.joints.len() {
            return Err(KinematicsError::DofMismatch {
                expected: self.joints.len(),
                got: s.len(),
            });
        }
        Ok(())
    }

    /// Forward kinematics: pose of the foot frame in the base frame.
    pub fn forward(&self, s: &[f64]) -> Result<Pose, KinematicsError> {
        self.check_dof(s)?;
        let mut pose = Pose::identity();
        for (joint, &angle) in self.joints.iter().zip(s) {
            pose = pose.compose(&joint.offset).compose(&Pose::new(
                Vector3::zeros(),
                Rotation::exp(&(joint.axis * angle)),
            ));
        }
        Ok(pose.compose(&self.foot_offset))
    }

    /// Body-frame relative Jacobian at the foot: column `i` is the foot
    /// twist `(linear, angular)` per unit rate of joint `i`, expressed in
    /// the foot frame. Column `i` depends only on joints distal to `i`.
    pub fn jacobian(&self, s: &[f64]) -> Result<DMatrix<f64>, KinematicsError> {
        self.check_dof(s)?;
        let n = self.joints.len();
        let mut jac = DMatrix::zeros(6, n);

        // suffix = X_{i+1} … X_n · foot_offset, built backwards.
        let mut suffix = self.foot_offset;
        for i in (0..n).rev() {
            let twist = Vector6::new(
                0.0,
                0.0,
                0.0,
                self.joints[i].axis.x,
                self.joints[i].axis.y,
                self.joints[i].axis.z,
            );
            let col = suffix.inverse().adjoint() * twist;
            jac.column_mut(i).copy_from(&col);

            suffix = self.joints[i]
                .offset
                .compose(&Pose::new(
                    Vector3::zeros(),
                    Rotation::exp(&(self.joints[i].axis * s[i])),
                ))
                .compose(&suffix);
        }
        Ok(jac)
    }

    /// Damped least-squares inverse kinematics from `initial`, converging
    /// to a body-frame pose residual below `1e-10`.
    pub fn inverse(&self, target: &Pose, initial: &[f64]) -> Result<Vec<f64>, KinematicsError> {
        self.check_dof(initial)?;
        let mut s = initial.to_vec();
        let mut residual_norm = f64::INFINITY;
        for _ in 0..IK_MAX_ITERATIONS {
            let fk = self.forward(&s)?;
            let residual = match fk.inverse().compose(target).log() {
                Ok(r) => r,
                Err(_) => {
                    // π-branch residual: nudge along the largest-effect
                    // joint is hopeless here; report non-convergence.
                    return Err(KinematicsError::IkNonConvergence {
                        residual: residual_norm,
                    });
                }
            };
            residual_norm = residual.norm();
            if residual_norm < IK_TOLERANCE {
                return Ok(s);
            }

            let jac = self.jacobian(&s)?;
            let jt = jac.transpose();
            let mut a = &jac * &jt;
            for i in 0..6 {
                a[(i, i)] += IK_DAMPING_SQ;
            }
            let rhs = nalgebra::DVector::from_column_slice(residual.as_slice());
            let solved = match nalgebra::Cholesky::new(a) {
                Some(chol) => chol.solve(&rhs),
                None => {
                    return Err(KinematicsError::IkNonConvergence {
                        residual: residual_norm,
                    })
                }
            };
            let mut step = jt * solved;

            // Cap the step so early iterations cannot jump branches.
            let step_norm = step.norm();
            if step_norm > 0.5 {
                step *= 0.5 / step_norm;
            }
            for (si, di) in s.iter_mut().zip(step.iter()) {
                *si += di;
            }
        }
        Err(KinematicsError::IkNonConvergence {
            residual: residual_norm,
        })
    }
}

/// The two leg chains of a biped, both rooted at the base frame.
#[derive(Clone, Debug)]
pub struct BipedModel {
    pub left: KinematicChain,
    pub right: KinematicChain,
}

impl BipedModel {
    /// Bundled reference model: two 6-DOF legs (yaw-roll-pitch hip, pitch
    /// knee, pitch-roll ankle) with 0.2 m thigh, 0.2 m shank and 0.1 m
    /// ankle-to-sole links, hips offset ±0.08 m laterally.
    pub fn reference() -> Self {
        let leg = |side: f64, prefix: &str| -> KinematicChain {
            let joints = vec![
                Joint {
                    name: format!("{prefix}_hip_yaw"),
                    offset: Pose::new(Vector3::new(0.0, side * 0.08, 0.0), Rotation::identity()),
                    axis: Vector3::z(),
                },
                Joint {
                    name: format!("{prefix}_hip_roll"),
                    offset: Pose::identity(),
                    axis: Vector3::x(),
                },
                Joint {
                    name: format!("{prefix}_hip_pitch"),
                    offset: Pose::identity(),
                    axis: Vector3::y(),
                },
                Joint {
                    name: format!("{prefix}_knee_pitch"),
                    offset: Pose::new(Vector3::new(0.0, 0.0, -0.2), Rotation::identity()),
                    axis: Vector3::y(),
                },
                Joint {
                    name: format!("{prefix}_ankle_pitch"),
                    offset: Pose::new(Vector3::new(0.0, 0.0, -0.2), Rotation::identity()),
                    axis: Vector3::y(),
                },
                Joint {
                    name: format!("{prefix}_ankle_roll"),
                    offset: Pose::identity(),
                    axis: Vector3::x(),
                },
            ];
            let foot = Pose::new(Vector3::new(0.0, 0.0, -0.1), Rotation::identity());
            KinematicChain::new(joints, foot).expect("reference model is valid")
        };
        BipedModel {
            left: leg(1.0, "l"),
            right: leg(-1.0, "r"),
        }
    }

    /// Knee-bent nominal configuration used to seed inverse kinematics.
    /// Tuned for the reference joint layout (pitch joints at indices 2-4).
    pub fn nominal_configuration(&self) -> Vec<f64> {
        fn leg(dof: usize) -> Vec<f64> {
            let mut s = vec![0.0; dof];
            if dof >= 5 {
                s[2] = -0.25;
                s[3] = 0.5;
                s[4] = -0.25;
            }
            s
        }
        let mut s = leg(self.left.dof());
        s.extend(leg(self.right.dof()));
        s
    }

    pub fn dof(&self) -> usize {
        self.left.dof() + self.right.dof()
    }

    pub fn load(path: &Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| KinematicsError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, KinematicsError> {
        let mut chains: Vec<(String, KinematicChain)> = Vec::new();
        let mut current_name: Option<String> = None;
        let mut joints: Vec<Joint> = Vec::new();
        let mut foot: Option<Pose> = None;

        let finish = |name: Option<String>,
                      joints: &mut Vec<Joint>,
                      foot: &mut Option<Pose>,
                      line: usize|
         -> Result<Option<(String, KinematicChain)>, KinematicsError> {
            match name {
                None => Ok(None),
                Some(n) => {
                    let foot_pose = foot.take().ok_or(KinematicsError::Parse {
                        line,
                        message: format!("chain '{n}' is missing its foot line"),
                    })?;
                    let chain = KinematicChain::new(std::mem::take(joints), foot_pose)?;
                    Ok(Some((n, chain)))
                }
            }
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "chain" => {
                    if tokens.len() != 2 {
                        return Err(KinematicsError::Parse {
                            line: line_no,
                            message: "expected 'chain <left|right>'".into(),
                        });
                    }
                    if let Some(done) =
                        finish(current_name.take(), &mut joints, &mut foot, line_no)?
                    {
                        chains.push(done);
                    }
                    current_name = Some(tokens[1].to_string());
                }
                "joint" => {
                    if current_name.is_none() {
                        return Err(KinematicsError::Parse {
                            line: line_no,
                            message: "joint before any 'chain' line".into(),
                        });
                    }
                    if foot.is_some() {
                        return Err(KinematicsError::Parse {
                            line: line_no,
                            message: "joint after the chain's foot line".into(),
                        });
                    }
                    // joint <name> offset px py pz rx ry rz axis ax ay az
                    if tokens.len() != 13 || tokens[2] != "offset" || tokens[9] != "axis" {
                        return Err(KinematicsError::Parse {
                            line: line_no,
                            message:
                                "expected 'joint <name> offset px py pz rx ry rz axis ax ay az'"
                                    .into(),
                        });
                    }
                    let nums = parse_floats(&tokens[3..9], line_no)?;
                    let axis_nums = parse_floats(&tokens[10..13], line_no)?;
                    joints.push(Joint {
                        name: tokens[1].to_string(),
                        offset: Pose::new(
                            Vector3::new(nums[0], nums[1], nums[2]),
                            Rotation::exp(&Vector3::new(nums[3], nums[4], nums[5])),
                        ),
                        axis: Vector3::new(axis_nums[0], axis_nums[1], axis_nums[2]),
                    });
                }
                "foot" => {
                    if tokens.len() != 8 || tokens[1] != "offset" {
                        return Err(KinematicsError::Parse {
                            line: line_no,
                            message: "expected 'foot offset px py pz rx ry rz'".into(),
                        });
                    }
                    let nums = parse_floats(&tokens[2..8], line_no)?;
                    foot = Some(Pose::new(
                        Vector3::new(nums[0], nums[1], nums[2]),
                        Rotation::exp(&Vector3::new(nums[3], nums[4], nums[5])),
                    ));
                }
                other => {
                    return Err(KinematicsError::Parse {
                        line: line_no,
                        message: format!("unknown directive '{other}'"),
                    });
                }
            }
        }
        if let Some(done) = finish(
            current_name.take(),
            &mut joints,
            &mut foot,
            text.lines().count(),
        )? {
            chains.push(done);
        }

        let mut left = None;
        let mut right = None;
        for (name, chain) in chains {
            match name.as_str() {
                "left" => left = Some(chain),
                "right" => right = Some(chain),
                other => {
                    return Err(KinematicsError::Parse {
                        line: 0,
                        message: format!("unknown chain name '{other}', expected left/right"),
                    });
                }
            }
        }
        match (left, right) {
            (Some(left), Some(right)) => Ok(BipedModel { left, right }),
            _ => Err(KinematicsError::Parse {
                line: 0,
                message: "model must define both a 'left' and a 'right' chain".into(),
            }),
        }
    }

    /// Serializes back to the chain description format.
    pub fn to_file_format(&self) -> String {
        let mut out = String::new();
        for (name, chain) in [("left", &self.left), ("right", &self.right)] {
            out.push_str(&format!("chain {name}\n"));
            for joint in chain.joints() {
                let t = joint.offset.translation;
                let r = joint
                    .offset
                    .rotation
                    .log()
                    .expect("joint offsets stay off the pi branch");
                out.push_str(&format!(
                    "joint {} offset {} {} {} {} {} {} axis {} {} {}\n",
                    joint.name,
                    fmt_g12(t.x),
                    fmt_g12(t.y),
                    fmt_g12(t.z),
                    fmt_g12(r.x),
                    fmt_g12(r.y),
                    fmt_g12(r.z),
                    fmt_g12(joint.axis.x),
                    fmt_g12(joint.axis.y),
                    fmt_g12(joint.axis.z),
                ));
            }
            let t = chain.foot_offset().translation;
            let r = chain
                .foot_offset()
                .rotation
                .log()
                .expect("foot offsets stay off the pi branch");
            out.push_str(&format!(
                "foot offset {} {} {} {} {} {}\n",
                fmt_g12(t.x),
                fmt_g12(t.y),
                fmt_g12(t.z),
                fmt_g12(r.x),
                fmt_g12(r.y),
                fmt_g12(r.z),
            ));
        }
        out
    }
}

fn parse_floats(tokens: &[&str], line: usize) -> Result<Vec<f64>, KinematicsError> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>().map_err(|_| KinematicsError::Parse {
                line,
                message: format!("not a number: '{t}'"),
            })
        })
        .collect()
}
