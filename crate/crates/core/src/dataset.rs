//! CSV dataset files: sensor logs, ground-truth trajectories and filter
//! estimates.
//!
//! All files are UTF-8 with `\n` line endings, one header row naming the
//! columns, `%.12g` numeric formatting, and strictly increasing
//! timestamps. Rotations are serialized as exponential coordinates
//! (three numbers), keeping the formats quaternion-convention-free.

use nalgebra::{Vector3, Vector6};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::fmt::fmt_g12;
use crate::lie::{ExtendedPose, Pose, Rotation};
use crate::process::ContactFlags;
use crate::sim::{GroundTruth, JointReading, SyntheticRun};
use crate::state::EstimatorState;

#[derive(Clone, Debug, PartialEq)]
pub enum DataError {
    Io(String),
    Parse {
        line: usize,
        message: String,
    },
    /// A rotation could not be serialized (logarithm at the π branch).
    Serialize(String),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Io(e) => write!(f, "dataset i/o: {e}"),
            DataError::Parse { line, message } => write!(f, "dataset line {line}: {message}"),
            DataError::Serialize(e) => write!(f, "dataset serialization: {e}"),
        }
    }
}

impl std::error::Error for DataError {}

/// One sensor row: IMU sample, joint encoders, contact flags.
#[derive(Clone, Debug)]
pub struct SensorRow {
    pub time: f64,
    pub accel: Vector3<f64>,
    pub gyro: Vector3<f64>,
    pub joints: Vec<f64>,
    pub contacts: ContactFlags,
}

/// One ground-truth row.
#[derive(Clone, Debug)]
pub struct TruthRow {
    pub time: f64,
    pub base: ExtendedPose,
    pub left_foot: Pose,
    pub right_foot: Pose,
    pub contacts: ContactFlags,
    pub accel_bias: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
}

/// One estimate row: full state plus the covariance diagonal.
#[derive(Clone, Debug)]
pub struct EstimateRow {
    pub time: f64,
    pub state: EstimatorState,
    pub cov_diag: Vec<f64>,
}

fn rot_coords(r: &Rotation) -> Result<Vector3<f64>, DataError> {
    r.log().map_err(|e| DataError::Serialize(e.to_string()))
}

fn push_vec3(fields: &mut Vec<String>, v: &Vector3<f64>) {
    fields.push(fmt_g12(v.x));
    fields.push(fmt_g12(v.y));
    fields.push(fmt_g12(v.z));
}

fn write_lines(path: &Path, header: &str, rows: Vec<String>) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|e| DataError::Io(e.to_string()))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = |s: &str| -> Result<(), DataError> {
        w.write_all(s.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| DataError::Io(e.to_string()))
    };
    emit(header)?;
    for row in rows {
        emit(&row)?;
    }
    w.flush().map_err(|e| DataError::Io(e.to_string()))
}

struct RowReader<'a> {
    fields: Vec<&'a str>,
    line: usize,
    cursor: usize,
}

impl<'a> RowReader<'a> {
    fn num(&mut self) -> Result<f64, DataError> {
        let field = self.fields.get(self.cursor).ok_or(DataError::Parse {
            line: self.line,
            message: "row has too few columns".into(),
        })?;
        self.cursor += 1;
        field.parse::<f64>().map_err(|_| DataError::Parse {
            line: self.line,
            message: format!("not a number: '{field}'"),
        })
    }

    fn vec3(&mut self) -> Result<Vector3<f64>, DataError> {
        Ok(Vector3::new(self.num()?, self.num()?, self.num()?))
    }

    fn flag(&mut self) -> Result<bool, DataError> {
        let v = self.num()?;
        Ok(v != 0.0)
    }

    fn finish(&self) -> Result<(), DataError> {
        if self.cursor != self.fields.len() {
            return Err(DataError::Parse {
                line: self.line,
                message: format!(
                    "row has {} columns, expected {}",
                    self.fields.len(),
                    self.cursor
                ),
            });
        }
        Ok(())
    }
}

fn read_rows(path: &Path) -> Result<(String, Vec<(usize, String)>), DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io(e.to_string()))?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.to_string(),
        None => {
            return Err(DataError::Parse {
                line: 1,
                message: "file is empty".into(),
            })
        }
    };
    let rows = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect();
    Ok((header, rows))
}

fn check_monotone(times: &[f64], path_kind: &str) -> Result<(), DataError> {
    for (k, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(DataError::Parse {
                line: k + 3,
                message: format!("{path_kind} timestamps must be strictly increasing"),
            });
        }
    }
    Ok(())
}

pub fn dataset_header(joint_count: usize) -> String {
    let mut cols = vec![
        "t".to_string(),
        "ax".into(),
        "ay".into(),
        "az".into(),
        "gx".into(),
        "gy".into(),
        "gz".into(),
    ];
    for j in 1..=joint_count {
        cols.push(format!("s_{j}"));
    }
    cols.push("contact_l".into());
    cols.push("contact_r".into());
    cols.join(",")
}

/// Writes the sensor log of a synthetic run.
pub fn write_dataset(path: &Path, run: &SyntheticRun) -> Result<(), DataError> {
    let rows = dataset_rows(&run.ground_truth, &run.imu, &run.joints);
    let joint_count = run.joints.first().map_or(0, |j| j.angles.len());
    let lines = rows
        .iter()
        .map(|row| {
            let mut fields = vec![fmt_g12(row.time)];
            push_vec3(&mut fields, &row.accel);
            push_vec3(&mut fields, &row.gyro);
            for angle in &row.joints {
                fields.push(fmt_g12(*angle));
            }
            fields.push(if row.contacts.left { "1" } else { "0" }.into());
            fields.push(if row.contacts.right { "1" } else { "0" }.into());
            fields.join(",")
        })
        .collect();
    write_lines(path, &dataset_header(joint_count), lines)
}

/// Assembles sensor rows from the synthetic streams.
pub fn dataset_rows(
    gt: &GroundTruth,
    imu: &[crate::process::ImuInput],
    joints: &[JointReading],
) -> Vec<SensorRow> {
    (0..gt.len())
        .map(|k| SensorRow {
            time: gt.times[k],
            accel: imu[k].accel,
            gyro: imu[k].gyro,
            joints: joints[k].angles.clone(),
            contacts: gt.contacts[k],
        })
        .collect()
}

pub fn read_dataset(path: &Path) -> Result<Vec<SensorRow>, DataError> {
    let (header, lines) = read_rows(path)?;
    let columns = header.split(',').count();
    if columns < 9 {
        return Err(DataError::Parse {
            line: 1,
            message: format!("expected at least 9 columns, header has {columns}"),
        });
    }
    let joint_count = columns - 9;

    let mut rows = Vec::with_capacity(lines.len());
    for (line_no, line) in &lines {
        let mut r = RowReader {
            fields: line.split(',').collect(),
            line: *line_no,
            cursor: 0,
        };
        let time = r.num()?;
        let accel = r.vec3()?;
        let gyro = r.vec3()?;
        let mut joints = Vec::with_capacity(joint_count);
        for _ in 0..joint_count {
            joints.push(r.num()?);
        }
        let contacts = ContactFlags {
            left: r.flag()?,
            right: r.flag()?,
        };
        r.finish()?;
        rows.push(SensorRow {
            time,
            accel,
            gyro,
            joints,
            contacts,
        });
    }
    check_monotone(&rows.iter().map(|r| r.time).collect::<Vec<_>>(), "dataset")?;
    Ok(rows)
}

const TRUTH_HEADER: &str = "t,px,py,pz,rx,ry,rz,vx,vy,vz,\
lf_px,lf_py,lf_pz,lf_rx,lf_ry,lf_rz,\
rf_px,rf_py,rf_pz,rf_rx,rf_ry,rf_rz,\
contact_l,contact_r,ba_x,ba_y,ba_z,bg_x,bg_y,bg_z";

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<(), DataError> {
    let mut lines = Vec::with_capacity(gt.len());
    for k in 0..gt.len() {
        let mut fields = vec![fmt_g12(gt.times[k])];
        push_vec3(&mut fields, &gt.base[k].translation);
        push_vec3(&mut fields, &rot_coords(&gt.base[k].rotation)?);
        push_vec3(&mut fields, &gt.base[k].velocity);
        push_vec3(&mut fields, &gt.left_foot[k].translation);
        push_vec3(&mut fields, &rot_coords(&gt.left_foot[k].rotation)?);
        push_vec3(&mut fields, &gt.right_foot[k].translation);
        push_vec3(&mut fields, &rot_coords(&gt.right_foot[k].rotation)?);
        fields.push(if gt.contacts[k].left { "1" } else { "0" }.into());
        fields.push(if gt.contacts[k].right { "1" } else { "0" }.into());
        push_vec3(&mut fields, &gt.accel_bias);
        push_vec3(&mut fields, &gt.gyro_bias);
        lines.push(fields.join(","));
    }
    write_lines(path, TRUTH_HEADER, lines)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<TruthRow>, DataError> {
    let (_, lines) = read_rows(path)?;
    let mut rows = Vec::with_capacity(lines.len());
    for (line_no, line) in &lines {
        let mut r = RowReader {
            fields: line.split(',').collect(),
            line: *line_no,
            cursor: 0,
        };
        let time = r.num()?;
        let p = r.vec3()?;
        let rot = Rotation::exp(&r.vec3()?);
        let v = r.vec3()?;
        let lf_p = r.vec3()?;
        let lf_r = Rotation::exp(&r.vec3()?);
        let rf_p = r.vec3()?;
        let rf_r = Rotation::exp(&r.vec3()?);
        let contacts = ContactFlags {
            left: r.flag()?,
            right: r.flag()?,
        };
        let accel_bias = r.vec3()?;
        let gyro_bias = r.vec3()?;
        r.finish()?;
        rows.push(TruthRow {
            time,
            base: ExtendedPose::new(p, rot, v),
            left_foot: Pose::new(lf_p, lf_r),
            right_foot: Pose::new(rf_p, rf_r),
            contacts,
            accel_bias,
            gyro_bias,
        });
    }
    check_monotone(&rows.iter().map(|r| r.time).collect::<Vec<_>>(), "truth")?;
    Ok(rows)
}

fn estimate_header() -> String {
    let mut cols: Vec<String> = [
        "t", "px", "py", "pz", "rx", "ry", "rz", "vx", "vy", "vz", "lf_px", "lf_py", "lf_pz",
        "lf_rx", "lf_ry", "lf_rz", "rf_px", "rf_py", "rf_pz", "rf_rx", "rf_ry", "rf_rz", "ba_x",
        "ba_y", "ba_z", "bg_x", "bg_y", "bg_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..27 {
        cols.push(format!("cov_{i}"));
    }
    cols.join(",")
}

pub fn write_estimates(path: &Path, rows: &[EstimateRow]) -> Result<(), DataError> {
    let mut lines = Vec::with_capacity(rows.len());
    for row in rows {
        let mut fields = vec![fmt_g12(row.time)];
        push_vec3(&mut fields, &row.state.base.translation);
        push_vec3(&mut fields, &rot_coords(&row.state.base.rotation)?);
        push_vec3(&mut fields, &row.state.base.velocity);
        push_vec3(&mut fields, &row.state.left_foot.translation);
        push_vec3(&mut fields, &rot_coords(&row.state.left_foot.rotation)?);
        push_vec3(&mut fields, &row.state.right_foot.translation);
        push_vec3(&mut fields, &rot_coords(&row.state.right_foot.rotation)?);
        push_vec3(&mut fields, &row.state.accel_bias());
        push_vec3(&mut fields, &row.state.gyro_bias());
        for v in &row.cov_diag {
            fields.push(fmt_g12(*v));
        }
        lines.push(fields.join(","));
    }
    write_lines(path, &estimate_header(), lines)
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>, DataError> {
    let (_, lines) = read_rows(path)?;
    let mut rows = Vec::with_capacity(lines.len());
    for (line_no, line) in &lines {
        let mut r = RowReader {
            fields: line.split(',').collect(),
            line: *line_no,
            cursor: 0,
        };
        let time = r.num()?;
        let p = r.vec3()?;
        let rot = Rotation::exp(&r.vec3()?);
        let v = r.vec3()?;
        let lf_p = r.vec3()?;
        let lf_r = Rotation::exp(&r.vec3()?);
        let rf_p = r.vec3()?;
        let rf_r = Rotation::exp(&r.vec3()?);
        let ba = r.vec3()?;
        let bg = r.vec3()?;
        let mut cov_diag = Vec::with_capacity(27);
        for _ in 0..27 {
            cov_diag.push(r.num()?);
        }
        r.finish()?;
        let mut bias = Vector6::zeros();
        bias.fixed_rows_mut::<3>(0).copy_from(&ba);
        bias.fixed_rows_mut::<3>(3).copy_from(&bg);
        rows.push(EstimateRow {
            time,
            state: EstimatorState::new(
                ExtendedPose::new(p, rot, v),
                Pose::new(lf_p, lf_r),
                Pose::new(rf_p, rf_r),
                bias,
            ),
            cov_diag,
        });
    }
    check_monotone(&rows.iter().map(|r| r.time).collect::<Vec<_>>(), "estimate")?;
    Ok(rows)
}

/// Trajectory view of ground-truth rows.
pub fn truth_trajectory(rows: &[TruthRow]) -> crate::eval::Trajectory {
    crate::eval::Trajectory {
        times: rows.iter().map(|r| r.time).collect(),
        poses: rows.iter().map(|r| r.base.pose()).collect(),
        velocities: Some(rows.iter().map(|r| r.base.velocity).collect()),
    }
}

/// Trajectory view of estimate rows.
pub fn estimate_trajectory(rows: &[EstimateRow]) -> crate::eval::Trajectory {
    crate::eval::Trajectory {
        times: rows.iter().map(|r| r.time).collect(),
        poses: rows.iter().map(|r| r.state.base.pose()).collect(),
        velocities: Some(rows.iter().map(|r| r.state.base.velocity).collect()),
    }
}
