//! End-to-end drivers: run the filter over a sensor log, and the four
//! pipeline commands (`simulate`, `estimate`, `evaluate`, `converge`)
//! shared by the CLI and the test suites.

use nalgebra::{DMatrix, DVector, Vector3};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::config::{ConfigError, PriorStdDevs, RunConfig};
use crate::dataset::{self, DataError, EstimateRow, SensorRow, TruthRow};
use crate::eval::{self, EvalError};
use crate::filter::{Belief, FilterError, LieGroupEkf};
use crate::kinematics::{BipedModel, KinematicChain, KinematicsError};
use crate::lie::{ExtendedPose, Pose, Rotation};
use crate::measurement::{
    fk_noise_covariance, stack_double_support, RelativePoseMeasurement, SingleSupportModel,
};
use crate::process::{ImuInput, InertialContactModel, ProcessInput};
use crate::rng::CounterRng;
use crate::sim::{synthesize, SimError};
use crate::state::{blocks, EstimatorState, Foot};

/// Default relative-pose-error window (s).
pub const DEFAULT_RPE_WINDOW: f64 = 1.0;

/// Substream tag for per-trial initialization draws.
const TRIAL_STREAM: u64 = 0x7000;

#[derive(Debug)]
pub enum RunError {
    Filter { row: usize, source: FilterError },
    NonFiniteState { row: usize },
    Kinematics(KinematicsError),
    Data(DataError),
    Config(ConfigError),
    Sim(SimError),
    Eval(EvalError),
    MissingInput(&'static str),
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Filter { row, source } => write!(f, "filter failed at row {row}: {source}"),
            RunError::NonFiniteState { row } => {
                write!(f, "filter diverged at row {row}: state is not finite")
            }
            RunError::Kinematics(e) => write!(f, "{e}"),
            RunError::Data(e) => write!(f, "{e}"),
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Sim(e) => write!(f, "{e}"),
            RunError::Eval(e) => write!(f, "{e}"),
            RunError::MissingInput(what) => write!(f, "missing input: {what}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<KinematicsError> for RunError {
    fn from(e: KinematicsError) -> Self {
        RunError::Kinematics(e)
    }
}
impl From<DataError> for RunError {
    fn from(e: DataError) -> Self {
        RunError::Data(e)
    }
}
impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        RunError::Sim(e)
    }
}
impl From<EvalError> for RunError {
    fn from(e: EvalError) -> Self {
        RunError::Eval(e)
    }
}

/// Diagonal initial covariance from the prior standard deviations, in the
/// fixed ε ordering (feet share the base position/orientation priors).
pub fn initial_covariance(prior: &PriorStdDevs) -> DMatrix<f64> {
    let mut diag = DVector::zeros(EstimatorState::DOF);
    let pos = prior.position * prior.position;
    let att = prior.orientation_deg.to_radians().powi(2);
    let vel = prior.velocity * prior.velocity;
    for i in 0..3 {
        diag[blocks::POS + i] = pos;
        diag[blocks::ATT + i] = att;
        diag[blocks::VEL + i] = vel;
        diag[blocks::LEFT_POS + i] = pos;
        diag[blocks::LEFT_ROT + i] = att;
        diag[blocks::RIGHT_POS + i] = pos;
        diag[blocks::RIGHT_ROT + i] = att;
        diag[blocks::BIAS_ACC + i] = prior.accel_bias * prior.accel_bias;
        diag[blocks::BIAS_GYRO + i] = prior.gyro_bias * prior.gyro_bias;
    }
    DMatrix::from_diagonal(&diag)
}

/// Loads the configured model, falling back to the bundled reference.
pub fn load_model(config: &RunConfig) -> Result<BipedModel, RunError> {
    match &config.model {
        Some(path) => Ok(BipedModel::load(path)?),
        None => Ok(BipedModel::reference()),
    }
}

/// Self-contained initializer when no ground truth is available: level
/// base above the contact feet, feet placed through forward kinematics,
/// zero velocity and bias.
pub fn kinematic_init(row: &SensorRow, model: &BipedModel) -> Result<EstimatorState, RunError> {
    let (left_angles, right_angles) = row.joints.split_at(model.left.dof());
    let left_rel = model.left.forward(left_angles)?;
    let right_rel = model.right.forward(right_angles)?;

    let mut heights = Vec::new();
    if row.contacts.left {
        heights.push(-left_rel.translation.z);
    }
    if row.contacts.right {
        heights.push(-right_rel.translation.z);
    }
    if heights.is_empty() {
        heights.push(-left_rel.translation.z);
        heights.push(-right_rel.translation.z);
    }
    let height = heights.iter().sum::<f64>() / heights.len() as f64;

    let base = ExtendedPose::new(
        Vector3::new(0.0, 0.0, height),
        Rotation::identity(),
        Vector3::zeros(),
    );
    Ok(state_with_kinematic_feet(base, &left_rel, &right_rel))
}

/// Initializer from a ground-truth row: exact base, feet and biases.
pub fn truth_init(row: &TruthRow) -> EstimatorState {
    let mut bias = nalgebra::Vector6::zeros();
    bias.fixed_rows_mut::<3>(0).copy_from(&row.accel_bias);
    bias.fixed_rows_mut::<3>(3).copy_from(&row.gyro_bias);
    EstimatorState::new(row.base, row.left_foot, row.right_foot, bias)
}

fn state_with_kinematic_feet(
    base: ExtendedPose,
    left_rel: &Pose,
    right_rel: &Pose,
) -> EstimatorState {
    let base_pose = base.pose();
    EstimatorState::new(
        base,
        base_pose.compose(left_rel),
        base_pose.compose(right_rel),
        nalgebra::Vector6::zeros(),
    )
}

fn state_is_finite(x: &EstimatorState) -> bool {
    x.base.translation.iter().all(|v| v.is_finite())
        && x.base.velocity.iter().all(|v| v.is_finite())
        && x.base.rotation.matrix().iter().all(|v| v.is_finite())
        && x.left_foot.translation.iter().all(|v| v.is_finite())
        && x.right_foot.translation.iter().all(|v| v.is_finite())
        && x.bias.iter().all(|v| v.is_finite())
}

fn fk_measurement(
    chain: &KinematicChain,
    angles: &[f64],
    foot: Foot,
    encoder_std: f64,
) -> Result<RelativePoseMeasurement, RunError> {
    let pose = chain.forward(angles)?;
    let jacobian = chain.jacobian(angles)?;
    let noise = fk_noise_covariance(&jacobian, &vec![encoder_std; chain.dof()]);
    Ok(RelativePoseMeasurement { foot, pose, noise })
}

/// Runs the filter over a sensor log from the given initial state,
/// producing one estimate row per input row.
pub fn run_filter(
    rows: &[SensorRow],
    model: &BipedModel,
    config: &RunConfig,
    init: EstimatorState,
) -> Result<Vec<EstimateRow>, RunError> {
    if rows.is_empty() {
        return Err(RunError::MissingInput("dataset has no rows"));
    }
    let mut process = InertialContactModel::new(config.noise);
    process.gravity = Vector3::new(0.0, 0.0, -config.gravity);

    let mut ekf = LieGroupEkf::new(Belief::new(init, initial_covariance(&config.prior)));
    ekf.gate = config.gate();
    let encoder_std = config.encoder_std();
    let left_dof = model.left.dof();

    let record = |out: &mut Vec<EstimateRow>, time: f64, belief: &Belief<EstimatorState>| {
        out.push(EstimateRow {
            time,
            state: belief.mean,
            cov_diag: belief.cov.diagonal().iter().copied().collect(),
        });
    };

    let mut out = Vec::with_capacity(rows.len());
    record(&mut out, rows[0].time, ekf.belief());

    for k in 0..rows.len() - 1 {
        let dt = rows[k + 1].time - rows[k].time;
        let input = ProcessInput {
            imu: ImuInput {
                accel: rows[k].accel,
                gyro: rows[k].gyro,
                dt,
            },
            contacts: rows[k].contacts,
        };
        ekf.propagate(&process, &input)
            .map_err(|source| RunError::Filter { row: k, source })?;

        let row = &rows[k + 1];
        let (left_angles, right_angles) = row.joints.split_at(left_dof);
        let map_err = |source| RunError::Filter { row: k + 1, source };
        match (row.contacts.left, row.contacts.right) {
            (true, true) => {
                let left = fk_measurement(&model.left, left_angles, Foot::Left, encoder_std)?;
                let right = fk_measurement(&model.right, right_angles, Foot::Right, encoder_std)?;
                let (stacked, obs) = stack_double_support(&left, &right, &row.contacts)
                    .expect("contacts checked above");
                ekf.update(&stacked, &obs).map_err(map_err)?;
            }
            (true, false) => {
                let left = fk_measurement(&model.left, left_angles, Foot::Left, encoder_std)?;
                let single = SingleSupportModel {
                    foot: Foot::Left,
                    noise: left.noise,
                };
                ekf.update(&single, &left.pose).map_err(map_err)?;
            }
            (false, true) => {
                let right = fk_measurement(&model.right, right_angles, Foot::Right, encoder_std)?;
                let single = SingleSupportModel {
                    foot: Foot::Right,
                    noise: right.noise,
                };
                ekf.update(&single, &right.pose).map_err(map_err)?;
            }
            (false, false) => {}
        }

        if !state_is_finite(&ekf.belief().mean) {
            return Err(RunError::NonFiniteState { row: k + 1 });
        }
        record(&mut out, row.time, ekf.belief());
    }
    Ok(out)
}

fn write_resolved_config(config: &RunConfig, out_dir: &Path) -> Result<PathBuf, RunError> {
    let path = out_dir.join("config.txt");
    std::fs::write(&path, config.serialize()).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(e.to_string()))
}

#[derive(Debug)]
pub struct SimulateOutputs {
    pub dataset: PathBuf,
    pub ground_truth: PathBuf,
    pub config: PathBuf,
}

/// Generates a synthetic run and writes `dataset.csv`,
/// `ground_truth.csv` and the resolved config into `out_dir`.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<SimulateOutputs, RunError> {
    ensure_dir(out_dir)?;
    let model = load_model(config)?;
    let spec = config.gait_with_seed();
    let run = synthesize(
        &spec,
        &model,
        &config.noise,
        &vec![config.encoder_std(); model.dof()],
    )?;

    let dataset = out_dir.join("dataset.csv");
    let ground_truth = out_dir.join("ground_truth.csv");
    dataset::write_dataset(&dataset, &run)?;
    dataset::write_ground_truth(&ground_truth, &run.ground_truth)?;

    let mut resolved = config.clone();
    resolved.dataset_file = Some(dataset.clone());
    resolved.ground_truth_file = Some(ground_truth.clone());
    let config_path = write_resolved_config(&resolved, out_dir)?;

    Ok(SimulateOutputs {
        dataset,
        ground_truth,
        config: config_path,
    })
}

#[derive(Debug)]
pub struct EstimateOutputs {
    pub estimate: PathBuf,
    pub config: PathBuf,
}

/// Runs the filter over the configured dataset and writes
/// `estimate.csv` plus the resolved config into `out_dir`.
pub fn cmd_estimate(config: &RunConfig, out_dir: &Path) -> Result<EstimateOutputs, RunError> {
    ensure_dir(out_dir)?;
    let model = load_model(config)?;
    let dataset_path = config
        .dataset_file
        .as_ref()
        .ok_or(RunError::MissingInput("dataset.file"))?;
    let rows = dataset::read_dataset(dataset_path)?;

    let init = if config.init_from_ground_truth {
        let gt_path = config
            .ground_truth_file
            .as_ref()
            .ok_or(RunError::MissingInput("dataset.ground_truth"))?;
        let gt_rows = dataset::read_ground_truth(gt_path)?;
        truth_init(
            gt_rows
                .first()
                .ok_or(RunError::MissingInput("ground truth rows"))?,
        )
    } else {
        kinematic_init(&rows[0], &model)?
    };

    let estimates = run_filter(&rows, &model, config, init)?;
    let estimate = out_dir.join("estimate.csv");
    dataset::write_estimates(&estimate, &estimates)?;
    let config_path = write_resolved_config(config, out_dir)?;
    Ok(EstimateOutputs {
        estimate,
        config: config_path,
    })
}

#[derive(Debug)]
pub struct EvaluateOutputs {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

/// Compares an estimate file against ground truth and writes the error
/// time series (`report.csv`) and the flat summary (`summary.txt`).
pub fn cmd_evaluate(
    config: &RunConfig,
    estimate_path: &Path,
    truth_path: &Path,
    out_dir: &Path,
) -> Result<EvaluateOutputs, RunError> {
    ensure_dir(out_dir)?;
    let est_rows = dataset::read_estimates(estimate_path)?;
    let gt_rows = dataset::read_ground_truth(truth_path)?;
    let est = dataset::estimate_trajectory(&est_rows);
    let gt = dataset::truth_trajectory(&gt_rows);

    let ate = eval::align_and_ate(&est, &gt)?;
    let (rpe_rot, rpe_pos) = eval::rpe(&est, &gt, DEFAULT_RPE_WINDOW)?;

    let report = out_dir.join("report.csv");
    {
        use crate::fmt::fmt_g12 as g;
        let mut lines = Vec::with_capacity(ate.series.len());
        for s in &ate.series {
            lines.push(
                [
                    g(s.time),
                    g(s.pos_err),
                    g(s.rot_err_deg),
                    g(s.vel_err.unwrap_or(f64::NAN)),
                    g(s.pos_axis_err.x),
                    g(s.pos_axis_err.y),
                    g(s.pos_axis_err.z),
                    g(s.rpy_err_deg.x),
                    g(s.rpy_err_deg.y),
                    g(s.rpy_err_deg.z),
                ]
                .join(","),
            );
        }
        let header =
            "t,pos_err,rot_err_deg,vel_err,ex,ey,ez,roll_err_deg,pitch_err_deg,yaw_err_deg";
        let text = format!("{header}\n{}\n", lines.join("\n"));
        std::fs::write(&report, text).map_err(|e| RunError::Io(e.to_string()))?;
    }

    let summary = out_dir.join("summary.txt");
    {
        use crate::fmt::fmt_g12 as g;
        let mut text = String::new();
        text.push_str("# left-invariant trajectory errors; alignment at the first pose only\n");
        text.push_str(&format!("ate_rot_deg = {}\n", g(ate.rot_deg)));
        text.push_str(&format!("ate_pos_m = {}\n", g(ate.pos_m)));
        text.push_str(&format!(
            "ate_vel_mps = {}\n",
            g(ate.vel_mps.unwrap_or(f64::NAN))
        ));
        text.push_str(&format!("rpe_rot_deg = {}\n", g(rpe_rot)));
        text.push_str(&format!("rpe_pos_m = {}\n", g(rpe_pos)));
        text.push_str(&format!("rpe_window_s = {}\n", g(DEFAULT_RPE_WINDOW)));
        text.push_str(&format!("pairs = {}\n", ate.series.len()));
        std::fs::write(&summary, text).map_err(|e| RunError::Io(e.to_string()))?;
    }

    let config_path = write_resolved_config(config, out_dir)?;
    Ok(EvaluateOutputs {
        report,
        summary,
        config: config_path,
    })
}

/// One trial of the randomized-initialization study.
#[derive(Clone, Debug)]
pub struct TrialResult {
    pub index: usize,
    pub init_roll_deg: f64,
    pub init_pitch_deg: f64,
    pub init_velocity: Vector3<f64>,
    /// Rows `(t, roll error deg, pitch error deg, velocity error m/s)`.
    pub series: Vec<(f64, f64, f64, f64)>,
    /// Error message when the filter aborted.
    pub failure: Option<String>,
}

/// Randomized-initialization convergence study: `n_trials` filter runs on
/// the same log, initial roll/pitch uniform in ±30° and velocity uniform
/// in ±0.5 m/s per axis.
///
/// Everything that is not randomized starts at its reference value: base
/// position and yaw from the first ground-truth row, feet at their true
/// poses (the initial contact configuration is the odometry map origin),
/// biases at zero. Anchoring the feet keeps unobservable ensemble-yaw
/// wander out of the observable-state convergence measurement.
pub fn convergence_study(
    rows: &[SensorRow],
    gt_rows: &[TruthRow],
    model: &BipedModel,
    config: &RunConfig,
    n_trials: usize,
) -> Result<Vec<TrialResult>, RunError> {
    if rows.is_empty() || gt_rows.is_empty() {
        return Err(RunError::MissingInput("dataset and ground truth rows"));
    }
    let gt0 = &gt_rows[0];
    let (_, _, yaw_true) = gt0.base.rotation.rpy();

    let mut trials = Vec::with_capacity(n_trials);
    for index in 0..n_trials {
        let mut rng = CounterRng::new(config.seed).substream(TRIAL_STREAM + index as u64);
        let roll = rng.uniform_in(-30f64.to_radians(), 30f64.to_radians());
        let pitch = rng.uniform_in(-30f64.to_radians(), 30f64.to_radians());
        let velocity = Vector3::from_fn(|_, _| rng.uniform_in(-0.5, 0.5));

        let base = ExtendedPose::new(
            gt0.base.translation,
            Rotation::from_rpy(roll, pitch, yaw_true),
            velocity,
        );
        let init = EstimatorState::new(
            base,
            gt0.left_foot,
            gt0.right_foot,
            nalgebra::Vector6::zeros(),
        );

        let trial = match run_filter(rows, model, config, init) {
            Ok(estimates) => TrialResult {
                index,
                init_roll_deg: roll.to_degrees(),
                init_pitch_deg: pitch.to_degrees(),
                init_velocity: velocity,
                series: error_series(&estimates, gt_rows),
                failure: None,
            },
            Err(e) => TrialResult {
                index,
                init_roll_deg: roll.to_degrees(),
                init_pitch_deg: pitch.to_degrees(),
                init_velocity: velocity,
                series: Vec::new(),
                failure: Some(e.to_string()),
            },
        };
        trials.push(trial);
    }
    Ok(trials)
}

/// Per-row roll/pitch/velocity errors of an estimate against ground truth
/// sampled at the same times.
pub fn error_series(estimates: &[EstimateRow], gt_rows: &[TruthRow]) -> Vec<(f64, f64, f64, f64)> {
    estimates
        .iter()
        .zip(gt_rows)
        .map(|(est, gt)| {
            let (re, pe, _) = est.state.base.rotation.rpy();
            let (rg, pg, _) = gt.base.rotation.rpy();
            let vel_err = (est.state.base.velocity - gt.base.velocity).norm();
            (
                est.time,
                (re - rg).to_degrees(),
                (pe - pg).to_degrees(),
                vel_err,
            )
        })
        .collect()
}

#[derive(Debug)]
pub struct ConvergeOutputs {
    pub trial_files: Vec<PathBuf>,
    pub summary: PathBuf,
    pub config: PathBuf,
}

/// Runs the convergence study and writes one CSV per trial plus a
/// key=value summary.
pub fn cmd_converge(
    config: &RunConfig,
    out_dir: &Path,
    n_trials: usize,
) -> Result<ConvergeOutputs, RunError> {
    ensure_dir(out_dir)?;
    let model = load_model(config)?;
    let dataset_path = config
        .dataset_file
        .as_ref()
        .ok_or(RunError::MissingInput("dataset.file"))?;
    let gt_path = config
        .ground_truth_file
        .as_ref()
        .ok_or(RunError::MissingInput("dataset.ground_truth"))?;
    let rows = dataset::read_dataset(dataset_path)?;
    let gt_rows = dataset::read_ground_truth(gt_path)?;

    let trials = convergence_study(&rows, &gt_rows, &model, config, n_trials)?;

    use crate::fmt::fmt_g12 as g;
    let mut trial_files = Vec::with_capacity(trials.len());
    let mut summary_text = String::new();
    for trial in &trials {
        let path = out_dir.join(format!("trial_{:02}.csv", trial.index));
        let mut text = String::from("t,roll_err_deg,pitch_err_deg,vel_err\n");
        for (t, roll, pitch, vel) in &trial.series {
            text.push_str(&format!(
                "{},{},{},{}\n",
                g(*t),
                g(*roll),
                g(*pitch),
                g(*vel)
            ));
        }
        std::fs::write(&path, text).map_err(|e| RunError::Io(e.to_string()))?;

        let prefix = format!("trial_{:02}", trial.index);
        summary_text.push_str(&format!(
            "{prefix}.init_roll_deg = {}\n",
            g(trial.init_roll_deg)
        ));
        summary_text.push_str(&format!(
            "{prefix}.init_pitch_deg = {}\n",
            g(trial.init_pitch_deg)
        ));
        summary_text.push_str(&format!(
            "{prefix}.init_velocity = {} {} {}\n",
            g(trial.init_velocity.x),
            g(trial.init_velocity.y),
            g(trial.init_velocity.z)
        ));
        match &trial.failure {
            Some(message) => {
                summary_text.push_str(&format!("{prefix}.failed = {message}\n"));
            }
            None => {
                let converged = eval::converged_after(&trial.series, 2.0, 0.05);
                summary_text.push_str(&format!(
                    "{prefix}.converged_s = {}\n",
                    converged.map(g).unwrap_or_else(|| "never".into())
                ));
            }
        }
        trial_files.push(path);
    }
    let summary = out_dir.join("summary.txt");
    std::fs::write(&summary, summary_text).map_err(|e| RunError::Io(e.to_string()))?;
    let config_path = write_resolved_config(config, out_dir)?;
    Ok(ConvergeOutputs {
        trial_files,
        summary,
        config: config_path,
    })
}
