//! The composite estimator state: base extended pose, two foot poses and
//! the IMU bias, forming the direct-product group
//! SE₂(3) × SE(3)² × T(6) ⊂ ℝ²⁰ˣ²⁰.
//!
//! Because the product is direct, every operator acts block-wise. The
//! 27-dimensional tangent vector is ordered
//! `(ε_p, ε_R, ε_v, ε_dl, ε_Zl, ε_dr, ε_Zr, ε_b)`; the constants in
//! [`blocks`] are the single source of truth for that layout and are used
//! by the covariance, the process Jacobian and the measurement Jacobians
//! alike.
//!
//! The filter never materializes the 20×20 matrix form; states are stored
//! as their block tuple. [`EstimatorState::matrix`] and
//! [`EstimatorState::hat`] exist for diagnostics and oracle tests.

use nalgebra::{SMatrix, SVector, Vector3, Vector6};

use crate::lie::{t6, BiasVector, ExtendedPose, LieError, Pose, Vector9};

/// Tangent vector of the composite state group.
pub type StateTangent = SVector<f64, 27>;
/// Square matrix on the composite tangent space (adjoints, Jacobians,
/// covariance).
pub type StateMatrix = SMatrix<f64, 27, 27>;
/// 20×20 embedding of the composite group element.
pub type StateEmbedding = SMatrix<f64, 20, 20>;

/// Start indices of the tangent blocks in the fixed ε ordering.
pub mod blocks {
    /// Base position block `ε_p` (3).
    pub const POS: usize = 0;
    /// Base orientation block `ε_R` (3).
    pub const ATT: usize = 3;
    /// Base linear velocity block `ε_v` (3).
    pub const VEL: usize = 6;
    /// Left foot position block `ε_dl` (3).
    pub const LEFT_POS: usize = 9;
    /// Left foot orientation block `ε_Zl` (3).
    pub const LEFT_ROT: usize = 12;
    /// Right foot position block `ε_dr` (3).
    pub const RIGHT_POS: usize = 15;
    /// Right foot orientation block `ε_Zr` (3).
    pub const RIGHT_ROT: usize = 18;
    /// Accelerometer bias block (3).
    pub const BIAS_ACC: usize = 21;
    /// Gyroscope bias block (3).
    pub const BIAS_GYRO: usize = 24;
    /// Full tangent dimension.
    pub const DOF: usize = 27;
}

/// State of the estimator: base extended pose `(p, R, v)`, left and right
/// foot poses `(d_f, Z_f)` and the IMU bias `(b_a, b_g)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorState {
    pub base: ExtendedPose,
    pub left_foot: Pose,
    pub right_foot: Pose,
    pub bias: BiasVector,
}

impl EstimatorState {
    pub const DOF: usize = blocks::DOF;

    pub fn identity() -> Self {
        EstimatorState {
            base: ExtendedPose::identity(),
            left_foot: Pose::identity(),
            right_foot: Pose::identity(),
            bias: BiasVector::zeros(),
        }
    }

    pub fn new(base: ExtendedPose, left_foot: Pose, right_foot: Pose, bias: BiasVector) -> Self {
        EstimatorState {
            base,
            left_foot,
            right_foot,
            bias,
        }
    }

    pub fn accel_bias(&self) -> Vector3<f64> {
        self.bias.fixed_rows::<3>(0).into_owned()
    }

    pub fn gyro_bias(&self) -> Vector3<f64> {
        self.bias.fixed_rows::<3>(3).into_owned()
    }

    /// Block-wise exponential map of the 27-dimensional tangent.
    pub fn exp(eps: &StateTangent) -> Self {
        let base = ExtendedPose::exp(&eps.fixed_rows::<9>(blocks::POS).into_owned());
        let left = Pose::exp(&eps.fixed_rows::<6>(blocks::LEFT_POS).into_owned());
        let right = Pose::exp(&eps.fixed_rows::<6>(blocks::RIGHT_POS).into_owned());
        let bias = eps.fixed_rows::<6>(blocks::BIAS_ACC).into_owned();
        EstimatorState::new(base, left, right, bias)
    }

    /// Block-wise logarithm map.
    pub fn log(&self) -> Result<StateTangent, LieError> {
        let mut eps = StateTangent::zeros();
        eps.fixed_rows_mut::<9>(blocks::POS)
            .copy_from(&self.base.log()?);
        eps.fixed_rows_mut::<6>(blocks::LEFT_POS)
            .copy_from(&self.left_foot.log()?);
        eps.fixed_rows_mut::<6>(blocks::RIGHT_POS)
            .copy_from(&self.right_foot.log()?);
        eps.fixed_rows_mut::<6>(blocks::BIAS_ACC)
            .copy_from(&self.bias);
        Ok(eps)
    }

    pub fn compose(&self, other: &EstimatorState) -> EstimatorState {
        EstimatorState {
            base: self.base.compose(&other.base),
            left_foot: self.left_foot.compose(&other.left_foot),
            right_foot: self.right_foot.compose(&other.right_foot),
            bias: self.bias + other.bias,
        }
    }

    pub fn inverse(&self) -> EstimatorState {
        EstimatorState {
            base: self.base.inverse(),
            left_foot: self.left_foot.inverse(),
            right_foot: self.right_foot.inverse(),
            bias: -self.bias,
        }
    }

    /// Block-diagonal adjoint
    /// `blkdiag(Ad_SE₂(3)(base), Ad_SE(3)(left), Ad_SE(3)(right), I₆)`.
    pub fn adjoint(&self) -> StateMatrix {
        let mut ad = StateMatrix::zeros();
        ad.fixed_view_mut::<9, 9>(blocks::POS, blocks::POS)
            .copy_from(&self.base.adjoint());
        ad.fixed_view_mut::<6, 6>(blocks::LEFT_POS, blocks::LEFT_POS)
            .copy_from(&self.left_foot.adjoint());
        ad.fixed_view_mut::<6, 6>(blocks::RIGHT_POS, blocks::RIGHT_POS)
            .copy_from(&self.right_foot.adjoint());
        ad.fixed_view_mut::<6, 6>(blocks::BIAS_ACC, blocks::BIAS_ACC)
            .copy_from(&nalgebra::Matrix6::identity());
        ad
    }

    /// Block-diagonal left Jacobian
    /// `blkdiag(J_SE₂(3)(ε_base), J_SE(3)(ε_l), J_SE(3)(ε_r), I₆)`.
    pub fn left_jacobian(eps: &StateTangent) -> StateMatrix {
        let mut j = StateMatrix::zeros();
        j.fixed_view_mut::<9, 9>(blocks::POS, blocks::POS)
            .copy_from(&ExtendedPose::left_jacobian(
                &eps.fixed_rows::<9>(blocks::POS).into_owned(),
            ));
        j.fixed_view_mut::<6, 6>(blocks::LEFT_POS, blocks::LEFT_POS)
            .copy_from(&Pose::left_jacobian(
                &eps.fixed_rows::<6>(blocks::LEFT_POS).into_owned(),
            ));
        j.fixed_view_mut::<6, 6>(blocks::RIGHT_POS, blocks::RIGHT_POS)
            .copy_from(&Pose::left_jacobian(
                &eps.fixed_rows::<6>(blocks::RIGHT_POS).into_owned(),
            ));
        j.fixed_view_mut::<6, 6>(blocks::BIAS_ACC, blocks::BIAS_ACC)
            .copy_from(&nalgebra::Matrix6::identity());
        j
    }

    /// 20×20 block-diagonal matrix embedding (diagnostics and oracle tests
    /// only; the filter works on the block tuple).
    pub fn matrix(&self) -> StateEmbedding {
        let mut m = StateEmbedding::identity();
        m.fixed_view_mut::<5, 5>(0, 0)
            .copy_from(&self.base.matrix());
        m.fixed_view_mut::<4, 4>(5, 5)
            .copy_from(&self.left_foot.matrix());
        m.fixed_view_mut::<4, 4>(9, 9)
            .copy_from(&self.right_foot.matrix());
        m.fixed_view_mut::<7, 7>(13, 13)
            .copy_from(&t6::matrix(&self.bias));
        m
    }

    /// Composite hat operator into the 20×20 embedding.
    pub fn hat(eps: &StateTangent) -> StateEmbedding {
        let mut m = StateEmbedding::zeros();
        m.fixed_view_mut::<5, 5>(0, 0).copy_from(&ExtendedPose::hat(
            &eps.fixed_rows::<9>(blocks::POS).into_owned(),
        ));
        m.fixed_view_mut::<4, 4>(5, 5).copy_from(&Pose::hat(
            &eps.fixed_rows::<6>(blocks::LEFT_POS).into_owned(),
        ));
        m.fixed_view_mut::<4, 4>(9, 9).copy_from(&Pose::hat(
            &eps.fixed_rows::<6>(blocks::RIGHT_POS).into_owned(),
        ));
        m.fixed_view_mut::<7, 7>(13, 13).copy_from(&t6::hat(
            &eps.fixed_rows::<6>(blocks::BIAS_ACC).into_owned(),
        ));
        m
    }

    /// Foot pose selected by side.
    pub fn foot(&self, foot: Foot) -> &Pose {
        match foot {
            Foot::Left => &self.left_foot,
            Foot::Right => &self.right_foot,
        }
    }
}

/// Identifies one of the two feet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Foot {
    Left,
    Right,
}

impl Foot {
    /// Start index of this foot's position block in the ε ordering.
    pub fn tangent_index(self) -> usize {
        match self {
            Foot::Left => blocks::LEFT_POS,
            Foot::Right => blocks::RIGHT_POS,
        }
    }
}

/// Builds the base tangent block `(ε_p, ε_R, ε_v)` from parts.
pub fn base_tangent(p: Vector3<f64>, r: Vector3<f64>, v: Vector3<f64>) -> Vector9 {
    let mut xi = Vector9::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&p);
    xi.fixed_rows_mut::<3>(3).copy_from(&r);
    xi.fixed_rows_mut::<3>(6).copy_from(&v);
    xi
}

/// Stacks a foot tangent block `(ε_d, ε_Z)`.
pub fn foot_tangent(d: Vector3<f64>, z: Vector3<f64>) -> Vector6<f64> {
    let mut xi = Vector6::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&d);
    xi.fixed_rows_mut::<3>(3).copy_from(&z);
    xi
}
