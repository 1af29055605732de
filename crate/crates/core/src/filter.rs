//! Discrete extended Kalman filter on matrix Lie groups.
//!
//! The filter is generic over the state group `S` and over the process and
//! measurement models, so the same propagation/update code runs the full
//! estimator state and plain Euclidean states alike. When every group
//! involved is a translation group the recursion reduces exactly to the
//! standard linear Kalman filter.
//!
//! One step works on a [`Belief`] `(X̂, P)`:
//!
//! ```text
//! propagation:  X̂⁻ = X̂ ∘ exp(Ω(X̂, u))
//!               P⁻ = F P Fᵀ + Φ(−Ω) Q Φ(−Ω)ᵀ
//!               F  = Ad(exp(−Ω)) + Φ(−Ω) 𝓕
//! update:       K  = P⁻Hᵀ (H P⁻Hᵀ + N)⁻¹
//!               z̃  = log(h(X̂⁻)⁻¹ z)
//!               m  = K z̃
//!               X̂⁺ = X̂⁻ ∘ exp(m)
//!               P⁺ = Φ(−m) (I − K H) P⁻ Φ(−m)ᵀ
//! ```
//!
//! where `Φ` is the left Jacobian of the state group. The covariance is
//! re-symmetrized after every step.

use nalgebra::{Cholesky, DMatrix, DVector};
use std::fmt;

use crate::lie::LieError;
use crate::state::{EstimatorState, StateMatrix, StateTangent};

/// Errors surfaced by filter steps.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterError {
    /// The process model produced a non-finite tangent velocity.
    NonFiniteMotion,
    /// The innovation covariance `H P Hᵀ + N` has no symmetric
    /// positive-definite factorization; the noise configuration is
    /// degenerate.
    SingularInnovation,
    /// A model returned a matrix or vector whose dimensions do not match
    /// the state or observation.
    DimensionMismatch { expected: usize, got: usize },
    /// A Lie-group operation failed, typically a logarithm at the π branch
    /// when a measurement is wildly inconsistent with the prediction.
    Lie(LieError),
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::NonFiniteMotion => write!(f, "process model produced non-finite motion"),
            FilterError::SingularInnovation => {
                write!(f, "innovation covariance is not positive definite")
            }
            FilterError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            FilterError::Lie(e) => write!(f, "lie operation failed: {e}"),
        }
    }
}

impl std::error::Error for FilterError {}

impl From<LieError> for FilterError {
    fn from(e: LieError) -> Self {
        FilterError::Lie(e)
    }
}

/// Group operations the filter needs from a state space.
pub trait StateGroup: Clone {
    /// Tangent-space dimension of this element.
    fn dof(&self) -> usize;
    /// Exponential map from a tangent vector.
    fn exp(tangent: &DVector<f64>) -> Self;
    /// Group composition `self ∘ other`.
    fn compose(&self, other: &Self) -> Self;
    /// Adjoint matrix at this element.
    fn adjoint(&self) -> DMatrix<f64>;
    /// Left Jacobian of the exponential map at `tangent`.
    fn left_jacobian(tangent: &DVector<f64>) -> DMatrix<f64>;
}

/// Left-trivialized process model: tangent velocity `Ω`, its Jacobian `𝓕`
/// and the process noise covariance `Q`.
pub trait ProcessModel<S: StateGroup> {
    type Input;
    /// Left-trivialized velocity `Ω(X, u)`.
    fn motion(&self, x: &S, u: &Self::Input) -> DVector<f64>;
    /// Jacobian `𝓕 = ∂Ω(X ∘ exp(ε), u)/∂ε` at `ε = 0`.
    fn jacobian(&self, x: &S, u: &Self::Input) -> DMatrix<f64>;
    /// Process noise covariance `Q` in the tangent space.
    fn noise(&self, x: &S, u: &Self::Input) -> DMatrix<f64>;
}

/// Measurement model on an observation group `G'`.
pub trait MeasurementModel<S: StateGroup> {
    type Observation;
    /// Innovation `z̃ = log(h(X)⁻¹ ∘ z)` on the observation group.
    fn innovation(&self, x: &S, z: &Self::Observation) -> Result<DVector<f64>, FilterError>;
    /// Jacobian `H = ∂ log(h(X)⁻¹ h(X ∘ exp(ε)))/∂ε` at `ε = 0`.
    fn jacobian(&self, x: &S) -> DMatrix<f64>;
    /// Measurement noise covariance `N`.
    fn noise(&self) -> DMatrix<f64>;
}

/// A concentrated Gaussian on the state group: mean on the group,
/// covariance in its tangent space.
#[derive(Clone, Debug)]
pub struct Belief<S> {
    pub mean: S,
    pub cov: DMatrix<f64>,
}

impl<S: StateGroup> Belief<S> {
    pub fn new(mean: S, cov: DMatrix<f64>) -> Self {
        Belief { mean, cov }
    }
}

/// Result of a measurement update.
#[derive(Clone, Debug)]
pub struct UpdateOutcome {
    /// State correction `m⁻ = K z̃` applied through the exponential.
    pub correction: DVector<f64>,
    /// Innovation `z̃` on the observation tangent space.
    pub innovation: DVector<f64>,
    /// Squared Mahalanobis distance `z̃ᵀ S⁻¹ z̃` of the innovation.
    pub mahalanobis_sq: f64,
    /// Whether the update was rejected by the innovation gate.
    pub rejected: bool,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Propagates a belief through the process model.
pub fn propagate<S, P>(
    belief: &Belief<S>,
    model: &P,
    input: &P::Input,
) -> Result<Belief<S>, FilterError>
where
    S: StateGroup,
    P: ProcessModel<S>,
{
    let p = belief.mean.dof();
    let omega = model.motion(&belief.mean, input);
    if omega.len() != p {
        return Err(FilterError::DimensionMismatch {
            expected: p,
            got: omega.len(),
        });
    }
    if !omega.iter().all(|v| v.is_finite()) {
        return Err(FilterError::NonFiniteMotion);
    }

    let phi_neg = S::left_jacobian(&(-&omega));
    let f_model = model.jacobian(&belief.mean, input);
    let big_f = S::exp(&(-&omega)).adjoint() + &phi_neg * f_model;

    let q = model.noise(&belief.mean, input);
    let mean = belief.mean.compose(&S::exp(&omega));
    let mut cov = &big_f * &belief.cov * big_f.transpose() + &phi_neg * q * phi_neg.transpose();
    symmetrize(&mut cov);

    Ok(Belief { mean, cov })
}

/// Applies a measurement update, optionally gated on the squared
/// Mahalanobis distance of the innovation.
///
/// With `gate = Some(threshold)`, an innovation with `z̃ᵀS⁻¹z̃ > threshold`
/// leaves the belief untouched and reports `rejected = true`.
pub fn update<S, M>(
    belief: &Belief<S>,
    model: &M,
    z: &M::Observation,
    gate: Option<f64>,
) -> Result<(Belief<S>, UpdateOutcome), FilterError>
where
    S: StateGroup,
    M: MeasurementModel<S>,
{
    let p = belief.mean.dof();
    let h = model.jacobian(&belief.mean);
    if h.ncols() != p {
        return Err(FilterError::DimensionMismatch {
            expected: p,
            got: h.ncols(),
        });
    }
    let q_dim = h.nrows();
    let n = model.noise();
    if n.nrows() != q_dim || n.ncols() != q_dim {
        return Err(FilterError::DimensionMismatch {
            expected: q_dim,
            got: n.nrows(),
        });
    }

    let s = &h * &belief.cov * h.transpose() + n;
    let chol = Cholesky::new(s).ok_or(FilterError::SingularInnovation)?;

    let innovation = model.innovation(&belief.mean, z)?;
    if innovation.len() != q_dim {
        return Err(FilterError::DimensionMismatch {
            expected: q_dim,
            got: innovation.len(),
        });
    }

    let mahalanobis_sq = innovation.dot(&chol.solve(&innovation));
    if let Some(threshold) = gate {
        if mahalanobis_sq > threshold {
            return Ok((
                belief.clone(),
                UpdateOutcome {
                    correction: DVector::zeros(p),
                    innovation,
                    mahalanobis_sq,
                    rejected: true,
                },
            ));
        }
    }

    let gain = &belief.cov * h.transpose() * chol.inverse();
    let correction = &gain * &innovation;

    let mean = belief.mean.compose(&S::exp(&correction));
    let i_kh = DMatrix::identity(p, p) - &gain * &h;
    let phi_neg = S::left_jacobian(&(-&correction));
    let mut cov = &phi_neg * i_kh * &belief.cov * phi_neg.transpose();
    symmetrize(&mut cov);

    Ok((
        Belief { mean, cov },
        UpdateOutcome {
            correction,
            innovation,
            mahalanobis_sq,
            rejected: false,
        },
    ))
}

/// Filter object owning the current belief. Single writer; independent
/// instances can run concurrently.
#[derive(Clone, Debug)]
pub struct LieGroupEkf<S> {
    belief: Belief<S>,
    /// Optional χ² innovation gate; `None` disables gating.
    pub gate: Option<f64>,
}

impl<S: StateGroup> LieGroupEkf<S> {
    pub fn new(belief: Belief<S>) -> Self {
        LieGroupEkf { belief, gate: None }
    }

    pub fn belief(&self) -> &Belief<S> {
        &self.belief
    }

    pub fn into_belief(self) -> Belief<S> {
        self.belief
    }

    pub fn propagate<P>(&mut self, model: &P, input: &P::Input) -> Result<(), FilterError>
    where
        P: ProcessModel<S>,
    {
        self.belief = propagate(&self.belief, model, input)?;
        Ok(())
    }

    pub fn update<M>(&mut self, model: &M, z: &M::Observation) -> Result<UpdateOutcome, FilterError>
    where
        M: MeasurementModel<S>,
    {
        let (belief, outcome) = update(&self.belief, model, z, self.gate)?;
        self.belief = belief;
        Ok(outcome)
    }
}

/// Euclidean state `T(n)`: composition is vector addition, the exponential
/// is the identity on coordinates and all transport matrices are identity.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanState(pub DVector<f64>);

impl StateGroup for EuclideanState {
    fn dof(&self) -> usize {
        self.0.len()
    }

    fn exp(tangent: &DVector<f64>) -> Self {
        EuclideanState(tangent.clone())
    }

    fn compose(&self, other: &Self) -> Self {
        EuclideanState(&self.0 + &other.0)
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::identity(self.0.len(), self.0.len())
    }

    fn left_jacobian(tangent: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(tangent.len(), tangent.len())
    }
}

impl StateGroup for EstimatorState {
    fn dof(&self) -> usize {
        EstimatorState::DOF
    }

    fn exp(tangent: &DVector<f64>) -> Self {
        EstimatorState::exp(&StateTangent::from_column_slice(tangent.as_slice()))
    }

    fn compose(&self, other: &Self) -> Self {
        EstimatorState::compose(self, other)
    }

    fn adjoint(&self) -> DMatrix<f64> {
        state_matrix_to_dynamic(&EstimatorState::adjoint(self))
    }

    fn left_jacobian(tangent: &DVector<f64>) -> DMatrix<f64> {
        state_matrix_to_dynamic(&EstimatorState::left_jacobian(
            &StateTangent::from_column_slice(tangent.as_slice()),
        ))
    }
}

pub(crate) fn state_matrix_to_dynamic(m: &StateMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(EstimatorState::DOF, EstimatorState::DOF, m.as_slice())
}

pub(crate) fn state_tangent_to_dynamic(v: &StateTangent) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}
