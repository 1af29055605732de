//! Contact-aided kinematic-inertial odometry for bipedal robots.
//!
//! The crate provides, bottom up:
//! - [`lie`]: closed-form operators for SO(3), SE(3), SE₂(3) and T(6);
//! - [`state`]: the composite estimator state (base extended pose, two foot
//!   poses, IMU bias) with its 27-dimensional tangent space;
//! - [`filter`]: a discrete extended Kalman filter on matrix Lie groups,
//!   generic over the state group and the process/measurement models;
//! - [`process`]: the strap-down IMU / contact-foot process model;
//! - [`measurement`]: the forward-kinematic relative-pose measurement model;
//! - [`kinematics`]: serial-chain forward kinematics and body Jacobians;
//! - [`sim`]: a synthetic gait generator with exactly consistent IMU and
//!   encoder streams;
//! - [`eval`]: left-invariant ATE/RPE metrics and the randomized
//!   initialization convergence study;
//! - [`config`], [`dataset`], [`runner`]: run configuration, CSV dataset
//!   I/O and the end-to-end estimation driver used by the CLI.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod filter;
pub mod fmt;
pub mod kinematics;
pub mod lie;
pub mod measurement;
pub mod process;
pub mod rng;
pub mod runner;
pub mod sim;
pub mod state;
