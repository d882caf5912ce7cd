//! Bayesian multistatic-radar target recognition from RCS signatures.
//!
//! The crate is organised as a pipeline:
//!
//! - [`signature`]: per-class RCS lookup tables over frequency, azimuth and
//!   elevation, with bilinear interpolation, a binary file format and a
//!   deterministic synthetic generator.
//! - [`kinematics`]: random-walk UAV trajectories and per-radar aspect angles
//!   in the target body frame.
//! - [`noise`]: additive colored Gaussian noise scaled to a target SNR and
//!   uniform angle jitter.
//! - [`classifier`]: multinomial logistic regression and a multilayer
//!   perceptron producing per-radar class probability vectors.
//! - [`fusion`]: single-step fusion rules across radars and the recursive
//!   Bayesian posterior update across time.
//! - [`experiment`]: dataset generation, seeded Monte Carlo sweeps, metrics and
//!   plot-ready CSV output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod kinematics;
pub mod noise;
pub mod seed;
pub mod signature;

pub use classifier::{ClassProbVector, ClassifierModel, LabeledDataset, Observation};
pub use error::{Error, Result};
pub use fusion::{FusionRule, PosteriorState};
pub use kinematics::{AspectSample, KinematicsConfig, Pose, RadarArray};
pub use noise::{ColoredCovariance, NoiseConfig};
pub use signature::{GridLibrary, RcsGrid};
