//! Feedback- and heterogeneity-robust (FHR) moment machinery for nonlinear
//! panel data models, centered on the multi-spell mixed proportional
//! hazards (MPH) model with lagged duration dependence.
//!
//! The crate provides:
//!
//! - [`mph`]: the MPH hazard family, integrated spells, and the forward
//!   orthogonal (Helmert-type) spell transform with its Jacobian;
//! - [`dgp`]: simulators for the two benchmark designs (strictly exogenous
//!   covariates vs. feedback) and a generic panel generator;
//! - [`moments`]: every moment/score family as a [`moments::MomentFn`] —
//!   instrumented spell differences, simple log moments, locally efficient
//!   working-model scores, and the closed-form efficient scores;
//! - [`altmodels`]: moment constructors for Poisson counts, mixed
//!   interactive hazards, and regularized nonlinear-regression moments;
//! - [`fhrcheck`]: a numerical verifier of the robustness conditions for a
//!   candidate moment function against a pluggable parametric model, plus
//!   exact null-space computation for discrete-outcome models;
//! - [`estimate`]: just-identified GMM, asymptotic variances, efficiency
//!   bounds, average-effect estimation, and the relative-standard-error
//!   tables;
//! - [`numerics`]: shared RNG, special functions, quadrature, and small
//!   dense linear algebra.

// Domain guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altmodels;
pub mod batch;
pub mod dgp;
pub mod estimate;
pub mod fhrcheck;
pub mod moments;
pub mod mph;
pub mod numerics;
