//! Moment constructors for the non-MPH examples: Poisson counts, mixed
//! interactive hazards, and the regularized nonlinear-regression moments.
//!
//! Identifiers for the command line: `poisson-cw`, `poisson-2nd`, `mih`,
//! `nonlin-reg`.

pub mod mih;
pub mod nonlinreg;
pub mod poisson;

pub use mih::{mih_moment, simulate_mih, MihPath, MihTheta};
pub use nonlinreg::{
    bandwidth_bias_study, deconv_kernel, default_a_grid, nonlin_reg_moment, NonlinRegMoment,
    NonlinRegTheta, PsiFn, RegFn, RegPath,
};
pub use poisson::{
    poisson_cw_moment, poisson_second_moment, poisson_taylor_moment, PoissonPath, PoissonTheta,
    PsiPolynomial,
};
