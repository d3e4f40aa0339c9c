//! Shared numerical kernels: counter-based RNG and samplers, special
//! functions, Gauss-Legendre quadrature, and small dense linear algebra.
//!
//! Everything here is pure given explicit [`RngStream`] inputs and safe to
//! use concurrently; streams are value-semantic and `Send`.

mod linalg;
mod quad;
mod rng;
mod special;

pub use linalg::{invert, null_space, solve_linear, Mat};
pub use quad::{gauss_legendre, integrate, integrate_adaptive, QuadDomain, QuadratureRule};
pub use rng::RngStream;
pub use special::{gamma_fn, hyp2f1, hyp2f1_euler, log_gamma};

/// Errors from the numerical kernels.
#[derive(Debug, Clone, thiserror::Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite integrand value {value} at node {node}")]
    Evaluation { node: f64, value: f64 },
    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },
}
