//! Mixed interactive hazards (MIH): the proportionality of the MPH is
//! relaxed by an interaction `(x_t delta) a` between the covariate and the
//! heterogeneity, so the integrated spell satisfies
//! `P_t | past ~ Exponential(V^(1 + x_t delta))`.
//!
//! Robust moments follow from the inverse Laplace transform of the spell
//! power family: for any exponent `b > 0`,
//! `E[p1^b | .] = Gamma(1+b) V^(-b (1 + x1 delta))`, matched by the
//! `p2^(b r)` term with `r = (1 + x1 delta) / (1 + x2 delta)`.

use crate::mph::{invert_rho, Theta};
use crate::numerics::{log_gamma, NumericsError, RngStream};

/// MIH parameters: the MPH triple plus the scalar interaction coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MihTheta {
    pub base: Theta,
    pub delta: f64,
}

impl MihTheta {
    /// `1 + x delta`, required positive on the covariate support.
    pub fn scale(&self, x: f64) -> f64 {
        1.0 + x * self.delta
    }
}

/// A two-spell MIH observation, stored through its integrated spells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MihPath {
    pub y0: f64,
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

/// The spell power moment
/// `[p1^b - Gamma(1+b)/Gamma(1+b r) p2^(b r)] m(y0, x1)` with
/// `r = (1 + x1 delta)/(1 + x2 delta)`; requires `1 + b r > 0`.
pub fn mih_moment(theta: &MihTheta, path: &MihPath, b: f64, m: f64) -> Result<f64, NumericsError> {
    let s1 = theta.scale(path.x1);
    let s2 = theta.scale(path.x2);
    if !(s1 > 0.0) || !(s2 > 0.0) {
        return Err(NumericsError::Domain(format!(
            "1 + x delta must stay positive on the support, got {s1}, {s2}"
        )));
    }
    let r = s1 / s2;
    if !(1.0 + b * r > 0.0) {
        return Err(NumericsError::Domain(format!("gamma pole: 1 + b r = {}", 1.0 + b * r)));
    }
    let ratio = (log_gamma(1.0 + b)? - log_gamma(1.0 + b * r)?).exp();
    Ok((path.p1.powf(b) - ratio * path.p2.powf(b * r)) * m)
}

/// Simulates MIH paths: `V ~ Gamma(5,5)`, `Y0 ~ Exponential(2/3)`,
/// `X1 ~ Bernoulli(1/2)`, feedback `X2 ~ Bernoulli(1 - e^(-(Y0+X1+Y1) V))`,
/// spells `P_t ~ Exponential(V^(1 + x_t delta))`.
pub fn simulate_mih(theta: &MihTheta, n: usize, seed: u64) -> Vec<MihPath> {
    crate::batch::par_map(n, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let v = rng.gamma(5.0, 5.0).expect("fixed parameters");
        let y0 = rng.exponential(2.0 / 3.0).expect("fixed parameters");
        let x1 = if rng.bernoulli(0.5).unwrap() { 1.0 } else { 0.0 };
        let p1 = rng.exponential(v.powf(theta.scale(x1))).expect("scale positive");
        let y1 = invert_rho(&theta.base, p1, y0, x1);
        let tau = y0 + x1 + y1;
        let prob = if tau * v > 700.0 { 1.0 } else { -(-tau * v).exp_m1() };
        let x2 = if rng.bernoulli(prob).unwrap() { 1.0 } else { 0.0 };
        let p2 = rng.exponential(v.powf(theta.scale(x2))).expect("scale positive");
        MihPath { y0, x1, x2, p1, p2 }
    })
}
