//! Simulators for the two benchmark designs and a generic panel generator
//! with user-supplied feedback.
//!
//! Both designs fix T = 2 spells, draw `V = e^A ~ Gamma(5, 5)` (shape-rate,
//! mean one) independent of the initial conditions, and make the
//! second-period covariate Bernoulli with success probability
//! `1 - exp(-tau * V)`. Design A uses `tau = Y0 + X1` (no feedback, but
//! correlated heterogeneity); design B adds the first duration,
//! `tau = Y0 + X1 + Y1`, introducing feedback. Spells are generated exactly
//! by drawing the integrated spell `P_t ~ Exponential(V)` and inverting the
//! spell map - no root finding involved.

use crate::batch::par_map;
use crate::mph::{invert_rho, MphError, PanelPath, Theta};
use crate::numerics::RngStream;
use std::sync::Arc;

/// Gamma heterogeneity for `V = e^A` in the shape-rate convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterogeneitySpec {
    pub kappa0: f64,
    pub lambda0: f64,
}

impl HeterogeneitySpec {
    pub fn benchmark() -> Self {
        HeterogeneitySpec { kappa0: 5.0, lambda0: 5.0 }
    }
}

/// History available to the feedback process when drawing `X_{t+1}`.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackState<'a> {
    pub y0: f64,
    /// Covariates `x_1..x_t` drawn so far.
    pub x: &'a [f64],
    /// Durations `y_1..y_t` realized so far.
    pub y: &'a [f64],
}

type TauFn = Arc<dyn Fn(FeedbackState<'_>) -> f64 + Send + Sync>;

/// Feedback regime: the map `tau(history)` in `P(X_{t+1} = 1) = 1 - e^(-tau V)`.
#[derive(Clone)]
pub enum Feedback {
    /// `tau = Y0 + X1`: strictly exogenous covariates.
    ExperimentA,
    /// `tau = Y0 + X1 + Y1`: feedback from the first duration.
    ExperimentB,
    /// Arbitrary `tau` over the full available history (panels with T > 2).
    Custom(TauFn),
}

impl std::fmt::Debug for Feedback {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Feedback::ExperimentA => write!(f, "ExperimentA"),
            Feedback::ExperimentB => write!(f, "ExperimentB"),
            Feedback::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Feedback {
    fn tau(&self, state: FeedbackState<'_>) -> f64 {
        match self {
            Feedback::ExperimentA => state.y0 + state.x[0],
            Feedback::ExperimentB => state.y0 + state.x[0] + state.y[0],
            Feedback::Custom(f) => f(state),
        }
    }
}

/// Full simulation design.
#[derive(Debug, Clone)]
pub struct DgpConfig {
    pub t_len: usize,
    pub theta0: Theta,
    /// Rate of the initial-duration exponential (the benchmark designs use
    /// rate 2/3, i.e. mean 3/2).
    pub y0_rate: f64,
    pub x1_prob: f64,
    pub het: HeterogeneitySpec,
    pub feedback: Feedback,
}

/// Benchmark common parameter `(alpha, beta, gamma) = (3/4, (3/4) ln 2, -1/10)`.
pub fn benchmark_theta() -> Theta {
    Theta { alpha: 0.75, beta: 0.75 * std::f64::consts::LN_2, gamma: -0.10 }
}

impl DgpConfig {
    fn benchmark(feedback: Feedback) -> Self {
        DgpConfig {
            t_len: 2,
            theta0: benchmark_theta(),
            y0_rate: 2.0 / 3.0,
            x1_prob: 0.5,
            het: HeterogeneitySpec::benchmark(),
            feedback,
        }
    }

    /// Design A: strictly exogenous covariates, correlated heterogeneity.
    pub fn experiment_a() -> Self {
        Self::benchmark(Feedback::ExperimentA)
    }

    /// Design B: feedback from the first duration.
    pub fn experiment_b() -> Self {
        Self::benchmark(Feedback::ExperimentB)
    }

    pub fn validate(&self) -> Result<(), MphError> {
        if self.t_len < 2 {
            return Err(MphError::BadPath(format!("need T >= 2 spells, got {}", self.t_len)));
        }
        if !(self.y0_rate > 0.0)
            || !(0.0..=1.0).contains(&self.x1_prob)
            || !(self.het.kappa0 > 0.0)
            || !(self.het.lambda0 > 0.0)
        {
            return Err(MphError::BadPath("invalid distribution parameters".into()));
        }
        if matches!(self.feedback, Feedback::ExperimentA | Feedback::ExperimentB) && self.t_len != 2 {
            return Err(MphError::BadPath("the named designs are pinned to T = 2".into()));
        }
        Ok(())
    }
}

/// Success probability of the next covariate given the history and latent `v`.
/// Clamped to 1 once `tau * v` exceeds 700 (where `e^-x` underflows).
pub fn feedback_prob(config: &DgpConfig, state: FeedbackState<'_>, v: f64) -> f64 {
    let tv = config.feedback.tau(state) * v;
    if tv > 700.0 {
        1.0
    } else {
        -(-tv).exp_m1()
    }
}

fn simulate_unit(config: &DgpConfig, rng: &mut RngStream) -> PanelPath {
    let het = config.het;
    let v = rng.gamma(het.kappa0, het.lambda0).expect("validated");
    let y0 = rng.exponential(config.y0_rate).expect("validated");
    let x1 = if rng.bernoulli(config.x1_prob).expect("validated") { 1.0 } else { 0.0 };
    let mut x = vec![x1];
    let mut y = Vec::with_capacity(config.t_len);
    for t in 0..config.t_len {
        if t >= 1 {
            let state = FeedbackState { y0, x: &x, y: &y };
            let p = feedback_prob(config, state, v);
            x.push(if rng.bernoulli(p).expect("probability") { 1.0 } else { 0.0 });
        }
        let p_t = rng.exponential(v).expect("v > 0");
        let y_prev = if t == 0 { y0 } else { y[t - 1] };
        y.push(invert_rho(&config.theta0, p_t, y_prev, x[t]));
    }
    PanelPath::new(y0, y, x, Some(v)).expect("simulated path is valid")
}

/// Simulates `n` units. Unit `i` draws from `RngStream::new(seed, i)`, so
/// output is identical for any thread count and bitwise reproducible.
pub fn simulate_panel(config: &DgpConfig, n: usize, seed: u64) -> Result<Vec<PanelPath>, MphError> {
    config.validate()?;
    assert!(n >= 1);
    Ok(par_map(n, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        simulate_unit(config, &mut rng)
    }))
}
