//! Core mixed-proportional-hazards objects: the Weibull hazard family, the
//! integrated spells `P_t`, their forward orthogonal (Helmert-type) split
//! into `(P~_1..P~_{T-1}, Pbar)`, and the closed-form pieces built on it.
//!
//! Conditional on the past, each integrated spell is exponential with rate
//! `e^A`; the split makes the within parts `P~_t ~ Beta(1, T-t)` and the
//! between part `Pbar ~ Gamma(T, e^A)`, all mutually independent. That
//! structure is what every moment family in [`crate::moments`] leans on.

use crate::numerics::{log_gamma, NumericsError};
use thiserror::Error;

/// Common parameter of the parametric hazard component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    /// Weibull shape, > 0.
    pub alpha: f64,
    /// Covariate coefficient (scalar covariate throughout the benchmark designs).
    pub beta: f64,
    /// Lagged-duration coefficient.
    pub gamma: f64,
}

impl Theta {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, MphError> {
        if !(alpha > 0.0) || !beta.is_finite() || !gamma.is_finite() {
            return Err(MphError::BadTheta { alpha, beta, gamma });
        }
        Ok(Theta { alpha, beta, gamma })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.alpha, self.beta, self.gamma]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, MphError> {
        assert_eq!(v.len(), 3);
        Theta::new(v[0], v[1], v[2])
    }
}

/// One unit's observed history plus the optional latent `V = e^A` kept by
/// the simulators for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPath {
    pub y0: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Option<f64>,
}

impl PanelPath {
    pub fn new(y0: f64, y: Vec<f64>, x: Vec<f64>, v: Option<f64>) -> Result<Self, MphError> {
        if y.len() < 2 || y.len() != x.len() {
            return Err(MphError::BadPath(format!(
                "need T >= 2 with matching covariates, got T={} |x|={}",
                y.len(),
                x.len()
            )));
        }
        if !(y0 > 0.0) || y.iter().any(|d| !(*d > 0.0)) {
            return Err(MphError::BadPath("durations must be strictly positive".into()));
        }
        Ok(PanelPath { y0, y, x, v })
    }

    pub fn periods(&self) -> usize {
        self.y.len()
    }

    /// Lagged duration entering period `t` (0-based).
    pub fn y_prev(&self, t: usize) -> f64 {
        if t == 0 {
            self.y0
        } else {
            self.y[t - 1]
        }
    }
}

/// The transformed spells and their forward-orthogonal parts.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedSpells {
    pub p: Vec<f64>,
    pub ptilde: Vec<f64>,
    pub pbar: f64,
}

impl IntegratedSpells {
    /// Integrated spells of a path at `theta`, with the forward split.
    pub fn from_path(theta: &Theta, path: &PanelPath) -> Self {
        let p: Vec<f64> = (0..path.periods())
            .map(|t| rho(theta, path.y[t], path.y_prev(t), path.x[t]))
            .collect();
        let (ptilde, pbar) = helmert_forward(&p);
        IntegratedSpells { p, ptilde, pbar }
    }
}

#[derive(Debug, Clone, Error)]
pub enum MphError {
    #[error("invalid parameter vector: alpha={alpha}, beta={beta}, gamma={gamma}")]
    BadTheta { alpha: f64, beta: f64, gamma: f64 },
    #[error("invalid panel path: {0}")]
    BadPath(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Integrated Weibull baseline hazard `Lambda_alpha(y) = y^alpha`.
pub fn weibull_big_lambda(alpha: f64, y: f64) -> f64 {
    debug_assert!(alpha > 0.0 && y > 0.0);
    y.powf(alpha)
}

/// Weibull baseline hazard `lambda_alpha(y) = alpha y^(alpha-1)`.
pub fn weibull_small_lambda(alpha: f64, y: f64) -> f64 {
    debug_assert!(alpha > 0.0 && y > 0.0);
    alpha * y.powf(alpha - 1.0)
}

/// Inverse of the integrated baseline hazard.
pub fn weibull_big_lambda_inv(alpha: f64, p: f64) -> f64 {
    debug_assert!(alpha > 0.0 && p > 0.0);
    p.powf(1.0 / alpha)
}

/// `rho_theta(z_t) = Lambda_alpha(y_t) exp(gamma y_{t-1} + x_t beta)`.
pub fn rho(theta: &Theta, y_t: f64, y_prev: f64, x_t: f64) -> f64 {
    weibull_big_lambda(theta.alpha, y_t) * (theta.gamma * y_prev + theta.beta * x_t).exp()
}

/// Duration that maps to integrated spell `p_t` given the conditioning state.
/// Evaluated in log space so extreme regressor indexes stay representable.
pub fn invert_rho(theta: &Theta, p_t: f64, y_prev: f64, x_t: f64) -> f64 {
    debug_assert!(p_t > 0.0);
    ((p_t.ln() - theta.gamma * y_prev - theta.beta * x_t) / theta.alpha).exp()
}

/// Conditional duration density
/// `lambda_alpha(y) exp(gamma y' + x beta + a) exp(-rho e^a)`.
pub fn mph_density(theta: &Theta, y_t: f64, y_prev: f64, x_t: f64, a: f64) -> f64 {
    let idx = theta.gamma * y_prev + theta.beta * x_t + a;
    weibull_small_lambda(theta.alpha, y_t) * idx.exp() * (-rho(theta, y_t, y_prev, x_t) * a.exp()).exp()
}

/// Forward orthogonal split: `P~_t = p_t / sum_{s>=t} p_s` for `t < T` and
/// `Pbar = sum_t p_t`.
pub fn helmert_forward(p: &[f64]) -> (Vec<f64>, f64) {
    assert!(p.len() >= 2, "need at least two spells");
    let total: f64 = p.iter().sum();
    let mut tail = total;
    let mut ptilde = Vec::with_capacity(p.len() - 1);
    for &pt in &p[..p.len() - 1] {
        ptilde.push(pt / tail);
        tail -= pt;
    }
    (ptilde, total)
}

/// Inverse of [`helmert_forward`]:
/// `P_1 = v_1 v_T`, `P_t = prod_{s<t}(1 - v_s) v_t v_T`, `P_T = prod(1 - v_s) v_T`.
pub fn helmert_inverse(ptilde: &[f64], pbar: f64) -> Vec<f64> {
    let t_len = ptilde.len() + 1;
    let mut p = Vec::with_capacity(t_len);
    let mut lead = 1.0;
    for &v in ptilde {
        p.push(lead * v * pbar);
        lead *= 1.0 - v;
    }
    p.push(lead * pbar);
    p
}

/// Closed-form Jacobian determinant of the inverse split:
/// `v_T^(T-1) prod_{s=1}^{T-2} (1 - v_s)^(T-(s+1))`.
pub fn helmert_jacobian_det(ptilde: &[f64], pbar: f64) -> f64 {
    let t_len = ptilde.len() + 1;
    let mut det = pbar.powi(t_len as i32 - 1);
    for (s, &v) in ptilde.iter().enumerate().take(t_len.saturating_sub(2)) {
        det *= (1.0 - v).powi((t_len - (s + 2)) as i32);
    }
    det
}

/// `E[Pbar^delta | Y_0, X_1, A] = e^(-delta a) Gamma(T + delta) / Gamma(T)`
/// for `delta > -T`.
pub fn gamma_moment_pbar(delta: f64, t_len: usize, a: f64) -> Result<f64, MphError> {
    let t = t_len as f64;
    if !(delta > -t) {
        return Err(MphError::Numerics(NumericsError::Domain(format!(
            "gamma_moment_pbar requires delta > -T, got delta={delta}, T={t_len}"
        ))));
    }
    Ok((-delta * a + log_gamma(t + delta)? - log_gamma(t)?).exp())
}
