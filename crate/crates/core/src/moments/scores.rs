//! Closed-form score families for the T = 2 MPH model: the locally
//! efficient working-model score and the design-specific efficient scores
//! with and without feedback.
//!
//! All three share the same gamma and alpha building blocks; they differ
//! only in which conditional expectation of the heterogeneity scale `e^A`
//! multiplies the between part, and in the beta component. Component order
//! is `(alpha, beta, gamma)`, matching [`Theta`].

use super::ln_clamped;
use super::WorkingModel;
use crate::mph::{IntegratedSpells, PanelPath, Theta};
use crate::numerics::hyp2f1;

/// Which benchmark design the conditional expectations are derived for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    A,
    B,
}

/// Heterogeneity posterior under the benchmark designs:
/// `V | Y0, Pbar, X1 ~ Gamma(T + kappa0, Pbar + lambda0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentPosterior {
    pub kappa0: f64,
    pub lambda0: f64,
    pub regime: Experiment,
}

impl ExperimentPosterior {
    pub fn benchmark(regime: Experiment) -> Self {
        ExperimentPosterior { kappa0: 5.0, lambda0: 5.0, regime }
    }

    /// Posterior mean `E[V | Y0, Pbar, X1] = (T + kappa0) / (Pbar + lambda0)`.
    pub fn posterior_mean(&self, t_len: usize, pbar: f64) -> f64 {
        (t_len as f64 + self.kappa0) / (pbar + self.lambda0)
    }
}

/// Common gamma-component builder. `pbar_ev` is `Pbar * E[e^A | .]` under
/// the relevant conditioning (or `T` under the vague working prior).
fn gamma_component(theta: &Theta, y0: f64, x1: f64, y1: f64, pt: f64, pb: f64, pbar_ev: f64) -> f64 {
    let a = theta.alpha;
    let e = (-(x1 * theta.beta + theta.gamma * y0) / a).exp();
    let c1 = a / (1.0 + a);
    let c2 = c1 - a / (1.0 + 2.0 * a);
    let pb_pow = pb.powf(1.0 / a);
    y1 - c1 * e * pb_pow - (y0 * (pt - 0.5) + (y1 * (1.0 - pt) - c2 * e * pb_pow)) * pbar_ev
}

/// Common alpha-component assembly from the beta and gamma components.
fn alpha_component(theta: &Theta, pt: f64, pbar_ev: f64, sb: f64, sg: f64) -> f64 {
    let a = theta.alpha;
    let lp = ln_clamped(pt);
    let lq = ln_clamped(1.0 - pt);
    (2.0 + lp + lq) / a
        - (pt * lp + (1.0 - pt) * lq + 0.5) * pbar_ev / a
        - sb * theta.beta / a
        - sg * theta.gamma / a
}

/// Locally efficient score under the constant-probability working model and
/// vague heterogeneity prior; the posterior mean collapses to `T / Pbar`,
/// so the between factor is just `T`.
pub fn loceff_score(theta: &Theta, path: &PanelPath, wm: &WorkingModel) -> [f64; 3] {
    debug_assert_eq!(path.periods(), 2, "closed forms hold for T = 2");
    let sp = IntegratedSpells::from_path(theta, path);
    let (pt, pb) = (sp.ptilde[0], sp.pbar);
    let t_len = path.periods() as f64;
    let sb = (wm.p - path.x[0]) * (pt - 0.5) * t_len;
    let sg = gamma_component(theta, path.y0, path.x[0], path.y[0], pt, pb, t_len);
    let sa = alpha_component(theta, pt, t_len, sb, sg);
    [sa, sb, sg]
}

/// The four conditional expectations entering the design-B efficient score,
/// exactly as their closed forms: `E[X2 | Y0,X1,P~,Pbar]`,
/// `E[X2 | Y0,X1,Pbar]`, `E[X2 V | Y0,X1,P~,Pbar]`, and
/// `E[X2 (1-P~) V | Y0,Pbar,X1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondExpB {
    pub x2_fine: f64,
    pub x2_coarse: f64,
    pub x2v_fine: f64,
    pub x2mv_coarse: f64,
}

/// Closed forms under design B, built from the Gamma posterior and the
/// Gauss hypergeometric function with `C1 = lambda0 + Pbar + Y0 + X1` and
/// `C2 = Pbar^(1/alpha) e^(-X1 beta / alpha - gamma Y0 / alpha)`.
pub fn conditional_expectations_b(
    theta: &Theta,
    y0: f64,
    x1: f64,
    ptilde1: f64,
    pbar: f64,
    post: &ExperimentPosterior,
) -> CondExpB {
    debug_assert_eq!(post.regime, Experiment::B);
    let a = theta.alpha;
    let tk = 2.0 + post.kappa0;
    let b = pbar + post.lambda0;
    let c2 = ((pbar.ln() - x1 * theta.beta - theta.gamma * y0) / a).exp();
    let y1 = c2 * ptilde1.powf(1.0 / a);
    let tau = y0 + x1 + y1;
    let c1 = b + y0 + x1;
    let z = -c2 / c1;
    let f_tk = hyp2f1(tk, a, 1.0 + a, z).expect("validity region");
    let f_tk1 = hyp2f1(tk + 1.0, a, 1.0 + a, z).expect("validity region");
    let f_tk1_2a = hyp2f1(tk + 1.0, 2.0 * a, 1.0 + 2.0 * a, z).expect("validity region");
    let x2_fine = -(-tk * (tau / b).ln_1p()).exp_m1(); // 1 - (b/(b+tau))^tk, stably
    let x2_coarse = 1.0 - (tk * (b.ln() - c1.ln())).exp() * f_tk;
    let x2v_fine = tk / b * (-(-(tk + 1.0) * (tau / b).ln_1p()).exp_m1());
    let x2mv_coarse = 0.5 * tk / b
        - tk * (tk * b.ln() - (tk + 1.0) * c1.ln()).exp() * (f_tk1 - 0.5 * f_tk1_2a);
    CondExpB { x2_fine, x2_coarse, x2v_fine, x2mv_coarse }
}

/// Efficient score for theta under feedback, specialised to the named
/// designs. Under design A the beta component collapses to the no-feedback
/// form `(P~ - 1/2) Pbar (E[X2 V | .] - X1 E[V | .])`; under design B the
/// covariate conditional expectations carry the hypergeometric closed forms.
pub fn eff_score_feedback(theta: &Theta, path: &PanelPath, post: &ExperimentPosterior) -> [f64; 3] {
    debug_assert_eq!(path.periods(), 2, "closed forms hold for T = 2");
    let sp = IntegratedSpells::from_path(theta, path);
    let (pt, pb) = (sp.ptilde[0], sp.pbar);
    let (y0, x1, y1) = (path.y0, path.x[0], path.y[0]);
    let tk = 2.0 + post.kappa0;
    let b = pb + post.lambda0;
    let ev = tk / b;
    let sb = match post.regime {
        Experiment::A => {
            let tau = y0 + x1;
            let x2v = tk / b * (-(-(tk + 1.0) * (tau / b).ln_1p()).exp_m1());
            (pt - 0.5) * pb * (x2v - x1 * ev)
        }
        Experiment::B => {
            let ce = conditional_expectations_b(theta, y0, x1, pt, pb, post);
            -x1 * (pt - 0.5) * pb * ev + (ce.x2_fine - ce.x2_coarse)
                - ((1.0 - pt) * ce.x2v_fine - ce.x2mv_coarse) * pb
        }
    };
    let pbar_ev = pb * ev;
    let sg = gamma_component(theta, y0, x1, y1, pt, pb, pbar_ev);
    let sa = alpha_component(theta, pt, pbar_ev, sb, sg);
    [sa, sb, sg]
}

/// Efficient score under strict exogeneity (design A closed form). The
/// conditioning now includes X2, so the heterogeneity mean is the
/// two-component mixture implied by the covariate likelihood.
pub fn eff_score_strict_exog(theta: &Theta, path: &PanelPath, post: &ExperimentPosterior) -> [f64; 3] {
    debug_assert_eq!(path.periods(), 2, "closed forms hold for T = 2");
    debug_assert_eq!(post.regime, Experiment::A, "derived under the design A feedback law");
    let sp = IntegratedSpells::from_path(theta, path);
    let (pt, pb) = (sp.ptilde[0], sp.pbar);
    let (y0, x1, x2, y1) = (path.y0, path.x[0], path.x[1], path.y[0]);
    let tk = 2.0 + post.kappa0;
    let b = pb + post.lambda0;
    let tau = y0 + x1;
    let u = (tau / b).ln_1p();
    let ese = if x2 == 1.0 {
        // E[V (1 - e^(-tau V))] / P(X2 = 1), both via expm1 for stability
        (tk / b) * (-(-(tk + 1.0) * u).exp_m1()) / (-(-tk * u).exp_m1())
    } else {
        tk / (b + tau)
    };
    let sb = (x2 - x1) * (pt - 0.5) * pb * ese;
    let pbar_ese = pb * ese;
    let sg = gamma_component(theta, y0, x1, y1, pt, pb, pbar_ese);
    let sa = alpha_component(theta, pt, pbar_ese, sb, sg);
    [sa, sb, sg]
}
