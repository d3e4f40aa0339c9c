//! Moment and score families for the MPH model, each packaged as a
//! [`MomentFn`] evaluating on a [`PanelPath`] at a given [`Theta`].
//!
//! Families and their string identifiers (used by the command line):
//!
//! | id        | contents                                              | regime |
//! |-----------|-------------------------------------------------------|--------|
//! | `simple`  | log-transformed spell moments, 3-vector               | robust |
//! | `ab`      | instrumented spell first differences                  | robust |
//! | `loceff`  | locally efficient working-model score                 | robust |
//! | `eff-fb`  | efficient score under feedback (design-specific)      | robust |
//! | `eff-se`  | efficient score under strict exogeneity (design A)    | strict exogeneity only |
//! | `ash`     | average-structural-hazard moment at an eval point     | robust |
//! | `asf`     | average-structural-function moment at an eval point   | robust |
//!
//! "Robust" means mean zero at the true parameter under any feedback
//! process, heterogeneity distribution, and initial condition; the
//! strict-exogeneity score is only valid without feedback.

mod effects;
mod scores;

pub use effects::{
    ash_moment, ash_value, asf_moment, asf_moment_first_spell, HazardPoint, StructuralPoint,
};
pub use scores::{
    conditional_expectations_b, eff_score_feedback, eff_score_strict_exog, loceff_score, CondExpB,
    Experiment, ExperimentPosterior,
};

use crate::mph::{IntegratedSpells, PanelPath, Theta};
use std::sync::Arc;

/// Validity regime of a moment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Mean zero under arbitrary feedback and heterogeneity.
    Fhr,
    /// Mean zero only when covariates are strictly exogenous.
    StrictExogeneityOnly,
}

type EvalFn = Arc<dyn Fn(&Theta, &PanelPath) -> Vec<f64> + Send + Sync>;

/// A vector-valued moment evaluator with metadata.
#[derive(Clone)]
pub struct MomentFn {
    pub id: String,
    pub dim: usize,
    pub regime: Regime,
    eval: EvalFn,
}

impl std::fmt::Debug for MomentFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentFn")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("regime", &self.regime)
            .finish()
    }
}

impl MomentFn {
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        regime: Regime,
        eval: impl Fn(&Theta, &PanelPath) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        MomentFn { id: id.into(), dim, regime, eval: Arc::new(eval) }
    }

    pub fn evaluate(&self, theta: &Theta, path: &PanelPath) -> Vec<f64> {
        (self.eval)(theta, path)
    }
}

/// Working model for the locally efficient score: a constant-probability
/// Bernoulli for the second-period covariate together with the vague Gamma
/// prior `pi(v) = 1/v` on the heterogeneity scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingModel {
    /// Bernoulli success probability for X2 under the working feedback model.
    pub p: f64,
    /// Vague-prior flag; the closed forms below assume it holds.
    pub vague_prior: bool,
}

impl WorkingModel {
    pub fn new(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "working probability must lie in [0,1]");
        WorkingModel { p, vague_prior: true }
    }
}

/// Numerical floor keeping the forward-orthogonal part away from {0, 1}
/// in log evaluations only.
pub(crate) fn ln_clamped(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Log-transformed spell moments (T = 2):
/// `(2 + ln(1-P~) + ln P~,  X1 (ln(1-P~) - ln P~),  Y0 (ln(1-P~) - ln P~))`.
pub fn simple_moment() -> MomentFn {
    MomentFn::new("simple", 3, Regime::Fhr, |theta, path| {
        debug_assert_eq!(path.periods(), 2, "simple moments are a T = 2 family");
        let sp = IntegratedSpells::from_path(theta, path);
        let pt = sp.ptilde[0];
        let l1 = ln_clamped(1.0 - pt);
        let l0 = ln_clamped(pt);
        vec![2.0 + l1 + l0, path.x[0] * (l1 - l0), path.y0 * (l1 - l0)]
    })
}

/// Instrumented spell first differences
/// `[rho_t - rho_{t-1}] m(Y^{t-2}, X^{t-1})`, stacked over t = 2..T, with a
/// caller-chosen instrument.
pub fn ab_moment_with<M>(instrument_dim: usize, m: M) -> MomentFn
where
    M: Fn(&PanelPath, usize) -> Vec<f64> + Send + Sync + 'static,
{
    MomentFn::new("ab", instrument_dim, Regime::Fhr, move |theta, path| {
        let sp = IntegratedSpells::from_path(theta, path);
        let mut out = Vec::with_capacity(instrument_dim);
        for t in 1..path.periods() {
            let dif = sp.p[t] - sp.p[t - 1];
            for mi in m(path, t) {
                out.push(dif * mi);
            }
        }
        debug_assert_eq!(out.len(), instrument_dim);
        out
    })
}

/// Default just-identified instrument `(1, Y0, X1)` per difference.
pub fn ab_moment() -> MomentFn {
    ab_moment_with(3, |path, _t| vec![1.0, path.y0, path.x[0]])
}

/// Locally efficient score under the working model, T = 2 closed form.
pub fn loceff_moment(wm: WorkingModel) -> MomentFn {
    MomentFn::new("loceff", 3, Regime::Fhr, move |theta, path| {
        loceff_score(theta, path, &wm).to_vec()
    })
}

/// Efficient score under feedback for the named designs.
pub fn eff_fb_moment(post: ExperimentPosterior) -> MomentFn {
    MomentFn::new("eff-fb", 3, Regime::Fhr, move |theta, path| {
        eff_score_feedback(theta, path, &post).to_vec()
    })
}

/// Efficient score under strict exogeneity (design A closed form).
pub fn eff_se_moment(post: ExperimentPosterior) -> MomentFn {
    MomentFn::new("eff-se", 3, Regime::StrictExogeneityOnly, move |theta, path| {
        eff_score_strict_exog(theta, path, &post).to_vec()
    })
}

/// Context needed to instantiate a family from its string identifier.
#[derive(Debug, Clone, Copy)]
pub struct FamilyContext {
    /// Working-model probability for the locally efficient score.
    pub p: f64,
    /// Design regime pinning the efficient scores' conditional expectations.
    pub experiment: Experiment,
    /// Evaluation point for the structural-hazard moment.
    pub hazard_point: HazardPoint,
    /// Evaluation point for the structural-function moment.
    pub structural_point: StructuralPoint,
}

impl Default for FamilyContext {
    fn default() -> Self {
        FamilyContext {
            p: 0.5,
            experiment: Experiment::A,
            hazard_point: HazardPoint { y: 1.0, y_prev: 1.0, x: 1.0 },
            structural_point: StructuralPoint { x: 1.0, y_prev: 1.0 },
        }
    }
}

/// Looks a moment family up by its stable identifier.
pub fn family_by_id(id: &str, ctx: &FamilyContext) -> Option<MomentFn> {
    let post = ExperimentPosterior::benchmark(ctx.experiment);
    match id {
        "simple" => Some(simple_moment()),
        "ab" => Some(ab_moment()),
        "loceff" => Some(loceff_moment(WorkingModel::new(ctx.p))),
        "eff-fb" => Some(eff_fb_moment(post)),
        "eff-se" => Some(eff_se_moment(ExperimentPosterior::benchmark(Experiment::A))),
        "ash" => Some(ash_moment(ctx.hazard_point)),
        "asf" => Some(asf_moment(ctx.structural_point)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{benchmark_theta, simulate_panel, DgpConfig};

    #[test]
    fn simple_moment_pointwise_values() {
        // P~ = 0.5: first entry 2 - 2 ln 2, covariate entries vanish
        let th = crate::mph::Theta::new(1.0, 0.0, 0.0).unwrap();
        let path = crate::mph::PanelPath::new(1.0, vec![1.0, 1.0], vec![0.0, 0.0], None).unwrap();
        let v = simple_moment().evaluate(&th, &path);
        assert!((v[0] - (2.0 - 2.0 * 2f64.ln())).abs() < 1e-14);
        assert_eq!(v[1], 0.0);
        // X1 = 1, P~ = 0.75: second entry ln(1/3)
        let path = crate::mph::PanelPath::new(1.0, vec![3.0, 1.0], vec![1.0, 1.0], None).unwrap();
        let v = simple_moment().evaluate(&th, &path);
        assert!((v[1] - (1.0f64 / 3.0).ln()).abs() < 1e-14, "{}", v[1]);
    }

    #[test]
    fn ab_moment_pointwise_values() {
        let th = crate::mph::Theta::new(1.0, 0.0, 0.0).unwrap();
        let m1 = ab_moment_with(1, |_, _| vec![1.0]);
        let path = crate::mph::PanelPath::new(1.0, vec![1.0, 1.0], vec![0.0, 0.0], None).unwrap();
        assert_eq!(m1.evaluate(&th, &path), vec![0.0]);
        let path = crate::mph::PanelPath::new(1.0, vec![1.0, 3.0], vec![0.0, 0.0], None).unwrap();
        assert_eq!(m1.evaluate(&th, &path), vec![2.0]);
    }

    #[test]
    fn simple_and_ab_are_mean_zero_on_both_designs() {
        for cfg in [DgpConfig::experiment_a(), DgpConfig::experiment_b()] {
            let panels = simulate_panel(&cfg, 150_000, 31).unwrap();
            let th = benchmark_theta();
            for fam in [simple_moment(), ab_moment()] {
                let st = crate::batch::moment_stats(&th, &panels, fam.dim, |t, p| fam.evaluate(t, p));
                for (k, t) in st.t_stats().iter().enumerate() {
                    assert!(t.abs() < 4.0, "{} comp {k}: t = {t}", fam.id);
                }
            }
        }
    }
}
