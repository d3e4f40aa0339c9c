//! Numerical verification of the two robustness conditions for a candidate
//! moment function against a pluggable parametric outcome model, and exact
//! null-space computation for discrete-outcome models.
//!
//! Condition one: the candidate integrates to zero against the product of
//! period densities for every grid point of (heterogeneity, initial
//! condition, covariate path). Condition two: for every split period `s`,
//! the partial integral over the future outcomes does not depend on the
//! future covariates. Both are necessary-condition tests on finite grids;
//! the heterogeneity grid samples the continuum and the report carries the
//! worst residual.
//!
//! Continuous models declare an outcome transform mapping a canonical
//! positive quadrature variable to the outcome (the integrated spell for
//! the hazard model), so the transformed density is exponential-scale and
//! smooth. Quadrature is tanh-sinh on the truncated interval: the score
//! families have logarithmic edge factors that defeat plain
//! Gauss-Legendre at the residual tolerances required here.

use crate::moments::MomentFn;
use crate::mph::{invert_rho, mph_density, PanelPath, Theta};
use crate::numerics::{null_space, Mat};
use rayon::prelude::*;
use std::sync::Arc;

type DensityFn = Arc<dyn Fn(&[f64], f64, f64, f64, f64) -> f64 + Send + Sync>;
type MapFn = Arc<dyn Fn(&[f64], f64, f64, f64) -> (f64, f64) + Send + Sync>;
type UMaxFn = Arc<dyn Fn(&[f64], f64, f64, f64) -> f64 + Send + Sync>;
type CandidateEval = Arc<dyn Fn(&[f64], f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type OffsetFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Outcome description of a [`ParametricModel`].
pub enum Outcome {
    /// Continuous outcome with a per-context change of variables
    /// `u -> (y, dy/du)` and a truncation `u_max(theta, y_prev, x, a)`.
    Continuous { map: MapFn, u_max: UMaxFn, nodes: usize },
    /// Discrete outcome with the given support.
    Discrete { support: Vec<f64> },
}

/// A parametric conditional outcome model on finite grids.
pub struct ParametricModel {
    pub name: String,
    /// `(theta, y_t, y_prev, x_t, a) -> density or pmf value`.
    pub density: DensityFn,
    pub outcome: Outcome,
    pub covariate_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub y0_grid: Vec<f64>,
    pub t_len: usize,
}

/// Candidate moment function over full paths, with an optional
/// average-effect offset `h(theta, a)` subtracted inside condition one.
#[derive(Clone)]
pub struct CandidateMoment {
    pub dim: usize,
    eval: CandidateEval,
    offset: Option<OffsetFn>,
}

impl CandidateMoment {
    pub fn new(
        dim: usize,
        eval: impl Fn(&[f64], f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        CandidateMoment { dim, eval: Arc::new(eval), offset: None }
    }

    pub fn with_offset(
        mut self,
        offset: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.offset = Some(Arc::new(offset));
        self
    }

    /// Wraps an MPH moment family (theta slice is `(alpha, beta, gamma)`).
    pub fn from_moment(fam: MomentFn) -> Self {
        CandidateMoment {
            dim: fam.dim,
            eval: Arc::new(move |theta, y0, ys, xs| {
                let th = Theta::from_slice(theta).expect("valid theta");
                let path = PanelPath::new(y0, ys.to_vec(), xs.to_vec(), None).expect("valid path");
                fam.evaluate(&th, &path)
            }),
            offset: None,
        }
    }
}

/// Worst-case residuals over the grids, with pass/fail verdicts.
#[derive(Debug, Clone)]
pub struct CheckerReport {
    /// Max over grid points and components of the absolute integral of the
    /// candidate against the model (condition one).
    pub cond1_residual: f64,
    /// Per split period `s = 2..T`: max range of the partial integral
    /// across the future-covariate grid (condition two).
    pub cond2_variation: Vec<f64>,
    pub tol: f64,
    pub cond1_pass: bool,
    pub cond2_pass: bool,
}

impl CheckerReport {
    pub fn pass(&self) -> bool {
        self.cond1_pass && self.cond2_pass
    }
}

/// Tanh-sinh nodes and weights on `(0, b)`; double-exponential clustering
/// handles integrable endpoint singularities (powers and logs).
fn tanh_sinh(n: usize, b: f64) -> (Vec<f64>, Vec<f64>) {
    let t_max = 3.2f64;
    let h = 2.0 * t_max / (n as f64 - 1.0);
    let half = 0.5 * b;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let t = -t_max + h * k as f64;
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let x = half * (1.0 + s.tanh());
        let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() / s.cosh().powi(2) * h;
        if x > 0.0 && x < b && w.is_finite() && w > 0.0 {
            nodes.push(x);
            weights.push(w);
        }
    }
    (nodes, weights)
}

struct OutcomeLevel {
    /// Outcome values.
    y: Vec<f64>,
    /// Quadrature weight times density times the transform Jacobian (or the
    /// pmf for discrete outcomes).
    mass: Vec<f64>,
}

impl ParametricModel {
    fn level(&self, theta: &[f64], y_prev: f64, x: f64, a: f64) -> OutcomeLevel {
        match &self.outcome {
            Outcome::Continuous { map, u_max, nodes } => {
                let b = u_max(theta, y_prev, x, a);
                let (us, ws) = tanh_sinh(*nodes, b);
                let mut y = Vec::with_capacity(us.len());
                let mut mass = Vec::with_capacity(us.len());
                for (&u, &w) in us.iter().zip(&ws) {
                    let (yy, dydu) = map(theta, y_prev, x, u);
                    y.push(yy);
                    mass.push(w * (self.density)(theta, yy, y_prev, x, a) * dydu);
                }
                OutcomeLevel { y, mass }
            }
            Outcome::Discrete { support } => {
                let mass =
                    support.iter().map(|&yy| (self.density)(theta, yy, y_prev, x, a)).collect();
                OutcomeLevel { y: support.clone(), mass }
            }
        }
    }

    /// Max deviation of the outcome law from unit mass over all grid
    /// contexts; models should stay below 1e-8.
    pub fn normalization_defect(&self, theta: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        let mut y_prevs = self.y0_grid.clone();
        if let Outcome::Discrete { support } = &self.outcome {
            y_prevs.extend(support.iter().copied());
        }
        for &a in &self.a_grid {
            for &x in &self.covariate_grid {
                for &yp in &y_prevs {
                    let lvl = self.level(theta, yp, x, a);
                    let total: f64 = lvl.mass.iter().sum();
                    worst = worst.max((total - 1.0).abs());
                }
            }
        }
        worst
    }
}

/// Nested integral of the candidate against the model over the remaining
/// periods, at fixed heterogeneity and history.
fn partial_integral(
    model: &ParametricModel,
    phi: &CandidateMoment,
    theta: &[f64],
    a: f64,
    y0: f64,
    ys: &mut Vec<f64>,
    xs: &[f64],
) -> Vec<f64> {
    let t = ys.len();
    if t == model.t_len {
        return (phi.eval)(theta, y0, ys, xs);
    }
    let y_prev = if t == 0 { y0 } else { ys[t - 1] };
    let lvl = model.level(theta, y_prev, xs[t], a);
    let mut acc = vec![0.0; phi.dim];
    for (&yy, &m) in lvl.y.iter().zip(&lvl.mass) {
        if m == 0.0 {
            continue;
        }
        ys.push(yy);
        let inner = partial_integral(model, phi, theta, a, y0, ys, xs);
        ys.pop();
        for (s, v) in acc.iter_mut().zip(inner) {
            *s += m * v;
        }
    }
    acc
}

fn cartesian(grid: &[f64], len: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|head| {
                grid.iter().map(move |&g| {
                    let mut h = head.clone();
                    h.push(g);
                    h
                })
            })
            .collect();
    }
    out
}

/// Conditioning outcome values for condition two; a thinned subset of the
/// level nodes for continuous models, the full support for discrete ones.
fn conditioning_values(
    model: &ParametricModel,
    theta: &[f64],
    y_prev: f64,
    x: f64,
    a: f64,
) -> Vec<f64> {
    match &model.outcome {
        Outcome::Continuous { .. } => {
            let lvl = model.level(theta, y_prev, x, a);
            lvl.y.iter().copied().step_by(6).collect()
        }
        Outcome::Discrete { support } => support.clone(),
    }
}

/// Checks both robustness conditions for the candidate on the model grids.
pub fn check_fhr(
    model: &ParametricModel,
    phi: &CandidateMoment,
    theta: &[f64],
    tol: f64,
) -> CheckerReport {
    let t_len = model.t_len;
    let x_paths = cartesian(&model.covariate_grid, t_len);

    let mut combos: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for &a in &model.a_grid {
        for &y0 in &model.y0_grid {
            for xs in &x_paths {
                combos.push((a, y0, xs.clone()));
            }
        }
    }
    let cond1_residual = combos
        .par_iter()
        .map(|(a, y0, xs)| {
            let mut ys = Vec::with_capacity(t_len);
            let mut v = partial_integral(model, phi, theta, *a, *y0, &mut ys, xs);
            if let Some(off) = &phi.offset {
                let h = off(theta, *a);
                for (vi, hi) in v.iter_mut().zip(h) {
                    *vi -= hi;
                }
            }
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
        .reduce(|| 0.0, f64::max);

    let mut cond2_variation = Vec::with_capacity(t_len - 1);
    for s in 1..t_len {
        let head_x = cartesian(&model.covariate_grid, s);
        let tail_x = cartesian(&model.covariate_grid, t_len - s);
        let mut jobs: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        for &a in &model.a_grid {
            for &y0 in &model.y0_grid {
                for hx in &head_x {
                    jobs.push((a, y0, hx.clone()));
                }
            }
        }
        let worst = jobs
            .par_iter()
            .map(|(a, y0, hx)| {
                // enumerate conditioning outcome histories y_1..y_s
                let mut hist: Vec<Vec<f64>> = vec![vec![]];
                for t in 0..s {
                    let mut next = Vec::new();
                    for h in &hist {
                        let y_prev = if t == 0 { *y0 } else { h[t - 1] };
                        for yv in conditioning_values(model, theta, y_prev, hx[t], *a) {
                            let mut hh = h.clone();
                            hh.push(yv);
                            next.push(hh);
                        }
                    }
                    hist = next;
                }
                let mut worst = 0.0f64;
                for h in &hist {
                    let mut lo = vec![f64::INFINITY; phi.dim];
                    let mut hi = vec![f64::NEG_INFINITY; phi.dim];
                    for tx in &tail_x {
                        let mut xs = hx.clone();
                        xs.extend(tx.iter().copied());
                        let mut ys = h.clone();
                        let v = partial_integral(model, phi, theta, *a, *y0, &mut ys, &xs);
                        for k in 0..phi.dim {
                            lo[k] = lo[k].min(v[k]);
                            hi[k] = hi[k].max(v[k]);
                        }
                    }
                    for k in 0..phi.dim {
                        worst = worst.max(hi[k] - lo[k]);
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        cond2_variation.push(worst);
    }

    let cond2_max = cond2_variation.iter().cloned().fold(0.0, f64::max);
    CheckerReport {
        cond1_pass: cond1_residual <= tol,
        cond2_pass: cond2_max <= tol,
        cond1_residual,
        cond2_variation,
        tol,
    }
}

/// Standard MPH checker model: Weibull hazard with the integrated-spell
/// transform, heterogeneity grid of 12 Gauss-Legendre nodes on
/// [-1.5, 1.5], initial durations {0.5, 1, 2}, binary covariate.
pub fn mph_model(t_len: usize, nodes: usize) -> ParametricModel {
    let (gx, _) = crate::numerics::gauss_legendre(12);
    let a_grid: Vec<f64> = gx.iter().map(|t| 1.5 * t).collect();
    ParametricModel {
        name: "mph".into(),
        density: Arc::new(|theta, y, y_prev, x, a| {
            let th = Theta::from_slice(theta).expect("valid theta");
            mph_density(&th, y, y_prev, x, a)
        }),
        outcome: Outcome::Continuous {
            // u is the integrated spell p; dy/dp = y / (alpha p)
            map: Arc::new(|theta, y_prev, x, p| {
                let th = Theta::from_slice(theta).expect("valid theta");
                let y = invert_rho(&th, p, y_prev, x);
                (y, y / (th.alpha * p))
            }),
            u_max: Arc::new(|_, _, _, a| 40.0 * (-a).exp()),
            nodes,
        },
        covariate_grid: vec![0.0, 1.0],
        a_grid,
        y0_grid: vec![0.5, 1.0, 2.0],
        t_len,
    }
}

/// Binary-choice logit model on `theta = (beta, gamma)`.
pub fn logit_model(a_grid: Vec<f64>, y0_grid: Vec<f64>) -> ParametricModel {
    ParametricModel {
        name: "logit".into(),
        density: Arc::new(|theta, y, y_prev, x, a| {
            let idx = theta[1] * y_prev + theta[0] * x + a;
            let p = 1.0 / (1.0 + (-idx).exp());
            if y > 0.5 {
                p
            } else {
                1.0 - p
            }
        }),
        outcome: Outcome::Discrete { support: vec![0.0, 1.0] },
        covariate_grid: vec![0.0, 1.0],
        a_grid,
        y0_grid,
        t_len: 2,
    }
}

/// Truncated count model on `theta = (beta, gamma)`: Poisson renormalized
/// on `0..=y_max`. The heterogeneity grid must keep the discarded tail
/// negligible for the truncation to stay a faithful model.
pub fn poisson_model(y_max: u64, a_grid: Vec<f64>, y0_grid: Vec<f64>) -> ParametricModel {
    ParametricModel {
        name: "poisson".into(),
        density: Arc::new(move |theta, y, y_prev, x, a| {
            let mu = (theta[0] * x + theta[1] * y_prev + a).exp();
            let mut p = (-mu).exp();
            let mut z = p;
            let mut val = if y < 0.5 { p } else { 0.0 };
            for k in 1..=y_max {
                p *= mu / k as f64;
                z += p;
                if (y - k as f64).abs() < 0.5 {
                    val = p;
                }
            }
            val / z
        }),
        outcome: Outcome::Discrete { support: (0..=y_max).map(|k| k as f64).collect() },
        covariate_grid: vec![0.0, 1.0],
        a_grid,
        y0_grid,
        t_len: 2,
    }
}

/// Mixed-radix layout of full discrete paths `(y0, y_1..y_T, x_1..x_T)`.
#[derive(Debug, Clone)]
pub struct PathLayout {
    pub n_y0: usize,
    pub n_support: usize,
    pub n_cov: usize,
    pub t_len: usize,
}

impl PathLayout {
    pub fn n_paths(&self) -> usize {
        self.n_y0 * self.n_support.pow(self.t_len as u32) * self.n_cov.pow(self.t_len as u32)
    }

    pub fn index(&self, i0: usize, iy: &[usize], ix: &[usize]) -> usize {
        let mut idx = i0;
        for &i in iy {
            idx = idx * self.n_support + i;
        }
        for &i in ix {
            idx = idx * self.n_cov + i;
        }
        idx
    }
}

/// Null space of the discretized robustness conditions.
pub struct DiscreteNullSpace {
    pub layout: PathLayout,
    /// Orthonormal basis, one column per robust moment direction.
    pub basis: Mat,
    pub dim: usize,
    pub n_constraints: usize,
}

impl DiscreteNullSpace {
    /// Fraction of the vector's norm lying in the null space.
    pub fn norm_captured(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.layout.n_paths());
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn == 0.0 {
            return 1.0;
        }
        let mut proj = 0.0;
        for j in 0..self.basis.cols {
            let dot: f64 = (0..v.len()).map(|i| self.basis[(i, j)] * v[i]).sum();
            proj += dot * dot;
        }
        proj.sqrt() / vn
    }

    /// Wraps a null-space column as a candidate for [`check_fhr`].
    pub fn column_candidate(
        &self,
        col: usize,
        support: Vec<f64>,
        y0_grid: Vec<f64>,
        cov_grid: Vec<f64>,
    ) -> CandidateMoment {
        let layout = self.layout.clone();
        let vals: Vec<f64> = (0..layout.n_paths()).map(|i| self.basis[(i, col)]).collect();
        CandidateMoment::new(1, move |_theta, y0, ys, xs| {
            let find = |grid: &[f64], v: f64| {
                grid.iter().position(|g| (g - v).abs() < 1e-9).expect("grid value")
            };
            let i0 = find(&y0_grid, y0);
            let iy: Vec<usize> = ys.iter().map(|&v| find(&support, v)).collect();
            let ix: Vec<usize> = xs.iter().map(|&v| find(&cov_grid, v)).collect();
            vec![vals[layout.index(i0, &iy, &ix)]]
        })
    }
}

/// Assembles the linear constraint matrix of the two conditions on the
/// discrete path space and returns its numerical null space: one row per
/// (heterogeneity, initial condition, covariate path) for condition one,
/// plus rows equating the condition-two partial sums across future
/// covariates.
pub fn discrete_null_space(
    model: &ParametricModel,
    theta: &[f64],
    rel_tol: f64,
) -> DiscreteNullSpace {
    let support = match &model.outcome {
        Outcome::Discrete { support } => support.clone(),
        _ => panic!("discrete_null_space needs a discrete-outcome model"),
    };
    let t_len = model.t_len;
    let layout = PathLayout {
        n_y0: model.y0_grid.len(),
        n_support: support.len(),
        n_cov: model.covariate_grid.len(),
        t_len,
    };
    let n_paths = layout.n_paths();
    let s_combo = cartesian_idx(support.len(), t_len);
    let x_combo = cartesian_idx(model.covariate_grid.len(), t_len);
    let pmf =
        |theta: &[f64], y: f64, y_prev: f64, x: f64, a: f64| (model.density)(theta, y, y_prev, x, a);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for &a in &model.a_grid {
        for (i0, &y0) in model.y0_grid.iter().enumerate() {
            for xc in &x_combo {
                let mut row = vec![0.0; n_paths];
                for yc in &s_combo {
                    let mut w = 1.0;
                    for t in 0..t_len {
                        let y_prev = if t == 0 { y0 } else { support[yc[t - 1]] };
                        w *= pmf(theta, support[yc[t]], y_prev, model.covariate_grid[xc[t]], a);
                    }
                    row[layout.index(i0, yc, xc)] = w;
                }
                rows.push(row);
            }
            for s in 1..t_len {
                let head_y = cartesian_idx(support.len(), s);
                let head_x = cartesian_idx(model.covariate_grid.len(), s);
                let tail_x = cartesian_idx(model.covariate_grid.len(), t_len - s);
                let tail_y = cartesian_idx(support.len(), t_len - s);
                for hy in &head_y {
                    for hx in &head_x {
                        for j in 1..tail_x.len() {
                            let mut row = vec![0.0; n_paths];
                            for (tx, sign) in [(&tail_x[j], 1.0), (&tail_x[0], -1.0)] {
                                for ty in &tail_y {
                                    let mut w = sign;
                                    for t in 0..t_len - s {
                                        let y_prev = if t == 0 {
                                            support[hy[s - 1]]
                                        } else {
                                            support[ty[t - 1]]
                                        };
                                        w *= pmf(
                                            theta,
                                            support[ty[t]],
                                            y_prev,
                                            model.covariate_grid[tx[t]],
                                            a,
                                        );
                                    }
                                    let mut iy = hy.clone();
                                    iy.extend(ty.iter().copied());
                                    let mut ix = hx.clone();
                                    ix.extend(tx.iter().copied());
                                    row[layout.index(i0, &iy, &ix)] += w;
                                }
                            }
                            rows.push(row);
                        }
                    }
                }
            }
        }
    }
    let constraint = Mat::from_rows(&rows);
    let basis = null_space(&constraint, rel_tol);
    DiscreteNullSpace { layout, dim: basis.cols, basis, n_constraints: rows.len() }
}

fn cartesian_idx(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|h| {
                (0..k).map(move |i| {
                    let mut hh = h.clone();
                    hh.push(i);
                    hh
                })
            })
            .collect();
    }
    out
}
