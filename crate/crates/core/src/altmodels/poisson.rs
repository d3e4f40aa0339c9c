//! Robust moment functions for the dynamic Poisson count model
//! `Y_t | past, A ~ Poisson(exp(gamma Y_{t-1} + X_t beta + A))`.
//!
//! The general constructor turns any finite polynomial `psi(z1, v)` in the
//! heterogeneity scale `v = e^a` (mean zero given the past) into a robust
//! moment by exact Taylor-coefficient extraction: the series of
//! `psi(., v) e^(v exp(z2'theta))` at `v = 0` is a finite convolution of the
//! polynomial coefficients with the exponential series. The two classical
//! families are the degree-1 and degree-2 cases.

/// Parameters of the count model (scalar covariate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonTheta {
    pub beta: f64,
    pub gamma: f64,
}

impl PoissonTheta {
    /// Regressor index `z_t' theta` with `z_t = (x_t, y_{t-1})`.
    fn index(&self, x: f64, y_prev: f64) -> f64 {
        self.beta * x + self.gamma * y_prev
    }
}

/// A two-period count path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonPath {
    pub y0: u64,
    pub y1: u64,
    pub y2: u64,
    pub x1: f64,
    pub x2: f64,
}

/// First-moment family `z1 (y1 - y2 e^((z1 - z2)'theta))`.
pub fn poisson_cw_moment(theta: &PoissonTheta, path: &PoissonPath) -> [f64; 2] {
    let z1 = [path.x1, path.y0 as f64];
    let d = theta.index(path.x1, path.y0 as f64) - theta.index(path.x2, path.y1 as f64);
    let core = path.y1 as f64 - path.y2 as f64 * d.exp();
    [z1[0] * core, z1[1] * core]
}

/// Second-moment family
/// `[y1 (y1 - 1) - y2 (y2 - 1) e^(2 (z1 - z2)'theta)] m(z1)` with a scalar
/// instrument.
pub fn poisson_second_moment(theta: &PoissonTheta, path: &PoissonPath, m: f64) -> f64 {
    let d = theta.index(path.x1, path.y0 as f64) - theta.index(path.x2, path.y1 as f64);
    let f1 = path.y1 as f64 * (path.y1 as f64 - 1.0);
    let f2 = path.y2 as f64 * (path.y2 as f64 - 1.0);
    (f1 - f2 * (2.0 * d).exp()) * m
}

/// `psi` expressed as a finite polynomial in the heterogeneity scale `v`,
/// with coefficients depending on the first-period data.
#[derive(Debug, Clone)]
pub struct PsiPolynomial {
    /// `c_k` for `psi = sum_k c_k v^k`.
    pub coeffs: Vec<f64>,
}

/// General robust moment from a polynomial `psi`:
/// `phi(y2) = y2! sum_{k <= y2} c_k exp(z2'theta)^(y2-k) / (y2-k)! * e^(-y2 z2'theta)`.
/// Computed in log space term by term so moderate counts stay exact.
pub fn poisson_taylor_moment(theta: &PoissonTheta, psi: &PsiPolynomial, path: &PoissonPath) -> f64 {
    let y2 = path.y2 as usize;
    let idx2 = theta.index(path.x2, path.y1 as f64);
    let mut acc = 0.0;
    for (k, &c) in psi.coeffs.iter().enumerate().take(y2 + 1) {
        if c == 0.0 {
            continue;
        }
        // y2! / (y2-k)! = falling factorial, times exp(idx2)^(y2-k) e^(-y2 idx2)
        let mut falling = 1.0;
        for j in 0..k {
            falling *= (y2 - j) as f64;
        }
        acc += c * falling * (-(k as f64) * idx2).exp();
    }
    acc
}

/// Coefficients of the period-1 score `psi = z1_component (y1 - v e^(z1'theta))`.
pub fn psi_score(theta: &PoissonTheta, path: &PoissonPath, component: usize) -> PsiPolynomial {
    let z1 = [path.x1, path.y0 as f64];
    let e1 = theta.index(path.x1, path.y0 as f64).exp();
    PsiPolynomial { coeffs: vec![z1[component] * path.y1 as f64, -z1[component] * e1] }
}

/// Coefficients of the second-moment generator
/// `psi = [y1 (y1 - 1) - v^2 e^(2 z1'theta)] m`.
pub fn psi_second(theta: &PoissonTheta, path: &PoissonPath, m: f64) -> PsiPolynomial {
    let e1 = theta.index(path.x1, path.y0 as f64).exp();
    PsiPolynomial {
        coeffs: vec![path.y1 as f64 * (path.y1 as f64 - 1.0) * m, 0.0, -e1 * e1 * m],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn pmf_table(mu: f64) -> Vec<f64> {
        // Poisson pmf mass until the cumulative tail is below 1e-12, padded
        // by ten further terms; makes the mean-zero checks exact rather than
        // statistical
        let mut probs = Vec::new();
        let mut p = (-mu).exp();
        let mut cum = p;
        let mut y = 0usize;
        probs.push(p);
        while cum < 1.0 - 1e-12 || y < 5 {
            y += 1;
            p *= mu / y as f64;
            cum += p;
            probs.push(p);
            assert!(y < 400, "truncation runaway at mu = {mu}");
        }
        for _ in 0..10 {
            y += 1;
            p *= mu / y as f64;
            probs.push(p);
        }
        probs
    }

    /// Exact truncated-summation oracle for E[phi] at a fixed (a, x, y0).
    fn exact_mean<F: Fn(&PoissonPath) -> f64>(
        theta: &PoissonTheta,
        a: f64,
        y0: u64,
        x1: f64,
        x2: f64,
        phi: F,
    ) -> f64 {
        let mu1 = (theta.index(x1, y0 as f64) + a).exp();
        let t1 = pmf_table(mu1);
        let mut total = 0.0;
        for (y1, p1) in t1.iter().enumerate() {
            let mu2 = (theta.index(x2, y1 as f64) + a).exp();
            let t2 = pmf_table(mu2);
            for (y2, p2) in t2.iter().enumerate() {
                let path =
                    PoissonPath { y0, y1: y1 as u64, y2: y2 as u64, x1, x2 };
                total += p1 * p2 * phi(&path);
            }
        }
        total
    }

    #[test]
    fn cw_moment_pointwise() {
        // theta = 0: z1 (y1 - y2); z1 = (2, 1) means x1 = 2, y0 = 1
        let th = PoissonTheta { beta: 0.0, gamma: 0.0 };
        let path = PoissonPath { y0: 1, y1: 3, y2: 1, x1: 2.0, x2: 0.0 };
        assert_eq!(poisson_cw_moment(&th, &path), [4.0, 2.0]);
        // z1 = z2 cancels the exponent
        let th2 = PoissonTheta { beta: 0.4, gamma: -0.2 };
        let path2 = PoissonPath { y0: 2, y1: 2, y2: 5, x1: 1.0, x2: 1.0 };
        let m = poisson_cw_moment(&th2, &path2);
        assert!((m[0] - (2.0 - 5.0)).abs() < 1e-14);
    }

    #[test]
    fn second_moment_pointwise() {
        let th = PoissonTheta { beta: 0.0, gamma: 0.0 };
        let path = PoissonPath { y0: 0, y1: 2, y2: 3, x1: 1.0, x2: 1.0 };
        assert_eq!(poisson_second_moment(&th, &path, 1.0), 2.0 - 6.0);
        // y1, y2 in {0, 1} zero both factorial terms
        let p01 = PoissonPath { y0: 0, y1: 1, y2: 0, x1: 1.0, x2: 0.0 };
        assert_eq!(poisson_second_moment(&th, &p01, 3.0), 0.0);
    }

    #[test]
    fn both_families_exactly_mean_zero_under_truncated_summation() {
        // gamma is kept below ~0.12 so the count process is not explosive
        // and the truncated tables stay short
        let mut rng = RngStream::new(14, 0);
        for _ in 0..10 {
            let th = PoissonTheta {
                beta: -0.5 + rng.uniform(),
                gamma: -0.3 + 0.42 * rng.uniform(),
            };
            let a = -1.2 + 1.4 * rng.uniform();
            let y0 = (rng.uniform() * 4.0) as u64;
            let x1 = if rng.uniform() < 0.5 { 0.0 } else { 1.0 };
            let x2 = if rng.uniform() < 0.5 { 0.0 } else { 1.0 };
            for comp in 0..2 {
                let m = exact_mean(&th, a, y0, x1, x2, |p| poisson_cw_moment(&th, p)[comp]);
                assert!(m.abs() <= 1e-10, "cw comp {comp}: {m}");
            }
            let m2 = exact_mean(&th, a, y0, x1, x2, |p| poisson_second_moment(&th, p, 1.0 + x1));
            assert!(m2.abs() <= 1e-10, "second: {m2}");
        }
    }

    #[test]
    fn taylor_constructor_reproduces_both_families() {
        let th = PoissonTheta { beta: 0.35, gamma: 0.15 };
        for y0 in [0u64, 1, 3] {
            for x1 in [0.0, 1.0] {
                for x2 in [0.0, 1.0] {
                    for y1 in 0..=30u64 {
                        for y2 in 0..=30u64 {
                            let path = PoissonPath { y0, y1, y2, x1, x2 };
                            let cw = poisson_cw_moment(&th, &path);
                            for comp in 0..2 {
                                let psi = psi_score(&th, &path, comp);
                                let got = poisson_taylor_moment(&th, &psi, &path);
                                assert!(
                                    (got - cw[comp]).abs() <= 1e-12 * cw[comp].abs().max(1.0),
                                    "cw {y1},{y2} comp {comp}: {got} vs {}",
                                    cw[comp]
                                );
                            }
                            let m = 1.0 + 0.5 * x1;
                            let want = poisson_second_moment(&th, &path, m);
                            let got =
                                poisson_taylor_moment(&th, &psi_second(&th, &path, m), &path);
                            assert!(
                                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                                "2nd {y1},{y2}: {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constant_psi_passes_through() {
        // psi = c gives phi = c for every y2 (and mean c, not zero)
        let th = PoissonTheta { beta: 0.2, gamma: 0.1 };
        let psi = PsiPolynomial { coeffs: vec![2.5] };
        for y2 in [0u64, 1, 4, 9] {
            let path = PoissonPath { y0: 1, y1: 2, y2, x1: 1.0, x2: 0.0 };
            let got = poisson_taylor_moment(&th, &psi, &path);
            assert!((got - 2.5).abs() < 1e-12, "y2 = {y2}: {got}");
        }
    }
}
