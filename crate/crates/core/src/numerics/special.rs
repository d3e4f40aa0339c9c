//! Special functions: log-gamma and the Gauss hypergeometric function on
//! the region needed by the closed-form conditional expectations.

use super::quad::integrate_adaptive;
use super::NumericsError;

// Lanczos g = 7, n = 9 coefficients, kept as published.
#[allow(clippy::excessive_precision)]
const LANCZOS_C: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn log_gamma(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) {
        return Err(NumericsError::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    // Lanczos evaluated at x, i.e. series indexed from x - 1
    let z = x - 1.0;
    let mut acc = LANCZOS_C[0];
    for (i, c) in LANCZOS_C.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5; // g + 1/2 with g = 7
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64, NumericsError> {
    Ok(log_gamma(x)?.exp())
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for c > b > 0 and z <= 0.
///
/// Near the origin the power series is summed directly; for larger |z| the
/// argument is mapped to `w = z/(z-1)` in (0, 1) and the transformed series
/// is summed, which converges geometrically on the whole half line. Deep in
/// the tail, where the transformed ratio approaches one, evaluation falls
/// back to the Euler integral representation on graded panels.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, NumericsError> {
    if !(c >= b && b > 0.0) {
        return Err(NumericsError::Domain(format!(
            "hyp2f1 requires c >= b > 0, got a={a} b={b} c={c}"
        )));
    }
    if !(z <= 0.0) {
        return Err(NumericsError::Domain(format!("hyp2f1 requires z <= 0, got z={z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if b == c {
        // binomial reduction 2F1(a, b; b; z) = (1-z)^-a
        return Ok((1.0 - z).powf(-a));
    }
    if z > -0.5 {
        return Ok(gauss_series(a, b, c, z));
    }
    let w = z / (z - 1.0);
    if w <= 0.9 {
        // Pfaff map: 2F1(a, b; c; z) = (1-z)^-a 2F1(a, c-b; c; w)
        return Ok((1.0 - z).powf(-a) * gauss_series(a, c - b, c, w));
    }
    euler_integral(a, b, c, z)
}

/// Plain Gauss series; converges geometrically for |z| < 1.
fn gauss_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..20_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-16 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// 2F1 via the Euler integral
/// `Gamma(c) / (Gamma(b) Gamma(c-b)) * int_0^1 t^(b-1) (1-t)^(c-b-1) (1-zt)^-a dt`,
/// with power substitutions removing the endpoint singularities and
/// geometrically graded panels resolving the `t ~ 1/|z|` boundary layer.
/// Also serves as an independent route for verifying the series path.
pub fn hyp2f1_euler(a: f64, b: f64, c: f64, z: f64) -> Result<f64, NumericsError> {
    if !(c > b && b > 0.0) || !(z <= 0.0) {
        return Err(NumericsError::Domain(format!(
            "hyp2f1_euler requires c > b > 0 and z <= 0, got a={a} b={b} c={c} z={z}"
        )));
    }
    euler_integral(a, b, c, z)
}

fn graded_panels<F: Fn(f64) -> f64>(g: &F, hi: f64, levels: i32) -> Result<f64, NumericsError> {
    let mut total = 0.0;
    let mut upper = hi;
    for k in 0..levels {
        let lower = if k == levels - 1 { 0.0 } else { upper * 0.5 };
        total += integrate_adaptive(g, lower, upper, 1e-13, 1e-16)?;
        upper = lower;
    }
    Ok(total)
}

fn euler_integral(a: f64, b: f64, c: f64, z: f64) -> Result<f64, NumericsError> {
    let cb = c - b;
    let split = 0.5f64;
    let levels = 8 + (b * z.abs().max(2.0).log2()).ceil() as i32;
    // left piece: t = u^(1/b) removes the t^(b-1) singularity at 0
    let left = {
        let u_hi = split.powf(b);
        let g = |u: f64| {
            let t = u.powf(1.0 / b);
            (1.0 - t).powf(cb - 1.0) * (1.0 - z * t).powf(-a) / b
        };
        graded_panels(&g, u_hi, levels)?
    };
    // right piece: t = 1 - s^(1/(c-b)) removes the (1-t)^(c-b-1) singularity at 1
    let right = {
        let s_hi = (1.0 - split).powf(cb);
        let g = |s: f64| {
            let t = 1.0 - s.powf(1.0 / cb);
            t.powf(b - 1.0) * (1.0 - z * t).powf(-a) / cb
        };
        graded_panels(&g, s_hi, 8)?
    };
    let ln_norm = log_gamma_unchecked(c) - log_gamma_unchecked(b) - log_gamma_unchecked(cb);
    Ok((left + right) * ln_norm.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stirling-series oracle for log gamma, shifted into its asymptotic
    /// range by the recurrence. Independent of the Lanczos path.
    fn log_gamma_stirling(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut y = x;
        while y < 12.0 {
            shift -= y.ln();
            y += 1.0;
        }
        const B: [f64; 5] = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
        ];
        let mut s = 0.5 * (2.0 * std::f64::consts::PI).ln() + (y - 0.5) * y.ln() - y;
        let mut p = 1.0 / y;
        let y2 = y * y;
        for b in B {
            s += b * p;
            p /= y2;
        }
        s + shift
    }

    /// The Euler-integral route doubles as the independent oracle for the
    /// series path used in production.
    fn hyp2f1_oracle(a: f64, b: f64, c: f64, z: f64) -> f64 {
        hyp2f1_euler(a, b, c, z).unwrap()
    }

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13 * 24f64.ln());
        let half = std::f64::consts::PI.sqrt().ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-13);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-2.5).is_err());
    }

    #[test]
    fn log_gamma_vs_stirling_oracle() {
        // the parameter set used by the closed-form conditional expectations
        for x in [2.0, 5.0, 7.0, 8.0, 1.0 + 4.0 / 3.0, 2.0 + 4.0 / 3.0, 0.75, 1.75, 2.5, 3.5, 11.0] {
            let got = log_gamma(x).unwrap();
            let want = log_gamma_stirling(x);
            let scale = want.abs().max(1.0);
            assert!((got - want).abs() <= 1e-13 * scale, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn log_gamma_recurrence_and_duplication() {
        // Gamma(x+1) = x Gamma(x); duplication: Gamma(2x) = Gamma(x)Gamma(x+1/2) 2^(2x-1)/sqrt(pi)
        for x in [0.3, 0.75, 1.9, 3.4, 6.1] {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = x.ln() + log_gamma(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
            let dup = log_gamma(2.0 * x).unwrap();
            let alt = log_gamma(x).unwrap() + log_gamma(x + 0.5).unwrap()
                + (2.0 * x - 1.0) * 2f64.ln()
                - 0.5 * std::f64::consts::PI.ln();
            assert!((dup - alt).abs() < 1e-12 * dup.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn hyp2f1_at_zero_is_one() {
        assert_eq!(hyp2f1(7.0, 0.75, 1.75, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn hyp2f1_log_identity() {
        // 2F1(1,1;2;z) = -ln(1-z)/z
        let z = -0.5;
        let want = -(1.0f64 - z).ln() / z;
        let got = hyp2f1(1.0, 1.0, 2.0, z).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn hyp2f1_series_vs_euler_integral_oracle() {
        // the (a, b, c) triples used by the conditional-expectation formulas,
        // over a spread of z <= 0 covering every evaluation branch
        let alpha = 0.75;
        let triples = [
            (7.0, alpha, 1.0 + alpha),
            (8.0, alpha, 1.0 + alpha),
            (8.0, 2.0 * alpha, 1.0 + 2.0 * alpha),
            (7.0, 0.75, 1.75),
            (1.0, 1.0, 2.0),
        ];
        for (a, b, c) in triples {
            for z in [-0.05, -0.4, -0.7, -2.3, -10.0, -55.0, -400.0] {
                let got = hyp2f1(a, b, c, z).unwrap();
                let want = hyp2f1_oracle(a, b, c, z);
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1e-30),
                    "2F1({a},{b};{c};{z}) {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn hyp2f1_euler_example_value() {
        // high-accuracy evaluation of the integral representation at the
        // reference point, frozen from the oracle itself
        let got = hyp2f1(7.0, 0.75, 1.75, -0.4).unwrap();
        let want = hyp2f1_oracle(7.0, 0.75, 1.75, -0.4);
        assert!((got - want).abs() < 1e-11 * want);
        assert!((got - 0.431_899_800_567_301).abs() < 1e-9, "{got}");
    }

    #[test]
    fn hyp2f1_binomial_reduction_when_b_equals_c() {
        // b = c reduces to (1-z)^-a
        let mut rng = crate::numerics::RngStream::new(21, 0);
        for _ in 0..20 {
            let a = 0.2 + 4.0 * rng.uniform();
            let b = 0.3 + 3.0 * rng.uniform();
            let z = -5.0 * rng.uniform();
            let direct = (1.0f64 - z).powf(-a);
            let got = hyp2f1(a, b, b, z).unwrap();
            assert!((got - direct).abs() <= 1e-12 * direct, "a={a} b={b} z={z}");
        }
    }

    #[test]
    fn hyp2f1_domain_errors() {
        assert!(hyp2f1(1.0, 2.0, 1.5, -0.3).is_err()); // c < b
        assert!(hyp2f1(1.0, -0.5, 1.5, -0.3).is_err()); // b <= 0
        assert!(hyp2f1(1.0, 0.5, 1.5, 0.2).is_err()); // z > 0
    }
}
