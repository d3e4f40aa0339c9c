//! Deterministic batch evaluation over panels.
//!
//! Work is split into fixed-size index chunks; each chunk is reduced
//! sequentially and the chunk partials are combined by pairwise summation
//! in index order. Results are therefore identical regardless of thread
//! count or scheduling, and reordering-insensitive to ~1e-13 relative.

use crate::mph::{PanelPath, Theta};
use crate::numerics::Mat;
use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Sample moments of a vector-valued evaluator over a panel collection.
#[derive(Debug, Clone)]
pub struct MomentStats {
    pub n: usize,
    pub mean: Vec<f64>,
    /// Uncentered second moment `E[phi phi']`.
    pub second: Mat,
    /// Standard error of each mean component.
    pub se: Vec<f64>,
}

impl MomentStats {
    /// t-statistics of the mean against zero.
    pub fn t_stats(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.se).map(|(m, s)| m / s).collect()
    }
}

struct Partial {
    sum: Vec<f64>,
    outer: Mat,
    bad: Option<usize>,
}

fn pairwise<T, F: Fn(T, T) -> T + Copy>(mut items: Vec<T>, combine: F) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Mean, uncentered second moment, and mean standard errors of
/// `eval(theta, path)` over all paths. Panics if the evaluator produces a
/// non-finite value, naming the offending path index.
pub fn moment_stats<F>(theta: &Theta, paths: &[PanelPath], dim: usize, eval: F) -> MomentStats
where
    F: Fn(&Theta, &PanelPath) -> Vec<f64> + Sync,
{
    let n = paths.len();
    assert!(n > 1, "need at least two paths");
    let partials: Vec<Partial> = paths
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut sum = vec![0.0; dim];
            let mut outer = Mat::zeros(dim, dim);
            let mut bad = None;
            for (k, path) in chunk.iter().enumerate() {
                let v = eval(theta, path);
                debug_assert_eq!(v.len(), dim);
                if v.iter().any(|x| !x.is_finite()) {
                    bad.get_or_insert(ci * CHUNK + k);
                    continue;
                }
                for i in 0..dim {
                    sum[i] += v[i];
                    for j in 0..dim {
                        outer[(i, j)] += v[i] * v[j];
                    }
                }
            }
            Partial { sum, outer, bad }
        })
        .collect();
    let combined = pairwise(partials, |mut a, b| {
        for i in 0..a.sum.len() {
            a.sum[i] += b.sum[i];
        }
        a.outer = a.outer.add(&b.outer);
        a.bad = a.bad.or(b.bad);
        a
    })
    .expect("non-empty");
    if let Some(idx) = combined.bad {
        panic!("moment evaluator produced a non-finite value at path index {idx}");
    }
    let nf = n as f64;
    let mean: Vec<f64> = combined.sum.iter().map(|s| s / nf).collect();
    let second = combined.outer.scaled(1.0 / nf);
    let se: Vec<f64> = (0..dim)
        .map(|i| ((second[(i, i)] - mean[i] * mean[i]).max(0.0) / (nf - 1.0)).sqrt())
        .collect();
    MomentStats { n, mean, second, se }
}

/// Mean of `eval` over all paths, or `None` if any value is non-finite.
/// Same deterministic chunked pairwise reduction as [`moment_stats`];
/// used by solvers probing candidate parameters that may leave the
/// evaluator's domain.
pub fn try_moment_mean<F>(theta: &Theta, paths: &[PanelPath], dim: usize, eval: F) -> Option<Vec<f64>>
where
    F: Fn(&Theta, &PanelPath) -> Vec<f64> + Sync,
{
    let sums: Vec<Option<Vec<f64>>> = paths
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sum = vec![0.0; dim];
            for path in chunk {
                let v = eval(theta, path);
                if v.iter().any(|x| !x.is_finite()) {
                    return None;
                }
                for i in 0..dim {
                    sum[i] += v[i];
                }
            }
            Some(sum)
        })
        .collect();
    let total = pairwise(sums, |a, b| match (a, b) {
        (Some(mut x), Some(y)) => {
            for i in 0..x.len() {
                x[i] += y[i];
            }
            Some(x)
        }
        _ => None,
    })??;
    let n = paths.len() as f64;
    Some(total.iter().map(|s| s / n).collect())
}

/// Deterministic parallel map preserving index order.
pub fn par_map<T: Send, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}
