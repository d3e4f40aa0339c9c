//! Small dense linear algebra: LU solves, inversion with a condition
//! estimate, one-sided Jacobi SVD, and numerical null spaces.
//!
//! Sizes here are tiny (GMM systems) up to a few thousand columns
//! (discrete constraint matrices), so plain dense routines suffice. For
//! wide constraint matrices the null space is obtained from a pivoted QR
//! of the transpose with basis completion instead of a full SVD.

use super::NumericsError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const COND_LIMIT: f64 = 1e12;

/// LU factorization with partial pivoting.
struct Lu {
    lu: Mat,
    piv: Vec<usize>,
}

fn lu_factor(a: &Mat) -> Result<Lu, NumericsError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                p = i;
            }
        }
        if best == 0.0 {
            return Err(NumericsError::IllConditioned { cond: f64::INFINITY });
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            piv.swap(k, p);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let s = f * lu[(k, j)];
                lu[(i, j)] -= s;
            }
        }
    }
    Ok(Lu { lu, piv })
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

fn one_norm(a: &Mat) -> f64 {
    (0..a.cols)
        .map(|j| (0..a.rows).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a square matrix; errors when the 1-norm condition number
/// exceeds 1e12.
pub fn invert(a: &Mat) -> Result<Mat, NumericsError> {
    let n = a.rows;
    let lu = lu_factor(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    let cond = one_norm(a) * one_norm(&inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(NumericsError::IllConditioned { cond });
    }
    Ok(inv)
}

/// Solves `A x = b`; same conditioning contract as [`invert`].
pub fn solve_linear(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let inv = invert(a)?;
    Ok(inv.matvec(b))
}

/// Orthonormal basis of the numerical null space of `a`, as the columns of
/// the returned matrix. The dimension is the number of singular values
/// below `rel_tol * sigma_max`.
pub fn null_space(a: &Mat, rel_tol: f64) -> Mat {
    if a.cols <= 800 {
        null_space_jacobi(a, rel_tol)
    } else {
        null_space_qr(a, rel_tol)
    }
}

/// One-sided Jacobi SVD: right singular vectors of `a` with singular values.
/// Columns of `v` with sigma below the cutoff span the null space.
fn null_space_jacobi(a: &Mat, rel_tol: f64) -> Mat {
    let n = a.cols;
    let mut w = a.clone(); // will converge to U * Sigma
    let mut v = Mat::identity(n);
    let m = a.rows;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    app += w[(i, p)] * w[(i, p)];
                    aqq += w[(i, q)] * w[(i, q)];
                    apq += w[(i, p)] * w[(i, q)];
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(f64::MIN_POSITIVE));
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = cs * wp - sn * wq;
                    w[(i, q)] = sn * wp + cs * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = cs * vp - sn * vq;
                    v[(i, q)] = sn * vp + cs * vq;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&j| sigma[j] <= rel_tol * smax).collect();
    let mut basis = Mat::zeros(n, keep.len());
    for (k, &j) in keep.iter().enumerate() {
        for i in 0..n {
            basis[(i, k)] = v[(i, j)];
        }
    }
    basis
}

/// Null space for wide matrices: Householder QR with column pivoting on the
/// transpose; the unused Q columns complete an orthonormal basis of the
/// orthogonal complement of the row space.
fn null_space_qr(a: &Mat, rel_tol: f64) -> Mat {
    let at = a.transpose(); // n x r
    let n = at.rows;
    let r = at.cols;
    let mut q = at;
    let mut betas = vec![0.0; r.min(n)];
    let mut diag = vec![0.0; r.min(n)];
    // column pivoting on squared norms
    let mut perm: Vec<usize> = (0..r).collect();
    let mut norms: Vec<f64> = (0..r)
        .map(|j| (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum())
        .collect();
    let kmax = r.min(n);
    for k in 0..kmax {
        let (pj, _) = norms
            .iter()
            .enumerate()
            .skip(k)
            .fold((k, -1.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if pj != k {
            for i in 0..n {
                let t = q[(i, k)];
                q[(i, k)] = q[(i, pj)];
                q[(i, pj)] = t;
            }
            norms.swap(k, pj);
            perm.swap(k, pj);
        }
        // Householder on column k below row k
        let mut alpha = 0.0;
        for i in k..n {
            alpha += q[(i, k)] * q[(i, k)];
        }
        let alpha = alpha.sqrt() * if q[(k, k)] >= 0.0 { -1.0 } else { 1.0 };
        diag[k] = alpha;
        if alpha == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        let v0 = q[(k, k)] - alpha;
        q[(k, k)] = v0;
        let vnorm2 = {
            let mut s = 0.0;
            for i in k..n {
                s += q[(i, k)] * q[(i, k)];
            }
            s
        };
        betas[k] = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
        for j in k + 1..r {
            let mut dot = 0.0;
            for i in k..n {
                dot += q[(i, k)] * q[(i, j)];
            }
            let f = betas[k] * dot;
            for i in k..n {
                let s = f * q[(i, k)];
                q[(i, j)] -= s;
            }
            norms[j] -= q[(k, j)] * q[(k, j)];
        }
    }
    let dmax = diag.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let rank = diag.iter().take_while(|d| d.abs() > rel_tol * dmax).count();
    // null space = Q e_j for j = rank..n, applying reflectors in reverse
    let dim = n - rank;
    let mut basis = Mat::zeros(n, dim);
    for (jj, j) in (rank..n).enumerate() {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        for k in (0..kmax).rev() {
            if betas[k] == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in k..n {
                dot += q[(i, k)] * x[i];
            }
            let f = betas[k] * dot;
            for i in k..n {
                x[i] -= f * q[(i, k)];
            }
        }
        for i in 0..n {
            basis[(i, jj)] = x[i];
        }
    }
    basis
}
