//! Dense linear algebra and statistics on small matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {}) = {}",
                pos / cols.max(1),
                pos % cols.max(1),
                data[pos]
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: c.len(),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Matrix::new(m.rows, m.cols, m.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(self.iter_rows().map(|r| dot(r, v)).collect())
    }

    /// Keep the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in self.iter_rows() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.cols * idx.len());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population (1/n) variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------------------
// Least squares

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OlsMethod {
    NormalEquations,
    PivotedQr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub residual_norm: f64,
    /// Condition estimate of the column-scaled design matrix.
    pub condition: f64,
    pub method: OlsMethod,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        dot(&self.coefficients, row) + self.intercept
    }
}

/// Scaled condition number above which the normal equations are abandoned
/// for a pivoted QR factorization.
const NORMAL_EQ_MAX_CONDITION: f64 = 1e4;
/// Relative size of the smallest retained R diagonal in pivoted QR.
const QR_RANK_TOL: f64 = 1e-10;

/// Ordinary least squares with an intercept column.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let (n, d) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    if n < d + 1 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let p = d + 1;
    let mut a = Matrix::zeros(n, p);
    for i in 0..n {
        a.row_mut(i)[..d].copy_from_slice(x.row(i));
        a[(i, d)] = 1.0;
    }
    let scale: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| s == 0.0) {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let mut scaled = a.clone();
    for i in 0..n {
        for (v, s) in scaled.row_mut(i).iter_mut().zip(&scale) {
            *v /= s;
        }
    }
    let gram = scaled.transpose().matmul(&scaled)?;
    let eig = symmetric_eigen(&gram)?;
    let (lmax, lmin) = (eig.values[0], *eig.values.last().unwrap());
    let condition = if lmin > 0.0 { (lmax / lmin).sqrt() } else { f64::INFINITY };

    let (beta_scaled, method, condition) = if condition < NORMAL_EQ_MAX_CONDITION {
        let aty = scaled.transpose().matvec(y)?;
        (cholesky_solve(&gram, &aty)?, OlsMethod::NormalEquations, condition)
    } else {
        let (b, cond) = pivoted_qr_solve(&scaled, y)?;
        (b, OlsMethod::PivotedQr, cond)
    };
    let beta: Vec<f64> = beta_scaled.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let resid = a.matvec(&beta)?;
    let residual_norm = resid
        .iter()
        .zip(y)
        .map(|(f, t)| (t - f) * (t - f))
        .sum::<f64>()
        .sqrt();
    Ok(OlsFit {
        coefficients: beta[..d].to_vec(),
        intercept: beta[d],
        residual_norm,
        condition,
        method,
    })
}

fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= 0.0 {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * z[k]).sum();
        z[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (z[i] - s) / l[(i, i)];
    }
    Ok(x)
}

/// Householder QR with column pivoting; returns the solution and |R00|/|Rpp|.
fn pivoted_qr_solve(a: &Matrix, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (n, p) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut norms: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| r[(i, j)] * r[(i, j)]).sum())
        .collect();

    for k in 0..p {
        let piv = (k..p)
            .max_by(|&i, &j| norms[i].total_cmp(&norms[j]).then(j.cmp(&i)))
            .unwrap();
        if piv != k {
            perm.swap(k, piv);
            norms.swap(k, piv);
            for i in 0..n {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, piv)];
                r[(i, piv)] = t;
            }
        }
        let alpha_norm = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                r[(i, j)] -= s * v[i - k];
            }
        }
        let s: f64 = (k..n).map(|i| v[i - k] * qty[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..n {
            qty[i] -= s * v[i - k];
        }
        for j in (k + 1)..p {
            norms[j] = ((k + 1)..n).map(|i| r[(i, j)] * r[(i, j)]).sum();
        }
    }

    let r00 = r[(0, 0)].abs();
    let rpp = r[(p - 1, p - 1)].abs();
    let condition = if rpp > 0.0 { r00 / rpp } else { f64::INFINITY };
    if (0..p).any(|k| r[(k, k)].abs() <= QR_RANK_TOL * r00) {
        return Err(Error::RankDeficient { condition });
    }
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[(i, j)] * z[j]).sum();
        z[i] = (qty[i] - s) / r[(i, i)];
    }
    let mut beta = vec![0.0; p];
    for (k, &j) in perm.iter().enumerate() {
        beta[j] = z[k];
    }
    Ok((beta, condition))
}

// ---------------------------------------------------------------------------
// Covariance and correlation

/// Population covariance of the columns of `x`.
pub fn covariance(x: &Matrix) -> Result<Matrix> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Empty);
    }
    let means: Vec<f64> = (0..d).map(|j| mean(&x.column(j))).collect();
    let mut c = Matrix::zeros(d, d);
    for row in x.iter_rows() {
        for a in 0..d {
            let da = row[a] - means[a];
            for b in a..d {
                c[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = c[(a, b)] / n as f64;
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub matrix: Matrix,
    /// Columns with zero variance; their rows and columns are all zero.
    pub zero_variance: Vec<usize>,
}

pub fn correlation(x: &Matrix) -> Result<Correlation> {
    let cov = covariance(x)?;
    let d = cov.rows();
    let sd: Vec<f64> = (0..d).map(|j| cov[(j, j)].sqrt()).collect();
    let zero_variance: Vec<usize> = (0..d).filter(|&j| !(sd[j] > 0.0)).collect();
    let mut m = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            if sd[a] > 0.0 && sd[b] > 0.0 {
                m[(a, b)] = if a == b {
                    1.0
                } else {
                    (cov[(a, b)] / (sd[a] * sd[b])).clamp(-1.0, 1.0)
                };
            }
        }
    }
    Ok(Correlation {
        matrix: m,
        zero_variance,
    })
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
    pub sweeps: usize,
    pub converged: bool,
    pub off_norm: f64,
}

impl Eigen {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                sweeps: self.sweeps,
                off_norm: self.off_norm,
            })
        }
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-12 * max(1, ||A||_F)` or 100 sweeps have run; the latter returns the
/// current estimate with `converged = false`.
pub fn symmetric_eigen(a: &Matrix) -> Result<Eigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    let asym = a.symmetry_defect();
    if asym > 1e-10 * a.frobenius().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let tol = JACOBI_TOL * a.frobenius().max(1.0);
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&m);
    while off >= tol && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(&m);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(Eigen {
        values,
        vectors,
        sweeps,
        converged: off < tol,
        off_norm: off,
    })
}

// ---------------------------------------------------------------------------
// PCA

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// d x d, columns are principal axes; each column's largest-|loading| entry is positive.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// n x k, `x * components[:, :k]`.
    pub projections: Matrix,
}

/// PCA via the population covariance. Inputs are expected standardized, so
/// projections are taken without re-centering.
pub fn pca(x: &Matrix, k: usize) -> Result<PcaResult> {
    let d = x.cols();
    if k > d {
        return Err(Error::DimensionMismatch { expected: d, got: k });
    }
    let cov = covariance(x)?;
    let eig = symmetric_eigen(&cov)?.require_converged()?;
    let mut comps = eig.vectors;
    for j in 0..d {
        let mut best = 0;
        for i in 1..d {
            if comps[(i, j)].abs() > comps[(best, j)].abs() {
                best = i;
            }
        }
        if comps[(best, j)] < 0.0 {
            for i in 0..d {
                comps[(i, j)] = -comps[(i, j)];
            }
        }
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let explained_variance_ratio = if total > 0.0 {
        clamped.iter().map(|l| l / total).collect()
    } else {
        vec![0.0; d]
    };
    let kept: Vec<usize> = (0..k).collect();
    let projections = x.matmul(&comps.select_columns(&kept))?;
    Ok(PcaResult {
        components: comps,
        eigenvalues: eig.values,
        explained_variance_ratio,
        projections,
    })
}

impl PcaResult {
    /// Loadings table with one row per feature and columns `PC1..PCk`.
    pub fn write_loadings_csv<W: std::io::Write>(&self, names: &[String], k: usize, out: W) -> Result<()> {
        let d = self.components.rows();
        if names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: names.len() });
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature".to_string()];
        header.extend((1..=k).map(|c| format!("PC{c}")));
        w.write_record(&header)?;
        for (i, name) in names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend((0..k).map(|c| format!("{:.6}", self.components[(i, c)])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<loadings>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ols_line() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let fit = ols_fit(&x, &[1.0, 3.0, 5.0]).unwrap();
        assert!(approx(fit.coefficients[0], 2.0, 1e-12));
        assert!(approx(fit.intercept, 1.0, 1e-12));
        assert!(fit.residual_norm < 1e-12);
    }

    #[test]
    fn ols_duplicate_column_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64, (i * i) as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
        assert!(matches!(ols_fit(&x, &y), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn ols_ill_conditioned_uses_qr() {
        let mut r = crate::rng::seeded(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let a: f64 = r.gen();
                vec![a, a + 1e-6 * r.gen::<f64>()]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|v| 3.0 * v[0] - 2.0 * v[1] + 0.5).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert_eq!(fit.method, OlsMethod::PivotedQr);
        assert!(approx(fit.coefficients[0], 3.0, 1e-4), "{:?}", fit);
        assert!(approx(fit.coefficients[1], -2.0, 1e-4));
    }

    #[test]
    fn correlation_identical_and_constant() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 5.0], vec![2.0, 2.0, 5.0], vec![4.0, 4.0, 5.0]]).unwrap();
        let c = correlation(&x).unwrap();
        assert!(approx(c.matrix[(0, 1)], 1.0, 1e-15));
        assert_eq!(c.zero_variance, vec![2]);
        assert_eq!(c.matrix[(2, 2)], 0.0);
        assert_eq!(c.matrix[(0, 2)], 0.0);
    }

    #[test]
    fn correlation_independent_signs() {
        // Hand enumeration: every (+-1, +-1) pattern once gives covariance 0.
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert_eq!(correlation(&x).unwrap().matrix[(0, 1)], 0.0);
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let e = symmetric_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let d = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let e = symmetric_eigen(&d).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors.column(0).iter().map(|v| v.abs()).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn pca_line() {
        let x = Matrix::from_rows(&[vec![-1.0, -1.0], vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let p = pca(&x, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(approx(p.components[(0, 0)], s, 1e-12));
        assert!(approx(p.components[(1, 0)], s, 1e-12));
        assert!(approx(p.explained_variance_ratio[0], 1.0, 1e-12));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(Matrix::new(1, 1, vec![f64::NAN]), Err(Error::NonFinite(_))));
    }
}
