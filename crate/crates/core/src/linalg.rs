//! Small dense matrices and the Perron eigenpair of nonnegative irreducible matrices.

use crate::error::{BbsError, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.a[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let v = self.get(i, k);
                if v == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += v * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += xi * v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }
}

/// Top eigenpair of a nonnegative irreducible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub lambda: f64,
    /// Right eigenvector with `v[0] = 1`.
    pub v: Vec<f64>,
    pub residual: f64,
}

fn normalize_first(v: &mut [f64]) {
    let f = v[0];
    for x in v.iter_mut() {
        *x /= f;
    }
}

/// Power iteration on the shifted matrix `A + cI` (c = largest row sum), which
/// is primitive whenever `A` is irreducible. Repeated squaring of the shifted
/// matrix reaches the dominant direction quickly; plain power steps polish it.
pub fn perron_right(a: &Matrix, tol: f64, cap: usize) -> Result<Perron> {
    let n = a.n;
    if n == 0 {
        return Err(BbsError::Domain("empty matrix".into()));
    }
    let c = a.row_sums().into_iter().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut b = a.clone();
    for i in 0..n {
        b.a[i * n + i] += c;
    }
    let mut p = b.clone();
    let mut v = vec![1.0; n];
    for _ in 0..64 {
        let s = p.max_abs();
        for x in p.a.iter_mut() {
            *x /= s;
        }
        let mut w = p.mul_vec(&vec![1.0; n]);
        if w[0] <= 0.0 || !w.iter().all(|x| x.is_finite()) {
            break;
        }
        normalize_first(&mut w);
        let done = w.iter().zip(&v).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0));
        v = w;
        if done {
            break;
        }
        p = p.mul(&p);
    }
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..cap {
        let av = a.mul_vec(&v);
        lambda = av.iter().sum::<f64>() / v.iter().sum::<f64>();
        residual = av.iter().zip(&v).map(|(x, y)| (x - lambda * y).abs()).fold(0.0, f64::max);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if residual <= tol * scale.max(1.0) {
            break;
        }
        let mut w = b.mul_vec(&v);
        normalize_first(&mut w);
        v = w;
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(residual <= tol * scale.max(1.0)) || v.iter().any(|x| *x <= 0.0) {
        return Err(BbsError::EigenFailure(cap));
    }
    Ok(Perron { lambda, v, residual })
}

/// Stationary row vector of an irreducible stochastic matrix.
pub fn stationary(p: &Matrix) -> Result<Vec<f64>> {
    let mut pi = perron_right(&p.transpose(), 1e-14, 100_000)?.v;
    let s: f64 = pi.iter().sum();
    for x in pi.iter_mut() {
        *x /= s;
    }
    Ok(pi)
}
