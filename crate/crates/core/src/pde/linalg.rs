use crate::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse rows.
#[derive(Debug, Clone, Default)]
pub(crate) struct Csr {
    pub start: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut start = Vec::with_capacity(rows + 1);
        start.push(0);
        Csr {
            start,
            col: Vec::with_capacity(nnz),
            val: Vec::with_capacity(nnz),
        }
    }

    pub fn rows(&self) -> usize {
        self.start.len() - 1
    }

    /// Appends an entry to the current row, merging repeated columns.
    pub fn push(&mut self, col: usize, val: f64) {
        let row_start = *self.start.last().expect("row start");
        if let Some(k) = self.col[row_start..].iter().position(|&c| c == col) {
            self.val[row_start + k] += val;
        } else {
            self.col.push(col);
            self.val.push(val);
        }
    }

    pub fn end_row(&mut self) {
        self.start.push(self.col.len());
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.start[i]..self.start[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|i| {
                (self.start[i]..self.start[i + 1])
                    .find(|&k| self.col[k] == i)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn stalled(method: &str, iters: usize, rel: f64) -> Error {
    Error::numerical(format!(
        "{method} did not converge in {iters} iterations (relative residual {rel:e})"
    ))
}

/// Jacobi-preconditioned conjugate gradients; `x` holds the initial guess.
/// Returns the iteration count.
pub(crate) fn pcg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let inv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bn;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(it);
        }
        a.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bn;
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel <= tol {
        Ok(max_iter)
    } else {
        Err(stalled("conjugate gradients", max_iter, rel))
    }
}

/// Jacobi-preconditioned BiCGSTAB for nonsymmetric systems.
pub(crate) fn bicgstab(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let inv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rel = norm(&r) / bn;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(it);
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(stalled("BiCGSTAB", it, rel));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * inv[i];
        }
        a.apply(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(it + 1);
        }
        for i in 0..n {
            zs[i] = s[i] * inv[i];
        }
        a.apply(&zs, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / bn;
    }
    if rel <= tol {
        Ok(max_iter)
    } else {
        Err(stalled("BiCGSTAB", max_iter, rel))
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of the leading `d x d` block
/// of a symmetric matrix, by cyclic Jacobi rotations.
pub fn symmetric_eigen(m: &[[f64; 3]; 3], d: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = *m;
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    for _ in 0..50 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..d {
            diag += a[i][i] * a[i][i];
            for j in i + 1..d {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= 1e-34 * diag || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut().take(d) {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx = [0usize, 1, 2];
    idx[..d].sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut vals = [0.0; 3];
    let mut vecs = [[0.0; 3]; 3];
    for (slot, &k) in idx[..d].iter().enumerate() {
        vals[slot] = a[k][k];
        for r in 0..d {
            vecs[r][slot] = v[r][k];
        }
    }
    (vals, vecs)
}
