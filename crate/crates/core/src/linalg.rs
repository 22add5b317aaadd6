//! Sparse symmetric storage, banded Cholesky and a shift-invert Lanczos driver.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n×n` matrix, summing repeated entries.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self { n, indptr, indices, values }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        r.binary_search(&j).map(|k| self.values[self.indptr[i] + k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw ..= i]
    data: Vec<f64>,
}

impl BandCholesky {
    /// Factors `a + shift·I`.
    pub fn factor(a: &CsrMatrix, shift: f64) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[i * w + (j + bw - i)] += v;
                }
            }
            data[i * w + bw] += shift;
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = data[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= data[i * w + (k + bw - i)] * data[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::NoConvergence { iterations: 0, residual: s });
                    }
                    data[i * w + bw] = s.sqrt();
                } else {
                    data[i * w + (j + bw - i)] = s / data[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.data[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.data[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.data[i * w + bw];
        }
    }
}

/// Eigenpair estimate of the original operator.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// ‖A x − λ x‖ for unit x.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lanczos on `(A + shift)⁻¹` with full reorthogonalisation.
///
/// Returns Ritz pairs of `A` for the `m`-dimensional Krylov space, ordered by
/// ascending eigenvalue. An exactly degenerate eigenvalue shows up once.
pub fn shift_invert_lanczos(a: &CsrMatrix, shift: f64, m: usize, seed: u64) -> Result<Vec<RitzPair>> {
    let n = a.n;
    let m = m.min(n);
    let chol = BandCholesky::factor(a, shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nrm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= nrm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let mut w = basis[j].clone();
        chol.solve(&mut w);
        let aj = dot(&w, &basis[j]);
        alpha.push(aj);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bj = dot(&w, &w).sqrt();
        if j + 1 == m || bj < 1e-13 * aj.abs().max(1e-300) {
            break;
        }
        beta.push(bj);
        w.iter_mut().for_each(|x| *x /= bj);
        basis.push(w);
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut out = Vec::with_capacity(k);
    let mut ax = vec![0.0; n];
    for c in 0..k {
        let theta = eig.eigenvalues[c];
        if theta.abs() < 1e-300 {
            continue;
        }
        let mut x = vec![0.0; n];
        for (i, b) in basis.iter().enumerate().take(k) {
            let s = eig.eigenvectors[(i, c)];
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += s * bi);
        }
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let value = 1.0 / theta - shift;
        a.matvec(&x, &mut ax);
        let residual = ax.iter().zip(&x).map(|(p, q)| (p - value * q).powi(2)).sum::<f64>().sqrt();
        out.push(RitzPair { value, vector: x, residual });
    }
    out.sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(out)
}

/// All eigenpairs of a small symmetric matrix, ascending.
pub fn dense_eigen(a: &CsrMatrix) -> Vec<RitzPair> {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut out: Vec<RitzPair> = (0..a.n)
        .map(|c| RitzPair {
            value: eig.eigenvalues[c],
            vector: eig.eigenvectors.column(c).iter().copied().collect(),
            residual: 0.0,
        })
        .collect();
    out.sort_by(|p, q| p.value.total_cmp(&q.value));
    out
}
