//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const REL_TOL: f64 = 1e-10;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
        }
    }

    /// Builds from row-major data; only the upper triangle is read and mirrored.
    pub fn from_upper(n: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, data[i * n + j]);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Eigenpairs in the order the sweeps leave them on the diagonal.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[m]` is the unit eigenvector for `values[m]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Round-robin schedule: `n - 1` rounds (n padded to even) in which every
/// index appears in at most one pair, so each round's rotations commute.
fn schedule(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + n % 2;
    let mut ring: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m.saturating_sub(1));
    for _ in 0..m.saturating_sub(1) {
        let mut pairs = Vec::with_capacity(m / 2);
        for k in 0..m / 2 {
            let (a, b) = (ring[k], ring[m - 1 - k]);
            if a < n && b < n {
                pairs.push((a.min(b), a.max(b)));
            }
        }
        rounds.push(pairs);
        ring[1..].rotate_right(1);
    }
    rounds
}

/// Right-multiplies every row by the round's rotations.
fn rotate_columns(mat: &mut [f64], n: usize, rot: &[(usize, usize, f64, f64)]) {
    let body = |row: &mut [f64]| {
        for &(p, q, c, s) in rot {
            let (xp, xq) = (row[p], row[q]);
            row[p] = c * xp - s * xq;
            row[q] = s * xp + c * xq;
        }
    };
    if n >= PAR_MIN {
        mat.par_chunks_mut(n).for_each(body);
    } else {
        mat.chunks_mut(n).for_each(body);
    }
}

/// Left-multiplies by the transposed rotations (row pairs).
fn rotate_rows(mat: &mut [f64], n: usize, rot: &[(usize, usize, f64, f64)]) {
    let mut rows: Vec<Option<&mut [f64]>> = mat.chunks_mut(n).map(Some).collect();
    let mut work = Vec::with_capacity(rot.len());
    for &(p, q, c, s) in rot {
        let rp = rows[p].take().expect("pairs are disjoint");
        let rq = rows[q].take().expect("pairs are disjoint");
        work.push((rp, rq, c, s));
    }
    let body = |(rp, rq, c, s): (&mut [f64], &mut [f64], f64, f64)| {
        for (xp, xq) in rp.iter_mut().zip(rq.iter_mut()) {
            let (a, b) = (*xp, *xq);
            *xp = c * a - s * b;
            *xq = s * a + c * b;
        }
    };
    if n >= PAR_MIN {
        work.into_par_iter().for_each(body);
    } else {
        work.into_iter().for_each(body);
    }
}

/// Below this size rotations run on the calling thread.
const PAR_MIN: usize = 64;

/// Diagonalizes `m` by cyclic sweeps of plane rotations.
///
/// Each sweep visits every off-diagonal pair once, in round-robin order so
/// that the rotations of one round touch disjoint rows and can be applied in
/// parallel. The arithmetic per element does not depend on the thread count.
/// Stops once the off-diagonal Frobenius norm drops below `1e-10 * ||M||_F`;
/// fails after 100 sweeps.
pub fn jacobi_eigen(m: &SymMatrix) -> Result<Eigen> {
    let n = m.n;
    let mut a = m.a.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tol = REL_TOL * m.frobenius();
    let rounds = schedule(n);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal(&a, n);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for pairs in &rounds {
            let rot: Vec<(usize, usize, f64, f64)> = pairs
                .iter()
                .filter_map(|&(p, q)| {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        return None;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    Some((p, q, c, t * c))
                })
                .collect();
            if rot.is_empty() {
                continue;
            }
            rotate_columns(&mut a, n, &rot);
            rotate_rows(&mut a, n, &rot);
            rotate_columns(&mut v, n, &rot);
        }
    }

    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = (0..n)
        .map(|j| (0..n).map(|i| v[i * n + j]).collect())
        .collect();
    Ok(Eigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}
