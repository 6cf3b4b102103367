//! Dense real-symmetric linear algebra.
//!
//! Everything here works on small dense matrices (a few hundred rows at most):
//! matrix-vector products for the moment recurrences, a cyclic Jacobi
//! eigensolver used as the exact-spectrum oracle, and cheap spectral-range
//! estimates (Gershgorin discs, Lanczos Ritz values) used to pick a rescaling
//! window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default dimension cap for [`eigh`].
pub const DEFAULT_ORACLE_CAP: usize = 512;

const SYMMETRY_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const LANCZOS_BREAKDOWN: f64 = 1e-13;

/// Compensated (Neumaier) summation accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Inner product with compensated accumulation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// A dense real symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseSymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetricMatrix {
    /// Builds a matrix from row-major entries, checking squareness and symmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::input(format!("non-finite matrix entry {bad}")));
        }
        let scale = data.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut asymmetry = 0.0_f64;
        for j in 0..n {
            for k in (j + 1)..n {
                asymmetry = asymmetry.max((data[j * n + k] - data[k * n + j]).abs());
            }
        }
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (j, v) in values.iter().enumerate() {
            data[j * n + j] = *v;
        }
        Self::from_row_major(n, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.get(j, j)).sum()
    }

    /// Returns `scale * A + shift * I`; symmetry is preserved exactly.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        let mut data: Vec<f64> = self.data.iter().map(|x| scale * x).collect();
        for j in 0..self.n {
            data[j * self.n + j] += shift;
        }
        Self { n: self.n, data }
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseSymmetricMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<DenseSymmetricMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseSymmetricMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}

/// A normalized real state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<f64>,
}

impl StateVector {
    /// Accepts amplitudes that are already normalized to 1e-10.
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::input("state vector must have at least one entry"));
        }
        if amplitudes.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("state vector has non-finite entries"));
        }
        let norm = norm2(&amplitudes);
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<f64>) -> Result<Self> {
        let norm = norm2(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::input("cannot normalize zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|x| *x /= norm);
        Self::new(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.amplitudes
    }
}

/// `A·v` with compensated row sums.
pub fn matvec(a: &DenseSymmetricMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: v.len(),
        });
    }
    Ok(a.rows().map(|row| dot(row, v)).collect())
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Full eigendecomposition with the default dimension cap.
pub fn eigh(a: &DenseSymmetricMatrix) -> Result<Eigendecomposition> {
    eigh_with_cap(a, DEFAULT_ORACLE_CAP)
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps rotate away every off-diagonal pair in row order until the
/// off-diagonal Frobenius norm falls under `1e-12·‖A‖_F`.
pub fn eigh_with_cap(a: &DenseSymmetricMatrix, cap: usize) -> Result<Eigendecomposition> {
    let n = a.dim();
    if n > cap {
        return Err(Error::OracleCapExceeded { n, cap });
    }
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    let threshold = JACOBI_TOL * a.frobenius_norm();
    let off_norm = |m: &[f64]| -> f64 {
        let mut acc = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                acc += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    let mut off = off_norm(&m);
    while off > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Rutishauser's stable rotation: t = tan(theta), |theta| <= pi/4.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        off = off_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues = order.iter().map(|&k| m[k * n + k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| (0..n).map(|r| v[r * n + k]).collect())
        .collect();
    Ok(Eigendecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Gershgorin enclosure `[min_j(A_jj - R_j), max_j(A_jj + R_j)]`.
pub fn gershgorin(a: &DenseSymmetricMatrix) -> (f64, f64) {
    let n = a.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (j, row) in a.rows().enumerate() {
        let radius: f64 = (0..n).filter(|&k| k != j).map(|k| row[k].abs()).sum();
        lo = lo.min(row[j] - radius);
        hi = hi.max(row[j] + radius);
    }
    (lo, hi)
}

/// Extremal Ritz values of an m-step Lanczos run.
#[derive(Clone, Debug)]
pub struct LanczosEstimate {
    pub ritz_min: f64,
    pub ritz_max: f64,
    /// Residual norms `‖A y - θ y‖` for the two extremal Ritz pairs.
    pub residual_min: f64,
    pub residual_max: f64,
    /// Number of Krylov vectors actually built.
    pub steps: usize,
    pub breakdown: bool,
}

impl LanczosEstimate {
    /// `[ritz_min - residual_min, ritz_max + residual_max]`.
    pub fn widened(&self) -> (f64, f64) {
        (
            self.ritz_min - self.residual_min,
            self.ritz_max + self.residual_max,
        )
    }
}

/// Lanczos tridiagonalization with full reorthogonalization.
pub fn lanczos_extremal(
    a: &DenseSymmetricMatrix,
    v0: &StateVector,
    steps: usize,
) -> Result<LanczosEstimate> {
    let n = a.dim();
    if v0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v0.dim(),
        });
    }
    if steps == 0 || steps > n {
        return Err(Error::input(format!(
            "Lanczos step count must lie in 1..={n}, got {steps}"
        )));
    }

    let mut basis: Vec<Vec<f64>> = vec![v0.as_slice().to_vec()];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut breakdown = false;

    loop {
        let j = basis.len() - 1;
        let mut w = matvec(a, &basis[j])?;
        let a_j = dot(&w, &basis[j]);
        alpha.push(a_j);
        // Full reorthogonalization, applied twice.
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let b_j = norm2(&w);
        beta.push(b_j);
        if basis.len() == steps {
            break;
        }
        if b_j < LANCZOS_BREAKDOWN {
            breakdown = true;
            break;
        }
        w.iter_mut().for_each(|x| *x /= b_j);
        basis.push(w);
    }

    let m = alpha.len();
    let mut t = vec![0.0; m * m];
    for j in 0..m {
        t[j * m + j] = alpha[j];
        if j + 1 < m {
            t[j * m + j + 1] = beta[j];
            t[(j + 1) * m + j] = beta[j];
        }
    }
    let tri = DenseSymmetricMatrix { n: m, data: t };
    let evd = eigh(&tri)?;
    let last_beta = beta[m - 1];
    let residual = |k: usize| (last_beta * evd.eigenvectors[k][m - 1]).abs();
    Ok(LanczosEstimate {
        ritz_min: evd.eigenvalues[0],
        ritz_max: evd.eigenvalues[m - 1],
        residual_min: residual(0),
        residual_max: residual(m - 1),
        steps: m,
        breakdown,
    })
}
