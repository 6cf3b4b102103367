//! Hamiltonian moment vectors.
//!
//! A moment vector holds `⟨b_n(Ĥ)⟩` for n = 0..=N where `b_n` is either the
//! monomial `xⁿ` or the Chebyshev polynomial `T_n(x)`. When a scaling window
//! is attached, `x` is the rescaled energy that maps the window onto [-1, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, DenseSymmetricMatrix, StateVector};
use crate::spectrum::SpectralModel;

const UNIT_MOMENT_TOL: f64 = 1e-12;
const HANKEL_TOL: f64 = 1e-8;

/// Polynomial basis used for moments and for the bound polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Chebyshev,
}

impl Basis {
    /// Fills `out` with `b_0(x), ..., b_N(x)` where `N = out.len() - 1`.
    pub fn evaluate_into(self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() == 1 {
            return;
        }
        out[1] = x;
        for n in 2..out.len() {
            out[n] = match self {
                Basis::Monomial => out[n - 1] * x,
                Basis::Chebyshev => 2.0 * x * out[n - 1] - out[n - 2],
            };
        }
    }

    pub fn evaluate(self, x: f64, degree: usize) -> Vec<f64> {
        let mut out = vec![0.0; degree + 1];
        self.evaluate_into(x, &mut out);
        out
    }

    /// Evaluates `Σ c_n b_n(x)`.
    pub fn polynomial(self, coefficients: &[f64], x: f64) -> f64 {
        match self {
            Basis::Monomial => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Basis::Chebyshev => clenshaw(coefficients, x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::Monomial => "monomial",
            Basis::Chebyshev => "chebyshev",
        }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "monomial" | "power" => Ok(Basis::Monomial),
            "chebyshev" | "cheb" => Ok(Basis::Chebyshev),
            other => Err(Error::input(format!("unknown basis '{other}'"))),
        }
    }
}

fn clenshaw(coefficients: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for c in coefficients.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coefficients.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Affine window `[E_L, E_U]` mapped onto `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ScalingWindow {
    lower: f64,
    upper: f64,
}

impl ScalingWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::input(format!(
                "scaling window requires E_L < E_U, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Widens `[lo, hi]` outward to the enclosing multiples of 0.1.
    pub fn rounded_outward(lo: f64, hi: f64) -> Result<Self> {
        let mut lower = (lo * 10.0).floor() / 10.0;
        let mut upper = (hi * 10.0).ceil() / 10.0;
        if lower > lo {
            lower -= 0.1;
        }
        if upper < hi {
            upper += 0.1;
        }
        if upper <= lower {
            upper = lower + 0.1;
        }
        Self::new(lower, upper)
    }

    /// Gershgorin enclosure rounded outward to one decimal.
    pub fn gershgorin(a: &DenseSymmetricMatrix) -> Result<Self> {
        let (lo, hi) = linalg::gershgorin(a);
        Self::rounded_outward(lo, hi)
    }

    /// Widened Lanczos estimate `[ritz_min - r, ritz_max + r]`.
    pub fn lanczos(a: &DenseSymmetricMatrix, start: &StateVector, steps: usize) -> Result<Self> {
        let est = linalg::lanczos_extremal(a, start, steps)?;
        let (lo, hi) = est.widened();
        if hi > lo {
            Self::new(lo, hi)
        } else {
            Self::new(lo - 0.5, hi + 0.5)
        }
    }

    /// Spectrum range of a model rounded outward to one decimal.
    pub fn for_spectrum(model: &SpectralModel) -> Result<Self> {
        let (lo, hi) = model.range();
        Self::rounded_outward(lo, hi)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `x = αE + β` with `α = 2/(E_U - E_L)`.
    pub fn affine_coefficients(&self) -> (f64, f64) {
        let width = self.upper - self.lower;
        (2.0 / width, -(self.lower + self.upper) / width)
    }

    pub fn rescale(&self, energy: f64) -> f64 {
        rescale_energy(energy, self)
    }

    pub fn unscale(&self, x: f64) -> f64 {
        0.5 * ((self.upper - self.lower) * x + (self.upper + self.lower))
    }
}

impl TryFrom<[f64; 2]> for ScalingWindow {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<ScalingWindow> for [f64; 2] {
    fn from(w: ScalingWindow) -> Self {
        [w.lower, w.upper]
    }
}

/// `(2E - (E_L + E_U)) / (E_U - E_L)`.
pub fn rescale_energy(energy: f64, window: &ScalingWindow) -> f64 {
    (2.0 * energy - (window.lower + window.upper)) / (window.upper - window.lower)
}

/// `Ĥ_rs = (2A - (E_L + E_U) I) / (E_U - E_L)`.
pub fn rescale_matrix(a: &DenseSymmetricMatrix, window: &ScalingWindow) -> DenseSymmetricMatrix {
    let (alpha, beta) = window.affine_coefficients();
    a.affine(alpha, beta)
}

/// Moments `⟨b_n(Ĥ)⟩`, n = 0..=degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    basis: Basis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<ScalingWindow>,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(basis: Basis, values: Vec<f64>, window: Option<ScalingWindow>) -> Result<Self> {
        let m = Self {
            basis,
            window,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::input("moment vector must contain at least ⟨Ĥ⁰⟩"));
        }
        if (self.values[0] - 1.0).abs() > UNIT_MOMENT_TOL {
            return Err(Error::input(format!(
                "zeroth moment must equal 1, got {}",
                self.values[0]
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("moment vector has non-finite entries"));
        }
        if self.basis == Basis::Chebyshev && self.window.is_none() {
            return Err(Error::input("Chebyshev moments require a scaling window"));
        }
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn window(&self) -> Option<&ScalingWindow> {
        self.window.as_ref()
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Leading `degree + 1` moments.
    pub fn truncated(&self, degree: usize) -> Result<Self> {
        if degree > self.degree() {
            return Err(Error::input(format!(
                "requested degree {degree} exceeds available moment degree {}",
                self.degree()
            )));
        }
        Ok(Self {
            basis: self.basis,
            window: self.window,
            values: self.values[..=degree].to_vec(),
        })
    }

    /// Re-expresses raw monomial moments `⟨Eᵏ⟩` as moments of the rescaled
    /// energy `x = αE + β` via the binomial expansion.
    pub fn rescaled(&self, window: ScalingWindow) -> Result<Self> {
        if self.basis != Basis::Monomial || self.window.is_some() {
            return Err(Error::input(
                "only raw (unwindowed) monomial moments can be rescaled",
            ));
        }
        let (alpha, beta) = window.affine_coefficients();
        let degree = self.degree();
        let mut values = Vec::with_capacity(degree + 1);
        let mut binom = vec![1.0_f64];
        for n in 0..=degree {
            if n > 0 {
                let mut next = vec![1.0; n + 1];
                for k in 1..n {
                    next[k] = binom[k - 1] + binom[k];
                }
                binom = next;
            }
            let mut acc = linalg::CompensatedSum::new();
            for (k, b) in binom.iter().enumerate() {
                acc.add(b * alpha.powi(k as i32) * beta.powi((n - k) as i32) * self.values[k]);
            }
            values.push(acc.value());
        }
        Self::new(Basis::Monomial, values, Some(window))
    }

    /// Converts windowed monomial moments to Chebyshev moments and back.
    pub fn to_basis(&self, basis: Basis) -> Result<Self> {
        if basis == self.basis {
            return Ok(self.clone());
        }
        let window = self
            .window
            .ok_or_else(|| Error::input("basis conversion requires a scaling window"))?;
        let degree = self.degree();
        let table = chebyshev_monomial_table(degree);
        let values: Vec<f64> = match basis {
            Basis::Chebyshev => (0..=degree)
                .map(|n| dot(&table[n][..=n], &self.values[..=n]))
                .collect(),
            Basis::Monomial => {
                // Forward substitution: T_n = Σ_k t_nk x^k with t_nn = 2^(n-1).
                let mut mono = vec![0.0; degree + 1];
                for n in 0..=degree {
                    let partial = dot(&table[n][..n], &mono[..n]);
                    mono[n] = (self.values[n] - partial) / table[n][n];
                }
                mono
            }
        };
        Self::new(basis, values, Some(window))
    }

    /// Raw `⟨Ĥ⟩` and `⟨Ĥ²⟩`, undoing any rescaling.
    pub fn raw_mean_and_second(&self) -> Result<(f64, f64)> {
        if self.degree() < 2 {
            return Err(Error::input("need moments up to degree 2"));
        }
        let mono = self.to_basis(Basis::Monomial)?;
        let (x1, x2) = (mono.values[1], mono.values[2]);
        match self.window {
            None => Ok((x1, x2)),
            Some(w) => {
                let half = 0.5 * (w.upper - w.lower);
                let mid = 0.5 * (w.upper + w.lower);
                let mean = half * x1 + mid;
                let second = half * half * x2 + 2.0 * half * mid * x1 + mid * mid;
                Ok((mean, second))
            }
        }
    }

    /// Raw `⟨Ĥ⟩`, undoing any rescaling.
    pub fn raw_mean(&self) -> Result<f64> {
        if self.degree() < 1 {
            return Err(Error::input("need moments up to degree 1"));
        }
        match self.window {
            None => Ok(self.values[1]),
            Some(w) => Ok(w.unscale(self.values[1])),
        }
    }
}

/// Row n holds the monomial coefficients of `T_n`.
fn chebyshev_monomial_table(degree: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; degree + 1]; degree + 1];
    table[0][0] = 1.0;
    if degree >= 1 {
        table[1][1] = 1.0;
    }
    for n in 2..=degree {
        for k in 0..=n {
            let shifted = if k > 0 { 2.0 * table[n - 1][k - 1] } else { 0.0 };
            table[n][k] = shifted - table[n - 2][k];
        }
    }
    table
}

fn check_dims(a: &DenseSymmetricMatrix, phi: &StateVector) -> Result<()> {
    if a.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: phi.dim(),
        });
    }
    Ok(())
}

/// `⟨φ|Aⁿ|φ⟩` for n = 0..=degree via `⟨A^⌈n/2⌉φ, A^⌊n/2⌋φ⟩`.
pub fn power_moments(
    a: &DenseSymmetricMatrix,
    phi: &StateVector,
    degree: usize,
) -> Result<MomentVector> {
    check_dims(a, phi)?;
    let half = degree.div_ceil(2);
    let mut powers: Vec<Vec<f64>> = Vec::with_capacity(half + 1);
    powers.push(phi.as_slice().to_vec());
    for k in 1..=half {
        let next = linalg::matvec(a, &powers[k - 1])?;
        powers.push(next);
    }
    let values = (0..=degree)
        .map(|n| dot(&powers[n.div_ceil(2)], &powers[n / 2]))
        .collect();
    MomentVector::new(Basis::Monomial, values, None)
}

/// Monomial moments of the rescaled matrix.
pub fn rescaled_power_moments(
    a: &DenseSymmetricMatrix,
    phi: &StateVector,
    degree: usize,
    window: ScalingWindow,
) -> Result<MomentVector> {
    let m = power_moments(&rescale_matrix(a, &window), phi, degree)?;
    MomentVector::new(Basis::Monomial, m.values, Some(window))
}

/// `⟨φ|T_n(Ĥ_rs)|φ⟩` via the three-term vector recurrence.
pub fn chebyshev_moments(
    a: &DenseSymmetricMatrix,
    phi: &StateVector,
    degree: usize,
    window: ScalingWindow,
) -> Result<MomentVector> {
    check_dims(a, phi)?;
    let h = rescale_matrix(a, &window);
    let phi = phi.as_slice();
    let mut values = Vec::with_capacity(degree + 1);
    values.push(dot(phi, phi));
    if degree >= 1 {
        let mut prev = phi.to_vec();
        let mut cur = linalg::matvec(&h, phi)?;
        values.push(dot(phi, &cur));
        for _ in 2..=degree {
            let hw = linalg::matvec(&h, &cur)?;
            let next: Vec<f64> = hw.iter().zip(&prev).map(|(x, p)| 2.0 * x - p).collect();
            values.push(dot(phi, &next));
            prev = cur;
            cur = next;
        }
    }
    // ⟨φ|φ⟩ is 1 only to the state-vector tolerance; pin it.
    values[0] = 1.0;
    MomentVector::new(Basis::Chebyshev, values, Some(window))
}

/// `Σ_k P_k b_n(E_k)` with `b_n` evaluated at raw or rescaled energies.
pub fn moments_from_spectrum(
    model: &SpectralModel,
    degree: usize,
    basis: Basis,
    window: Option<ScalingWindow>,
) -> Result<MomentVector> {
    if basis == Basis::Chebyshev && window.is_none() {
        return Err(Error::input("Chebyshev moments require a scaling window"));
    }
    let mut acc = vec![linalg::CompensatedSum::new(); degree + 1];
    let mut row = vec![0.0; degree + 1];
    for (e, p) in model.eigenvalues().iter().zip(model.overlaps()) {
        let x = window.map_or(*e, |w| w.rescale(*e));
        basis.evaluate_into(x, &mut row);
        for (a, b) in acc.iter_mut().zip(&row) {
            a.add(p * b);
        }
    }
    let mut values: Vec<f64> = acc.iter().map(|a| a.value()).collect();
    // Incomplete models (dropped overlap mass) are renormalized.
    let total = values[0];
    if total <= 0.0 {
        return Err(Error::input("spectral model carries no overlap mass"));
    }
    if (total - 1.0).abs() > UNIT_MOMENT_TOL {
        values.iter_mut().for_each(|v| *v /= total);
    }
    values[0] = 1.0;
    MomentVector::new(basis, values, window)
}

/// Positive-semidefiniteness check of the moment Gram matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HankelReport {
    pub min_eigenvalue: f64,
    /// Acceptance threshold actually applied (−1e-8 scaled by the largest entry).
    pub threshold: f64,
    pub order: usize,
    pub pass: bool,
}

/// Builds the Gram matrix `G_jk = ⟨b_j b_k⟩` of the moment sequence and checks
/// that its smallest eigenvalue is not below `-1e-8·max(1, max|G_jk|)`.
///
/// For monomial moments this is the Hankel matrix `M_{j+k}`; for Chebyshev
/// moments `T_j T_k = (T_{j+k} + T_{|j-k|}) / 2` gives the analogous matrix.
pub fn hankel_consistency_check(moments: &MomentVector) -> Result<HankelReport> {
    let degree = moments.degree();
    if degree < 2 {
        return Err(Error::input("Hankel check needs moments up to degree 2"));
    }
    let order = degree / 2 + 1;
    let v = moments.values();
    let mut data = vec![0.0; order * order];
    for j in 0..order {
        for k in 0..order {
            data[j * order + k] = match moments.basis() {
                Basis::Monomial => v[j + k],
                Basis::Chebyshev => 0.5 * (v[j + k] + v[j.abs_diff(k)]),
            };
        }
    }
    let gram = DenseSymmetricMatrix::from_row_major(order, data)?;
    let min_eigenvalue = linalg::eigh(&gram)?.eigenvalues[0];
    let threshold = -HANKEL_TOL * gram.max_abs().max(1.0);
    Ok(HankelReport {
        min_eigenvalue,
        threshold,
        order,
        pass: min_eigenvalue >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s3() -> SpectralModel {
        SpectralModel::new(vec![-1.0, 0.0, 1.0], vec![0.5, 0.3, 0.2], true).unwrap()
    }

    fn s3_matrix() -> (DenseSymmetricMatrix, StateVector) {
        let a = DenseSymmetricMatrix::diagonal(&[-1.0, 0.0, 1.0]).unwrap();
        let phi = StateVector::new(vec![0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]).unwrap();
        (a, phi)
    }

    #[test]
    fn rescale_energy_endpoints() {
        let w = ScalingWindow::new(-3.0, 5.0).unwrap();
        assert_eq!(rescale_energy(5.0, &w), 1.0);
        assert_eq!(rescale_energy(1.0, &w), 0.0);
        assert_eq!(rescale_energy(-3.0, &w), -1.0);
        assert!(ScalingWindow::new(1.0, 1.0).is_err());
    }

    #[test]
    fn rescale_matrix_examples() {
        let w = ScalingWindow::new(-2.0, 3.0).unwrap();
        let a = DenseSymmetricMatrix::diagonal(&[-2.0, 3.0]).unwrap();
        let r = rescale_matrix(&a, &w);
        assert_abs_diff_eq!(r.get(0, 0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.get(1, 1), 1.0, epsilon = 1e-15);

        let id = DenseSymmetricMatrix::identity(3).unwrap();
        let r = rescale_matrix(&id, &ScalingWindow::new(0.0, 2.0).unwrap());
        assert!((0..3).all(|j| r.get(j, j) == 0.0));
    }

    #[test]
    fn rescaled_spectrum_matches_rescaled_eigenvalues() {
        let a = DenseSymmetricMatrix::from_rows(vec![
            vec![1.0, 0.3, -0.2],
            vec![0.3, -0.5, 0.1],
            vec![-0.2, 0.1, 0.7],
        ])
        .unwrap();
        let w = ScalingWindow::gershgorin(&a).unwrap();
        let raw = linalg::eigh(&a).unwrap().eigenvalues;
        let scaled = linalg::eigh(&rescale_matrix(&a, &w)).unwrap().eigenvalues;
        for (e, x) in raw.iter().zip(&scaled) {
            assert_abs_diff_eq!(w.rescale(*e), *x, epsilon = 1e-10);
        }
    }

    #[test]
    fn power_moments_examples() {
        let a = DenseSymmetricMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let phi = StateVector::new(vec![0.75f64.sqrt(), 0.25f64.sqrt()]).unwrap();
        let m = power_moments(&a, &phi, 2).unwrap();
        assert_abs_diff_eq!(m.values()[1], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values()[2], 0.25, epsilon = 1e-15);

        let (a, phi) = s3_matrix();
        let m = power_moments(&a, &phi, 3).unwrap();
        assert_abs_diff_eq!(m.values()[1], -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values()[2], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values()[3], -0.3, epsilon = 1e-15);
    }

    #[test]
    fn power_moments_of_eigenstate() {
        let a = DenseSymmetricMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let phi = StateVector::normalized(vec![1.0, 1.0]).unwrap();
        let m = power_moments(&a, &phi, 6).unwrap();
        for (n, v) in m.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, 3f64.powi(n as i32), epsilon = 1e-10);
        }
    }

    #[test]
    fn chebyshev_moments_examples() {
        let (a, phi) = s3_matrix();
        let w = ScalingWindow::new(-1.0, 1.0).unwrap();
        let m = chebyshev_moments(&a, &phi, 3, w).unwrap();
        assert_eq!(m.values()[0], 1.0);
        assert_abs_diff_eq!(m.values()[1], -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.values()[2], 0.4, epsilon = 1e-15);

        let w = ScalingWindow::new(-1.5, 2.0).unwrap();
        let cheb = chebyshev_moments(&a, &phi, 1, w).unwrap();
        let mono = rescaled_power_moments(&a, &phi, 1, w).unwrap();
        assert_abs_diff_eq!(cheb.values()[1], mono.values()[1], epsilon = 1e-15);
    }

    #[test]
    fn spectrum_moments_examples() {
        let single = SpectralModel::new(vec![0.7], vec![1.0], true).unwrap();
        let m = moments_from_spectrum(&single, 4, Basis::Monomial, None).unwrap();
        for (n, v) in m.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.7f64.powi(n as i32), epsilon = 1e-15);
        }
        let m = moments_from_spectrum(&s3(), 3, Basis::Monomial, None).unwrap();
        let expected = [1.0, -0.3, 0.7, -0.3];
        for (v, e) in m.values().iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
        let (a, phi) = s3_matrix();
        let from_matrix = power_moments(&a, &phi, 8).unwrap();
        let from_model = moments_from_spectrum(&s3(), 8, Basis::Monomial, None).unwrap();
        for (x, y) in from_matrix.values().iter().zip(from_model.values()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn chebyshev_requires_window() {
        assert!(moments_from_spectrum(&s3(), 2, Basis::Chebyshev, None).is_err());
        assert!(MomentVector::new(Basis::Chebyshev, vec![1.0, 0.0], None).is_err());
        assert!(MomentVector::new(Basis::Monomial, vec![0.9, 0.0], None).is_err());
    }

    #[test]
    fn hankel_examples() {
        let m = moments_from_spectrum(&s3(), 4, Basis::Monomial, None).unwrap();
        assert!(hankel_consistency_check(&m).unwrap().pass);

        let bad = MomentVector::new(Basis::Monomial, vec![1.0, 0.0, -1.0], None).unwrap();
        let report = hankel_consistency_check(&bad).unwrap();
        assert!(!report.pass);
        assert_abs_diff_eq!(report.min_eigenvalue, -1.0, epsilon = 1e-12);

        // [[1, -0.3], [-0.3, -0.3]]: eigenvalues (0.7 ± sqrt(1.69 + 0.36)) / 2.
        let mut v = m.values()[..3].to_vec();
        v[2] -= 1.0;
        let perturbed = MomentVector::new(Basis::Monomial, v, None).unwrap();
        let report = hankel_consistency_check(&perturbed).unwrap();
        assert!(!report.pass);
        assert_abs_diff_eq!(
            report.min_eigenvalue,
            (0.7 - (1.3f64 * 1.3 + 0.36).sqrt()) / 2.0,
            epsilon = 1e-12
        );

        let w = ScalingWindow::new(-1.0, 1.0).unwrap();
        let cheb = moments_from_spectrum(&s3(), 6, Basis::Chebyshev, Some(w)).unwrap();
        assert!(hankel_consistency_check(&cheb).unwrap().pass);
    }

    #[test]
    fn basis_conversion_round_trip() {
        let w = ScalingWindow::new(-1.2, 1.3).unwrap();
        let mono = moments_from_spectrum(&s3(), 9, Basis::Monomial, Some(w)).unwrap();
        let cheb = moments_from_spectrum(&s3(), 9, Basis::Chebyshev, Some(w)).unwrap();
        let converted = mono.to_basis(Basis::Chebyshev).unwrap();
        let back = cheb.to_basis(Basis::Monomial).unwrap();
        for n in 0..=9 {
            assert_abs_diff_eq!(converted.values()[n], cheb.values()[n], epsilon = 1e-12);
            assert_abs_diff_eq!(back.values()[n], mono.values()[n], epsilon = 1e-12);
        }
        let raw = moments_from_spectrum(&s3(), 9, Basis::Monomial, None).unwrap();
        let rescaled = raw.rescaled(w).unwrap();
        for n in 0..=9 {
            assert_abs_diff_eq!(rescaled.values()[n], mono.values()[n], epsilon = 1e-12);
        }
        let (mean, second) = cheb.raw_mean_and_second().unwrap();
        assert_abs_diff_eq!(mean, -0.3, epsilon = 1e-13);
        assert_abs_diff_eq!(second, 0.7, epsilon = 1e-13);
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let c = [0.3, -1.0, 0.25, 2.0, -0.5];
        for x in [-1.3, -0.4, 0.0, 0.77, 1.0] {
            let direct: f64 = Basis::Chebyshev
                .evaluate(x, 4)
                .iter()
                .zip(&c)
                .map(|(b, c)| b * c)
                .sum();
            assert_abs_diff_eq!(Basis::Chebyshev.polynomial(&c, x), direct, epsilon = 1e-13);
        }
    }

    fn random_problem(n: usize, seed: u64) -> (DenseSymmetricMatrix, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for k in j..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                data[j * n + k] = x;
                data[k * n + j] = x;
            }
        }
        let a = DenseSymmetricMatrix::from_row_major(n, data).unwrap();
        let phi = StateVector::normalized((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        (a, phi)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn chebyshev_moments_match_spectral_route(n in 1usize..24, seed in any::<u64>()) {
            let (a, phi) = random_problem(n, seed);
            let w = ScalingWindow::gershgorin(&a).unwrap();
            let direct = chebyshev_moments(&a, &phi, 12, w).unwrap();
            let model = SpectralModel::from_matrix(&a, &phi, 0.0).unwrap();
            let oracle = moments_from_spectrum(&model, 12, Basis::Chebyshev, Some(w)).unwrap();
            for (x, y) in direct.values().iter().zip(oracle.values()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
            // Bounded rescaled spectrum ⇒ bounded monomial moments.
            let mono = rescaled_power_moments(&a, &phi, 12, w).unwrap();
            prop_assert!(mono.values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }

        #[test]
        fn first_moment_is_affine_covariant(n in 1usize..16, seed in any::<u64>(), lo in -5.0f64..0.0, width in 0.5f64..10.0) {
            let (a, phi) = random_problem(n, seed);
            let w = ScalingWindow::new(lo, lo + width).unwrap();
            let raw = power_moments(&a, &phi, 1).unwrap().values()[1];
            let scaled = power_moments(&rescale_matrix(&a, &w), &phi, 1).unwrap().values()[1];
            prop_assert!((scaled - rescale_energy(raw, &w)).abs() <= 1e-12 * (1.0 + raw.abs()) * w.affine_coefficients().0.max(1.0));
        }
    }
}
