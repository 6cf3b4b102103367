//! Optimal polynomial bounds on overlaps and the classical closed forms.
//!
//! For a target function `f` (an [`IndicatorSpec`]) and moments
//! `M_n = ⟨b_n(Ĥ)⟩`, any polynomial `p = Σ c_n b_n` with `p ≤ f` on the
//! spectrum gives `⟨p(Ĥ)⟩ = (c, M) ≤ ⟨f(Ĥ)⟩ = Σ v_i P_i`. The best such `p`
//! on a finite grid is a linear program; the upper bound swaps `≤` for `≥`
//! and `max` for `min`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicator::{discretize, refine, ConstraintGrid, GridProvenance, IndicatorSpec, PointCounts};
use crate::linalg::{dot, CompensatedSum};
use crate::lp::{solve_lp_with, LinearProgram, LpOptions, LpStatus, Sense};
use crate::moments::{Basis, MomentVector, ScalingWindow};
use crate::spectrum::SpectralModel;

const WINDOW_MATCH_TOL: f64 = 1e-12;
const VARIANCE_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Lower, Direction::Upper];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lower" => Ok(Direction::Lower),
            "upper" => Ok(Direction::Upper),
            other => Err(Error::input(format!("unknown direction {other:?}"))),
        }
    }
}

/// Enough of a [`ConstraintGrid`] to rebuild it from its indicator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub provenance: GridProvenance,
    pub points: usize,
    pub region_counts: Vec<usize>,
    pub window: ScalingWindow,
}

impl GridSummary {
    fn of(grid: &ConstraintGrid) -> Self {
        Self {
            provenance: grid.provenance(),
            points: grid.len(),
            region_counts: grid.region_counts().to_vec(),
            window: *grid.window(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub direction: Direction,
    pub degree: usize,
    pub basis: Basis,
    /// Coefficients of `p` in `basis`, as a function of the rescaled energy.
    pub coefficients: Vec<f64>,
    /// `(c, M)` exactly as optimized.
    pub raw_value: f64,
    /// `raw_value` clamped to `[0, weight_mass]`.
    pub value: f64,
    pub weight_mass: f64,
    /// Largest one-sided violation of `p` against `f` on the grid it was solved on.
    pub grid_violation: f64,
    /// Largest violation on the verification grid (0 for exact-spectrum grids).
    pub certified_margin: f64,
    pub certified: bool,
    /// Refinement rounds that produced the final grid.
    pub refinements: usize,
    pub grid: GridSummary,
    pub lp_status: LpStatus,
    pub iterations: usize,
    /// Raw energies of the grid points where `p` touches `f`.
    pub active_energies: Vec<f64>,
}

impl BoundResult {
    /// `p(E)` at a raw energy.
    pub fn evaluate(&self, energy: f64) -> f64 {
        self.basis
            .polynomial(&self.coefficients, self.grid.window.rescale(energy))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub factor: usize,
    pub max_retries: usize,
    pub tolerance: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            factor: 2,
            max_retries: 8,
            tolerance: 1e-6,
        }
    }
}

fn windows_match(a: &ScalingWindow, b: &ScalingWindow) -> bool {
    let scale = a.upper().abs().max(a.lower().abs()).max(1.0);
    (a.lower() - b.lower()).abs() <= WINDOW_MATCH_TOL * scale
        && (a.upper() - b.upper()).abs() <= WINDOW_MATCH_TOL * scale
}

/// Moments expressed in the grid's rescaled coordinate, truncated to `degree`.
fn aligned_moments(m: &MomentVector, window: &ScalingWindow, degree: usize) -> Result<MomentVector> {
    if degree > m.degree() {
        return Err(Error::input(format!(
            "degree {degree} needs moments beyond the available degree {}",
            m.degree()
        )));
    }
    let m = m.truncated(degree)?;
    match m.window() {
        Some(w) if windows_match(w, window) => Ok(m),
        Some(w) => Err(Error::input(format!(
            "moment window [{}, {}] differs from grid window [{}, {}]",
            w.lower(),
            w.upper(),
            window.lower(),
            window.upper()
        ))),
        None => m.rescaled(*window),
    }
}

/// Signed amount by which `p` crosses `f` on the grid (positive = violation).
pub fn bound_violation(basis: Basis, coefficients: &[f64], direction: Direction, grid: &ConstraintGrid) -> f64 {
    grid.points()
        .iter()
        .map(|pt| {
            let p = basis.polynomial(coefficients, pt.x);
            match direction {
                Direction::Lower => p - pt.f,
                Direction::Upper => pt.f - p,
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best degree-`degree` minorant (lower) or majorant (upper) of the grid
/// values, evaluated against `m`.
pub fn optimal_bound(
    m: &MomentVector,
    grid: &ConstraintGrid,
    degree: usize,
    direction: Direction,
) -> Result<BoundResult> {
    optimal_bound_with(m, grid, degree, direction, &LpOptions::default(), None)
}

pub fn optimal_bound_with(
    m: &MomentVector,
    grid: &ConstraintGrid,
    degree: usize,
    direction: Direction,
    options: &LpOptions,
    start: Option<&[f64]>,
) -> Result<BoundResult> {
    let moments = aligned_moments(m, grid.window(), degree)?;
    let basis = moments.basis();
    let rows: Vec<Vec<f64>> = grid.points().iter().map(|p| basis.evaluate(p.x, degree)).collect();
    let rhs: Vec<f64> = grid.points().iter().map(|p| p.f).collect();
    let (sense, maximize) = match direction {
        Direction::Lower => (Sense::Le, true),
        Direction::Upper => (Sense::Ge, false),
    };
    let lp = LinearProgram::uniform(moments.values().to_vec(), rows, rhs, sense, maximize)?;
    let sol = solve_lp_with(&lp, options, start)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            return Err(Error::Unresolved {
                degree,
                points: grid.len(),
            })
        }
        LpStatus::Infeasible => {
            return Err(Error::Internal(format!(
                "one-sided {direction} program reported infeasible"
            )))
        }
    }
    let raw_value = dot(&sol.x, moments.values());
    let weight_mass = grid.weight_mass();
    let exact = grid.provenance() == GridProvenance::ExactSpectrum;
    let grid_violation = bound_violation(basis, &sol.x, direction, grid).max(0.0);
    let window = grid.window();
    Ok(BoundResult {
        direction,
        degree,
        basis,
        raw_value,
        value: raw_value.clamp(0.0, weight_mass),
        weight_mass,
        grid_violation,
        certified_margin: if exact { 0.0 } else { grid_violation },
        certified: exact,
        refinements: 0,
        grid: GridSummary::of(grid),
        lp_status: sol.status,
        iterations: sol.iterations,
        active_energies: sol
            .active_rows
            .iter()
            .map(|&j| window.unscale(grid.points()[j].x))
            .collect(),
        coefficients: sol.x,
    })
}

/// Checks `r` on successively refined grids of `spec`.
///
/// Each round measures the violation of the current polynomial on a grid
/// `factor` times finer than the one it was solved on. Once that margin is
/// within `tolerance` the result is certified; otherwise the bound is
/// re-solved on the finer grid, up to `max_retries` times. The returned
/// margin is always the last one measured.
pub fn certify(
    r: &BoundResult,
    m: &MomentVector,
    spec: &IndicatorSpec,
    options: &CertifyOptions,
) -> Result<BoundResult> {
    if r.grid.provenance == GridProvenance::ExactSpectrum {
        let mut out = r.clone();
        out.certified_margin = 0.0;
        out.certified = true;
        return Ok(out);
    }
    let mut grid = discretize(spec, &PointCounts::PerRegion(r.grid.region_counts.clone()), r.grid.window)?;
    if grid.len() != r.grid.points {
        return Err(Error::input("bound result does not come from this indicator"));
    }
    let mut current = r.clone();
    let mut rounds = r.refinements;
    for attempt in 0..=options.max_retries {
        let fine = refine(&grid, options.factor)?;
        let margin = bound_violation(current.basis, &current.coefficients, current.direction, &fine).max(0.0);
        current.certified_margin = margin;
        if margin <= options.tolerance {
            current.certified = true;
            return Ok(current);
        }
        if attempt == options.max_retries {
            break;
        }
        // p shifted by the margin satisfies every point of the finer grid.
        let mut start = current.coefficients.clone();
        start[0] += match current.direction {
            Direction::Lower => -margin,
            Direction::Upper => margin,
        };
        grid = fine;
        rounds += 1;
        current = optimal_bound_with(
            m,
            &grid,
            current.degree,
            current.direction,
            &LpOptions::default(),
            Some(&start),
        )?;
        current.refinements = rounds;
    }
    current.certified = false;
    log::warn!(
        "{} bound at degree {} still violates the indicator by {:e} after {} refinements",
        current.direction,
        current.degree,
        current.certified_margin,
        current.refinements
    );
    Ok(current)
}

/// Eckart lower bound `(E1 - ⟨H⟩)/(E1 - E0)`; negative when `⟨H⟩ > E1`.
pub fn eckart_lower(mean: f64, e0: f64, e1: f64) -> Result<f64> {
    if !(e0 < e1) {
        return Err(Error::input(format!("Eckart bound needs E0 < E1, got {e0} and {e1}")));
    }
    Ok((e1 - mean) / (e1 - e0))
}

/// Two-moment literature comparator `(⟨H⟩ - E0)² / (2 (⟨H²⟩ - ⟨H⟩²))`,
/// evaluated verbatim. It can fall below the true overlap, so it is only
/// ever reported, never relied on as a bound.
pub fn mora_upper(mean: f64, second: f64, e0: f64) -> Result<f64> {
    let variance = second - mean * mean;
    if !(variance > VARIANCE_FLOOR) {
        return Err(Error::ZeroVariance { variance });
    }
    Ok((mean - e0).powi(2) / (2.0 * variance))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderBounds {
    pub lower: f64,
    pub upper: f64,
    /// `E1 - ⟨H⟩`; negative selects the zero polynomial for the lower bound.
    pub s: f64,
}

impl FirstOrderBounds {
    pub fn trivial_lower(&self) -> bool {
        self.s < 0.0
    }
}

/// Closed-form degree-1 ground-state bounds.
pub fn first_order_bounds(mean: f64, e0: f64, e1: f64, ed: f64) -> Result<FirstOrderBounds> {
    if !(e0 < e1 && e1 <= ed) {
        return Err(Error::input(format!(
            "first-order bounds need E0 < E1 <= ED, got {e0}, {e1}, {ed}"
        )));
    }
    let s = e1 - mean;
    let lower = if s < 0.0 { 0.0 } else { eckart_lower(mean, e0, e1)? };
    Ok(FirstOrderBounds {
        lower,
        upper: (ed - mean) / (ed - e0),
        s,
    })
}

/// Analytic ground-state errors of the first-order polynomials for a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderErrors {
    /// Error of the line through `(E0, 1)` and `(ED, 0)`.
    pub upper: f64,
    /// Error of the zero polynomial, `P0`.
    pub lower_trivial: f64,
    /// Error of the Eckart line through `(E0, 1)` and `(E1, 0)`.
    pub lower_eckart: f64,
}

impl FirstOrderErrors {
    /// Error of the lower polynomial actually selected by the sign of `s`.
    pub fn lower(&self, s: f64) -> f64 {
        if s < 0.0 {
            self.lower_trivial
        } else {
            self.lower_eckart
        }
    }
}

pub fn first_order_errors(model: &SpectralModel) -> Result<FirstOrderErrors> {
    if model.len() < 2 {
        return Err(Error::input("first-order errors need at least two levels"));
    }
    let e = model.eigenvalues();
    let p = model.overlaps();
    let (e0, e1, ed) = (e[0], e[1], e[e.len() - 1]);
    let mut upper = CompensatedSum::new();
    let mut eckart = CompensatedSum::new();
    for k in 1..e.len() {
        upper.add(p[k] * (ed - e[k]) / (ed - e0));
        if k >= 2 {
            eckart.add(p[k] * (e[k] - e1) / (e1 - e0));
        }
    }
    Ok(FirstOrderErrors {
        upper: upper.value(),
        lower_trivial: p[0],
        lower_eckart: eckart.value(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    /// `|Σ_k P_k (f(E_k) - p(E_k))|`.
    pub delta: f64,
    /// The same sum without the absolute value.
    pub signed: f64,
    /// `P_k (f(E_k) - p(E_k))` per level.
    pub terms: Vec<f64>,
}

/// Exact approximation error of `p` against `f` on a known spectrum.
pub fn error_decomposition(
    model: &SpectralModel,
    coefficients: &[f64],
    basis: Basis,
    window: &ScalingWindow,
    spec: &IndicatorSpec,
) -> Result<ErrorDecomposition> {
    if !model.is_complete() {
        return Err(Error::input("error decomposition needs a complete spectral model"));
    }
    let mut terms = Vec::with_capacity(model.len());
    let mut sum = CompensatedSum::new();
    for (e, p) in model.eigenvalues().iter().zip(model.overlaps()) {
        let f = spec
            .value_at(*e)
            .ok_or_else(|| Error::input(format!("eigenvalue {e} lies outside the indicator support")))?;
        let t = p * (f - basis.polynomial(coefficients, window.rescale(*e)));
        sum.add(t);
        terms.push(t);
    }
    let signed = sum.value();
    Ok(ErrorDecomposition {
        delta: signed.abs(),
        signed,
        terms,
    })
}

/// Where a sweep gets its constraints from.
#[derive(Clone, Copy, Debug)]
pub struct SweepInput<'a> {
    pub grid: &'a ConstraintGrid,
    /// Needed for certification of interval grids.
    pub spec: Option<&'a IndicatorSpec>,
    pub certify: Option<&'a CertifyOptions>,
}

/// One result per `(degree, direction)` cell, ordered by degree then
/// direction. Cells run in parallel on the current rayon pool.
pub fn degree_sweep(
    m: &MomentVector,
    input: SweepInput<'_>,
    degrees: &[usize],
    directions: &[Direction],
) -> Result<Vec<BoundResult>> {
    if degrees.is_empty() || directions.is_empty() {
        return Err(Error::input("a sweep needs at least one degree and one direction"));
    }
    if let Some(&d) = degrees.iter().max() {
        if d > m.degree() {
            return Err(Error::input(format!(
                "sweep degree {d} exceeds available moment degree {}",
                m.degree()
            )));
        }
    }
    let needs_spec = input.certify.is_some() && input.grid.provenance() == GridProvenance::DiscretizedIntervals;
    if needs_spec && input.spec.is_none() {
        return Err(Error::input("certifying an interval grid needs its indicator"));
    }
    let mut cells: Vec<(usize, Direction)> = degrees
        .iter()
        .flat_map(|&d| directions.iter().map(move |&dir| (d, dir)))
        .collect();
    cells.sort();
    cells
        .par_iter()
        .map(|&(degree, direction)| {
            let r = optimal_bound(m, input.grid, degree, direction)?;
            match (input.certify, input.spec) {
                (Some(opts), Some(spec)) => certify(&r, m, spec, opts),
                (Some(_), None) => certify_exact(r),
                _ => Ok(r),
            }
        })
        .collect()
}

fn certify_exact(mut r: BoundResult) -> Result<BoundResult> {
    r.certified_margin = 0.0;
    r.certified = r.grid.provenance == GridProvenance::ExactSpectrum;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::{build_exact_indicator, build_gap_indicator};
    use crate::moments::moments_from_spectrum;
    use crate::spectrum::exact_overlap;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s3() -> SpectralModel {
        SpectralModel::new(vec![-1.0, 0.0, 1.0], vec![0.5, 0.3, 0.2], true).unwrap()
    }

    fn exact_setup(
        model: &SpectralModel,
        targets: &[usize],
        basis: Basis,
        degree: usize,
    ) -> (MomentVector, IndicatorSpec, ConstraintGrid) {
        let window = ScalingWindow::for_spectrum(model).unwrap();
        let m = moments_from_spectrum(model, degree, basis, Some(window)).unwrap();
        let spec = build_exact_indicator(model, targets, None).unwrap();
        let grid = discretize(&spec, &PointCounts::default(), window).unwrap();
        (m, spec, grid)
    }

    #[test]
    fn s3_first_and_second_order() {
        for basis in [Basis::Monomial, Basis::Chebyshev] {
            let (m, _, grid) = exact_setup(&s3(), &[0], basis, 2);
            let lo = optimal_bound(&m, &grid, 1, Direction::Lower).unwrap();
            let hi = optimal_bound(&m, &grid, 1, Direction::Upper).unwrap();
            assert_abs_diff_eq!(lo.raw_value, 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(hi.raw_value, 0.65, epsilon = 1e-12);
            assert_eq!(lo.active_energies, vec![-1.0, 0.0]);
            for dir in Direction::BOTH {
                let r = optimal_bound(&m, &grid, 2, dir).unwrap();
                assert_abs_diff_eq!(r.raw_value, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn raw_monomial_moments_are_rescaled_onto_the_grid() {
        let model = s3();
        let raw = moments_from_spectrum(&model, 2, Basis::Monomial, None).unwrap();
        let (_, _, grid) = exact_setup(&model, &[0], Basis::Monomial, 2);
        let lo = optimal_bound(&raw, &grid, 1, Direction::Lower).unwrap();
        assert_abs_diff_eq!(lo.raw_value, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_windows_rejected() {
        let model = s3();
        let m = moments_from_spectrum(&model, 2, Basis::Chebyshev, Some(ScalingWindow::new(-3.0, 3.0).unwrap())).unwrap();
        let (_, _, grid) = exact_setup(&model, &[0], Basis::Chebyshev, 2);
        let err = optimal_bound(&m, &grid, 1, Direction::Lower).unwrap_err();
        assert!(err.is_input_error());
        assert!(optimal_bound(&m, &grid, 5, Direction::Lower).unwrap_err().is_input_error());
    }

    #[test]
    fn constant_indicator_is_recovered() {
        let (m, _, grid) = exact_setup(&s3(), &[0, 1, 2], Basis::Chebyshev, 2);
        for degree in 0..=2 {
            for dir in Direction::BOTH {
                let r = optimal_bound(&m, &grid, degree, dir).unwrap();
                assert_abs_diff_eq!(r.raw_value, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn overfitting_a_sparse_grid_is_an_error() {
        // Moments of a measure the grid does not support leave the program
        // unbounded once the degree reaches the point count.
        let (m, _, _) = exact_setup(&s3(), &[0], Basis::Chebyshev, 4);
        let other = SpectralModel::new(vec![-1.0, 0.5, 1.0], vec![0.5, 0.3, 0.2], true).unwrap();
        let (_, _, grid) = exact_setup(&other, &[0], Basis::Chebyshev, 4);
        assert!(optimal_bound(&m, &grid, 2, Direction::Lower).is_ok());
        let err = optimal_bound(&m, &grid, 4, Direction::Lower).unwrap_err();
        assert!(matches!(err, Error::Unresolved { degree: 4, points: 3 }));
    }

    #[test]
    fn classic_bounds() {
        assert_abs_diff_eq!(eckart_lower(0.0, 0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(eckart_lower(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(eckart_lower(0.25, 0.0, 1.0).unwrap(), 0.75);
        assert!(eckart_lower(0.0, 1.0, 1.0).is_err());

        assert_abs_diff_eq!(mora_upper(0.5, 0.5, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mora_upper(-0.3, 0.7, -1.0).unwrap(), 0.49 / 1.22, epsilon = 1e-15);
        assert!(matches!(mora_upper(-1.0, 1.0, -1.0), Err(Error::ZeroVariance { .. })));

        let f = first_order_bounds(-0.3, -1.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(f.upper, 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(f.lower, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(f.s, 0.3, epsilon = 1e-15);
        let f = first_order_bounds(1.0, -1.0, 0.0, 1.0).unwrap();
        assert_eq!(f.upper, 0.0);
        let f = first_order_bounds(-1.0, -1.0, 0.0, 1.0).unwrap();
        assert_eq!((f.lower, f.upper), (1.0, 1.0));
        let f = first_order_bounds(0.2, -1.0, 0.0, 1.0).unwrap();
        assert!(f.trivial_lower());
        assert_eq!(f.lower, 0.0);
        assert!(first_order_bounds(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn error_decomposition_examples() {
        let model = s3();
        let window = ScalingWindow::for_spectrum(&model).unwrap();
        let spec = build_exact_indicator(&model, &[0], None).unwrap();
        let zero = error_decomposition(&model, &[0.0], Basis::Chebyshev, &window, &spec).unwrap();
        assert_abs_diff_eq!(zero.delta, 0.5, epsilon = 1e-15);

        // Upper line through (E0, 1), (ED, 0) in rescaled coordinates: (1 - x)/2.
        let line = error_decomposition(&model, &[0.5, -0.5], Basis::Chebyshev, &window, &spec).unwrap();
        assert_abs_diff_eq!(line.delta, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(first_order_errors(&model).unwrap().upper, 0.15, epsilon = 1e-15);

        // Lagrange indicator of E0 on {-1, 0, 1}: x(x - 1)/2.
        let lagrange = error_decomposition(&model, &[0.0, -0.5, 0.5], Basis::Monomial, &window, &spec).unwrap();
        assert_abs_diff_eq!(lagrange.delta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn certify_interval_grid_degree_one() {
        let model = s3();
        let window = ScalingWindow::new(-1.5, 1.5).unwrap();
        let m = moments_from_spectrum(&model, 3, Basis::Chebyshev, Some(window)).unwrap();
        let spec = build_gap_indicator(model.eigenvalues(), 0.3, 0.3, &[0], None).unwrap();
        let grid = discretize(&spec, &PointCounts::default(), window).unwrap();
        let r = optimal_bound(&m, &grid, 1, Direction::Lower).unwrap();
        assert!(!r.certified);
        let c = certify(&r, &m, &spec, &CertifyOptions::default()).unwrap();
        assert!(c.certified);
        assert!(c.certified_margin <= 1e-9);
        assert_eq!(c.refinements, 0);
        assert!(c.raw_value <= 0.5 + 1e-12);
    }

    #[test]
    fn sweep_is_ordered_and_repeatable() {
        let (m, spec, grid) = exact_setup(&s3(), &[0], Basis::Chebyshev, 2);
        let opts = CertifyOptions::default();
        let input = SweepInput {
            grid: &grid,
            spec: Some(&spec),
            certify: Some(&opts),
        };
        let results = degree_sweep(&m, input, &[2, 1, 1], &[Direction::Upper, Direction::Lower]).unwrap();
        let cells: Vec<(usize, Direction)> = results.iter().map(|r| (r.degree, r.direction)).collect();
        use Direction::*;
        assert_eq!(cells, vec![(1, Lower), (1, Lower), (1, Upper), (1, Upper), (2, Lower), (2, Upper)]);
        let values: Vec<f64> = results.iter().map(|r| r.raw_value).collect();
        assert_abs_diff_eq!(values[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(values[2], 0.65, epsilon = 1e-12);
        assert_abs_diff_eq!(values[4], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(values[5], 0.5, epsilon = 1e-12);
        assert_eq!(results[0], results[1]);
        assert!(results.iter().all(|r| r.certified && r.certified_margin == 0.0));
    }

    #[test]
    fn interior_target_converges_at_full_degree() {
        // Edges near the vertex need long coefficient steps; they must still be taken.
        let n = 24;
        let e: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect();
        let w: Vec<f64> = (0..n).map(|k| 1.0 + (k % 3) as f64).collect();
        let total: f64 = w.iter().sum();
        let model = SpectralModel::new(e, w.iter().map(|x| x / total).collect(), true).unwrap();
        let (m, _, grid) = exact_setup(&model, &[11], Basis::Chebyshev, n - 1);
        let exact = exact_overlap(&model, &[11], None).unwrap();
        let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
        for degree in n - 4..n {
            let lo = optimal_bound(&m, &grid, degree, Direction::Lower).unwrap().raw_value;
            let hi = optimal_bound(&m, &grid, degree, Direction::Upper).unwrap().raw_value;
            assert!(lo >= prev.0 - 1e-9 && hi <= prev.1 + 1e-9, "degree {degree}: {lo} {hi}");
            prev = (lo, hi);
        }
        assert_abs_diff_eq!(prev.0, exact, epsilon = 1e-6);
        assert_abs_diff_eq!(prev.1, exact, epsilon = 1e-6);
    }

    fn random_model() -> impl Strategy<Value = SpectralModel> {
        (3usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..1.0, n),
                proptest::collection::vec(0.01f64..1.0, n),
            )
                .prop_map(|(gaps, weights)| {
                    let mut e = Vec::with_capacity(gaps.len());
                    let mut acc = -1.0;
                    for g in gaps {
                        e.push(acc);
                        acc += g;
                    }
                    let total: f64 = weights.iter().sum();
                    let p = weights.iter().map(|w| w / total).collect();
                    SpectralModel::new(e, p, true).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bounds_bracket_and_tighten(model in random_model(), target in 0usize..3) {
            let target = target.min(model.len() - 1);
            let degree = (model.len() - 1).min(6);
            let (m, _, grid) = exact_setup(&model, &[target], Basis::Chebyshev, degree);
            let exact = exact_overlap(&model, &[target], None).unwrap();
            let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
            for n in 1..=degree {
                let lo = optimal_bound(&m, &grid, n, Direction::Lower).unwrap().raw_value;
                let hi = optimal_bound(&m, &grid, n, Direction::Upper).unwrap().raw_value;
                prop_assert!(lo <= exact + 1e-9 && exact <= hi + 1e-9);
                prop_assert!(lo >= prev.0 - 1e-9 && hi <= prev.1 + 1e-9);
                prev = (lo, hi);
            }
        }

        #[test]
        fn bases_agree(model in random_model()) {
            let degree = (model.len() - 1).min(5);
            let (mc, _, grid) = exact_setup(&model, &[0], Basis::Chebyshev, degree);
            let mm = mc.to_basis(Basis::Monomial).unwrap();
            for n in 1..=degree {
                for dir in Direction::BOTH {
                    let a = optimal_bound(&mc, &grid, n, dir).unwrap().raw_value;
                    let b = optimal_bound(&mm, &grid, n, dir).unwrap().raw_value;
                    prop_assert!((a - b).abs() <= 1e-6);
                }
            }
        }

        #[test]
        fn first_order_closed_forms(model in random_model()) {
            let (m, spec, grid) = exact_setup(&model, &[0], Basis::Chebyshev, 1);
            let e = model.eigenvalues();
            let mean = model.mean_energy();
            let f = first_order_bounds(mean, e[0], e[1], e[e.len() - 1]).unwrap();
            let lo = optimal_bound(&m, &grid, 1, Direction::Lower).unwrap();
            let hi = optimal_bound(&m, &grid, 1, Direction::Upper).unwrap();
            prop_assert!((lo.raw_value - f.lower).abs() <= 1e-9);
            prop_assert!((hi.raw_value - f.upper).abs() <= 1e-9);

            let errs = first_order_errors(&model).unwrap();
            let window = *grid.window();
            let dl = error_decomposition(&model, &lo.coefficients, lo.basis, &window, &spec).unwrap();
            let du = error_decomposition(&model, &hi.coefficients, hi.basis, &window, &spec).unwrap();
            let exact = model.overlaps()[0];
            prop_assert!((du.delta - errs.upper).abs() <= 1e-10);
            prop_assert!((dl.delta - errs.lower(f.s)).abs() <= 1e-10 || lo.raw_value.abs() <= 1e-12);
            prop_assert!((dl.delta - (lo.raw_value - exact).abs()).abs() <= 1e-9);
            prop_assert!((du.delta - (hi.raw_value - exact).abs()).abs() <= 1e-9);
        }
    }
}
