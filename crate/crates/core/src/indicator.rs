//! Target functions and their constraint grids.
//!
//! An [`IndicatorSpec`] states the function `f` a bound polynomial must stay
//! below (lower bounds) or above (upper bounds): either exactly on known
//! eigenvalues, or on energy windows known to enclose them. [`discretize`]
//! turns a spec into a finite [`ConstraintGrid`] in rescaled coordinates, which
//! is what the linear program consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::ScalingWindow;
use crate::spectrum::SpectralModel;

/// Point counts used for target windows and for complementary regions.
pub const DEFAULT_TARGET_COUNT: usize = 20;
pub const DEFAULT_COMPLEMENT_COUNT: usize = 200;
/// Uniform point count for threshold indicators.
pub const DEFAULT_THRESHOLD_POINTS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorMode {
    ExactPoints,
    Intervals,
}

/// Support `[lo, hi]` (or `[lo, hi)` when `hi_open`) carrying value `value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hi_open: bool,
}

impl Region {
    pub fn point(energy: f64, value: f64) -> Self {
        Self {
            lo: energy,
            hi: energy,
            value,
            hi_open: false,
        }
    }

    pub fn closed(lo: f64, hi: f64, value: f64) -> Self {
        Self {
            lo,
            hi,
            value,
            hi_open: false,
        }
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy >= self.lo && (energy < self.hi || (!self.hi_open && energy == self.hi))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_target(&self) -> bool {
        self.value > 0.0
    }
}

/// Record of windows fused because they overlapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Input window indices that now share one region.
    pub windows: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub mode: IndicatorMode,
    pub regions: Vec<Region>,
    pub outer: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merges: Vec<MergeReport>,
}

impl IndicatorSpec {
    pub fn new(mode: IndicatorMode, regions: Vec<Region>, outer: [f64; 2]) -> Result<Self> {
        let spec = Self {
            mode,
            regions,
            outer,
            merges: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::input("indicator needs at least one region"));
        }
        for (k, r) in self.regions.iter().enumerate() {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.value.is_finite()) {
                return Err(Error::input(format!("region {k} has non-finite entries")));
            }
            if r.value < 0.0 {
                return Err(Error::input(format!("region {k} has a negative value")));
            }
            if r.lo > r.hi || (r.hi_open && r.lo == r.hi) {
                return Err(Error::input(format!("region {k} is empty")));
            }
            if self.mode == IndicatorMode::ExactPoints && !r.is_point() {
                return Err(Error::input(format!(
                    "exact-points indicator region {k} must be a single energy"
                )));
            }
            if r.lo < self.outer[0] || r.hi > self.outer[1] {
                return Err(Error::input(format!(
                    "region {k} [{}, {}] lies outside the outer window [{}, {}]",
                    r.lo, r.hi, self.outer[0], self.outer[1]
                )));
            }
        }
        for (k, w) in self.regions.windows(2).enumerate() {
            let disjoint = w[0].hi < w[1].lo || (w[0].hi_open && w[0].hi == w[1].lo);
            if !disjoint {
                return Err(Error::input(format!(
                    "regions {k} and {} overlap or are out of order",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// `f(E)` on the support, `None` outside it.
    pub fn value_at(&self, energy: f64) -> Option<f64> {
        self.regions
            .iter()
            .find(|r| r.contains(energy))
            .map(|r| r.value)
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.value_at(energy).is_some()
    }

    /// Largest attainable `Σ v_i P_i`: the sum of distinct region values.
    pub fn weight_mass(&self) -> f64 {
        self.regions.iter().map(|r| r.value).sum()
    }
}

fn resolve_weights(targets: &[usize], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; targets.len()]),
        Some(w) if w.len() == targets.len() => {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::input("weights must be finite and nonnegative"));
            }
            Ok(w.to_vec())
        }
        Some(w) => Err(Error::DimensionMismatch {
            expected: targets.len(),
            found: w.len(),
        }),
    }
}

/// Indicator defined on the spectrum points: `v_i` on targets, 0 elsewhere.
pub fn build_exact_indicator(
    model: &SpectralModel,
    targets: &[usize],
    weights: Option<&[f64]>,
) -> Result<IndicatorSpec> {
    if model.is_empty() {
        return Err(Error::input("empty spectrum"));
    }
    let weights = resolve_weights(targets, weights)?;
    let mut values = vec![0.0; model.len()];
    for (&i, v) in targets.iter().zip(&weights) {
        if i >= model.len() {
            return Err(Error::input(format!(
                "target index {i} out of range for {} levels",
                model.len()
            )));
        }
        values[i] = *v;
    }
    let regions = model
        .eigenvalues()
        .iter()
        .zip(values)
        .map(|(e, v)| Region::point(*e, v))
        .collect();
    let (lo, hi) = model.range();
    IndicatorSpec::new(IndicatorMode::ExactPoints, regions, [lo, hi])
}

/// Eigenvalue windows `[E_i - γ⁻ g_{i-1}, E_i + γ⁺ g_i]` with `g_i = E_{i+1} - E_i`.
///
/// The missing end gaps are taken from their neighbours: `g_{-1} := g_0` and
/// `g_D := g_{D-1}`.
pub fn gap_windows(eigenvalues: &[f64], gamma_lo: f64, gamma_hi: f64) -> Result<Vec<(f64, f64)>> {
    if eigenvalues.len() < 2 {
        return Err(Error::input("gap windows need at least two levels"));
    }
    if !(gamma_lo > 0.0 && gamma_hi > 0.0 && gamma_lo.is_finite() && gamma_hi.is_finite()) {
        return Err(Error::input("window scale factors must be positive"));
    }
    let gaps: Vec<f64> = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
    let d = gaps.len();
    Ok(eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let below = if i == 0 { gaps[0] } else { gaps[i - 1] };
            let above = if i == d { gaps[d - 1] } else { gaps[i] };
            (e - gamma_lo * below, e + gamma_hi * above)
        })
        .collect())
}

/// Indicator over energy windows.
///
/// `windows[k]` encloses level (or level group) `k`, sorted by energy. Each
/// target window carries its weight; each maximal run of consecutive
/// non-target windows becomes one zero-valued span from its first lower edge
/// to its last upper edge, and the first and last spans are stretched to
/// `outer`. Overlapping windows cannot be told apart, so they are fused: a
/// fused window containing any target becomes one target region with the
/// largest member weight, and the fusion is listed in `merges`.
pub fn build_interval_indicator(
    windows: &[(f64, f64)],
    targets: &[usize],
    weights: Option<&[f64]>,
    outer: (f64, f64),
) -> Result<IndicatorSpec> {
    if windows.is_empty() {
        return Err(Error::input("no level windows given"));
    }
    let weights = resolve_weights(targets, weights)?;
    let mut value = vec![None::<f64>; windows.len()];
    for (&i, v) in targets.iter().zip(&weights) {
        if i >= windows.len() {
            return Err(Error::input(format!(
                "target index {i} out of range for {} windows",
                windows.len()
            )));
        }
        value[i] = Some(*v);
    }
    for (k, (lo, hi)) in windows.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::input(format!("window {k} is not a valid interval")));
        }
        if *lo < outer.0 || *hi > outer.1 {
            return Err(Error::input(format!("window {k} is not inside the outer window")));
        }
    }

    struct Item {
        lo: f64,
        hi: f64,
        value: Option<f64>,
        members: Vec<usize>,
    }
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by(|&a, &b| windows[a].0.total_cmp(&windows[b].0));

    let mut items: Vec<Item> = Vec::new();
    let mut merges = Vec::new();
    for k in order {
        let (lo, hi) = windows[k];
        if let Some(last) = items.last_mut() {
            if lo <= last.hi {
                last.hi = last.hi.max(hi);
                last.value = match (last.value, value[k]) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                last.members.push(k);
                continue;
            }
        }
        items.push(Item {
            lo,
            hi,
            value: value[k],
            members: vec![k],
        });
    }
    for item in &items {
        if item.members.len() > 1 {
            if let Some(v) = item.value {
                merges.push(MergeReport {
                    windows: item.members.clone(),
                    lo: item.lo,
                    hi: item.hi,
                    value: v,
                });
            }
        }
    }

    let mut regions: Vec<Region> = Vec::new();
    let mut zero_run: Option<(f64, f64)> = None;
    for item in &items {
        match item.value {
            None => {
                zero_run = Some(match zero_run {
                    Some((lo, _)) => (lo, item.hi),
                    None => (item.lo, item.hi),
                });
            }
            Some(v) => {
                if let Some((lo, hi)) = zero_run.take() {
                    regions.push(Region::closed(lo, hi, 0.0));
                }
                regions.push(Region::closed(item.lo, item.hi, v));
            }
        }
    }
    if let Some((lo, hi)) = zero_run {
        regions.push(Region::closed(lo, hi, 0.0));
    }
    if let Some(first) = regions.first_mut() {
        if !first.is_target() {
            first.lo = outer.0;
        }
    }
    if let Some(last) = regions.last_mut() {
        if !last.is_target() {
            last.hi = outer.1;
        }
    }
    let mut spec = IndicatorSpec::new(IndicatorMode::Intervals, regions, [outer.0, outer.1])?;
    spec.merges = merges;
    Ok(spec)
}

/// Windows from eigenvalue estimates plus the indicator built on them.
pub fn build_gap_indicator(
    eigenvalues: &[f64],
    gamma_lo: f64,
    gamma_hi: f64,
    targets: &[usize],
    weights: Option<&[f64]>,
) -> Result<IndicatorSpec> {
    let windows = gap_windows(eigenvalues, gamma_lo, gamma_hi)?;
    let outer = (windows[0].0, windows.last().unwrap().1);
    build_interval_indicator(&windows, targets, weights, outer)
}

/// `value` on `[outer.lo, cutoff)`, 0 on `[cutoff, outer.hi]`.
pub fn build_threshold_indicator(cutoff: f64, outer: (f64, f64), value: f64) -> Result<IndicatorSpec> {
    if !(outer.0 < cutoff && cutoff < outer.1) {
        return Err(Error::input(format!(
            "cutoff {cutoff} must lie strictly inside [{}, {}]",
            outer.0, outer.1
        )));
    }
    let below = Region {
        lo: outer.0,
        hi: cutoff,
        value,
        hi_open: true,
    };
    let above = Region::closed(cutoff, outer.1, 0.0);
    IndicatorSpec::new(IndicatorMode::Intervals, vec![below, above], [outer.0, outer.1])
}

/// How many grid points each region receives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCounts {
    /// One count per region, in region order.
    PerRegion(Vec<usize>),
    /// `target` points on every region with positive value, `complement` elsewhere.
    ByRole { target: usize, complement: usize },
    /// About `total` points spread evenly over the whole support.
    Uniform { total: usize },
}

impl Default for PointCounts {
    fn default() -> Self {
        PointCounts::ByRole {
            target: DEFAULT_TARGET_COUNT,
            complement: DEFAULT_COMPLEMENT_COUNT,
        }
    }
}

impl PointCounts {
    pub fn resolve(&self, spec: &IndicatorSpec) -> Result<Vec<usize>> {
        let counts: Vec<usize> = match self {
            PointCounts::PerRegion(c) => {
                if c.len() != spec.regions.len() {
                    return Err(Error::DimensionMismatch {
                        expected: spec.regions.len(),
                        found: c.len(),
                    });
                }
                c.clone()
            }
            PointCounts::ByRole { target, complement } => spec
                .regions
                .iter()
                .map(|r| match (r.is_point(), r.is_target()) {
                    (true, _) => 1,
                    (false, true) => *target,
                    (false, false) => *complement,
                })
                .collect(),
            PointCounts::Uniform { total } => {
                if *total < 2 {
                    return Err(Error::input("uniform point count must be ≥ 2"));
                }
                let length: f64 = spec.regions.iter().map(|r| r.hi - r.lo).sum();
                let intervals = (*total - 1) as f64;
                spec.regions
                    .iter()
                    .map(|r| {
                        let share = if length > 0.0 {
                            (intervals * (r.hi - r.lo) / length).round() as usize
                        } else {
                            0
                        };
                        if r.hi_open {
                            share.max(1)
                        } else {
                            share.max(1) + 1
                        }
                    })
                    .collect()
            }
        };
        for (k, (r, c)) in spec.regions.iter().zip(&counts).enumerate() {
            if !r.is_point() && *c < 2 && !(r.hi_open && *c >= 1) {
                return Err(Error::input(format!(
                    "region {k} needs at least 2 points, got {c}"
                )));
            }
        }
        Ok(counts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridProvenance {
    ExactSpectrum,
    DiscretizedIntervals,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Rescaled abscissa.
    pub x: f64,
    /// Target value.
    pub f: f64,
    pub region: usize,
}

/// Finite constraint set in rescaled coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGrid {
    points: Vec<GridPoint>,
    provenance: GridProvenance,
    regions: Vec<Region>,
    counts: Vec<usize>,
    window: ScalingWindow,
}

impl ConstraintGrid {
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> GridProvenance {
        self.provenance
    }

    /// Raw-energy regions the grid was cut from.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn window(&self) -> &ScalingWindow {
        &self.window
    }

    /// Sum of distinct region values (upper limit for the bound).
    pub fn weight_mass(&self) -> f64 {
        self.regions.iter().map(|r| r.value).sum()
    }

    /// Raw energy of each grid point.
    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| self.window.unscale(p.x))
    }
}

fn region_energies(region: &Region, count: usize) -> Vec<f64> {
    if region.is_point() {
        return vec![region.lo];
    }
    let width = region.hi - region.lo;
    if region.hi_open {
        (0..count)
            .map(|k| region.lo + width * k as f64 / count as f64)
            .collect()
    } else {
        let last = count - 1;
        (0..count)
            .map(|k| {
                if k == last {
                    region.hi
                } else {
                    region.lo + width * k as f64 / last as f64
                }
            })
            .collect()
    }
}

fn build_grid(
    regions: Vec<Region>,
    counts: Vec<usize>,
    provenance: GridProvenance,
    window: ScalingWindow,
) -> Result<ConstraintGrid> {
    let mut points: Vec<GridPoint> = Vec::new();
    for (k, (region, &count)) in regions.iter().zip(&counts).enumerate() {
        for e in region_energies(region, count) {
            let x = window.rescale(e);
            if let Some(prev) = points.last() {
                if x <= prev.x {
                    return Err(Error::DuplicateAbscissa {
                        first: prev.region,
                        second: k,
                        abscissa: x,
                    });
                }
            }
            points.push(GridPoint {
                x,
                f: region.value,
                region: k,
            });
        }
    }
    Ok(ConstraintGrid {
        points,
        provenance,
        regions,
        counts,
        window,
    })
}

/// Uniform discretization of every region (endpoints included; a half-open
/// region omits its open end). Exact-points specs pass straight through.
pub fn discretize(
    spec: &IndicatorSpec,
    counts: &PointCounts,
    window: ScalingWindow,
) -> Result<ConstraintGrid> {
    spec.validate()?;
    match spec.mode {
        IndicatorMode::ExactPoints => build_grid(
            spec.regions.clone(),
            vec![1; spec.regions.len()],
            GridProvenance::ExactSpectrum,
            window,
        ),
        IndicatorMode::Intervals => build_grid(
            spec.regions.clone(),
            counts.resolve(spec)?,
            GridProvenance::DiscretizedIntervals,
            window,
        ),
    }
}

/// Splits every grid interval into `factor` equal pieces, so the original
/// points stay in the refined grid. Exact-spectrum grids are returned as is.
pub fn refine(grid: &ConstraintGrid, factor: usize) -> Result<ConstraintGrid> {
    if factor < 2 {
        return Err(Error::input("refinement factor must be ≥ 2"));
    }
    if grid.provenance == GridProvenance::ExactSpectrum {
        log::warn!("refine called on an exact-spectrum grid; nothing to refine");
        return Ok(grid.clone());
    }
    let counts = grid
        .regions
        .iter()
        .zip(&grid.counts)
        .map(|(r, &c)| {
            if r.is_point() {
                1
            } else if r.hi_open {
                c * factor
            } else {
                (c - 1) * factor + 1
            }
        })
        .collect();
    build_grid(grid.regions.clone(), counts, grid.provenance, grid.window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s3() -> SpectralModel {
        SpectralModel::new(vec![-1.0, 0.0, 1.0], vec![0.5, 0.3, 0.2], true).unwrap()
    }

    fn unit_window() -> ScalingWindow {
        ScalingWindow::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn exact_indicator_examples() {
        let single = build_exact_indicator(&s3(), &[0], None).unwrap();
        let pts: Vec<(f64, f64)> = single.regions.iter().map(|r| (r.lo, r.value)).collect();
        assert_eq!(pts, vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 0.0)]);

        let multi = build_exact_indicator(&s3(), &[0, 1], Some(&[1.0, 1.0])).unwrap();
        let values: Vec<f64> = multi.regions.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![1.0, 1.0, 0.0]);

        let all = build_exact_indicator(&s3(), &[0, 1, 2], None).unwrap();
        assert!(all.regions.iter().all(|r| r.value == 1.0));
        assert!(build_exact_indicator(&s3(), &[3], None).is_err());
    }

    #[test]
    fn ground_state_interval_indicator() {
        let spec =
            build_interval_indicator(&[(-1.05, -0.95), (-0.5, 1.1)], &[0], None, (-1.05, 1.1))
                .unwrap();
        assert_eq!(
            spec.regions,
            vec![Region::closed(-1.05, -0.95, 1.0), Region::closed(-0.5, 1.1, 0.0)]
        );
        assert!(spec.merges.is_empty());
    }

    #[test]
    fn excited_state_interval_indicator_spans_complement() {
        let windows = gap_windows(&[-1.0, -0.5, 0.0, 0.5, 1.0], 0.3, 0.3).unwrap();
        let spec = build_interval_indicator(&windows, &[2], None, (-1.2, 1.2)).unwrap();
        assert_eq!(spec.regions.len(), 3);
        assert_eq!(spec.regions[0].lo, -1.2);
        assert_abs_diff_eq!(spec.regions[0].hi, -0.5 + 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.regions[1].lo, -0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.regions[1].hi, 0.15, epsilon = 1e-15);
        assert_eq!(spec.regions[2].hi, 1.2);
    }

    #[test]
    fn gap_windows_follow_scaled_gaps() {
        let e = [-1.0, -0.6, 0.0, 1.0];
        let w = gap_windows(&e, 0.3, 0.3).unwrap();
        // g = (0.4, 0.6, 1.0); g_{-1} := g_0 and g_D := g_{D-1}.
        let expected = [
            (-1.0 - 0.12, -1.0 + 0.12),
            (-0.6 - 0.12, -0.6 + 0.18),
            (0.0 - 0.18, 0.0 + 0.3),
            (1.0 - 0.3, 1.0 + 0.3),
        ];
        for (got, want) in w.iter().zip(expected) {
            assert_abs_diff_eq!(got.0, want.0, epsilon = 1e-14);
            assert_abs_diff_eq!(got.1, want.1, epsilon = 1e-14);
        }
    }

    #[test]
    fn overlapping_windows_merge_into_multi_state_target() {
        let windows = [(-1.1, -0.9), (-0.95, -0.8), (0.0, 1.0)];
        let spec = build_interval_indicator(&windows, &[0], None, (-1.1, 1.0)).unwrap();
        assert_eq!(spec.regions.len(), 2);
        assert_eq!(spec.regions[0], Region::closed(-1.1, -0.8, 1.0));
        assert_eq!(spec.merges.len(), 1);
        assert_eq!(spec.merges[0].windows, vec![0, 1]);
    }

    #[test]
    fn threshold_indicator() {
        let spec = build_threshold_indicator(-0.2, (-1.0, 1.0), 1.0).unwrap();
        assert_eq!(spec.value_at(-0.2000001), Some(1.0));
        assert_eq!(spec.value_at(-0.2), Some(0.0));
        let grid = discretize(&spec, &PointCounts::Uniform { total: 200 }, unit_window()).unwrap();
        assert!((198..=202).contains(&grid.len()));
        for (e, p) in grid.energies().zip(grid.points()) {
            assert_eq!(p.f, if e < -0.2 { 1.0 } else { 0.0 });
        }
        assert!(build_threshold_indicator(1.5, (-1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn discretize_counts() {
        let spec =
            build_interval_indicator(&[(-1.05, -0.95), (-0.5, 1.1)], &[0], None, (-1.05, 1.1))
                .unwrap();
        let w = ScalingWindow::new(-1.1, 1.1).unwrap();
        let grid = discretize(&spec, &PointCounts::default(), w).unwrap();
        assert_eq!(grid.len(), 220);
        assert_eq!(grid.region_counts(), &[20, 200]);
        let first = grid.energies().next().unwrap();
        let last = grid.energies().last().unwrap();
        assert_abs_diff_eq!(first, -1.05, epsilon = 1e-14);
        assert_abs_diff_eq!(last, 1.1, epsilon = 1e-14);

        let single = IndicatorSpec::new(
            IndicatorMode::Intervals,
            vec![Region::point(0.3, 1.0), Region::closed(0.5, 0.9, 0.0)],
            [0.3, 0.9],
        )
        .unwrap();
        let grid = discretize(&single, &PointCounts::default(), unit_window()).unwrap();
        assert_eq!(grid.region_counts()[0], 1);
        assert_eq!(grid.len(), 201);
    }

    #[test]
    fn exact_grid_passes_points_through() {
        let spec = build_exact_indicator(&s3(), &[0], None).unwrap();
        let w = ScalingWindow::new(-2.0, 2.0).unwrap();
        let grid = discretize(&spec, &PointCounts::PerRegion(vec![7, 7, 7]), w).unwrap();
        let xs: Vec<f64> = grid.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
        assert_eq!(grid.provenance(), GridProvenance::ExactSpectrum);
    }

    #[test]
    fn touching_closed_regions_collide() {
        let spec = IndicatorSpec {
            mode: IndicatorMode::Intervals,
            regions: vec![Region::closed(-1.0, 0.0, 1.0), Region::closed(0.0, 1.0, 0.0)],
            outer: [-1.0, 1.0],
            merges: vec![],
        };
        assert!(spec.validate().is_err());
        let grid = build_grid(
            spec.regions.clone(),
            vec![3, 3],
            GridProvenance::DiscretizedIntervals,
            unit_window(),
        );
        assert!(matches!(
            grid,
            Err(Error::DuplicateAbscissa { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn refine_counts_and_composition() {
        let spec =
            build_interval_indicator(&[(-1.05, -0.95), (-0.5, 1.1)], &[0], None, (-1.05, 1.1))
                .unwrap();
        let w = ScalingWindow::new(-1.1, 1.1).unwrap();
        let grid = discretize(&spec, &PointCounts::default(), w).unwrap();
        let twice = refine(&grid, 2).unwrap();
        // 20 → 39 and 200 → 399: every interval split, shared endpoints kept once.
        assert_eq!(twice.len(), 438);
        let quad = refine(&grid, 4).unwrap();
        let twice_twice = refine(&twice, 2).unwrap();
        assert_eq!(quad.len(), twice_twice.len());
        for (a, b) in quad.points().iter().zip(twice_twice.points()) {
            assert_abs_diff_eq!(a.x, b.x, epsilon = 1e-15);
        }
        for p in grid.points() {
            assert!(twice.points().iter().any(|q| (q.x - p.x).abs() <= 1e-15));
        }

        let exact = discretize(
            &build_exact_indicator(&s3(), &[0], None).unwrap(),
            &PointCounts::default(),
            unit_window(),
        )
        .unwrap();
        assert_eq!(refine(&exact, 2).unwrap(), exact);
    }

    #[test]
    fn json_schema() {
        let json = r#"{"mode":"intervals","regions":[{"lo":-1.05,"hi":-0.95,"value":1.0},{"lo":-0.5,"hi":1.1,"value":0.0}],"outer":[-1.05,1.1]}"#;
        let spec: IndicatorSpec = serde_json::from_str(json).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.regions.len(), 2);
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(back, json);
    }

    proptest! {
        #[test]
        fn ground_state_windows_contain_their_levels(
            raw in proptest::collection::vec(-3.0f64..3.0, 2..30),
            gamma in 0.05f64..0.5,
        ) {
            let mut e = raw.clone();
            e.sort_by(f64::total_cmp);
            e.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            prop_assume!(e.len() >= 2);
            let spec = build_gap_indicator(&e, gamma, gamma, &[0], None).unwrap();
            for (k, energy) in e.iter().enumerate() {
                let v = spec.value_at(*energy);
                prop_assert_eq!(v, Some(if k == 0 { 1.0 } else { 0.0 }));
            }
        }
    }
}
