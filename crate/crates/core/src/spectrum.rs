//! Spectral models: eigenvalue/overlap pairs.
//!
//! A [`SpectralModel`] is the discrete measure `Σ_k P_k δ(E - E_k)` seen by a
//! trial state. It doubles as the exact-answer oracle for every bound and as a
//! diagonal-Hamiltonian input when no matrix is available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, DenseSymmetricMatrix, StateVector};

const COMPLETENESS_TOL: f64 = 1e-10;
/// Relative degeneracy tolerance used by [`SpectralModel::from_matrix`].
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Overlaps below this are dropped by [`SpectralModel::from_matrix`].
pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectralModel", into = "RawSpectralModel")]
pub struct SpectralModel {
    eigenvalues: Vec<f64>,
    overlaps: Vec<f64>,
    complete: bool,
    dropped_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpectralModel {
    eigenvalues: Vec<f64>,
    overlaps: Vec<f64>,
    #[serde(default = "default_true")]
    complete: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    dropped_mass: f64,
}

fn default_true() -> bool {
    true
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<RawSpectralModel> for SpectralModel {
    type Error = Error;

    fn try_from(raw: RawSpectralModel) -> Result<Self> {
        let mut model = SpectralModel::new(raw.eigenvalues, raw.overlaps, raw.complete)?;
        model.dropped_mass = raw.dropped_mass;
        Ok(model)
    }
}

impl From<SpectralModel> for RawSpectralModel {
    fn from(m: SpectralModel) -> Self {
        RawSpectralModel {
            eigenvalues: m.eigenvalues,
            overlaps: m.overlaps,
            complete: m.complete,
            dropped_mass: m.dropped_mass,
        }
    }
}

impl SpectralModel {
    /// Validates strictly ascending energies, nonnegative overlaps and, for
    /// complete models, unit total overlap.
    pub fn new(eigenvalues: Vec<f64>, overlaps: Vec<f64>, complete: bool) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::input("spectral model needs at least one level"));
        }
        if eigenvalues.len() != overlaps.len() {
            return Err(Error::DimensionMismatch {
                expected: eigenvalues.len(),
                found: overlaps.len(),
            });
        }
        if eigenvalues.iter().chain(&overlaps).any(|x| !x.is_finite()) {
            return Err(Error::input("spectral model has non-finite entries"));
        }
        if let Some(k) = eigenvalues.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::input(format!(
                "eigenvalues must be strictly ascending (entries {k} and {})",
                k + 1
            )));
        }
        if let Some(k) = overlaps.iter().position(|p| *p < 0.0) {
            return Err(Error::input(format!("overlap {k} is negative")));
        }
        let total: f64 = overlaps.iter().sum();
        if complete && (total - 1.0).abs() > COMPLETENESS_TOL {
            return Err(Error::input(format!(
                "complete spectral model must have unit total overlap, got {total}"
            )));
        }
        Ok(Self {
            eigenvalues,
            overlaps,
            complete,
            dropped_mass: 0.0,
        })
    }

    /// Sorts arbitrary pairs and merges levels closer than
    /// `rel_tol·(E_max - E_min)`, summing their overlaps.
    pub fn from_pairs_merging(
        pairs: impl IntoIterator<Item = (f64, f64)>,
        rel_tol: f64,
        complete: bool,
    ) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::input("spectral model needs at least one level"));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = pairs.last().unwrap().0 - pairs[0].0;
        let tol = rel_tol * spread;
        let mut eigenvalues: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut overlaps: Vec<f64> = Vec::with_capacity(pairs.len());
        // Each merged level keeps its overlap-weighted mean energy.
        let mut group: Vec<(f64, f64)> = Vec::new();
        let flush = |group: &mut Vec<(f64, f64)>, e: &mut Vec<f64>, p: &mut Vec<f64>| {
            let mass: f64 = group.iter().map(|g| g.1).sum();
            let energy = if mass > 0.0 {
                group.iter().map(|g| g.0 * g.1).sum::<f64>() / mass
            } else {
                group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64
            };
            e.push(energy);
            p.push(mass);
            group.clear();
        };
        for pair in pairs {
            if let Some(first) = group.first() {
                if pair.0 - first.0 > tol {
                    flush(&mut group, &mut eigenvalues, &mut overlaps);
                }
            }
            group.push(pair);
        }
        flush(&mut group, &mut eigenvalues, &mut overlaps);
        // Guard against weighted means landing on top of each other.
        for k in 1..eigenvalues.len() {
            if eigenvalues[k] <= eigenvalues[k - 1] {
                eigenvalues[k] = eigenvalues[k - 1] + f64::EPSILON * eigenvalues[k - 1].abs().max(f64::MIN_POSITIVE);
            }
        }
        Self::new(eigenvalues, overlaps, complete)
    }

    /// Eigendecomposition readout: `P_k = |⟨u_k|φ⟩|²`, degenerate levels merged
    /// (tolerance `1e-9·spread`), overlaps below `floor` dropped.
    pub fn from_matrix(a: &DenseSymmetricMatrix, phi: &StateVector, floor: f64) -> Result<Self> {
        if a.dim() != phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: phi.dim(),
            });
        }
        let evd = linalg::eigh(a)?;
        let pairs = evd
            .eigenvalues
            .iter()
            .zip(&evd.eigenvectors)
            .map(|(e, u)| (*e, dot(u, phi.as_slice()).powi(2)));
        let merged = Self::from_pairs_merging(pairs, DEGENERACY_TOL, false)?;
        let mut kept_e = Vec::new();
        let mut kept_p = Vec::new();
        let mut dropped = 0.0;
        for (e, p) in merged.eigenvalues.iter().zip(&merged.overlaps) {
            if *p < floor {
                dropped += p;
            } else {
                kept_e.push(*e);
                kept_p.push(*p);
            }
        }
        if kept_e.is_empty() {
            return Err(Error::input("all overlaps fell below the floor"));
        }
        let total: f64 = kept_p.iter().sum::<f64>() + dropped;
        let complete = (total - 1.0).abs() <= COMPLETENESS_TOL;
        let mut model = Self::new(kept_e, kept_p, complete)?;
        model.dropped_mass = dropped;
        Ok(model)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Overlap mass removed by the floor in [`SpectralModel::from_matrix`].
    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn range(&self) -> (f64, f64) {
        (self.eigenvalues[0], *self.eigenvalues.last().unwrap())
    }

    pub fn total_overlap(&self) -> f64 {
        self.overlaps.iter().sum()
    }

    /// `Σ_k P_k E_k`.
    pub fn mean_energy(&self) -> f64 {
        dot(&self.eigenvalues, &self.overlaps) / self.total_overlap()
    }

    /// Index of the level containing `energy` within `tol`, if any.
    pub fn level_of(&self, energy: f64, tol: f64) -> Option<usize> {
        self.eigenvalues.iter().position(|e| (e - energy).abs() <= tol)
    }

    /// Diagonal Hamiltonian and state `√P_k` that reproduce this model.
    pub fn to_diagonal_problem(&self) -> Result<(DenseSymmetricMatrix, StateVector)> {
        let a = DenseSymmetricMatrix::diagonal(&self.eigenvalues)?;
        let phi = StateVector::normalized(self.overlaps.iter().map(|p| p.sqrt()).collect())?;
        Ok((a, phi))
    }
}

/// `Σ_{i∈targets} v_i P_i` (unit weights when `weights` is `None`).
pub fn exact_overlap(model: &SpectralModel, targets: &[usize], weights: Option<&[f64]>) -> Result<f64> {
    if let Some(w) = weights {
        if w.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                found: w.len(),
            });
        }
    }
    let mut total = 0.0;
    for (j, &i) in targets.iter().enumerate() {
        let p = model.overlaps.get(i).ok_or_else(|| {
            Error::input(format!("target index {i} out of range for {} levels", model.len()))
        })?;
        total += weights.map_or(1.0, |w| w[j]) * p;
    }
    Ok(total)
}

/// Where the 19 evenly spaced background levels start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridVariant {
    /// Background on [-0.9, 1].
    Fixed,
    /// Background on [-1 + gap, 1].
    Gap { gap: f64 },
}

/// Parameters of the 30-level cluster model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModelParams {
    pub first_center: f64,
    pub second_center: f64,
    pub variant: GridVariant,
    pub ground_energy: f64,
    pub ground_overlap: f64,
    pub cluster_size: usize,
    pub cluster_spacing: f64,
    /// Gaussian envelope width; `None` means half the cluster width.
    pub sigma: Option<f64>,
    pub cluster_mass: f64,
    pub grid_count: usize,
    pub grid_lo_fixed: f64,
    pub grid_hi: f64,
    /// Closest allowed distance between two levels before jitter kicks in.
    pub min_separation: f64,
    pub seed: u64,
}

impl Default for ClusterModelParams {
    fn default() -> Self {
        Self {
            first_center: -0.4,
            second_center: 0.2,
            variant: GridVariant::Fixed,
            ground_energy: -1.0,
            ground_overlap: 0.4,
            cluster_size: 5,
            cluster_spacing: 0.02,
            sigma: None,
            cluster_mass: 0.2,
            grid_count: 19,
            grid_lo_fixed: -0.9,
            grid_hi: 1.0,
            min_separation: 1e-6,
            seed: 0,
        }
    }
}

impl ClusterModelParams {
    pub fn fixed_grid(second_center: f64) -> Self {
        Self {
            second_center,
            ..Self::default()
        }
    }

    pub fn with_gap(second_center: f64, gap: f64) -> Self {
        Self {
            second_center,
            variant: GridVariant::Gap { gap },
            ..Self::default()
        }
    }

    pub fn grid_lo(&self) -> f64 {
        match self.variant {
            GridVariant::Fixed => self.grid_lo_fixed,
            GridVariant::Gap { gap } => self.ground_energy + gap,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
            .unwrap_or(0.5 * (self.cluster_size.saturating_sub(1)) as f64 * self.cluster_spacing)
    }

    fn validate(&self) -> Result<()> {
        let in_open_unit = |x: f64| x > -1.0 && x < 1.0;
        if !in_open_unit(self.second_center) {
            return Err(Error::input("second cluster center must lie in (-1, 1)"));
        }
        if let GridVariant::Gap { gap } = self.variant {
            if !(gap >= 0.0 && gap.is_finite()) {
                return Err(Error::input("gap must be nonnegative"));
            }
            if self.ground_energy + gap >= self.grid_hi {
                return Err(Error::input("gap leaves no room for the background grid"));
            }
        }
        if self.cluster_size == 0 || self.grid_count < 2 {
            return Err(Error::input("cluster size must be ≥ 1 and grid count ≥ 2"));
        }
        if !(self.cluster_spacing > 0.0 && self.sigma() > 0.0 && self.min_separation > 0.0) {
            return Err(Error::input("cluster spacing, sigma and separation must be positive"));
        }
        let mass = self.ground_overlap + 2.0 * self.cluster_mass;
        if self.ground_overlap < 0.0 || self.cluster_mass < 0.0 || mass > 1.0 {
            return Err(Error::input("ground and cluster overlaps must be nonnegative and sum to ≤ 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum LevelKind {
    Ground = 0,
    Cluster = 1,
    Grid = 2,
}

/// The 30-level model: a ground level, two Gaussian-weighted clusters and an
/// evenly spaced background carrying the residual overlap uniformly.
///
/// Levels that land within `min_separation` of each other are separated by
/// nudging the lower-priority level (background before cluster before ground)
/// away from its neighbour by `min_separation·(1 + u)`, `u ~ U[0,1)` drawn
/// from `seed`.
pub fn gen_cluster_model(params: &ClusterModelParams) -> Result<SpectralModel> {
    params.validate()?;
    let mut levels: Vec<(f64, f64, LevelKind)> =
        vec![(params.ground_energy, params.ground_overlap, LevelKind::Ground)];

    let sigma = params.sigma();
    let half = 0.5 * (params.cluster_size - 1) as f64;
    for center in [params.first_center, params.second_center] {
        let offsets: Vec<f64> = (0..params.cluster_size)
            .map(|j| (j as f64 - half) * params.cluster_spacing)
            .collect();
        let envelope: Vec<f64> = offsets
            .iter()
            .map(|d| (-0.5 * (d / sigma).powi(2)).exp())
            .collect();
        let norm: f64 = envelope.iter().sum();
        for (d, g) in offsets.iter().zip(&envelope) {
            levels.push((center + d, params.cluster_mass * g / norm, LevelKind::Cluster));
        }
    }

    let residual = 1.0 - params.ground_overlap - 2.0 * params.cluster_mass;
    let lo = params.grid_lo();
    let step = (params.grid_hi - lo) / (params.grid_count - 1) as f64;
    for j in 0..params.grid_count {
        let e = if j + 1 == params.grid_count {
            params.grid_hi
        } else {
            lo + j as f64 * step
        };
        levels.push((e, residual / params.grid_count as f64, LevelKind::Grid));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let max_rounds = 10 * levels.len();
    for round in 0.. {
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let collision = levels
            .windows(2)
            .position(|w| w[1].0 - w[0].0 < params.min_separation);
        let Some(k) = collision else { break };
        if round == max_rounds {
            return Err(Error::input("could not separate colliding cluster-model levels"));
        }
        let nudge = params.min_separation * (1.0 + rng.gen::<f64>());
        if levels[k].2 > levels[k + 1].2 {
            levels[k].0 -= nudge;
        } else {
            levels[k + 1].0 += nudge;
        }
    }

    let total: f64 = levels.iter().map(|l| l.1).sum();
    let (eigenvalues, overlaps): (Vec<f64>, Vec<f64>) =
        levels.iter().map(|l| (l.0, l.1 / total)).unzip();
    SpectralModel::new(eigenvalues, overlaps, true)
}
