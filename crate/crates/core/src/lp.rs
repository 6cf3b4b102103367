//! Dense active-set simplex for small linear programs over free variables.
//!
//! The solver works directly on the inequality form `max oᵀx, a_jᵀx ≤ b_j`
//! (`≥` rows and minimization are flipped on entry), keeping a working set of
//! linearly independent tight rows. Each iteration refactors the working-set
//! rows with a Householder QR, which is cheap at the sizes this crate produces
//! (hundreds of rows, tens of columns) and keeps every step backward stable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm2};

pub const DEFAULT_FEASTOL: f64 = 1e-9;
pub const DEFAULT_OPTTOL: f64 = 1e-9;
/// Consecutive degenerate steps before switching to Bland's rule.
pub const DEFAULT_STALL_THRESHOLD: usize = 50;

const PIVOT_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-14;
/// Relative size below which the projected objective counts as zero.
const PROJECTION_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerically singular working set (rows {rows:?})")]
    SingularBasis { rows: Vec<usize> },
    #[error("iteration limit {iterations} reached before optimality")]
    IterationLimit { iterations: usize, best: Vec<f64> },
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    senses: Vec<Sense>,
    maximize: bool,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        senses: Vec<Sense>,
        maximize: bool,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if n == 0 {
            return Err(LpError::InvalidProgram("objective is empty".into()));
        }
        if rows.is_empty() {
            return Err(LpError::InvalidProgram("at least one constraint row is required".into()));
        }
        if rhs.len() != rows.len() || senses.len() != rows.len() {
            return Err(LpError::InvalidProgram(format!(
                "{} rows but {} right-hand sides and {} senses",
                rows.len(),
                rhs.len(),
                senses.len()
            )));
        }
        if let Some(k) = rows.iter().position(|r| r.len() != n) {
            return Err(LpError::InvalidProgram(format!(
                "row {k} has width {} but the objective has {n}",
                rows[k].len()
            )));
        }
        let finite = objective.iter().chain(rows.iter().flatten()).chain(&rhs).all(|v| v.is_finite());
        if !finite {
            return Err(LpError::InvalidProgram("non-finite entry".into()));
        }
        Ok(Self {
            objective,
            rows,
            rhs,
            senses,
            maximize,
        })
    }

    /// All rows share one sense.
    pub fn uniform(
        objective: Vec<f64>,
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        sense: Sense,
        maximize: bool,
    ) -> Result<Self, LpError> {
        let senses = vec![sense; rows.len()];
        Self::new(objective, rows, rhs, senses, maximize)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn maximize(&self) -> bool {
        self.maximize
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Unbounded => "unbounded",
            LpStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Final iterate: the optimum, the last feasible point before an
    /// unbounded ray, or the phase-one minimizer when infeasible.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Working-set rows at termination, ascending.
    pub active_rows: Vec<usize>,
    /// Multipliers `y ≥ 0` on `active_rows`, with
    /// `±objective = Σ y_j σ_j a_j` (`+` when maximizing; `σ_j = +1` for `≤`,
    /// `-1` for `≥`). Empty unless optimal.
    pub duals: Vec<f64>,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptions {
    pub feastol: f64,
    pub opttol: f64,
    pub max_iterations: Option<usize>,
    pub stall_threshold: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feastol: DEFAULT_FEASTOL,
            opttol: DEFAULT_OPTTOL,
            max_iterations: None,
            stall_threshold: DEFAULT_STALL_THRESHOLD,
        }
    }
}

/// Largest signed violation of `x` over all rows (negative means strictly
/// feasible everywhere).
pub fn check_feasibility(x: &[f64], p: &LinearProgram) -> f64 {
    p.rows
        .iter()
        .zip(&p.rhs)
        .zip(&p.senses)
        .map(|((row, b), s)| s.sign() * (dot(row, x) - b))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(p, &LpOptions::default(), None)
}

/// Solves `p`, optionally starting from `start`. A start that violates a row
/// by more than `feastol` is discarded.
pub fn solve_lp_with(
    p: &LinearProgram,
    options: &LpOptions,
    start: Option<&[f64]>,
) -> Result<LpSolution, LpError> {
    let n = p.num_vars();
    if let Some(x0) = start {
        if x0.len() != n {
            return Err(LpError::InvalidProgram(format!(
                "start has length {} but the program has {n} variables",
                x0.len()
            )));
        }
    }
    let form = StandardForm::from_program(p);
    let limit = options
        .max_iterations
        .unwrap_or(10_000 + 50 * (form.rows.len() + n));

    let feasible_start = start
        .filter(|x0| x0.iter().all(|v| v.is_finite()) && form.max_violation(x0) <= options.feastol)
        .map(|x0| x0.to_vec())
        .or_else(|| {
            let zero = vec![0.0; n];
            (form.max_violation(&zero) <= options.feastol).then_some(zero)
        });

    let mut iterations = 0;
    let x0 = match feasible_start {
        Some(x0) => x0,
        None => {
            let phase1 = form.phase_one();
            let mut start = vec![0.0; n + 1];
            start[n] = form.rhs.iter().fold(0.0f64, |m, b| m.max(-b));
            let out = ActiveSet::new(&phase1, options, limit).run(start)?;
            iterations += out.iterations;
            let x: Vec<f64> = out.x[..n].to_vec();
            if out.x[n] > options.feastol || form.max_violation(&x) > options.feastol {
                let objective_value = p.objective_at(&x);
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x,
                    objective_value,
                    active_rows: Vec::new(),
                    duals: Vec::new(),
                    ray: None,
                    iterations,
                });
            }
            x
        }
    };

    let out = ActiveSet::new(&form, options, limit.saturating_sub(iterations))
        .run(x0)
        .map_err(|e| match e {
            LpError::IterationLimit { best, .. } => LpError::IterationLimit {
                iterations: limit,
                best,
            },
            other => other,
        })?;
    iterations += out.iterations;

    let mut order: Vec<usize> = (0..out.working.len()).collect();
    order.sort_by_key(|&k| out.working[k]);
    let active_rows: Vec<usize> = order.iter().map(|&k| out.working[k]).collect();
    let duals = match &out.multipliers {
        Some(lambda) => order
            .iter()
            .map(|&k| lambda[k].max(0.0) / form.scale[out.working[k]])
            .collect(),
        None => Vec::new(),
    };
    let status = if out.ray.is_some() {
        LpStatus::Unbounded
    } else {
        LpStatus::Optimal
    };
    let objective_value = p.objective_at(&out.x);
    Ok(LpSolution {
        status,
        x: out.x,
        objective_value,
        active_rows,
        duals,
        ray: out.ray,
        iterations,
    })
}

/// `max oᵀx` subject to equilibrated rows `a_j x ≤ b_j`.
struct StandardForm {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Positive factor each original row was divided by (after the sense flip).
    scale: Vec<f64>,
}

impl StandardForm {
    fn from_program(p: &LinearProgram) -> Self {
        let sign = if p.maximize { 1.0 } else { -1.0 };
        let objective = p.objective.iter().map(|v| sign * v).collect();
        let mut rows = Vec::with_capacity(p.rows.len());
        let mut rhs = Vec::with_capacity(p.rows.len());
        let mut scale = Vec::with_capacity(p.rows.len());
        for ((row, b), s) in p.rows.iter().zip(&p.rhs).zip(&p.senses) {
            let m = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let m = if m > 0.0 { m } else { 1.0 };
            let f = s.sign() / m;
            rows.push(row.iter().map(|v| v * f).collect());
            rhs.push(b * f);
            scale.push(m);
        }
        Self {
            objective,
            rows,
            rhs,
            scale,
        }
    }

    fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| dot(a, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max -s` over `(x, s)` with `a_j x - s ≤ b_j` and `s ≥ 0`.
    fn phase_one(&self) -> StandardForm {
        let n = self.objective.len();
        let mut objective = vec![0.0; n + 1];
        objective[n] = -1.0;
        let mut rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|a| {
                let mut r = a.clone();
                r.push(-1.0);
                r
            })
            .collect();
        let mut rhs = self.rhs.clone();
        let mut bound = vec![0.0; n + 1];
        bound[n] = -1.0;
        rows.push(bound);
        rhs.push(0.0);
        let scale = vec![1.0; rows.len()];
        StandardForm {
            objective,
            rows,
            rhs,
            scale,
        }
    }
}

struct Outcome {
    x: Vec<f64>,
    working: Vec<usize>,
    multipliers: Option<Vec<f64>>,
    ray: Option<Vec<f64>>,
    iterations: usize,
}

struct ActiveSet<'a> {
    form: &'a StandardForm,
    options: &'a LpOptions,
    limit: usize,
}

impl<'a> ActiveSet<'a> {
    fn new(form: &'a StandardForm, options: &'a LpOptions, limit: usize) -> Self {
        Self {
            form,
            options,
            limit,
        }
    }

    fn run(&self, mut x: Vec<f64>) -> Result<Outcome, LpError> {
        let form = self.form;
        let n = form.objective.len();
        let o = &form.objective;
        let o_norm = norm2(o);
        let mut working: Vec<usize> = Vec::new();
        let mut in_working = vec![false; form.rows.len()];
        let mut stalled = 0usize;
        let mut iterations = 0usize;
        let mut skip_projection = false;
        // Rows whose release only opened a rounding-level ray from this vertex.
        let mut rejected: Vec<usize> = Vec::new();

        loop {
            if iterations >= self.limit {
                return Err(LpError::IterationLimit {
                    iterations,
                    best: x,
                });
            }
            let qr = Qr::new(n, working.iter().map(|&j| form.rows[j].as_slice()));
            if qr.has_weak_column(SINGULAR_TOL) {
                let mut rows = working.clone();
                rows.sort_unstable();
                return Err(LpError::SingularBasis { rows });
            }
            self.snap_to_working_set(&qr, &working, &mut x);
            let k = working.len();
            let bland = stalled >= self.options.stall_threshold;

            let qto = qr.apply_qt(o);
            let mut dir = None;
            let mut dropped = None;
            if k < n && !skip_projection {
                let mut tail = qto.clone();
                tail[..k].iter_mut().for_each(|v| *v = 0.0);
                let d = qr.apply_q(&tail);
                if norm2(&d) > PROJECTION_TOL * o_norm {
                    dir = Some(d);
                }
            }
            skip_projection = false;
            if dir.is_none() {
                let lambda = qr.solve_r(&qto[..k]);
                // Multipliers are in objective units per unit of row slack,
                // rows being equilibrated; edges are priced by gain per unit step.
                let threshold = self.options.opttol * o_norm.max(f64::MIN_POSITIVE);
                let mut best: Option<(usize, f64, Vec<f64>)> = None;
                for (pos, &l) in lambda.iter().enumerate() {
                    if -l <= threshold || rejected.contains(&working[pos]) {
                        continue;
                    }
                    let mut e = vec![0.0; k];
                    e[pos] = -1.0;
                    let y = qr.solve_rt(&e);
                    let rate = -l / norm2(&y);
                    let score = if bland { -(working[pos] as f64) } else { rate };
                    let better = match &best {
                        None => true,
                        Some((bpos, bscore, _)) => {
                            score > *bscore || (score == *bscore && working[pos] < working[*bpos])
                        }
                    };
                    if better {
                        let mut full = y;
                        full.resize(n, 0.0);
                        best = Some((pos, score, full));
                    }
                }
                match best {
                    None => {
                        return Ok(Outcome {
                            x,
                            working,
                            multipliers: Some(lambda),
                            ray: None,
                            iterations,
                        });
                    }
                    Some((pos, _, y)) => {
                        dir = Some(qr.apply_q(&y));
                        dropped = Some(pos);
                    }
                }
            }
            let d = dir.expect("direction chosen above");
            iterations += 1;

            let d_norm = norm2(&d);
            let mut block: Option<(usize, f64, f64)> = None;
            for (j, (a, b)) in form.rows.iter().zip(&form.rhs).enumerate() {
                if in_working[j] {
                    continue;
                }
                let ad = dot(a, &d);
                if ad <= PIVOT_TOL * norm2(a) * d_norm {
                    continue;
                }
                let slack = (b - dot(a, &x)).max(0.0);
                let t = slack / ad;
                let replace = match block {
                    None => true,
                    Some((bj, bt, bad)) => {
                        let tie = (t - bt).abs() <= 4.0 * f64::EPSILON * bt.abs().max(t.abs());
                        if tie {
                            if bland {
                                j < bj
                            } else {
                                ad > bad || (ad == bad && j < bj)
                            }
                        } else {
                            t < bt
                        }
                    }
                };
                if replace {
                    block = Some((j, t, ad));
                }
            }

            let Some((j, t, _)) = block else {
                // A null-space residual at rounding level is not a ray.
                if dropped.is_none() && d_norm <= self.options.opttol * o_norm {
                    skip_projection = true;
                    continue;
                }
                // Nor is an edge whose gain per unit step is at rounding level.
                if let Some(pos) = dropped {
                    if dot(o, &d) <= self.options.opttol * o_norm * d_norm {
                        rejected.push(working[pos]);
                        skip_projection = true;
                        continue;
                    }
                }
                return Ok(Outcome {
                    x,
                    working,
                    multipliers: None,
                    ray: Some(d),
                    iterations,
                });
            };
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += t * di;
            }
            if t * d_norm <= f64::EPSILON * norm2(&x).max(1.0) {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if let Some(pos) = dropped {
                in_working[working[pos]] = false;
                working.remove(pos);
            }
            working.push(j);
            in_working[j] = true;
            rejected.clear();
        }
    }

    /// Re-solves the working rows as equalities (least-norm correction) so
    /// accumulated step error does not drift off the tight constraints.
    fn snap_to_working_set(&self, qr: &Qr, working: &[usize], x: &mut [f64]) {
        if working.is_empty() {
            return;
        }
        for _ in 0..2 {
            let residual: Vec<f64> = working
                .iter()
                .map(|&j| self.form.rhs[j] - dot(&self.form.rows[j], x))
                .collect();
            let mut y = qr.solve_rt(&residual);
            y.resize(x.len(), 0.0);
            let dx = qr.apply_q(&y);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
    }
}

/// Householder QR of the `n × k` matrix whose columns are the given rows.
struct Qr {
    n: usize,
    k: usize,
    /// Reflected columns, column-major; the upper triangle holds `R`.
    a: Vec<Vec<f64>>,
    /// Householder vectors `v_i` (length `n - i`) with `H_i = I - 2 v vᵀ`.
    v: Vec<Vec<f64>>,
    diag: Vec<f64>,
    col_norms: Vec<f64>,
}

impl Qr {
    fn new<'r>(n: usize, columns: impl Iterator<Item = &'r [f64]>) -> Self {
        let mut a: Vec<Vec<f64>> = columns.map(|c| c.to_vec()).collect();
        let col_norms = a.iter().map(|c| norm2(c)).collect();
        let k = a.len();
        let mut v = Vec::with_capacity(k);
        let mut diag = Vec::with_capacity(k);
        for i in 0..k {
            let x = &a[i][i..];
            let alpha = norm2(x);
            let mut u = x.to_vec();
            let r = if x[0] >= 0.0 { -alpha } else { alpha };
            u[0] -= r;
            let un = norm2(&u);
            if un > 0.0 {
                u.iter_mut().for_each(|e| *e /= un);
            }
            for col in a.iter_mut().skip(i) {
                let s = 2.0 * dot(&u, &col[i..]);
                for (c, ue) in col[i..].iter_mut().zip(&u) {
                    *c -= s * ue;
                }
            }
            a[i][i] = r;
            a[i][i + 1..].iter_mut().for_each(|e| *e = 0.0);
            diag.push(r);
            v.push(u);
        }
        Self {
            n,
            k,
            a,
            v,
            diag,
            col_norms,
        }
    }

    fn has_weak_column(&self, tol: f64) -> bool {
        (0..self.k).any(|i| self.diag[i].abs() <= tol * self.col_norms[i])
    }

    fn apply_qt(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (i, u) in self.v.iter().enumerate() {
            let s = 2.0 * dot(u, &y[i..]);
            for (ye, ue) in y[i..].iter_mut().zip(u) {
                *ye -= s * ue;
            }
        }
        y
    }

    fn apply_q(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = x.to_vec();
        for (i, u) in self.v.iter().enumerate().rev() {
            let s = 2.0 * dot(u, &y[i..]);
            for (ye, ue) in y[i..].iter_mut().zip(u) {
                *ye -= s * ue;
            }
        }
        y
    }

    /// `R λ = z`.
    fn solve_r(&self, z: &[f64]) -> Vec<f64> {
        let mut lambda = z.to_vec();
        for i in (0..self.k).rev() {
            let mut s = lambda[i];
            for j in i + 1..self.k {
                s -= self.a[j][i] * lambda[j];
            }
            lambda[i] = s / self.a[i][i];
        }
        lambda
    }

    /// `Rᵀ y = z`.
    fn solve_rt(&self, z: &[f64]) -> Vec<f64> {
        let mut y = z.to_vec();
        for i in 0..self.k {
            let mut s = y[i];
            for j in 0..i {
                s -= self.a[i][j] * y[j];
            }
            y[i] = s / self.a[i][i];
        }
        y
    }
}
