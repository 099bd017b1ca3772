//! Dense two-phase primal simplex for equality-form programs
//!
//! ```text
//! minimize c·x  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Transport polytopes are highly degenerate, so both phases run on a
//! slightly perturbed right-hand side and the leftover infeasibility is
//! repaired with dual simplex pivots afterwards. Pricing uses Devex
//! reference weights and falls back to Bland's rule after a run of
//! degenerate pivots, which rules out cycling.
//! The tableau is rebuilt from the original data periodically and before
//! optimality is declared. Once a terminal basis is found, the primal and
//! dual vectors are recomputed by solving `B x_B = b` and `Bᵀ y = c_B`.

use thiserror::Error;

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Phase-1 optimum above which a program is declared infeasible.
pub const PHASE_ONE_TOL: f64 = 1e-8;
const OPTIMALITY_TOL: f64 = 1e-10;
/// Entries below this magnitude are zeroed when the tableau is rebuilt.
const DROP_TOL: f64 = 1e-12;
/// Pivots between two rebuilds of the tableau from the original data.
const REFACTOR_EVERY: usize = 100;
/// Consecutive degenerate pivots before pricing falls back to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Scale of the right-hand-side perturbation that breaks degeneracy.
const PERTURBATION: f64 = 1e-9;
/// Smallest entry used to pivot an artificial out; rows with only smaller
/// entries are treated as redundant.
const DRIVE_OUT_TOL: f64 = 1e-7;
/// Slack allowed in the ratio test when looking for a larger pivot.
const HARRIS_TOL: f64 = 1e-11;
/// Negative basic values below this are repaired after a perturbed phase.
const CLEANUP_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint matrix is {rows}x{cols} but objective has {nvars} and rhs {nrhs} entries")]
    Shape {
        rows: usize,
        cols: usize,
        nvars: usize,
        nrhs: usize,
    },
    #[error("non-finite coefficient in linear program")]
    NonFinite,
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("linear program is infeasible (phase-1 optimum {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        constraints: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    ) -> Result<Self, LpError> {
        let nvars = objective.len();
        let bad_row = constraints.iter().find(|r| r.len() != nvars);
        if bad_row.is_some() || rhs.len() != constraints.len() {
            return Err(LpError::Shape {
                rows: constraints.len(),
                cols: bad_row.map_or(nvars, Vec::len),
                nvars,
                nrhs: rhs.len(),
            });
        }
        let all = objective
            .iter()
            .chain(constraints.iter().flatten())
            .chain(&rhs);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        Ok(LinearProgram {
            objective,
            constraints,
            rhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Vec<f64>] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Same feasible set, different objective.
    pub fn with_objective(&self, objective: Vec<f64>) -> Result<Self, LpError> {
        Self::new(objective, self.constraints.clone(), self.rhs.clone())
    }

    /// `‖Ax − b‖_∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (dot(row, x) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value; `-∞` when unbounded, `NaN` when infeasible.
    pub value: f64,
    /// Basic solution (last feasible basis when unbounded, empty when infeasible).
    pub primal: Vec<f64>,
    /// Row multipliers; empty unless optimal.
    pub dual: Vec<f64>,
    /// Optimum of the phase-1 program (sum of artificial variables).
    pub phase_one_value: f64,
    /// Improving direction `d ≥ 0` with `A d = 0` and `c·d < 0`, when unbounded.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `|c·x − b·y|`.
    pub fn duality_gap(&self, lp: &LinearProgram) -> f64 {
        (lp.evaluate(&self.primal) - dot(lp.rhs(), &self.dual)).abs()
    }

    /// Turns non-optimal outcomes into errors.
    pub fn into_optimal(self) -> Result<Self, LpError> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(LpError::Infeasible(self.phase_one_value)),
            LpStatus::Unbounded => Err(LpError::Unbounded),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major dense simplex tableau `[A | I | b]` over the active rows.
struct Tableau {
    rows: usize,
    width: usize,
    nvars: usize,
    data: Vec<f64>,
    /// The starting tableau, kept for refactorization.
    original: Vec<f64>,
    basis: Vec<usize>,
    /// Tableau rows still in use.
    active: Vec<bool>,
    /// Original constraints still in use; as many as active rows.
    kept: Vec<bool>,
    /// Sign-adjusted right-hand side before any perturbation.
    true_rhs: Vec<f64>,
    since_refactor: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        // transport tableaux stay sparse, so only touch the pivot row's support
        let pivot_row: Vec<(usize, f64)> = self.data[pr * w..(pr + 1) * w]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(j, p)| (j, *p))
            .collect();
        for r in 0..self.rows {
            if r == pr || !self.active[r] {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for &(j, p) in &pivot_row {
                row[j] -= factor * p;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Rebuilds `B⁻¹[A | I | b]` for the current basis from the original
    /// rows by Gauss–Jordan elimination with partial pivoting. Leaves the
    /// tableau untouched and returns false if the basis is numerically
    /// singular.
    fn refactor(&mut self) -> bool {
        let w = self.width;
        let active: Vec<usize> = (0..self.rows).filter(|&r| self.active[r]).collect();
        let kept: Vec<usize> = (0..self.rows).filter(|&r| self.kept[r]).collect();
        let k = active.len();
        let cols: Vec<usize> = active.iter().map(|&r| self.basis[r]).collect();
        let aw = k + w;
        let mut aug = vec![0.0; k * aw];
        for (a, &r) in kept.iter().enumerate() {
            let src = &self.original[r * w..(r + 1) * w];
            for (b, &c) in cols.iter().enumerate() {
                aug[a * aw + b] = src[c];
            }
            aug[a * aw + k..(a + 1) * aw].copy_from_slice(src);
        }
        for col in 0..k {
            let (piv, best) = (col..k)
                .map(|r| (r, aug[r * aw + col].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty");
            if best < 1e-12 {
                return false;
            }
            if piv != col {
                for c in 0..aw {
                    aug.swap(piv * aw + c, col * aw + c);
                }
            }
            let inv = 1.0 / aug[col * aw + col];
            for v in &mut aug[col * aw..(col + 1) * aw] {
                *v *= inv;
            }
            let pivot_row: Vec<f64> = aug[col * aw..(col + 1) * aw].to_vec();
            for r in 0..k {
                if r == col {
                    continue;
                }
                let f = aug[r * aw + col];
                if f == 0.0 {
                    continue;
                }
                for (v, p) in aug[r * aw..(r + 1) * aw].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        for (b, &r) in active.iter().enumerate() {
            let row = &mut self.data[r * w..(r + 1) * w];
            row.copy_from_slice(&aug[b * aw + k..(b + 1) * aw]);
            for v in row.iter_mut() {
                if v.abs() < DROP_TOL {
                    *v = 0.0;
                }
            }
        }
        for (&r, &c) in active.iter().zip(&cols) {
            for rr in &active {
                self.data[rr * w + c] = if *rr == r { 1.0 } else { 0.0 };
            }
        }
        self.since_refactor = 0;
        true
    }

    /// Reduced costs `c_j − c_Bᵀ B⁻¹ A_j` for the first `cost.len()` columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red = cost.to_vec();
        for r in 0..self.rows {
            if !self.active[r] {
                continue;
            }
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[r * self.width..r * self.width + cost.len()];
            for (d, a) in red.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
        red
    }

    /// Shifts every basic value up by a small distinct amount. The shift is
    /// mirrored into the stored right-hand side as `B δ`, so the perturbed
    /// program stays consistent and later rebuilds keep it.
    fn perturb(&mut self) {
        let w = self.width;
        let scale = PERTURBATION
            * (0..self.rows)
                .filter(|&r| self.active[r])
                .map(|r| self.rhs(r).abs())
                .fold(1.0, f64::max);
        for r in 0..self.rows {
            if !self.active[r] {
                continue;
            }
            let delta = scale * (1.0 + ((r as f64 + 1.0) * 0.618_033_988_75).fract());
            self.data[r * w + w - 1] += delta;
            let col = self.basis[r];
            for rr in 0..self.rows {
                let a = self.original[rr * w + col];
                if a != 0.0 {
                    self.original[rr * w + w - 1] += delta * a;
                }
            }
        }
    }

    /// Puts the stored right-hand side back and rebuilds the tableau.
    fn restore_rhs(&mut self, rhs: &[f64]) {
        let w = self.width;
        for (r, b) in rhs.iter().enumerate() {
            self.original[r * w + w - 1] = *b;
        }
        // on a singular basis the perturbed values stay; `refine` redoes them
        self.refactor();
    }

    /// Dual simplex pivots that remove the small infeasibilities left after
    /// the perturbation is taken away, keeping reduced costs nonnegative.
    fn dual_cleanup(
        &mut self,
        cost: &[f64],
        eligible: usize,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<(), LpError> {
        loop {
            let leaving = (0..self.rows)
                .filter(|&r| self.active[r] && self.rhs(r) < -CLEANUP_TOL)
                .min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)));
            let Some(pr) = leaving else {
                return Ok(());
            };
            let red = self.reduced_costs(cost);
            let entering = (0..eligible)
                .filter(|&j| self.at(pr, j) < -PIVOT_TOL)
                .min_by(|&a, &b| {
                    let ra = red[a].max(0.0) / -self.at(pr, a);
                    let rb = red[b].max(0.0) / -self.at(pr, b);
                    ra.total_cmp(&rb).then(a.cmp(&b))
                });
            let Some(pc) = entering else {
                // no repair possible at this tolerance
                return Ok(());
            };
            *iterations += 1;
            if *iterations > limit {
                return Err(LpError::IterationLimit(limit));
            }
            self.pivot(pr, pc);
            self.since_refactor += 1;
        }
    }

    /// Runs one phase on a perturbed copy of the right-hand side, then
    /// restores it and repairs feasibility.
    fn run_phase(
        &mut self,
        cost: &[f64],
        eligible: usize,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<Option<usize>, LpError> {
        self.perturb();
        let outcome = self.optimize(cost, eligible, iterations, limit);
        let rhs = self.true_rhs.clone();
        self.restore_rhs(&rhs);
        let unbounded = outcome?;
        if unbounded.is_none() {
            self.dual_cleanup(cost, eligible, iterations, limit)?;
            // the repaired basis is re-checked by the primal method
            return self.optimize(cost, eligible, iterations, limit);
        }
        Ok(unbounded)
    }

    /// Ratio test. Bland mode takes the exact minimum ratio with ties broken
    /// by basis index; otherwise among rows within `HARRIS_TOL` of the minimum
    /// the largest pivot element wins.
    fn leaving_row(&self, entering: usize, bland: bool) -> Option<usize> {
        let candidates: Vec<(usize, f64, f64)> = (0..self.rows)
            .filter(|&r| self.active[r])
            .map(|r| (r, self.at(r, entering), self.rhs(r).max(0.0)))
            .filter(|&(_, a, _)| a > PIVOT_TOL)
            .collect();
        if bland {
            let min = candidates
                .iter()
                .map(|&(_, a, b)| b / a)
                .fold(f64::INFINITY, f64::min);
            return candidates
                .iter()
                .filter(|&&(_, a, b)| b / a <= min + 1e-12 * (1.0 + min))
                .min_by_key(|&&(r, _, _)| self.basis[r])
                .map(|&(r, _, _)| r);
        }
        let bound = candidates
            .iter()
            .map(|&(_, a, b)| (b + HARRIS_TOL) / a)
            .fold(f64::INFINITY, f64::min);
        candidates
            .iter()
            .filter(|&&(_, a, b)| b / a <= bound)
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            .map(|&(r, _, _)| r)
    }

    /// Simplex on columns `0..eligible`. Returns the entering column when the
    /// program is unbounded along it.
    fn optimize(
        &mut self,
        cost: &[f64],
        eligible: usize,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<Option<usize>, LpError> {
        // Devex pricing, switching to Bland's rule while the objective
        // stalls so that degenerate plateaus cannot cycle.
        let mut stalled = 0usize;
        let mut weights = vec![1.0; eligible];
        // updated from the pivot row and recomputed after every rebuild
        let mut red = self.reduced_costs(cost);
        loop {
            if self.since_refactor == 0 {
                red = self.reduced_costs(cost);
            }
            let bland = stalled >= STALL_LIMIT;
            let candidate = if bland {
                (0..eligible).find(|&j| red[j] < -OPTIMALITY_TOL)
            } else {
                (0..eligible)
                    .filter(|&j| red[j] < -OPTIMALITY_TOL)
                    .max_by(|&a, &b| {
                        (red[a] * red[a] / weights[a])
                            .total_cmp(&(red[b] * red[b] / weights[b]))
                            .then(b.cmp(&a))
                    })
            };
            let Some(entering) = candidate else {
                // confirm optimality on a freshly rebuilt tableau
                if self.since_refactor > 0 && self.refactor() {
                    continue;
                }
                return Ok(None);
            };
            let leave = self.leaving_row(entering, bland);
            let Some(pr) = leave else {
                if self.since_refactor > 0 && self.refactor() {
                    continue;
                }
                return Ok(Some(entering));
            };
            if self.since_refactor >= REFACTOR_EVERY.max(2 * self.rows) && self.refactor() {
                continue;
            }
            *iterations += 1;
            if *iterations > limit {
                return Err(LpError::IterationLimit(limit));
            }
            if self.rhs(pr) > FEASIBILITY_TOL {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(pr, entering);
            self.since_refactor += 1;
            let f = red[entering];
            let wq = weights[entering];
            let row = &self.data[pr * self.width..pr * self.width + red.len()];
            for (j, (d, a)) in red.iter_mut().zip(row).enumerate() {
                if *a != 0.0 {
                    *d -= f * a;
                    if j < eligible {
                        weights[j] = weights[j].max(a * a * wq);
                    }
                }
            }
            red[entering] = 0.0;
        }
    }
}

/// Solves `B z = rhs` by Gaussian elimination with partial pivoting, where
/// `B` is given column by column. Returns `None` when numerically singular.
fn solve_dense(mut mat: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, mat[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if best < 1e-13 {
            return None;
        }
        mat.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = mat[r][col] / mat[col][col];
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = mat.split_at_mut(r);
            for (v, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *v -= f * p;
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| mat[r][c] * z[c]).sum();
        z[r] = (rhs[r] - s) / mat[r][r];
    }
    Some(z)
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
}

impl SolverOptions {
    fn for_program(lp: &LinearProgram) -> Self {
        SolverOptions {
            max_iterations: 10_000.max(200 * (lp.num_rows() + lp.num_vars())),
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, SolverOptions::for_program(lp))
}

pub fn solve_with(lp: &LinearProgram, opts: SolverOptions) -> Result<LpSolution, LpError> {
    let rows = lp.num_rows();
    let nvars = lp.num_vars();
    let width = nvars + rows + 1;

    // Phase 1 runs on b + Aδ for a small positive δ. Unlike a shift of the
    // artificial levels this keeps dependent rows consistent, and it breaks
    // the degeneracy of rows with zero right-hand side.
    let scale = PERTURBATION * lp.rhs.iter().fold(1.0, |m: f64, b| m.max(b.abs()));
    let delta: Vec<f64> = (0..nvars)
        .map(|j| scale * (1.0 + ((j as f64 + 1.0) * 0.618_033_988_75).fract()))
        .collect();
    let shifted: Vec<f64> = (0..rows)
        .map(|r| {
            lp.rhs[r]
                + lp.constraints[r]
                    .iter()
                    .zip(&delta)
                    .map(|(a, d)| a * d)
                    .sum::<f64>()
        })
        .collect();

    // Flip rows so that the shifted b is nonnegative and the artificial
    // basis is feasible.
    let signs: Vec<f64> = shifted
        .iter()
        .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut data = vec![0.0; rows * width];
    for r in 0..rows {
        let row = &mut data[r * width..(r + 1) * width];
        for (c, a) in lp.constraints[r].iter().enumerate() {
            row[c] = signs[r] * a;
        }
        row[nvars + r] = 1.0;
        row[width - 1] = signs[r] * shifted[r];
    }
    let mut tab = Tableau {
        rows,
        width,
        nvars,
        original: data.clone(),
        data,
        basis: (nvars..nvars + rows).collect(),
        active: vec![true; rows],
        kept: vec![true; rows],
        true_rhs: (0..rows).map(|r| signs[r] * lp.rhs[r]).collect(),
        since_refactor: 0,
    };

    let mut iterations = 0;
    let mut phase_one_cost = vec![0.0; nvars + rows];
    for c in &mut phase_one_cost[nvars..] {
        *c = 1.0;
    }
    tab.optimize(
        &phase_one_cost,
        nvars + rows,
        &mut iterations,
        opts.max_iterations,
    )?;
    let phase_one_value: f64 = (0..rows)
        .filter(|&r| tab.basis[r] >= nvars)
        .map(|r| tab.rhs(r).max(0.0))
        .sum();
    if phase_one_value > PHASE_ONE_TOL {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            primal: Vec::new(),
            dual: Vec::new(),
            phase_one_value,
            ray: None,
            iterations,
        });
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent on the others and are dropped.
    tab.refactor();
    for r in 0..rows {
        if tab.basis[r] < nvars {
            continue;
        }
        let best = (0..nvars)
            .map(|c| (c, tab.at(r, c).abs()))
            .filter(|&(_, a)| a > DRIVE_OUT_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((c, _)) => tab.pivot(r, c),
            None => {
                // The row of B⁻¹ sitting under the artificial columns combines
                // the original constraints into 0 = 0; drop one it involves.
                let redundant = (0..rows)
                    .filter(|&j| tab.kept[j])
                    .max_by(|&a, &b| {
                        tab.at(r, nvars + a)
                            .abs()
                            .total_cmp(&tab.at(r, nvars + b).abs())
                    })
                    .expect("a kept row remains");
                // Pivoting its own artificial in first clears that
                // constraint from every other row, so later drops see the
                // reduced system.
                tab.pivot(r, nvars + redundant);
                tab.kept[redundant] = false;
                tab.active[r] = false;
            }
        }
    }

    let mut phase_two_cost = lp.objective.clone();
    phase_two_cost.resize(nvars + rows, 0.0);
    let unbounded_along =
        tab.run_phase(&phase_two_cost, nvars, &mut iterations, opts.max_iterations)?;

    let mut primal = vec![0.0; nvars];
    for r in 0..rows {
        if tab.active[r] {
            primal[tab.basis[r]] = tab.rhs(r);
        }
    }

    if let Some(entering) = unbounded_along {
        let mut ray = vec![0.0; nvars];
        ray[entering] = 1.0;
        for r in 0..rows {
            if tab.active[r] {
                ray[tab.basis[r]] = -tab.at(r, entering);
            }
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            primal,
            dual: Vec::new(),
            phase_one_value,
            ray: Some(ray),
            iterations,
        });
    }

    let dual = refine(lp, &tab, &signs, &mut primal);
    for x in &mut primal {
        if *x < 0.0 && *x > -FEASIBILITY_TOL {
            *x = 0.0;
        }
    }
    let value = lp.evaluate(&primal);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual,
        phase_one_value,
        ray: None,
        iterations,
    })
}

/// Recomputes the basic primal values and the duals from the original data.
/// Keeps the tableau values when the basis matrix is numerically singular.
fn refine(lp: &LinearProgram, tab: &Tableau, signs: &[f64], primal: &mut [f64]) -> Vec<f64> {
    let active: Vec<usize> = (0..tab.rows).filter(|&r| tab.active[r]).collect();
    let kept: Vec<usize> = (0..tab.rows).filter(|&r| tab.kept[r]).collect();
    let basic: Vec<usize> = active.iter().map(|&r| tab.basis[r]).collect();
    let k = active.len();
    let entry = |r: usize, c: usize| signs[r] * lp.constraints[r][c];

    let b_mat: Vec<Vec<f64>> = kept
        .iter()
        .map(|&r| basic.iter().map(|&c| entry(r, c)).collect())
        .collect();
    let b_rhs: Vec<f64> = kept.iter().map(|&r| signs[r] * lp.rhs[r]).collect();
    if let Some(xb) = solve_dense(b_mat.clone(), b_rhs) {
        for (&c, v) in basic.iter().zip(xb) {
            primal[c] = v;
        }
    }

    let bt: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| b_mat[j][i]).collect())
        .collect();
    let cb: Vec<f64> = basic.iter().map(|&c| lp.objective[c]).collect();
    let mut dual = vec![0.0; tab.rows];
    match solve_dense(bt, cb) {
        Some(y) => {
            for (&r, v) in kept.iter().zip(y) {
                dual[r] = signs[r] * v;
            }
        }
        None => {
            // y_r = −(reduced cost of artificial r) when the artificial costs 0
            let mut cost = lp.objective.clone();
            cost.resize(tab.nvars + tab.rows, 0.0);
            let red = tab.reduced_costs(&cost);
            for &r in &kept {
                dual[r] = -signs[r] * red[tab.nvars + r];
            }
        }
    }
    dual
}

/// True iff the phase-1 optimum is at most [`PHASE_ONE_TOL`].
pub fn feasible(lp: &LinearProgram) -> Result<bool, LpError> {
    let zero = lp.with_objective(vec![0.0; lp.num_vars()])?;
    Ok(solve(&zero)?.status != LpStatus::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_single_variable() {
        let lp = LinearProgram::new(vec![1.0, 0.0], vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.value.abs() < 1e-12);
        assert!((sol.primal[0]).abs() < 1e-12 && (sol.primal[1] - 1.0).abs() < 1e-12);
        assert!(sol.duality_gap(&lp) < 1e-12);
    }

    #[test]
    fn negative_rhs_is_infeasible() {
        let lp = LinearProgram::new(vec![0.0], vec![vec![1.0]], vec![-1.0]).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(sol.phase_one_value > PHASE_ONE_TOL);
        assert!(!feasible(&lp).unwrap());
        assert!(matches!(sol.into_optimal(), Err(LpError::Infeasible(_))));
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        // x₁ + x₂ = 1, x₁ − x₂ = 3 forces x₂ = −1
        let lp = LinearProgram::new(
            vec![0.0, 0.0],
            vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            vec![1.0, 3.0],
        )
        .unwrap();
        assert!(!feasible(&lp).unwrap());
    }

    #[test]
    fn transport_to_two_points_at_unit_distance() {
        // δ₀ → ½δ₁ + ½δ₋₁, cost |x − y| = 1 on both pairs
        let lp = LinearProgram::new(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 0.5, 0.5],
        )
        .unwrap();
        let sol = solve(&lp).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!(lp.residual(&sol.primal) < 1e-12);
        assert!(sol.duality_gap(&lp) < 1e-12);
    }

    #[test]
    fn unbounded_returns_improving_ray() {
        // min −x₁ s.t. x₁ − x₂ = 0
        let lp = LinearProgram::new(vec![-1.0, 0.0], vec![vec![1.0, -1.0]], vec![0.0]).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let ray = sol.ray.unwrap();
        assert!(ray.iter().all(|&d| d >= -1e-12));
        assert!(lp.residual(&ray) < 1e-12);
        assert!(lp.evaluate(&ray) < 0.0);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let lp = LinearProgram::new(
            vec![2.0, 1.0, 3.0],
            vec![
                vec![1.0, 1.0, 1.0],
                vec![2.0, 2.0, 2.0],
                vec![1.0, 0.0, 0.0],
            ],
            vec![1.0, 2.0, 0.25],
        )
        .unwrap();
        let sol = solve(&lp).unwrap();
        assert!((sol.value - 1.25).abs() < 1e-12);
        assert!(sol.duality_gap(&lp) < 1e-12);
        assert!(lp.residual(&sol.primal) < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![vec![1.0, 2.0]], vec![1.0]),
            Err(LpError::Shape { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![vec![1.0]], vec![1.0, 2.0]),
            Err(LpError::Shape { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![f64::NAN], vec![vec![1.0]], vec![1.0]),
            Err(LpError::NonFinite)
        ));
    }

    #[test]
    fn iteration_limit_is_an_error() {
        let lp = LinearProgram::new(
            vec![1.0, 2.0, 0.0],
            vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]],
            vec![1.0, 0.0],
        )
        .unwrap();
        let res = solve_with(&lp, SolverOptions { max_iterations: 0 });
        assert!(matches!(res, Err(LpError::IterationLimit(0))));
    }

    #[test]
    fn deterministic_value() {
        let lp = LinearProgram::new(
            vec![3.0, 1.0, 4.0, 1.0, 5.0],
            vec![vec![1.0, 1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 1.0, 1.0]],
            vec![2.0, 3.0],
        )
        .unwrap();
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.primal, b.primal);
    }
}
