//! Optimal transport and martingale optimal transport between discrete
//! measures, posed as linear programs over mass matrices.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::projection_l;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpError, LpStatus};
use crate::measure::{cluster_points, AffineMap, AtomicKernel, DiscreteMeasure, Point, MERGE_TOL};

/// Tolerance used when comparing probe optima and plans.
pub const PROBE_TOL: f64 = 1e-7;

/// Norm applied to the displacement `y − x` in the cost `c(x, y) = ‖y − x‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclidean,
    L1,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Euclidean, Norm::L1, Norm::Linf];

    pub fn length(self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Norm::L1 => v.iter().map(|a| a.abs()).sum(),
            Norm::Linf => v.iter().fold(0.0, |m, a| m.max(a.abs())),
        }
    }

    pub fn cost(self, x: &Point, y: &Point) -> f64 {
        self.length(y.sub(x).coords())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::Euclidean => "euclidean",
            Norm::L1 => "l1",
            Norm::Linf => "linf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" | "l2" => Ok(Norm::Euclidean),
            "l1" => Ok(Norm::L1),
            "linf" => Ok(Norm::Linf),
            other => Err(Error::InvalidParameter(format!("unknown norm {other:?}"))),
        }
    }
}

/// A finitely supported measure on ℝ^d × ℝ^d stored as a mass matrix
/// between a list of source points and a list of target points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    source: Vec<Point>,
    target: Vec<Point>,
    mass: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn new(source: Vec<Point>, target: Vec<Point>, mass: Vec<Vec<f64>>) -> Result<Self> {
        let plan = Coupling {
            source,
            target,
            mass,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let dim = self.source.first().ok_or(Error::Empty)?.dim();
        if self.target.is_empty() {
            return Err(Error::Empty);
        }
        for p in self.source.iter().chain(&self.target) {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        if self.mass.len() != self.source.len() {
            return Err(Error::DimensionMismatch {
                expected: self.source.len(),
                found: self.mass.len(),
            });
        }
        let mut total = 0.0;
        for row in &self.mass {
            if row.len() != self.target.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.target.len(),
                    found: row.len(),
                });
            }
            for &w in row {
                if !w.is_finite() {
                    return Err(Error::NonFinite);
                }
                if w < 0.0 {
                    return Err(Error::NegativeWeight(w));
                }
                total += w;
            }
        }
        if (total - 1.0).abs() > crate::measure::WEIGHT_TOL {
            return Err(Error::WeightSum(total));
        }
        Ok(())
    }

    /// Plan `μ(Id, Id)` that leaves every atom in place.
    pub fn identity(mu: &DiscreteMeasure) -> Self {
        let pts: Vec<Point> = mu.points().cloned().collect();
        let n = pts.len();
        let mass = mu
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut row = vec![0.0; n];
                row[i] = a.weight;
                row
            })
            .collect();
        Coupling {
            source: pts.clone(),
            target: pts,
            mass,
        }
    }

    /// Independent coupling `μ ⊗ ν`.
    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let mass = mu
            .weights()
            .map(|wi| nu.weights().map(|wj| wi * wj).collect())
            .collect();
        Coupling {
            source: mu.points().cloned().collect(),
            target: nu.points().cloned().collect(),
            mass,
        }
    }

    /// Plan `μ(Id, K)`: each source atom is spread according to `K`.
    pub fn from_kernel<K: AtomicKernel + ?Sized>(mu: &DiscreteMeasure, kernel: &K) -> Result<Self> {
        let steps = mu
            .points()
            .map(|x| kernel.step(x))
            .collect::<Result<Vec<_>>>()?;
        let all: Vec<Point> = steps.iter().flat_map(|s| s.points().cloned()).collect();
        let (assignment, target) = cluster_points(&all, MERGE_TOL);
        let mut mass = vec![vec![0.0; target.len()]; mu.len()];
        let mut k = 0;
        for (i, (atom, step)) in mu.atoms().iter().zip(&steps).enumerate() {
            if step.dim() != mu.dim() {
                return Err(Error::DimensionMismatch {
                    expected: mu.dim(),
                    found: step.dim(),
                });
            }
            for a in step.atoms() {
                mass[i][assignment[k]] += atom.weight * a.weight;
                k += 1;
            }
        }
        Ok(Coupling {
            source: mu.points().cloned().collect(),
            target,
            mass,
        })
    }

    pub fn source(&self) -> &[Point] {
        &self.source
    }

    pub fn target(&self) -> &[Point] {
        &self.target
    }

    pub fn mass(&self) -> &[Vec<f64>] {
        &self.mass
    }

    pub fn dim(&self) -> usize {
        self.source[0].dim()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().flatten().sum()
    }

    /// Iterates `(source, target, mass)` over entries with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (&Point, &Point, f64)> {
        self.mass.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(move |(j, &w)| (&self.source[i], &self.target[j], w))
        })
    }

    /// `∫ ‖y − x‖ dπ`.
    pub fn cost(&self, norm: Norm) -> f64 {
        self.support().map(|(x, y, w)| w * norm.cost(x, y)).sum()
    }

    /// Row-sum and column-sum measures, consolidated.
    pub fn marginals(&self) -> (DiscreteMeasure, DiscreteMeasure) {
        let rows: Vec<f64> = self.mass.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..self.target.len())
            .map(|j| self.mass.iter().map(|r| r[j]).sum())
            .collect();
        let build = |pts: &[Point], w: Vec<f64>| {
            DiscreteMeasure::new(pts.to_vec(), w)
                .expect("valid coupling has valid marginals")
                .consolidate(MERGE_TOL)
                .without_null_atoms(0.0)
        };
        (build(&self.source, rows), build(&self.target, cols))
    }

    /// Barycenter condition `Σ_j π_ij y_j = r_i x_i` on every row with mass
    /// `r_i > tol`, checked in ℓ∞ with tolerance `tol·r_i`.
    pub fn is_martingale(&self, tol: f64) -> bool {
        self.martingale_defect(tol) <= tol
    }

    /// Largest relative barycenter violation `‖Σ_j π_ij y_j − r_i x_i‖_∞ / r_i`
    /// over rows with `r_i > row_tol`.
    pub fn martingale_defect(&self, row_tol: f64) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for (x, row) in self.source.iter().zip(&self.mass) {
            let r: f64 = row.iter().sum();
            if r <= row_tol {
                continue;
            }
            for k in 0..d {
                let bary: f64 = row
                    .iter()
                    .zip(&self.target)
                    .map(|(w, y)| w * y.coords()[k])
                    .sum();
                worst = worst.max((bary - r * x.coords()[k]).abs() / r);
            }
        }
        worst
    }

    /// Image of the plan under `f ⊗ f`, with coinciding images merged.
    pub fn pushforward(&self, map: &AffineMap) -> Result<Self> {
        let src = self
            .source
            .iter()
            .map(|p| map.apply(p))
            .collect::<Result<Vec<_>>>()?;
        let tgt = self
            .target
            .iter()
            .map(|p| map.apply(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Coupling {
            source: src,
            target: tgt,
            mass: self.mass.clone(),
        }
        .consolidate(MERGE_TOL))
    }

    /// Merges source atoms (and target atoms) that lie within `tol`.
    pub fn consolidate(&self, tol: f64) -> Self {
        let (sa, source) = cluster_points(&self.source, tol);
        let (ta, target) = cluster_points(&self.target, tol);
        let mut mass = vec![vec![0.0; target.len()]; source.len()];
        for (i, row) in self.mass.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                mass[sa[i]][ta[j]] += w;
            }
        }
        Coupling {
            source,
            target,
            mass,
        }
    }

    /// Total variation distance `½ Σ |π(x,y) − π'(x,y)|` over the union of
    /// the two supports, pairing atoms that coincide within `tol`.
    pub fn total_variation(&self, other: &Coupling, tol: f64) -> f64 {
        let entries: Vec<(Point, f64)> = self
            .support()
            .map(|(x, y, w)| (joint(x, y), w))
            .chain(other.support().map(|(x, y, w)| (joint(x, y), -w)))
            .collect();
        let pts: Vec<Point> = entries.iter().map(|(p, _)| p.clone()).collect();
        let (assignment, reps) = cluster_points(&pts, tol);
        let mut diff = vec![0.0; reps.len()];
        for ((_, w), c) in entries.iter().zip(assignment) {
            diff[c] += w;
        }
        0.5 * diff.iter().map(|d| d.abs()).sum::<f64>()
    }

    /// Replaces every target atom by the first atom of `support` within
    /// `radius`; atoms without such a neighbour are kept.
    pub fn snap_targets(&self, support: &[Point], radius: f64) -> Self {
        let target = self
            .target
            .iter()
            .map(|y| {
                support
                    .iter()
                    .find(|s| s.euclidean_distance(y) <= radius)
                    .unwrap_or(y)
                    .clone()
            })
            .collect();
        Coupling {
            source: self.source.clone(),
            target,
            mass: self.mass.clone(),
        }
        .consolidate(MERGE_TOL)
    }

    /// True when every pair `(x, y)` carrying mass above `mass_tol` satisfies
    /// `|L_θ(x) − L_θ(y)| ≤ 1e-9`, i.e. the plan only moves mass along lines
    /// parallel to the direction `(cos θ, sin θ)`.
    pub fn moves_along_lines(&self, theta: f64, mass_tol: f64) -> Result<bool> {
        let l = projection_l(theta)?;
        for (x, y, w) in self.support() {
            if w <= mass_tol {
                continue;
            }
            let lx = l.apply(x)?.coords()[0];
            let ly = l.apply(y)?.coords()[0];
            if (lx - ly).abs() > 1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn from_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, primal: &[f64]) -> Self {
        let t = nu.len();
        let mass = (0..mu.len())
            .map(|i| {
                primal[i * t..(i + 1) * t]
                    .iter()
                    .map(|&v| v.max(0.0))
                    .collect()
            })
            .collect();
        Coupling {
            source: mu.points().cloned().collect(),
            target: nu.points().cloned().collect(),
            mass,
        }
    }

    fn flat(&self) -> Vec<f64> {
        self.mass.iter().flatten().copied().collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn joint(x: &Point, y: &Point) -> Point {
    let mut c = x.coords().to_vec();
    c.extend_from_slice(y.coords());
    Point::new(c).expect("finite")
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(())
}

fn cost_vector(mu: &DiscreteMeasure, nu: &DiscreteMeasure, norm: Norm) -> Vec<f64> {
    mu.points()
        .flat_map(|x| nu.points().map(move |y| norm.cost(x, y)))
        .collect()
}

/// Row-sum and column-sum equations of `Π(μ, ν)`; variable `i·|ν| + j` is
/// the mass sent from atom `i` of `μ` to atom `j` of `ν`.
fn marginal_rows(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (s, t) = (mu.len(), nu.len());
    let mut rows = Vec::with_capacity(s + t);
    let mut rhs = Vec::with_capacity(s + t);
    for (i, w) in mu.weights().enumerate() {
        let mut row = vec![0.0; s * t];
        row[i * t..(i + 1) * t].fill(1.0);
        rows.push(row);
        rhs.push(w);
    }
    for (j, w) in nu.weights().enumerate() {
        let mut row = vec![0.0; s * t];
        for i in 0..s {
            row[i * t + j] = 1.0;
        }
        rows.push(row);
        rhs.push(w);
    }
    (rows, rhs)
}

/// The transport program over `Π(μ, ν)`.
pub fn ot_program(mu: &DiscreteMeasure, nu: &DiscreteMeasure, norm: Norm) -> Result<LinearProgram> {
    check_dims(mu, nu)?;
    let (rows, rhs) = marginal_rows(mu, nu);
    Ok(LinearProgram::new(cost_vector(mu, nu, norm), rows, rhs)?)
}

/// The martingale transport program over `Π_M(μ, ν)`: marginal rows plus,
/// for every source atom `x_i` and coordinate `k`,
/// `Σ_j π_ij (y_j − x_i)_k = 0`.
pub fn mot_program(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    norm: Norm,
) -> Result<LinearProgram> {
    check_dims(mu, nu)?;
    let (s, t, d) = (mu.len(), nu.len(), mu.dim());
    let (mut rows, mut rhs) = marginal_rows(mu, nu);
    for (i, x) in mu.points().enumerate() {
        for k in 0..d {
            let mut row = vec![0.0; s * t];
            for (j, y) in nu.points().enumerate() {
                row[i * t + j] = y.coords()[k] - x.coords()[k];
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    Ok(LinearProgram::new(cost_vector(mu, nu, norm), rows, rhs)?)
}

/// `V_c(μ, ν)` and an optimal plan; with the Euclidean norm this is W₁.
pub fn ot_value(mu: &DiscreteMeasure, nu: &DiscreteMeasure, norm: Norm) -> Result<(f64, Coupling)> {
    let program = ot_program(mu, nu, norm)?;
    let sol = lp::solve(&program)?.into_optimal()?;
    let plan = Coupling::from_lp(mu, nu, &sol.primal);
    Ok((plan.cost(norm), plan))
}

fn solve_martingale(program: &LinearProgram) -> Result<lp::LpSolution> {
    let sol = lp::solve(program)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::NotInConvexOrder),
        LpStatus::Unbounded => Err(LpError::Unbounded.into()),
    }
}

/// `V^M_c(μ, ν)` and an optimal martingale plan.
///
/// Fails with [`Error::NotInConvexOrder`] when `Π_M(μ, ν)` is empty.
pub fn mot_value(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    norm: Norm,
) -> Result<(f64, Coupling)> {
    let program = mot_program(mu, nu, norm)?;
    let sol = solve_martingale(&program)?;
    let plan = Coupling::from_lp(mu, nu, &sol.primal);
    Ok((plan.cost(norm), plan))
}

/// `μ ≤_c ν`, decided as feasibility of the martingale coupling program.
pub fn check_convex_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<bool> {
    let program = mot_program(mu, nu, Norm::Euclidean)?;
    Ok(lp::feasible(&program)?)
}

/// Smallest mass any martingale coupling of `(μ, ν)` can put on pairs with
/// `‖x − y‖ < radius`.
pub fn min_mass_within(mu: &DiscreteMeasure, nu: &DiscreteMeasure, radius: f64) -> Result<f64> {
    let base = mot_program(mu, nu, Norm::Euclidean)?;
    let near: Vec<f64> = mu
        .points()
        .flat_map(|x| {
            nu.points().map(move |y| {
                if x.euclidean_distance(y) < radius {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    let program = base.with_objective(near)?;
    let sol = solve_martingale(&program)?;
    Ok(program.evaluate(&sol.primal))
}

/// Marginals of a plan; see [`Coupling::marginals`].
pub fn coupling_marginals(plan: &Coupling) -> (DiscreteMeasure, DiscreteMeasure) {
    plan.marginals()
}

pub fn is_martingale_coupling(plan: &Coupling, tol: f64) -> bool {
    plan.is_martingale(tol)
}

/// How the random probe objectives are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProbeObjective {
    /// Coefficients uniform in [−1, 1].
    #[default]
    Random,
    /// `‖y − x‖ + u` with `u` uniform in [−1, 1].
    CostPlusNoise(Norm),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessProbe {
    pub unique: bool,
    /// The common optimal plan when unique, otherwise the first minimizer.
    pub witness: Coupling,
    /// Largest `max − min` gap over all trials.
    pub value_spread: f64,
    /// Largest TV distance between any optimal plan and the witness.
    pub plan_spread: f64,
}

/// Tests whether `Π_M(μ, ν)` is a single point by minimizing and maximizing
/// `trials` random linear objectives over it.
///
/// Trial `k` draws its objective from a ChaCha stream keyed by `(seed, k)`,
/// so results do not depend on evaluation order.
pub fn uniqueness_probe(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    trials: usize,
    seed: u64,
) -> Result<UniquenessProbe> {
    uniqueness_probe_with(mu, nu, trials, seed, ProbeObjective::Random)
}

pub fn uniqueness_probe_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    trials: usize,
    seed: u64,
    objective: ProbeObjective,
) -> Result<UniquenessProbe> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let base = mot_program(mu, nu, Norm::Euclidean)?;
    let nvars = base.num_vars();
    let costs = match objective {
        ProbeObjective::Random => vec![0.0; nvars],
        ProbeObjective::CostPlusNoise(norm) => cost_vector(mu, nu, norm),
    };

    let mut witness: Option<Coupling> = None;
    let mut value_spread: f64 = 0.0;
    let mut plan_spread: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let c: Vec<f64> = costs
            .iter()
            .map(|b| b + rng.gen_range(-1.0..=1.0))
            .collect();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();

        let lo = solve_martingale(&base.with_objective(c.clone())?)?;
        let hi = solve_martingale(&base.with_objective(neg)?)?;
        let lo_val = dot(&c, &lo.primal);
        let hi_val = dot(&c, &hi.primal);
        value_spread = value_spread.max(hi_val - lo_val);

        let lo_plan = Coupling::from_lp(mu, nu, &lo.primal);
        let hi_plan = Coupling::from_lp(mu, nu, &hi.primal);
        let reference = witness.get_or_insert_with(|| lo_plan.clone());
        let r = reference.flat();
        for plan in [&lo_plan, &hi_plan] {
            let tv = 0.5
                * plan
                    .flat()
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            plan_spread = plan_spread.max(tv);
        }
    }
    Ok(UniquenessProbe {
        unique: value_spread <= PROBE_TOL && plan_spread <= PROBE_TOL,
        witness: witness.expect("trials > 0"),
        value_spread,
        plan_spread,
    })
}

/// `(L_θ ⊗ L_θ)_# π` for a planar plan, with merged images.
pub fn project_coupling(plan: &Coupling, theta: f64) -> Result<Coupling> {
    if plan.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: plan.dim(),
        });
    }
    plan.pushforward(&projection_l(theta)?)
}

/// The one-dimensional convex order test: equal means and
/// `U_μ(t) = Σ wᵢ|t − xᵢ| ≤ U_ν(t)` at every atom of either measure.
pub fn potential_function_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<bool> {
    for m in [mu, nu] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    if (mu.mean().coords()[0] - nu.mean().coords()[0]).abs() > 1e-9 {
        return Ok(false);
    }
    let potential = |m: &DiscreteMeasure, t: f64| m.integrate(|x| (t - x.coords()[0]).abs());
    Ok(mu
        .points()
        .chain(nu.points())
        .map(|p| p.coords()[0])
        .all(|t| potential(mu, t) <= potential(nu, t) + 1e-9))
}
