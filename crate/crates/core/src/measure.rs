//! Finitely supported probability measures on ℝ^d.
//!
//! A [`DiscreteMeasure`] is an immutable list of weighted atoms. Operations
//! that combine atoms (`apply_kernel`, `mixture`, `pushforward`) return
//! consolidated measures; [`DiscreteMeasure::new`] keeps duplicates as given.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability measure.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Default radius under which two atoms are treated as the same point.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    pub fn euclidean_distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Lexicographic order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl From<&[f64]> for Point {
    /// Panics on non-finite input; use [`Point::new`] for untrusted data.
    fn from(coords: &[f64]) -> Self {
        Point::new(coords.to_vec()).expect("finite coordinates")
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(coords: [f64; N]) -> Self {
        Point::new(coords.to_vec()).expect("finite coordinates")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Point,
    pub weight: f64,
}

/// Groups `points` into clusters of mutually close points.
///
/// Points are visited in lexicographic order and each joins the first
/// existing cluster whose representative lies within `tol`, so every
/// representative is the lexicographically smallest member of its cluster.
/// Returns the cluster index of every input point (clusters are numbered in
/// lexicographic order of their representatives) and the representatives.
pub fn cluster_points(points: &[Point], tol: f64) -> (Vec<usize>, Vec<Point>) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));

    let mut reps: Vec<Point> = Vec::new();
    let mut assignment = vec![0; points.len()];
    for idx in order {
        let p = &points[idx];
        match reps.iter().position(|r| r.euclidean_distance(p) <= tol) {
            Some(c) => assignment[idx] = c,
            None => {
                assignment[idx] = reps.len();
                reps.push(p.clone());
            }
        }
    }
    (assignment, reps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Builds a measure from parallel lists of points and weights.
    ///
    /// Duplicated points are kept as separate atoms.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        let dim = points.first().ok_or(Error::Empty)?.dim();
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-dimensional point".into()));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        let mut total = 0.0;
        for &w in &weights {
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightSum(total));
        }
        let atoms = points
            .into_iter()
            .zip(weights)
            .map(|(point, weight)| Atom { point, weight })
            .collect();
        Ok(DiscreteMeasure { dim, atoms })
    }

    pub fn dirac(point: Point) -> Self {
        DiscreteMeasure {
            dim: point.dim(),
            atoms: vec![Atom { point, weight: 1.0 }],
        }
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    /// Skips validation; callers guarantee the invariants.
    fn from_atoms_unchecked(dim: usize, atoms: Vec<Atom>) -> Self {
        DiscreteMeasure { dim, atoms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights().sum()
    }

    pub fn mean(&self) -> Point {
        let mut acc = vec![0.0; self.dim];
        for atom in &self.atoms {
            for (a, x) in acc.iter_mut().zip(atom.point.coords()) {
                *a += atom.weight * x;
            }
        }
        Point(acc)
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(&a.point)).sum()
    }

    /// Merges atoms closer than `tol`, summing weights. Atoms come out in
    /// lexicographic order of their representatives.
    pub fn consolidate(&self, tol: f64) -> Self {
        let points: Vec<Point> = self.points().cloned().collect();
        let (assignment, reps) = cluster_points(&points, tol);
        let mut weights = vec![0.0; reps.len()];
        for (atom, &c) in self.atoms.iter().zip(&assignment) {
            weights[c] += atom.weight;
        }
        let atoms = reps
            .into_iter()
            .zip(weights)
            .map(|(point, weight)| Atom { point, weight })
            .collect();
        Self::from_atoms_unchecked(self.dim, atoms)
    }

    /// Drops atoms of weight at most `tol`; the remaining weights are not
    /// renormalized.
    pub fn without_null_atoms(&self, tol: f64) -> Self {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.weight > tol)
            .cloned()
            .collect();
        Self::from_atoms_unchecked(self.dim, atoms)
    }

    /// Mass carried by atoms within `tol` of `point`.
    pub fn mass_at(&self, point: &Point, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.point.euclidean_distance(point) <= tol)
            .map(|a| a.weight)
            .sum()
    }

    /// The measure `Σᵢ wᵢ · K(xᵢ)`, consolidated.
    pub fn apply_kernel<K: AtomicKernel + ?Sized>(&self, kernel: &K) -> Result<Self> {
        let mut atoms = Vec::new();
        for atom in &self.atoms {
            let step = kernel.step(&atom.point)?;
            if step.dim != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: step.dim,
                });
            }
            atoms.extend(step.atoms.into_iter().map(|a| Atom {
                point: a.point,
                weight: a.weight * atom.weight,
            }));
        }
        Ok(Self::from_atoms_unchecked(self.dim, atoms).consolidate(MERGE_TOL))
    }

    /// `(1 − eps)·self + eps·other`, consolidated.
    pub fn mixture(&self, eps: f64, other: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight {eps} outside [0, 1]"
            )));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let scaled = |m: &Self, s: f64| {
            m.atoms
                .iter()
                .filter(move |_| s > 0.0)
                .map(move |a| Atom {
                    point: a.point.clone(),
                    weight: a.weight * s,
                })
                .collect::<Vec<_>>()
        };
        let mut atoms = scaled(self, 1.0 - eps);
        atoms.extend(scaled(other, eps));
        Ok(Self::from_atoms_unchecked(self.dim, atoms).consolidate(MERGE_TOL))
    }

    /// Image measure under `x ↦ map.linear·x + map.shift`, consolidated.
    pub fn pushforward(&self, map: &AffineMap) -> Result<Self> {
        if map.in_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: map.in_dim(),
                found: self.dim,
            });
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: map.apply_unchecked(&a.point),
                weight: a.weight,
            })
            .collect();
        Ok(Self::from_atoms_unchecked(map.out_dim(), atoms).consolidate(MERGE_TOL))
    }

    /// Largest discrepancy between two measures after consolidating both:
    /// `max_p |self(p) − other(p)|` over the union of supports.
    pub fn sup_weight_distance(&self, other: &Self, tol: f64) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let points: Vec<Point> = self.points().chain(other.points()).cloned().collect();
        let (assignment, reps) = cluster_points(&points, tol);
        let mut diff = vec![0.0; reps.len()];
        let n = self.len();
        for (k, &c) in assignment.iter().enumerate() {
            if k < n {
                diff[c] += self.atoms[k].weight;
            } else {
                diff[c] -= other.atoms[k - n].weight;
            }
        }
        diff.into_iter().fold(0.0, |acc: f64, d| acc.max(d.abs()))
    }

    /// Same support within `tol` and weights within `weight_tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64, weight_tol: f64) -> bool {
        self.sup_weight_distance(other, tol) <= weight_tol
    }
}

/// A Markov kernel on ℝ^d with finitely supported outputs.
pub trait AtomicKernel {
    fn step(&self, x: &Point) -> Result<DiscreteMeasure>;
}

/// `x ↦ δ_x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityKernel;

impl AtomicKernel for IdentityKernel {
    fn step(&self, x: &Point) -> Result<DiscreteMeasure> {
        Ok(DiscreteMeasure::dirac(x.clone()))
    }
}

/// Wraps a closure as a kernel.
pub struct FnKernel<F>(pub F);

impl<F> AtomicKernel for FnKernel<F>
where
    F: Fn(&Point) -> Result<DiscreteMeasure>,
{
    fn step(&self, x: &Point) -> Result<DiscreteMeasure> {
        (self.0)(x)
    }
}

/// `x ↦ linear·x + shift`; `linear` is stored row-major, one row per output
/// coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    linear: Vec<Vec<f64>>,
    shift: Vec<f64>,
    in_dim: usize,
}

impl AffineMap {
    pub fn new(linear: Vec<Vec<f64>>, shift: Vec<f64>) -> Result<Self> {
        let in_dim = linear.first().map_or(0, Vec::len);
        if linear.is_empty() || in_dim == 0 {
            return Err(Error::InvalidParameter("empty linear map".into()));
        }
        if let Some(row) = linear.iter().find(|r| r.len() != in_dim) {
            return Err(Error::DimensionMismatch {
                expected: in_dim,
                found: row.len(),
            });
        }
        if shift.len() != linear.len() {
            return Err(Error::DimensionMismatch {
                expected: linear.len(),
                found: shift.len(),
            });
        }
        if linear
            .iter()
            .flatten()
            .chain(&shift)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(AffineMap {
            linear,
            shift,
            in_dim,
        })
    }

    pub fn linear(linear: Vec<Vec<f64>>) -> Result<Self> {
        let out = linear.len();
        Self::new(linear, vec![0.0; out])
    }

    pub fn identity(dim: usize) -> Self {
        let linear = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        AffineMap {
            linear,
            shift: vec![0.0; dim],
            in_dim: dim,
        }
    }

    /// Zero-padding embedding ℝ^from → ℝ^to, `(x₁..x_from) ↦ (x₁..x_from, 0..0)`.
    pub fn embedding(from: usize, to: usize) -> Result<Self> {
        if from == 0 || to < from {
            return Err(Error::InvalidParameter(format!(
                "cannot embed dimension {from} into {to}"
            )));
        }
        let linear = (0..to)
            .map(|r| (0..from).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(AffineMap {
            linear,
            shift: vec![0.0; to],
            in_dim: from,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.linear.len()
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: x.dim(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &Point) -> Point {
        let coords = self
            .linear
            .iter()
            .zip(&self.shift)
            .map(|(row, s)| row.iter().zip(x.coords()).map(|(a, b)| a * b).sum::<f64>() + s)
            .collect();
        Point(coords)
    }
}
