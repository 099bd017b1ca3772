//! Reference computations for the integration tests. Nothing here calls the
//! simplex code: optima come from enumerating basic feasible solutions and
//! transport systems are assembled from scratch.

#![allow(dead_code)]

use itertools::Itertools;
use motlab::{DiscreteMeasure, Point};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const RANK_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Optimal(v) => v,
            other => panic!("oracle outcome {other:?} has no value"),
        }
    }
}

/// All basic feasible solutions of `{A x = b, x ≥ 0}`, found by solving
/// every column subset whose size is the rank of `A`.
pub fn basic_feasible_solutions(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = a.ncols();
    let rank = a.rank(RANK_TOL);
    if rank == 0 {
        return if b.amax() <= FEAS_TOL {
            vec![DVector::zeros(n)]
        } else {
            Vec::new()
        };
    }
    let scale = 1.0 + b.amax();
    let mut out = Vec::new();
    for cols in (0..n).combinations(rank) {
        let sub = a.select_columns(&cols);
        let svd = sub.clone().svd(true, true);
        if svd.singular_values.min() <= RANK_TOL {
            continue;
        }
        let Ok(xs) = svd.solve(b, 0.0) else {
            continue;
        };
        if (&sub * &xs - b).amax() > FEAS_TOL * scale || xs.min() < -FEAS_TOL * scale {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (k, &c) in cols.iter().enumerate() {
            x[c] = xs[k].max(0.0);
        }
        out.push(x);
    }
    out
}

/// `min c·x` over `{A x = b, x ≥ 0}` by vertex enumeration. Unboundedness
/// is decided on the normalized recession cone `{A d = 0, Σd = 1, d ≥ 0}`.
pub fn lp_oracle(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Outcome {
    let n = c.len();
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    let c = DVector::from_column_slice(c);
    let vertices = basic_feasible_solutions(&a, &b);
    if vertices.is_empty() {
        return Outcome::Infeasible;
    }
    let cone = a.clone().insert_row(rows.len(), 1.0);
    let mut unit = DVector::zeros(rows.len() + 1);
    unit[rows.len()] = 1.0;
    if basic_feasible_solutions(&cone, &unit)
        .iter()
        .any(|d| c.dot(d) < -1e-9)
    {
        return Outcome::Unbounded;
    }
    Outcome::Optimal(
        vertices
            .iter()
            .map(|x| c.dot(x))
            .fold(f64::INFINITY, f64::min),
    )
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn atoms(mu: &DiscreteMeasure) -> Vec<(Vec<f64>, f64)> {
    mu.atoms()
        .iter()
        .map(|a| (a.point.coords().to_vec(), a.weight))
        .collect()
}

/// Coupling constraints with variable `i·|ν| + j` for the pair `(xᵢ, yⱼ)`,
/// optionally with the barycenter rows.
pub fn coupling_system(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    martingale: bool,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let (xs, ys) = (atoms(mu), atoms(nu));
    let (s, t) = (xs.len(), ys.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, (_, w)) in xs.iter().enumerate() {
        let mut row = vec![0.0; s * t];
        row[i * t..(i + 1) * t].fill(1.0);
        rows.push(row);
        rhs.push(*w);
    }
    for (j, (_, w)) in ys.iter().enumerate() {
        let mut row = vec![0.0; s * t];
        for i in 0..s {
            row[i * t + j] = 1.0;
        }
        rows.push(row);
        rhs.push(*w);
    }
    if martingale {
        for (i, (x, _)) in xs.iter().enumerate() {
            for k in 0..x.len() {
                let mut row = vec![0.0; s * t];
                for (j, (y, _)) in ys.iter().enumerate() {
                    row[i * t + j] = y[k] - x[k];
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }
    }
    let cost = xs
        .iter()
        .flat_map(|(x, _)| ys.iter().map(move |(y, _)| euclidean(x, y)))
        .collect();
    (cost, rows, rhs)
}

/// W₁ by vertex enumeration of the transport polytope.
pub fn ot_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Outcome {
    let (c, rows, rhs) = coupling_system(mu, nu, false);
    lp_oracle(&c, &rows, &rhs)
}

/// Euclidean MOT value by vertex enumeration of the martingale polytope.
pub fn mot_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Outcome {
    let (c, rows, rhs) = coupling_system(mu, nu, true);
    lp_oracle(&c, &rows, &rhs)
}

pub fn random_weights(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn random_measure(rng: &mut impl Rng, max_atoms: usize, dim: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms);
    let points = (0..k)
        .map(|_| Point::new((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap())
        .collect();
    DiscreteMeasure::new(points, random_weights(rng, k)).unwrap()
}

/// A pair `μ ≤_c ν`: draws `ν`, splits each of its atoms at random among
/// the source atoms and places every source atom at the barycenter of what
/// it receives.
pub fn martingale_pair(
    rng: &mut impl Rng,
    max_source: usize,
    max_target: usize,
    dim: usize,
) -> (DiscreteMeasure, DiscreteMeasure) {
    let nu = random_measure(rng, max_target, dim);
    let k = rng.gen_range(1..=max_source);
    let mut mass = vec![vec![0.0; nu.len()]; k];
    for (j, atom) in nu.atoms().iter().enumerate() {
        for (i, share) in random_weights(rng, k).into_iter().enumerate() {
            mass[i][j] = share * atom.weight;
        }
    }
    let mut points = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for row in &mass {
        let w: f64 = row.iter().sum();
        let mut bary = vec![0.0; dim];
        for (m, atom) in row.iter().zip(nu.atoms()) {
            for (b, y) in bary.iter_mut().zip(atom.point.coords()) {
                *b += m * y / w;
            }
        }
        points.push(Point::new(bary).unwrap());
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let weights = weights.into_iter().map(|w| w / total).collect();
    (DiscreteMeasure::new(points, weights).unwrap(), nu)
}

/// A random convex function `max_k (a_k·x + b_k)`.
pub fn random_convex(rng: &mut impl Rng, dim: usize) -> impl Fn(&Point) -> f64 {
    let pieces: Vec<(Vec<f64>, f64)> = (0..rng.gen_range(1..=5))
        .map(|_| {
            (
                (0..dim).map(|_| rng.gen_range(-2.0..=2.0)).collect(),
                rng.gen_range(-4.0..=4.0),
            )
        })
        .collect();
    move |x: &Point| {
        pieces
            .iter()
            .map(|(a, b)| a.iter().zip(x.coords()).map(|(s, t)| s * t).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
