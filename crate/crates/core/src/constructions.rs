//! The explicit measures, kernels, maps and couplings of the planar
//! instability construction.
//!
//! `μ_m` puts mass `1/m` on each of `(1,0), …, (m,0)`; `ν_{m,n}` moves every
//! atom one step of a symmetric random walk along the direction at angle
//! `θ_n = π/2n`. Every martingale coupling of the pair must transport along
//! lines of that direction, which pins it down uniquely.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::measure::{AffineMap, AtomicKernel, DiscreteMeasure, Point, MERGE_TOL};
use crate::transport::Coupling;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstructionParams {
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub grid: usize,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            m: 3,
            n: 3,
            eps: 0.3,
            grid: 2,
        }
    }
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.grid == 0 {
            return Err(Error::InvalidParameter(
                "m, n and grid must be positive".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps = {} must lie in (0, 1)",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        theta_n(self.n)
    }
}

/// `θ_n = π / 2n`.
pub fn theta_n(n: usize) -> f64 {
    FRAC_PI_2 / n as f64
}

/// One step `x ↦ ½(δ_{x+u} + δ_{x−u})` with `u = (cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomWalkKernel {
    theta: f64,
    step: [f64; 2],
    scale: f64,
}

impl RandomWalkKernel {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The step vector `u`.
    pub fn step_vector(&self) -> Point {
        Point::from([self.scale * self.step[0], self.scale * self.step[1]])
    }

    /// Same direction with step length `scale`.
    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

impl AtomicKernel for RandomWalkKernel {
    fn step(&self, x: &Point) -> Result<DiscreteMeasure> {
        if x.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: x.dim(),
            });
        }
        let u = self.step_vector();
        DiscreteMeasure::new(vec![x.add(&u), x.sub(&u)], vec![0.5, 0.5])
    }
}

pub fn random_walk_kernel(theta: f64) -> Result<RandomWalkKernel> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta = {theta} outside [0, π/2]"
        )));
    }
    // exact axis-aligned steps at the endpoints
    let step = if theta == 0.0 {
        [1.0, 0.0]
    } else if theta == FRAC_PI_2 {
        [0.0, 1.0]
    } else {
        [theta.cos(), theta.sin()]
    };
    Ok(RandomWalkKernel {
        theta,
        step,
        scale: 1.0,
    })
}

pub fn mu_m(m: usize) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    DiscreteMeasure::uniform((1..=m).map(|i| Point::from([i as f64, 0.0])).collect())
}

/// `ν_{m,n} = μ_m P_{π/2n}`: `2m` atoms of weight `1/2m`.
pub fn nu_mn(m: usize, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    mu_m(m)?.apply_kernel(&random_walk_kernel(theta_n(n))?)
}

/// `μ₃P₀ = ⅙δ₀ + ⅙δ₁ + ⅓δ₂ + ⅙δ₃ + ⅙δ₄` on the x-axis.
pub fn mu3_p0() -> DiscreteMeasure {
    DiscreteMeasure::new(
        (0..5).map(|k| Point::from([k as f64, 0.0])).collect(),
        vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    )
    .expect("weights sum to one")
}

/// `L_θ(x₁, x₂) = x₁ − x₂ / tan θ`, the projection onto the x-axis parallel
/// to the line at angle `θ`.
pub fn projection_l(theta: f64) -> Result<AffineMap> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "projection needs theta in (0, π/2], got {theta}"
        )));
    }
    let cot = if theta == FRAC_PI_2 {
        0.0
    } else {
        1.0 / theta.tan()
    };
    AffineMap::linear(vec![vec![1.0, -cot]])
}

/// `π_{m,n} = μ_m(Id, P_{π/2n})`.
pub fn pi_mn(m: usize, n: usize) -> Result<Coupling> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Coupling::from_kernel(&mu_m(m)?, &random_walk_kernel(theta_n(n))?)
}

/// The limit coupling `μ₃(Id, P₀)`.
pub fn pi_limit() -> Coupling {
    Coupling::from_kernel(
        &mu_m(3).expect("m = 3"),
        &random_walk_kernel(0.0).expect("θ = 0"),
    )
    .expect("planar kernel")
}

/// The seven-atom martingale coupling of `μ₃` and `μ₃P₀` that keeps the
/// shared mass in place.
pub fn pi_prime() -> Coupling {
    let p = |x: f64| Point::from([x, 0.0]);
    let source = vec![p(1.0), p(2.0), p(3.0)];
    let target = vec![p(0.0), p(1.0), p(2.0), p(3.0), p(4.0)];
    let (a, b) = (1.0 / 6.0, 1.0 / 24.0);
    let mass = vec![
        vec![3.0 * b, a, 0.0, 0.0, b],
        vec![0.0, 0.0, 2.0 * a, 0.0, 0.0],
        vec![b, 0.0, 0.0, a, 3.0 * b],
    ];
    Coupling::new(source, target, mass).expect("valid coupling")
}

/// Zero-padding embedding `ι: ℝ² → ℝ^d`.
pub fn embedding(dim: usize) -> Result<AffineMap> {
    AffineMap::embedding(2, dim)
}

/// Grid discretization of the parallelogram variant.
///
/// `F` has corners `−v, −v + (m,0), v + (m,0), v` with
/// `v = ⅓(cos θ_n, sin θ_n)`; the source is uniform on the midpoints of a
/// `grid × grid` lattice in parallelogram coordinates,
/// `s·(m,0) + (2t − 1)·v`, and the target puts half of it on each of the
/// translates `F ± 3v`.
pub fn parallelogram_variant(
    m: usize,
    n: usize,
    grid: usize,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if m == 0 || n == 0 || grid == 0 {
        return Err(Error::InvalidParameter(
            "m, n and grid must be positive".into(),
        ));
    }
    let walk = random_walk_kernel(theta_n(n))?;
    let v = walk.scaled(1.0 / 3.0).step_vector();
    let mut points = Vec::with_capacity(grid * grid);
    for a in 0..grid {
        let s = (a as f64 + 0.5) / grid as f64;
        for b in 0..grid {
            let t = (b as f64 + 0.5) / grid as f64;
            points.push(Point::from([s * m as f64, 0.0]).add(&v.scale(2.0 * t - 1.0)));
        }
    }
    let source = DiscreteMeasure::uniform(points)?.consolidate(MERGE_TOL);
    // ½(δ_{+3v} + δ_{−3v}) is the unit step along θ_n
    let target = source.apply_kernel(&walk)?;
    Ok((source, target))
}

/// `7 × 7` lattice on `[−3, 3]²` weighted by the standard normal density.
pub fn default_gamma() -> DiscreteMeasure {
    let mut points = Vec::with_capacity(49);
    let mut weights = Vec::with_capacity(49);
    for i in -3..=3 {
        for j in -3..=3 {
            let (x, y) = (i as f64, j as f64);
            points.push(Point::from([x, y]));
            weights.push((-(x * x + y * y) / 2.0).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteMeasure::new(points, weights).expect("normalized")
}

/// `((1 − ε)μ_m + εγ, (1 − ε)ν_{m,n} + εγ)`.
pub fn mixture_variant(
    m: usize,
    n: usize,
    eps: f64,
    gamma: &DiscreteMeasure,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    if gamma.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: gamma.dim(),
        });
    }
    let mu = mu_m(m)?;
    let nu = nu_mn(m, n)?;
    Ok((mu.mixture(eps, gamma)?, nu.mixture(eps, gamma)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{check_convex_order, Norm};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn kernel_examples() {
        let p0 = random_walk_kernel(0.0).unwrap();
        let out = p0.step(&Point::from([2.0, 0.0])).unwrap();
        assert_eq!(
            out.consolidate(0.0),
            DiscreteMeasure::new(
                vec![Point::from([1.0, 0.0]), Point::from([3.0, 0.0])],
                vec![0.5, 0.5]
            )
            .unwrap()
        );
        let up = random_walk_kernel(FRAC_PI_2).unwrap();
        let out = up.step(&Point::from([0.0, 0.0])).unwrap().consolidate(0.0);
        assert_eq!(out.atoms()[0].point, Point::from([0.0, -1.0]));
        assert_eq!(out.atoms()[1].point, Point::from([0.0, 1.0]));
        for theta in [0.1, 0.7, 1.5] {
            let x = Point::from([0.3, -2.0]);
            let out = random_walk_kernel(theta).unwrap().step(&x).unwrap();
            assert!(out.mean().euclidean_distance(&x) < 1e-15);
            assert_eq!(out.len(), 2);
        }
        assert!(random_walk_kernel(-0.1).is_err());
        assert!(random_walk_kernel(2.0).is_err());
        assert!(p0.step(&Point::from([1.0])).is_err());
    }

    #[test]
    fn mu_m_examples() {
        let m2 = mu_m(2).unwrap();
        assert_eq!(
            m2,
            DiscreteMeasure::new(
                vec![Point::from([1.0, 0.0]), Point::from([2.0, 0.0])],
                vec![0.5, 0.5]
            )
            .unwrap()
        );
        assert_eq!(
            mu_m(1).unwrap(),
            DiscreteMeasure::dirac(Point::from([1.0, 0.0]))
        );
        assert_eq!(mu_m(3).unwrap().mean(), Point::from([2.0, 0.0]));
        assert!(mu_m(0).is_err());
    }

    #[test]
    fn nu_mn_examples() {
        let nu = nu_mn(2, 2).unwrap();
        assert_eq!(nu.len(), 4);
        let h = 2f64.sqrt() / 2.0;
        for i in [1.0, 2.0] {
            for s in [1.0, -1.0] {
                let p = Point::from([i + s * h, s * h]);
                assert!((nu.mass_at(&p, 1e-12) - 0.25).abs() < 1e-15);
            }
        }
        assert!(
            nu_mn(3, 3)
                .unwrap()
                .mean()
                .euclidean_distance(&Point::from([2.0, 0.0]))
                < 1e-15
        );
        for m in 1..=10 {
            for n in 1..=10 {
                assert_eq!(nu_mn(m, n).unwrap().len(), 2 * m);
            }
        }
        for m in 1..=6 {
            for n in 1..=6 {
                assert!(check_convex_order(&mu_m(m).unwrap(), &nu_mn(m, n).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn projection_examples() {
        let l = projection_l(FRAC_PI_4).unwrap();
        let y = l.apply(&Point::from([3.0, 1.0])).unwrap();
        assert!((y.coords()[0] - 2.0).abs() < 1e-15);
        for theta in [0.2, 1.0, FRAC_PI_2] {
            let y = projection_l(theta)
                .unwrap()
                .apply(&Point::from([1.7, 0.0]))
                .unwrap();
            assert_eq!(y.coords(), &[1.7]);
        }
        let projected = nu_mn(3, 3)
            .unwrap()
            .pushforward(&projection_l(FRAC_PI_6).unwrap())
            .unwrap();
        let expected =
            DiscreteMeasure::uniform((1..=3).map(|i| Point::from([i as f64])).collect()).unwrap();
        assert!(projected.approx_eq(&expected, 1e-9, 1e-12));
        assert!(projection_l(0.0).is_err());
    }

    #[test]
    fn pi_mn_costs() {
        for (m, n) in [(1, 1), (2, 3), (4, 7)] {
            let plan = pi_mn(m, n).unwrap();
            let th = theta_n(n);
            assert!((plan.cost(Norm::Euclidean) - 1.0).abs() < 1e-12);
            assert!((plan.cost(Norm::L1) - (th.cos() + th.sin())).abs() < 1e-12);
            assert!(plan.is_martingale(1e-12));
            let (a, b) = plan.marginals();
            assert!(a.approx_eq(&mu_m(m).unwrap(), 1e-12, 1e-15));
            assert!(b.approx_eq(&nu_mn(m, n).unwrap(), 1e-12, 1e-15));
        }
    }

    #[test]
    fn pi_prime_properties() {
        let plan = pi_prime();
        assert!((plan.cost(Norm::Euclidean) - 0.5).abs() < 1e-15);
        assert!(plan.is_martingale(1e-12));
        let row = &plan.mass()[1];
        let r: f64 = row.iter().sum();
        let bary: f64 = row
            .iter()
            .zip(plan.target())
            .map(|(w, y)| w * y.coords()[0])
            .sum();
        assert!((bary / r - 2.0).abs() < 1e-15);
        assert_eq!(plan.support().count(), 7);
    }

    #[test]
    fn mu3_p0_two_ways() {
        let direct = mu3_p0();
        let kernel = mu_m(3)
            .unwrap()
            .apply_kernel(&random_walk_kernel(0.0).unwrap())
            .unwrap();
        assert!(direct.approx_eq(&kernel, 1e-12, 1e-15));
        assert!((direct.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(direct.mean(), Point::from([2.0, 0.0]));
    }

    #[test]
    fn parallelogram_degenerate_grid() {
        let (mu, nu) = parallelogram_variant(2, 2, 1).unwrap();
        assert_eq!(mu, DiscreteMeasure::dirac(Point::from([1.0, 0.0])));
        assert_eq!(nu.len(), 2);
        for a in nu.atoms() {
            assert!((a.point.euclidean_distance(&Point::from([1.0, 0.0])) - 1.0).abs() < 1e-12);
        }
        let (mu, nu) = parallelogram_variant(3, 4, 3).unwrap();
        assert_eq!((mu.len(), nu.len()), (9, 18));
        assert!(check_convex_order(&mu, &nu).unwrap());
    }

    #[test]
    fn mixture_parameter_checks() {
        let g = default_gamma();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(g.len(), 49);
        assert!(mixture_variant(3, 3, 0.0, &g).is_err());
        assert!(mixture_variant(3, 3, 1.0, &g).is_err());
        let (a, b) = mixture_variant(3, 3, 0.3, &g).unwrap();
        assert!((a.total_mass() - 1.0).abs() < 1e-12);
        assert!((b.total_mass() - 1.0).abs() < 1e-12);
    }
}
