use motlab::measure::{FnKernel, IdentityKernel, MERGE_TOL};
use motlab::{AffineMap, DiscreteMeasure, Point};
use proptest::prelude::*;

fn measure(dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    // coordinates on a coarse lattice so that duplicates are frequent
    prop::collection::vec((prop::collection::vec(-4i32..=4, dim), 1u32..=10), 1..=8).prop_map(
        move |atoms| {
            let total: u32 = atoms.iter().map(|(_, w)| w).sum();
            let points = atoms
                .iter()
                .map(|(c, _)| Point::new(c.iter().map(|&v| v as f64 * 0.5).collect()).unwrap())
                .collect();
            let weights = atoms
                .iter()
                .map(|(_, w)| *w as f64 / total as f64)
                .collect();
            DiscreteMeasure::new(points, weights).unwrap()
        },
    )
}

fn close(a: &Point, b: &Point, tol: f64) -> bool {
    a.euclidean_distance(b) <= tol
}

/// Keeps mass `stay` at `x` and splits the rest evenly between `x ± d`.
fn symmetric_split(d: Vec<f64>, stay: f64) -> impl Fn(&Point) -> motlab::Result<DiscreteMeasure> {
    move |x: &Point| {
        let d = Point::new(d.clone())?;
        let side = (1.0 - stay) / 2.0;
        DiscreteMeasure::new(
            vec![x.add(&d), x.sub(&d), x.clone()],
            vec![side, side, stay],
        )
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn consolidation_is_idempotent(mu in measure(2)) {
        let once = mu.consolidate(MERGE_TOL);
        let twice = once.consolidate(MERGE_TOL);
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.approx_eq(&mu, MERGE_TOL, 1e-12));
        prop_assert!((once.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consolidated_atoms_are_separated(mu in measure(2)) {
        let c = mu.consolidate(MERGE_TOL);
        for (i, a) in c.atoms().iter().enumerate() {
            for b in &c.atoms()[i + 1..] {
                prop_assert!(!close(&a.point, &b.point, MERGE_TOL));
            }
        }
    }

    #[test]
    fn symmetric_kernels_preserve_the_mean(
        mu in measure(2),
        d in prop::collection::vec(-2.0f64..2.0, 2),
        stay in 0.0f64..0.9,
    ) {
        let out = mu.apply_kernel(&FnKernel(symmetric_split(d, stay))).unwrap();
        prop_assert!(close(&out.mean(), &mu.mean(), 1e-9));
        prop_assert!((out.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_kernel_changes_nothing(mu in measure(3)) {
        let out = mu.apply_kernel(&IdentityKernel).unwrap();
        prop_assert!(out.approx_eq(&mu.consolidate(MERGE_TOL), 1e-12, 1e-12));
    }

    #[test]
    fn pushforward_commutes_with_the_mean(
        mu in measure(2),
        a in prop::collection::vec(-3.0f64..3.0, 6),
        b in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let map = AffineMap::new(
            vec![a[0..2].to_vec(), a[2..4].to_vec(), a[4..6].to_vec()],
            b,
        )
        .unwrap();
        let image = mu.pushforward(&map).unwrap();
        prop_assert_eq!(image.dim(), 3);
        prop_assert!(close(&image.mean(), &map.apply(&mu.mean()).unwrap(), 1e-9));
        prop_assert!((image.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_weights_and_mean_interpolate(
        mu in measure(2),
        nu in measure(2),
        eps in 0.0f64..=1.0,
    ) {
        let mix = mu.mixture(eps, &nu).unwrap();
        prop_assert!((mix.total_mass() - 1.0).abs() < 1e-12);
        let expected = mu.mean().scale(1.0 - eps).add(&nu.mean().scale(eps));
        prop_assert!(close(&mix.mean(), &expected, 1e-9));
        // every atom carries the interpolated mass
        for atom in mix.atoms() {
            let want = (1.0 - eps) * mu.mass_at(&atom.point, MERGE_TOL)
                + eps * nu.mass_at(&atom.point, MERGE_TOL);
            prop_assert!((atom.weight - want).abs() < 1e-12);
        }
    }

    #[test]
    fn integration_is_linear(mu in measure(2), s in -3.0f64..3.0) {
        let f = |x: &Point| x.coords()[0] * x.coords()[0] - x.coords()[1];
        let g = |x: &Point| (x.coords()[1]).abs();
        let lhs = mu.integrate(|x| f(x) + s * g(x));
        let rhs = mu.integrate(f) + s * mu.integrate(g);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }
}

#[test]
fn invalid_measures_are_rejected() {
    let p = |x: f64| Point::from([x]);
    assert!(DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![0.5, 0.4]).is_err());
    assert!(DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![1.5, -0.5]).is_err());
    assert!(DiscreteMeasure::new(vec![p(0.0)], vec![0.5, 0.5]).is_err());
    assert!(DiscreteMeasure::new(Vec::new(), Vec::new()).is_err());
    assert!(DiscreteMeasure::new(vec![p(0.0), Point::from([0.0, 1.0])], vec![0.5, 0.5]).is_err());
    assert!(Point::new(vec![f64::NAN]).is_err());
}

#[test]
fn kernels_that_change_dimension_are_rejected() {
    let mu = DiscreteMeasure::dirac(Point::from([0.0, 0.0]));
    let lift = FnKernel(|_: &Point| Ok(DiscreteMeasure::dirac(Point::from([0.0, 0.0, 0.0]))));
    assert!(mu.apply_kernel(&lift).is_err());
}

#[test]
fn mixture_rejects_out_of_range_weights() {
    let mu = DiscreteMeasure::dirac(Point::from([0.0]));
    assert!(mu.mixture(-0.1, &mu).is_err());
    assert!(mu.mixture(1.1, &mu).is_err());
}
